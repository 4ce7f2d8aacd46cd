"""Terrain height observations from non-slipping stance feet."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .slip import SlipVerdict
from .telemetry import N_FEET, ProprioSample, quat_to_matrix


@dataclass(frozen=True)
class ElevationObservation:
    xy: tuple[float, float]
    h: float
    foot: int
    t: float


def foot_world(base_pose, p_base) -> np.ndarray:
    """Map a base-frame point to the world: ``R p + t``.

    ``base_pose`` is ``(rotation, translation)`` where rotation is either a
    3x3 matrix or a (w, x, y, z) quaternion.
    """
    rot, trans = base_pose
    rot = np.asarray(rot, dtype=float)
    if rot.shape == (4,):
        rot = quat_to_matrix(rot)
    return rot @ np.asarray(p_base, dtype=float) + np.asarray(trans, dtype=float)


def feet_world(sample: ProprioSample, rotation: np.ndarray | None = None) -> np.ndarray:
    """World positions of all four feet; telemetry values win when present."""
    if sample.foot_pos_world is not None:
        return sample.foot_pos_world
    rot = sample.base_rotation if rotation is None else rotation
    return sample.foot_pos_base @ rot.T + sample.base_pos


def observe(sample: ProprioSample, verdict: SlipVerdict, world: np.ndarray | None = None) -> list[ElevationObservation]:
    if world is None:
        world = feet_world(sample)
    out = []
    for f in range(N_FEET):
        if sample.contact[f] and not verdict.beta[f]:
            p = world[f]
            out.append(ElevationObservation((float(p[0]), float(p[1])), float(p[2]), f, sample.t))
    return out
