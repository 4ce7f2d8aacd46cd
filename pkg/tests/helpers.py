"""Shared builders and brute-force oracles for the test suite."""

from __future__ import annotations

import math
from fractions import Fraction

import numpy as np

from propmap.telemetry import ProprioSample, StreamHeader

MASS = 21.0
G = 1.62


def header(joint_count=12, segment_count=5, mass=MASS, rate=500.0) -> StreamHeader:
    return StreamHeader(mass, np.array([0.0, 0.0, -G]), joint_count, segment_count, rate)


def sample(t=0.0, *, nj=12, ns=5, mass=MASS, contact=(True,) * 4, **over) -> ProprioSample:
    """A valid standing sample with every field overridable."""
    feet = np.array([[0.24, 0.13, -0.35], [0.24, -0.13, -0.35], [-0.24, 0.13, -0.35], [-0.24, -0.13, -0.35]])
    fields = dict(
        t=t,
        joint_torque=np.zeros(nj),
        joint_velocity=np.zeros(nj),
        contact=np.array(contact, dtype=bool),
        foot_pos_base=feet.copy(),
        foot_pos_des_base=feet.copy(),
        foot_vel_base=np.zeros((4, 3)),
        foot_vel_des_base=np.zeros((4, 3)),
        base_quat=np.array([1.0, 0.0, 0.0, 0.0]),
        base_pos=np.array([0.0, 0.0, 0.35]),
        segment_accel=np.zeros((ns, 3)),
        segment_mass=np.full(ns, mass / ns),
        com_world=np.array([0.0, 0.0, 0.35]),
    )
    fields.update(over)
    return ProprioSample(**fields)


def random_stream(rng: np.random.Generator, n: int, nj: int = 12, ns: int = 5, with_world: bool = False):
    """Valid stream of arbitrary (non-physical) values."""
    hdr = header(nj, ns)
    masses = rng.uniform(0.5, 5.0, ns)
    masses *= MASS / masses.sum()
    t = np.cumsum(rng.uniform(1e-4, 0.01, n))
    out = []
    for k in range(n):
        q = rng.normal(size=4)
        q /= np.linalg.norm(q)
        out.append(
            sample(
                float(t[k]),
                nj=nj,
                ns=ns,
                contact=rng.integers(0, 2, 4).astype(bool),
                joint_torque=rng.normal(size=nj),
                joint_velocity=rng.normal(size=nj),
                foot_pos_base=rng.normal(size=(4, 3)),
                foot_pos_des_base=rng.normal(size=(4, 3)),
                foot_vel_base=rng.normal(size=(4, 3)),
                foot_vel_des_base=rng.normal(size=(4, 3)),
                base_quat=q,
                base_pos=rng.normal(size=3),
                segment_accel=rng.normal(size=(ns, 3)),
                segment_mass=masses,
                com_world=rng.normal(size=3),
                foot_pos_world=rng.normal(size=(4, 3)) if with_world else None,
            )
        )
    return hdr, out


# -- oracles -----------------------------------------------------------------


def floor_index(n_x, n_y, r, x0, y0, x, y):
    """Exact rational evaluation of the cell-index formula."""
    i = math.floor((Fraction(y) - Fraction(y0)) / Fraction(r) + Fraction(n_y, 2))
    j = math.floor((Fraction(x) - Fraction(x0)) / Fraction(r) + Fraction(n_x, 2))
    if 0 <= i < n_y and 0 <= j < n_x:
        return i, j
    return None


def batch_mean(values) -> float:
    return math.fsum(values) / len(values)


def direct_smooth(layer, valid, sigma):
    """Per-source-cell spreading with renormalized truncated Gaussian weights."""
    n_y, n_x = layer.shape
    rad = math.ceil(3 * sigma)
    out = np.zeros(layer.shape)
    for i in range(n_y):
        for j in range(n_x):
            if not valid[i, j]:
                continue
            w = {}
            for di in range(-rad, rad + 1):
                for dj in range(-rad, rad + 1):
                    a, b = i + di, j + dj
                    if 0 <= a < n_y and 0 <= b < n_x and valid[a, b]:
                        w[a, b] = math.exp(-(di * di + dj * dj) / (2 * sigma * sigma))
            total = sum(w.values())
            for (a, b), wk in w.items():
                out[a, b] += layer[i, j] * wk / total
    return np.where(valid, out, np.nan)


def pierce_inside(contacts, com):
    """Point-in-polygon of the vertical line through the CoM (shapely).

    Returns True/False, or None when the piercing point is within 1e-9 of
    the hull boundary or the hull has no area.
    """
    from shapely.geometry import MultiPoint, Point

    hull = MultiPoint([tuple(c[:2]) for c in contacts]).convex_hull
    if hull.geom_type != "Polygon" or hull.area < 1e-9:
        return None
    p = Point(com[0], com[1])
    if hull.exterior.distance(p) < 1e-9:
        return None
    return bool(hull.contains(p))
