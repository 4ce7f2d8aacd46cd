"""Mechanical energy integration and Cost of Transport."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .telemetry import ProprioSample

D_MIN = 1e-3


def instantaneous_power(torques, velocities) -> float:
    """Sum of absolute joint powers, W."""
    tau = np.asarray(torques, dtype=float)
    qd = np.asarray(velocities, dtype=float)
    if tau.shape != qd.shape:
        raise ValueError(f"torque/velocity length mismatch: {tau.shape} vs {qd.shape}")
    return float(np.sum(np.abs(tau * qd)))


@dataclass(frozen=True)
class EnergyAccumulator:
    e_joules: float = 0.0
    d_meters: float = 0.0
    t_start: float = math.nan
    t_last: float = math.nan
    last_power: float = math.nan
    last_base_xy: tuple[float, float] | None = None

    @property
    def started(self) -> bool:
        return self.last_base_xy is not None

    @classmethod
    def start(cls, t: float, power: float, base_xy) -> "EnergyAccumulator":
        return cls(0.0, 0.0, t, t, power, (float(base_xy[0]), float(base_xy[1])))

    def advance(self, t: float, power: float, base_xy) -> "EnergyAccumulator":
        """Trapezoid step to time ``t``; distance is horizontal base travel."""
        if not self.started:
            return EnergyAccumulator.start(t, power, base_xy)
        if not t > self.t_last:
            raise ValueError(f"non-monotonic time: {t!r} after {self.t_last!r}")
        x, y = float(base_xy[0]), float(base_xy[1])
        de = 0.5 * (self.last_power + power) * (t - self.t_last)
        dd = math.hypot(x - self.last_base_xy[0], y - self.last_base_xy[1])
        return EnergyAccumulator(self.e_joules + de, self.d_meters + dd, self.t_start, t, power, (x, y))


def accumulate(acc: EnergyAccumulator, sample: ProprioSample) -> EnergyAccumulator:
    power = instantaneous_power(sample.joint_torque, sample.joint_velocity)
    return acc.advance(sample.t, power, sample.base_pos[:2])


def cot(e: float, mass: float, gravity_mag: float, d: float, d_min: float = D_MIN) -> float | None:
    """Cost of Transport ``E / (m g d)``; None when ``d <= d_min``."""
    if not mass > 0 or not gravity_mag > 0:
        raise ValueError("mass and gravity must be > 0")
    if not d > d_min:
        return None
    return e / (mass * gravity_mag * d)


@dataclass
class CotObservation:
    cell: tuple[int, int] | None
    cot: float
    e_joules: float
    d_meters: float
    t_enter: float
    t_exit: float


class CellCotSegmenter:
    """Splits a stream into per-cell energy/distance segments by CoM cell.

    The interval between two samples is credited to the cell of the earlier
    sample. When the CoM enters a new cell, one observation is emitted for
    the departed cell. Segments with ``d <= d_min`` emit nothing.
    """

    def __init__(self, mass: float, gravity_mag: float, d_min: float = D_MIN):
        self.mass = mass
        self.gravity_mag = gravity_mag
        self.d_min = d_min
        self._cell = None
        self._seg = EnergyAccumulator()
        self._total = EnergyAccumulator()
        self.discarded = 0

    @property
    def total(self) -> EnergyAccumulator:
        return self._total

    def _close(self) -> CotObservation | None:
        seg = self._seg
        value = cot(seg.e_joules, self.mass, self.gravity_mag, seg.d_meters, self.d_min)
        if value is None:
            self.discarded += 1
            return None
        return CotObservation(self._cell, value, seg.e_joules, seg.d_meters, seg.t_start, seg.t_last)

    def step(self, t: float, power: float, base_xy, cell) -> CotObservation | None:
        self._total = self._total.advance(t, power, base_xy)
        if not self._seg.started:
            self._cell = cell
            self._seg = EnergyAccumulator.start(t, power, base_xy)
            return None
        self._seg = self._seg.advance(t, power, base_xy)
        if cell == self._cell:
            return None
        out = self._close()
        self._cell = cell
        self._seg = EnergyAccumulator.start(t, power, base_xy)
        return out

    def flush(self) -> CotObservation | None:
        """Close the open segment at end of stream."""
        if not self._seg.started or self._seg.t_last == self._seg.t_start:
            return None
        out = self._close()
        self._seg = EnergyAccumulator()
        return out


def windowed_cot(samples, mass: float, gravity_mag: float, cell_of, d_min: float = D_MIN, flush: bool = False):
    """Per-cell CoT observations for a sample sequence.

    ``cell_of(xy)`` maps a CoM ground projection to a cell key. Without
    ``flush`` the last cell produces nothing until the CoM leaves it.
    """
    seg = CellCotSegmenter(mass, gravity_mag, d_min)
    out = []
    for s in samples:
        power = instantaneous_power(s.joint_torque, s.joint_velocity)
        obs = seg.step(s.t, power, s.base_pos[:2], cell_of(s.com_world[:2]))
        if obs is not None:
            out.append(obs)
    if flush:
        obs = seg.flush()
        if obs is not None:
            out.append(obs)
    return out
