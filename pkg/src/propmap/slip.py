"""Per-foot slip detection from desired vs. actual foot kinematics.

All quantities are evaluated in the base frame. A stance foot is flagged as
slipping when its normalized velocity deviation exceeds a rolling percentile
of its own recent history *and* its positional discrepancy exceeds a fixed
threshold.
"""

from __future__ import annotations

import math
from bisect import bisect_left, insort
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .telemetry import N_FEET, ProprioSample


@dataclass(frozen=True)
class SlipConfig:
    h: float = 0.01
    eps_p: float = 0.02
    percentile: float = 90.0
    window: int = 200
    min_samples: int = 10
    initial_eps_v: float = math.inf

    def __post_init__(self):
        if not self.h > 0:
            raise ValueError("h must be > 0")
        if not self.eps_p > 0:
            raise ValueError("eps_p must be > 0")
        if not 0 < self.percentile < 100:
            raise ValueError("percentile must lie in (0, 100)")
        if self.window < 10:
            raise ValueError("window must be >= 10")
        if not 1 <= self.min_samples <= self.window:
            raise ValueError("min_samples must lie in [1, window]")


@dataclass
class SlipVerdict:
    """Per-foot slip evidence for one sample.

    ``onset`` marks feet whose flag starts a new maximal run of consecutive
    flagged samples; the gridmap counts one slip event per onset.
    """

    delta_v: np.ndarray
    delta_p: np.ndarray
    eps_v: np.ndarray
    beta: np.ndarray
    onset: np.ndarray

    @classmethod
    def quiet(cls) -> "SlipVerdict":
        z = np.zeros(N_FEET)
        return cls(z.copy(), z.copy(), np.full(N_FEET, np.nan), np.zeros(N_FEET, bool), np.zeros(N_FEET, bool))


def compute_delta_v(v_des, v_act, h: float) -> float:
    """Normalized velocity deviation, each axis scaled by ``|v_des_i| + h``."""
    if not h > 0:
        raise ValueError("h must be > 0")
    total = 0.0
    for d, a in zip(v_des, v_act):
        d, a = float(d), float(a)
        if not (math.isfinite(d) and math.isfinite(a)):
            raise ValueError("velocities must be finite")
        r = (d - a) / (abs(d) + h)
        total += r * r
    return math.sqrt(total)


def compute_delta_p(p_des, p_act) -> float:
    """Absolute difference of the norms of desired and actual foot positions.

    Only the norms are compared, so two distinct positions at the same
    distance from the base origin give zero.
    """
    pd = [float(v) for v in p_des]
    pa = [float(v) for v in p_act]
    if not all(math.isfinite(v) for v in pd + pa):
        raise ValueError("positions must be finite")
    return abs(math.hypot(*pd) - math.hypot(*pa))


def nearest_rank(sorted_values, percentile: float) -> float:
    """Nearest-rank percentile of an ascending sequence."""
    n = len(sorted_values)
    if n == 0:
        raise ValueError("empty history")
    rank = max(1, math.ceil(percentile / 100.0 * n))
    return sorted_values[rank - 1]


def update_threshold(history, percentile: float, initial: float = math.inf) -> float:
    """Velocity threshold from a ΔV history; ``initial`` when the history is empty."""
    values = sorted(history)
    if not values:
        return initial
    return float(nearest_rank(values, percentile))


class RollingWindow:
    """Fixed-length FIFO of ΔV values kept alongside a sorted copy."""

    def __init__(self, size: int):
        self.size = size
        self._fifo: deque[float] = deque()
        self._sorted: list[float] = []

    def __len__(self):
        return len(self._fifo)

    def push(self, value: float) -> None:
        if len(self._fifo) == self.size:
            old = self._fifo.popleft()
            del self._sorted[bisect_left(self._sorted, old)]
        self._fifo.append(value)
        insort(self._sorted, value)

    def percentile(self, p: float) -> float:
        return float(nearest_rank(self._sorted, p))

    def values(self) -> list[float]:
        return list(self._fifo)


@dataclass
class SlipDetector:
    """Stateful detector for one stream; one rolling ΔV window per foot."""

    cfg: SlipConfig = field(default_factory=SlipConfig)

    def __post_init__(self):
        self.windows = [RollingWindow(self.cfg.window) for _ in range(N_FEET)]
        self._prev_beta = np.zeros(N_FEET, bool)

    def threshold(self, foot: int) -> float:
        w = self.windows[foot]
        if len(w) < self.cfg.min_samples:
            return self.cfg.initial_eps_v
        return w.percentile(self.cfg.percentile)

    def detect(self, sample: ProprioSample) -> SlipVerdict:
        cfg = self.cfg
        dv = np.zeros(N_FEET)
        dp = np.zeros(N_FEET)
        eps = np.full(N_FEET, np.nan)
        beta = np.zeros(N_FEET, bool)
        contact = sample.contact.tolist()
        v_des, v_act = sample.foot_vel_des_base.tolist(), sample.foot_vel_base.tolist()
        p_des, p_act = sample.foot_pos_des_base.tolist(), sample.foot_pos_base.tolist()
        for f in range(N_FEET):
            if not contact[f]:
                continue
            dv[f] = compute_delta_v(v_des[f], v_act[f], cfg.h)
            dp[f] = compute_delta_p(p_des[f], p_act[f])
            eps[f] = self.threshold(f)
            beta[f] = dv[f] > eps[f] and dp[f] > cfg.eps_p
            # window grows after the decision so a sample never votes on itself
            self.windows[f].push(dv[f])
        onset = beta & ~self._prev_beta
        self._prev_beta = beta.copy()
        return SlipVerdict(dv, dp, eps, beta, onset)


def detect(sample: ProprioSample, state: SlipDetector, cfg: SlipConfig | None = None) -> SlipVerdict:
    if cfg is not None and cfg != state.cfg:
        raise ValueError("config does not match detector state")
    return state.detect(sample)
