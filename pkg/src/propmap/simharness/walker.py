"""Kinematic trotting quadruped over analytic terrain.

Base motion and foot placement are prescribed; nothing is simulated
dynamically. The base follows the path at the commanded horizontal speed at
a fixed height above the body-smoothed terrain, yawed along the path tangent
and pitched/rolled to follow the smoothed surface. Each foothold is the point
where the hip's body-vertical line meets the terrain at mid-stance, so the
stance geometry is fixed in the body frame and tilts with the ground. The
foot stays put during stance except while an injected slip drags it along
the surface. Swing feet follow a cosine blend between footholds with a
``sin^2`` clearance bump, so foot trajectories are C1.

All five body segments (trunk and four legs) are lumped rigidly at the base
origin: every segment acceleration equals the base acceleration and the CoM
is the base origin. Joint torques and velocities are synthesized so that the
summed absolute joint power equals the analytic power model.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy import integrate

from ..telemetry import N_FEET, ProprioSample, StreamHeader
from .groundtruth import GroundTruth, SlipRecord, truth_grid
from .path import PlanarPath
from .scenario import InjectedSlip, ScenarioSpec

ROBOT_MASS = 21.0
SEGMENT_MASSES = (13.0, 2.0, 2.0, 2.0, 2.0)
HIP_OFFSETS = np.array([[0.24, 0.13], [0.24, -0.13], [-0.24, 0.13], [-0.24, -0.13]])
STAND_HEIGHT = 0.35
TROT_PHASE = (0.0, 0.5, 0.5, 0.0)  # FL+RR, then FR+RL
JOINTS_PER_LEG = 3
JOINT_SPLIT = (0.2, 0.35, 0.45)
STANCE_WEIGHT = 3.0
SWING_WEIGHT = 1.0
JOINT_RATE_AMPLITUDE = 1.5

VEL_STEP = 1e-5
ACC_STEP = 1e-3


class ScenarioError(ValueError):
    pass


@dataclass
class SlipPlan:
    slip: InjectedSlip
    cycle: int
    d_xy: np.ndarray


def euler_zyx_matrix(yaw, pitch, roll) -> np.ndarray:
    """Stacked ``Rz(yaw) Ry(pitch) Rx(roll)``, shape (n, 3, 3)."""
    cz, sz = np.cos(yaw), np.sin(yaw)
    cy, sy = np.cos(pitch), np.sin(pitch)
    cx, sx = np.cos(roll), np.sin(roll)
    R = np.empty((len(cz), 3, 3))
    R[:, 0, 0] = cz * cy
    R[:, 0, 1] = cz * sy * sx - sz * cx
    R[:, 0, 2] = cz * sy * cx + sz * sx
    R[:, 1, 0] = sz * cy
    R[:, 1, 1] = sz * sy * sx + cz * cx
    R[:, 1, 2] = sz * sy * cx - cz * sx
    R[:, 2, 0] = -sy
    R[:, 2, 1] = cy * sx
    R[:, 2, 2] = cy * cx
    return R


def euler_zyx_quat(yaw, pitch, roll) -> np.ndarray:
    """(w, x, y, z) quaternions matching :func:`euler_zyx_matrix`."""
    cz, sz = np.cos(yaw / 2), np.sin(yaw / 2)
    cy, sy = np.cos(pitch / 2), np.sin(pitch / 2)
    cx, sx = np.cos(roll / 2), np.sin(roll / 2)
    return np.column_stack(
        (
            cz * cy * cx + sz * sy * sx,
            cz * cy * sx - sz * sy * cx,
            cz * sy * cx + sz * cy * sx,
            sz * cy * cx - cz * sy * sx,
        )
    )


@dataclass
class BaseState:
    pos: np.ndarray  # (n, 3)
    yaw: np.ndarray
    pitch: np.ndarray
    roll: np.ndarray

    @property
    def rot(self) -> np.ndarray:
        return euler_zyx_matrix(self.yaw, self.pitch, self.roll)

    @property
    def quat(self) -> np.ndarray:
        return euler_zyx_quat(self.yaw, self.pitch, self.roll)


class Walker:
    def __init__(self, spec: ScenarioSpec):
        self.spec = spec
        self.terrain = spec.terrain
        self.path = PlanarPath(spec.waypoints, spec.turn_radius)
        self.duration = self.path.length / spec.speed
        self.gait = spec.gait
        self._check_bounds()
        n = int(math.floor(self.duration * spec.sample_rate_hz + 1e-9)) + 1
        self.times = np.arange(n) / spec.sample_rate_hz
        self._footholds: dict[int, tuple[int, np.ndarray]] = {}
        self.slips = self._plan_slips()

    # -- geometry -----------------------------------------------------------

    def _check_bounds(self):
        b = self.terrain.bounds
        if b is None:
            return
        x0, x1, y0, y1 = b
        for k, (x, y) in enumerate(self.spec.waypoints):
            if not (x0 <= x <= x1 and y0 <= y <= y1):
                raise ScenarioError(
                    f"waypoint {k} ({x:g}, {y:g}) lies outside terrain bounds "
                    f"x[{x0:g}, {x1:g}] y[{y0:g}, {y1:g}]"
                )

    def base_state(self, t) -> BaseState:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        x, y, yaw, _ = self.path._eval(self.spec.speed * t)
        z = STAND_HEIGHT + self.terrain.base_height(x, y, yaw)
        gx, gy = self.terrain.base_gradient(x, y, yaw)
        c, s = np.cos(yaw), np.sin(yaw)
        pitch = -np.arctan(gx * c + gy * s)  # nose up when climbing
        roll = np.arctan(-gx * s + gy * c)
        return BaseState(np.column_stack((x, y, z)), yaw, pitch, roll)

    def base_position(self, t):
        return self.base_state(t).pos

    def to_base(self, t, p_world) -> np.ndarray:
        """World points (n, 3) at times t into the base frame."""
        b = self.base_state(t)
        return np.einsum("nji,nj->ni", b.rot, p_world - b.pos)

    def _project_down(self, hip, down):
        """First intersection of ``hip + lam * down`` with the terrain (Newton)."""
        lam = hip[:, 2] - self.terrain.height(hip[:, 0], hip[:, 1])
        for _ in range(50):
            q = hip + lam[:, None] * down
            gx, gy = self.terrain.gradient(q[:, 0], q[:, 1])
            f = q[:, 2] - self.terrain.height(q[:, 0], q[:, 1])
            step = f / (gx * down[:, 0] + gy * down[:, 1] - down[:, 2])
            lam = lam + step
            if np.max(np.abs(step)) < 1e-13:
                break
        q = hip + lam[:, None] * down
        q[:, 2] = self.terrain.height(q[:, 0], q[:, 1])
        return q

    # -- gait timing --------------------------------------------------------

    def cycle_phase(self, t, foot: int):
        u = np.asarray(t, dtype=float) / self.gait.period + TROT_PHASE[foot]
        k = np.floor(u).astype(np.int64)
        return k, u - k

    def touchdown_time(self, k, foot: int):
        return (np.asarray(k) - TROT_PHASE[foot]) * self.gait.period

    def liftoff_time(self, k, foot: int):
        return self.touchdown_time(k, foot) + self.gait.duty * self.gait.period

    def footholds(self, foot: int) -> tuple[int, np.ndarray]:
        """Nominal (k0, xyz[k - k0]) footholds covering the run with margin."""
        if foot not in self._footholds:
            k_lo = int(math.floor(-1 + TROT_PHASE[foot])) - 1
            k_hi = int(math.floor(self.duration / self.gait.period + TROT_PHASE[foot])) + 2
            ks = np.arange(k_lo, k_hi + 1)
            t_mid = self.touchdown_time(ks, foot) + 0.5 * self.gait.duty * self.gait.period
            b = self.base_state(t_mid)
            R = b.rot
            hip_b = np.array([HIP_OFFSETS[foot, 0], HIP_OFFSETS[foot, 1], 0.0])
            hip = b.pos + R @ hip_b
            self._footholds[foot] = (k_lo, self._project_down(hip, -R[:, :, 2]))
        return self._footholds[foot]

    def _plan_slips(self) -> dict[tuple[int, int], SlipPlan]:
        plans = {}
        for slip in self.spec.injected_slips:
            k, ph = self.cycle_phase(slip.t_start, slip.foot)
            k = int(k)
            t_end = slip.t_start + slip.duration
            if ph >= self.gait.duty or t_end > self.liftoff_time(k, slip.foot) + 1e-12:
                raise ScenarioError(
                    f"slip of foot {slip.foot} at t={slip.t_start:g}s does not fit inside one stance phase"
                )
            if slip.t_start < 0 or t_end > self.times[-1]:
                raise ScenarioError(f"slip at t={slip.t_start:g}s lies outside the run")
            if (slip.foot, k) in plans:
                raise ScenarioError(f"two slips of foot {slip.foot} in stance cycle {k}")
            plans[(slip.foot, k)] = SlipPlan(slip, k, np.array(slip.displacement[:2], dtype=float))
        return plans

    # -- feet ---------------------------------------------------------------

    def slip_offset(self, t, foot, k):
        """Horizontal slip offset and its rate for stance cycle ``k``."""
        off = np.zeros((len(t), 2))
        rate = np.zeros((len(t), 2))
        for (f, kk), plan in self.slips.items():
            if f != foot:
                continue
            m = k == kk
            if not m.any():
                continue
            ts, dur = plan.slip.t_start, plan.slip.duration
            tau = np.clip((t[m] - ts) / dur, 0.0, 1.0)
            off[m] = np.outer(tau**2, plan.d_xy)
            inside = (t[m] > ts) & (t[m] < ts + dur)
            rate[m] = np.outer(np.where(inside, 2 * tau / dur, 0.0), plan.d_xy)
        return off, rate

    def _final_offset(self, foot, k):
        off = np.zeros((len(k), 2))
        for (f, kk), plan in self.slips.items():
            if f == foot:
                off[k == kk] = plan.d_xy
        return off

    def foot_position(self, t, foot: int, actual: bool):
        """World foot positions, stance mask and stance-cycle index at times ``t``."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        k, ph = self.cycle_phase(t, foot)
        k0, holds = self.footholds(foot)
        stance = ph < self.gait.duty
        out = np.empty((len(t), 3))

        ks = k[stance]
        if actual:
            xy = holds[ks - k0, :2] + self.slip_offset(t[stance], foot, ks)[0]
            out[stance, :2] = xy
            out[stance, 2] = self.terrain.height(xy[:, 0], xy[:, 1])
        else:
            out[stance] = holds[ks - k0]

        sw = ~stance
        ks = k[sw]
        start = holds[ks - k0].copy()
        if actual:
            start[:, :2] += self._final_offset(foot, ks)
            start[:, 2] = self.terrain.height(start[:, 0], start[:, 1])
        end = holds[ks + 1 - k0]
        lam = (ph[sw] - self.gait.duty) / (1.0 - self.gait.duty)
        b = 0.5 * (1.0 - np.cos(np.pi * lam))
        out[sw] = start + b[:, None] * (end - start)
        out[sw, 2] += self.gait.clearance * np.sin(np.pi * lam) ** 2
        return out, stance, k

    # -- power --------------------------------------------------------------

    def slope_angle(self, t):
        """Terrain inclination under the CoM along the heading, rad."""
        b = self.base_state(t)
        gx, gy = self.terrain.gradient(b.pos[:, 0], b.pos[:, 1])
        return np.arctan(gx * np.cos(b.yaw) + gy * np.sin(b.yaw))

    def power(self, t):
        p = self.spec.power
        return ROBOT_MASS * self.spec.gravity * self.spec.speed * p.cot(self.slope_angle(t))

    def slope_breaks(self, t_end: float) -> list[float]:
        """Times in (0, t_end) where the CoM crosses a terrain kink."""
        kinks = getattr(self.terrain, "kinks_x", ())
        if not kinks:
            return []
        grid = np.linspace(0.0, t_end, max(2, int(t_end * 50)) + 1)
        x = self.base_position(grid)[:, 0]
        out = []
        for xk in kinks:
            side = x >= xk
            for i in np.nonzero(side[:-1] != side[1:])[0]:
                lo, hi = grid[i], grid[i + 1]
                for _ in range(80):
                    mid = 0.5 * (lo + hi)
                    if (self.base_position(mid)[0, 0] >= xk) == side[i]:
                        lo = mid
                    else:
                        hi = mid
                out.append(0.5 * (lo + hi))
        return sorted(t for t in out if 0.0 < t < t_end)

    def reference_energy(self, t_end: float) -> float:
        """Integral of the power model over [0, t_end], split at kinks and every second."""
        cuts = set(np.arange(1.0, t_end, 1.0).tolist()) | set(self.slope_breaks(t_end))
        edges = [0.0]
        for c in [*sorted(cuts), t_end]:
            if c - edges[-1] > 1e-9:
                edges.append(c)
        edges[-1] = t_end
        total = 0.0
        for lo, hi in zip(edges[:-1], edges[1:]):
            if hi > lo:
                val, _ = integrate.quad(
                    lambda x: float(self.power(x)[0]), lo, hi, limit=200, epsabs=1e-9, epsrel=1e-11
                )
                total += val
        return total


def _joint_signals(t, power, stance, period):
    """Joint rates and torques whose summed |tau * qd| equals ``power``."""
    nj = N_FEET * JOINTS_PER_LEG
    leg_w = np.where(stance, STANCE_WEIGHT, SWING_WEIGHT)
    leg_w = leg_w / leg_w.sum(axis=1, keepdims=True)
    w = np.repeat(leg_w, JOINTS_PER_LEG, axis=1) * np.tile(JOINT_SPLIT, N_FEET)
    j = np.arange(nj)
    phase = 2 * np.pi * t[:, None] / period + 0.7 * j[None, :] + np.pi * (j[None, :] // JOINTS_PER_LEG % 2)
    qd = JOINT_RATE_AMPLITUDE * (1.25 + np.sin(phase))
    qd = qd * np.where(j % 2 == 0, 1.0, -1.0)
    # negative work phases keep torque and rate of opposite sign
    work_sign = np.where(np.cos(phase + 0.3) >= 0, 1.0, -1.0)
    tau = work_sign * power[:, None] * w / qd
    return tau, qd


@dataclass
class Generated:
    header: StreamHeader
    samples: list
    truth: GroundTruth


def generate(spec: ScenarioSpec) -> Generated:
    """Telemetry header, samples and ground truth for one scenario."""
    w = Walker(spec)
    t = w.times
    n = len(t)
    rng = np.random.default_rng(spec.seed)

    base = w.base_state(t)
    pos = base.pos
    rot = base.rot
    acc = (w.base_position(t + ACC_STEP) - 2 * pos + w.base_position(t - ACC_STEP)) / ACC_STEP**2

    contact = np.zeros((n, N_FEET), bool)
    pos_b = np.zeros((n, N_FEET, 3))
    pos_des_b = np.zeros((n, N_FEET, 3))
    vel_b = np.zeros((n, N_FEET, 3))
    vel_des_b = np.zeros((n, N_FEET, 3))
    pos_w = np.zeros((n, N_FEET, 3))
    tp, tm = t + VEL_STEP, t - VEL_STEP

    def rel_velocity(f, actual):
        hi = w.to_base(tp, w.foot_position(tp, f, actual)[0])
        lo = w.to_base(tm, w.foot_position(tm, f, actual)[0])
        return (hi - lo) / (2 * VEL_STEP)

    for f in range(N_FEET):
        des, stance, k = w.foot_position(t, f, actual=False)
        act = w.foot_position(t, f, actual=True)[0]
        vd_b = rel_velocity(f, False)
        va_b = rel_velocity(f, True)
        # in stance the actual velocity departs from the desired one only by the slip rate
        rate = w.slip_offset(t, f, k)[1]
        gx, gy = w.terrain.gradient(act[:, 0], act[:, 1])
        slip_vel = np.column_stack((rate, gx * rate[:, 0] + gy * rate[:, 1]))
        va_b[stance] = vd_b[stance] + np.einsum("nji,nj->ni", rot[stance], slip_vel[stance])
        contact[:, f] = stance
        pos_des_b[:, f] = np.einsum("nji,nj->ni", rot, des - pos)
        pos_b[:, f] = np.einsum("nji,nj->ni", rot, act - pos)
        vel_b[:, f], vel_des_b[:, f] = va_b, vd_b
        pos_w[:, f] = act

    if spec.noise.velocity > 0:
        vel_b = vel_b + rng.normal(0.0, spec.noise.velocity, vel_b.shape)
    reported = pos
    if spec.noise.pose > 0:
        reported = pos + rng.normal(0.0, spec.noise.pose, pos.shape)

    power = w.power(t)
    tau, qd = _joint_signals(t, power, contact, spec.gait.period)
    masses = np.array(SEGMENT_MASSES)
    quat = base.quat

    samples = []
    for i in range(n):
        samples.append(
            ProprioSample(
                t=float(t[i]),
                joint_torque=tau[i],
                joint_velocity=qd[i],
                contact=contact[i],
                foot_pos_base=pos_b[i],
                foot_pos_des_base=pos_des_b[i],
                foot_vel_base=vel_b[i],
                foot_vel_des_base=vel_des_b[i],
                base_quat=quat[i],
                base_pos=reported[i],
                segment_accel=np.repeat(acc[i][None, :], len(masses), axis=0),
                segment_mass=masses,
                com_world=reported[i],
                foot_pos_world=pos_w[i] if spec.emit_foot_world else None,
            )
        )
    header = StreamHeader(
        robot_mass=ROBOT_MASS,
        gravity=np.array([0.0, 0.0, -spec.gravity]),
        joint_count=N_FEET * JOINTS_PER_LEG,
        segment_count=len(SEGMENT_MASSES),
        sample_rate_hz=spec.sample_rate_hz,
    )

    slip_rows = []
    for (f, k), plan in sorted(w.slips.items(), key=lambda kv: kv[1].slip.t_start):
        s = plan.slip
        k0, holds = w.footholds(f)
        start = holds[k - k0]
        end_xy = start[:2] + plan.d_xy
        end_z = float(w.terrain.height(end_xy[0], end_xy[1]))
        disp = np.array([plan.d_xy[0], plan.d_xy[1], end_z - start[2]])
        m = (t >= s.t_start) & (t <= s.t_start + s.duration) & contact[:, f]
        dp = np.abs(np.linalg.norm(pos_des_b[m, f], axis=1) - np.linalg.norm(pos_b[m, f], axis=1))
        slip_rows.append(
            SlipRecord(
                f, s.t_start, s.duration, tuple(disp.tolist()), float(np.linalg.norm(disp)), float(dp.max(initial=0.0))
            )
        )

    grid, heights = truth_grid(spec, w)
    truth = GroundTruth(
        scenario=spec.to_dict(),
        grid=grid,
        heights=heights,
        slips=slip_rows,
        energy_J=w.reference_energy(float(t[-1])),
        distance_m=spec.speed * float(t[-1]),
        duration_s=float(t[-1]),
        t=t.copy(),
        com=pos.copy(),
        stance=contact.copy(),
    )
    return Generated(header, samples, truth)


def plan_slips(
    spec: ScenarioSpec,
    count: int,
    seed: int = 0,
    magnitude=(0.07, 0.12),
    duration=(0.08, 0.15),
    min_gap: float = 2.5,
    t_margin: float = 2.0,
) -> list[InjectedSlip]:
    """Random stance-phase slips pushing a foot horizontally away from the body.

    Slips of one foot are at least ``min_gap`` seconds apart so each starts
    against a quiet velocity history.
    """
    w = Walker(replace(spec, injected_slips=()))
    rng = np.random.default_rng(seed)
    T, duty = spec.gait.period, spec.gait.duty
    t_last = w.times[-1] - t_margin
    chosen: list[InjectedSlip] = []
    attempts = 0
    while len(chosen) < count:
        attempts += 1
        if attempts > 500 * max(count, 1):
            raise ScenarioError(f"cannot place {count} slips on a {w.duration:.1f}s run")
        foot = int(rng.integers(N_FEET))
        dur = float(rng.uniform(*duration))
        k = int(w.cycle_phase(float(rng.uniform(t_margin, t_last)), foot)[0])
        td = float(w.touchdown_time(k, foot))
        room = duty * T - dur - 0.1
        if room <= 0:
            continue
        ts = td + 0.05 + float(rng.uniform(0.0, room))
        if ts < t_margin or ts + dur > t_last:
            continue
        if any(c.foot == foot and abs(c.t_start - ts) < min_gap for c in chosen):
            continue
        k0, holds = w.footholds(foot)
        out = holds[k - k0, :2] - w.base_position(ts)[0, :2]
        out /= np.linalg.norm(out)
        mag = float(rng.uniform(*magnitude))
        chosen.append(InjectedSlip(ts, foot, (mag * out[0], mag * out[1], 0.0), dur))
    return sorted(chosen, key=lambda s: s.t_start)
