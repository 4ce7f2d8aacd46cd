"""Proprioceptive telemetry data model and the line-delimited stream format.

A telemetry file is UTF-8 text. The first non-blank line is a ``#HEADER``
record, every following line a ``#SAMPLE`` record. Fields are separated by a
single space and floats are written with 17 significant digits so a
write/read cycle is bit-exact.

``#HEADER`` fields, in order::

    robot_mass gx gy gz joint_count segment_count sample_rate_hz

``#SAMPLE`` fields, in order (N_j joints, N_s segments, 4 feet)::

    t
    joint_torque[N_j]
    joint_velocity[N_j]
    contact[4]                     0 or 1
    foot_pos_base[4x3]             foot-major, xyz
    foot_pos_des_base[4x3]
    foot_vel_base[4x3]
    foot_vel_des_base[4x3]
    base_quat[4]                   w x y z, world <- base
    base_pos[3]                    world <- base translation
    segment_accel[N_s x 3]
    segment_mass[N_s]
    com_world[3]
    has_foot_world                 0 or 1
    foot_pos_world[4x3]            only when has_foot_world == 1

Tokens after the last defined field are ignored.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

N_FEET = 4
FOOT_NAMES = ("FL", "FR", "RL", "RR")
LUNAR_GRAVITY = 1.62

MASS_RTOL = 1e-9
ROTATION_TOL = 1e-6


class TelemetryError(ValueError):
    """Invalid or malformed telemetry, tagged with its record and line."""

    def __init__(self, message: str, record: int | None = None, line: int | None = None):
        where = []
        if record is not None:
            where.append(f"record {record}")
        if line is not None:
            where.append(f"line {line}")
        full = f"{message} at {', '.join(where)}" if where else message
        super().__init__(full)
        self.record = record
        self.line = line


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrix of a unit quaternion given as (w, x, y, z)."""
    w, x, y, z = (float(v) for v in q)
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def yaw_quat(yaw: float) -> np.ndarray:
    return np.array([np.cos(yaw / 2), 0.0, 0.0, np.sin(yaw / 2)])


@dataclass(frozen=True)
class StreamHeader:
    robot_mass: float
    gravity: np.ndarray
    joint_count: int
    segment_count: int
    sample_rate_hz: float

    @property
    def gravity_magnitude(self) -> float:
        return float(np.linalg.norm(self.gravity))

    def validate(self) -> None:
        if not np.isfinite(self.robot_mass) or self.robot_mass <= 0:
            raise TelemetryError(f"robot_mass must be > 0, got {self.robot_mass}")
        g = np.asarray(self.gravity, dtype=float)
        if g.shape != (3,) or not np.all(np.isfinite(g)) or np.linalg.norm(g) <= 0:
            raise TelemetryError("gravity must be a finite nonzero 3-vector")
        if self.joint_count < 1 or self.segment_count < 1:
            raise TelemetryError("joint_count and segment_count must be >= 1")
        if not self.sample_rate_hz > 0:
            raise TelemetryError("sample_rate_hz must be > 0")

    def __eq__(self, other) -> bool:
        if not isinstance(other, StreamHeader):
            return NotImplemented
        return (
            self.robot_mass == other.robot_mass
            and np.array_equal(self.gravity, other.gravity)
            and self.joint_count == other.joint_count
            and self.segment_count == other.segment_count
            and self.sample_rate_hz == other.sample_rate_hz
        )


@dataclass(frozen=True)
class ProprioSample:
    """One timestamped frame of proprioceptive signals.

    Foot arrays are ordered FL, FR, RL, RR. Base-frame quantities are
    expressed in the robot base frame; ``base_quat``/``base_pos`` give the
    world <- base transform. ``foot_pos_world`` is optional and, when absent,
    is derived from the base pose.
    """

    t: float
    joint_torque: np.ndarray
    joint_velocity: np.ndarray
    contact: np.ndarray
    foot_pos_base: np.ndarray
    foot_pos_des_base: np.ndarray
    foot_vel_base: np.ndarray
    foot_vel_des_base: np.ndarray
    base_quat: np.ndarray
    base_pos: np.ndarray
    segment_accel: np.ndarray
    segment_mass: np.ndarray
    com_world: np.ndarray
    foot_pos_world: np.ndarray | None = None

    _ARRAY_FIELDS = (
        "joint_torque",
        "joint_velocity",
        "contact",
        "foot_pos_base",
        "foot_pos_des_base",
        "foot_vel_base",
        "foot_vel_des_base",
        "base_quat",
        "base_pos",
        "segment_accel",
        "segment_mass",
        "com_world",
    )

    @property
    def base_rotation(self) -> np.ndarray:
        return quat_to_matrix(self.base_quat)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProprioSample):
            return NotImplemented
        if self.t != other.t:
            return False
        for name in self._ARRAY_FIELDS:
            if not np.array_equal(getattr(self, name), getattr(other, name)):
                return False
        if (self.foot_pos_world is None) != (other.foot_pos_world is None):
            return False
        return self.foot_pos_world is None or np.array_equal(
            self.foot_pos_world, other.foot_pos_world
        )


def validate_sample(
    sample: ProprioSample,
    header: StreamHeader,
    record: int | None = None,
    line: int | None = None,
) -> None:
    """Check one sample against the header. Raises TelemetryError."""

    def fail(msg):
        raise TelemetryError(msg, record=record, line=line)

    nj, ns = header.joint_count, header.segment_count
    shapes = {
        "joint_torque": (nj,),
        "joint_velocity": (nj,),
        "contact": (N_FEET,),
        "foot_pos_base": (N_FEET, 3),
        "foot_pos_des_base": (N_FEET, 3),
        "foot_vel_base": (N_FEET, 3),
        "foot_vel_des_base": (N_FEET, 3),
        "base_quat": (4,),
        "base_pos": (3,),
        "segment_accel": (ns, 3),
        "segment_mass": (ns,),
        "com_world": (3,),
    }
    for name, shape in shapes.items():
        arr = getattr(sample, name)
        if np.shape(arr) != shape:
            fail(f"{name} has shape {np.shape(arr)}, expected {shape}")
        if name != "contact" and not np.all(np.isfinite(arr)):
            fail(f"{name} is not finite")
    if sample.foot_pos_world is not None:
        if np.shape(sample.foot_pos_world) != (N_FEET, 3):
            fail("foot_pos_world must have shape (4, 3)")
        if not np.all(np.isfinite(sample.foot_pos_world)):
            fail("foot_pos_world is not finite")
    if not np.isfinite(sample.t):
        fail("time is not finite")
    if np.any(sample.segment_mass <= 0):
        fail("segment_mass must be > 0")
    total = float(np.sum(sample.segment_mass))
    if abs(total - header.robot_mass) > MASS_RTOL * header.robot_mass:
        fail(f"segment masses sum to {total!r}, header robot_mass is {header.robot_mass!r}")
    rot = sample.base_rotation
    if (
        np.max(np.abs(rot @ rot.T - np.eye(3))) > ROTATION_TOL
        or abs(np.linalg.det(rot) - 1.0) > ROTATION_TOL
    ):
        fail("base rotation is not orthonormal with determinant +1")


def validate_stream(header: StreamHeader, samples: Sequence[ProprioSample]) -> None:
    header.validate()
    prev_t = None
    for k, s in enumerate(samples, start=1):
        validate_sample(s, header, record=k)
        if prev_t is not None and not s.t > prev_t:
            raise TelemetryError("non-monotonic time", record=k)
        prev_t = s.t


def _fmt(values: Iterable[float]) -> str:
    return " ".join(["%.17g" % v for v in values])


def format_header(header: StreamHeader) -> str:
    return "#HEADER %s %s %d %d %s" % (
        "%.17g" % header.robot_mass,
        _fmt(np.asarray(header.gravity, dtype=float).tolist()),
        header.joint_count,
        header.segment_count,
        "%.17g" % header.sample_rate_hz,
    )


def format_sample(s: ProprioSample) -> str:
    parts = [
        "#SAMPLE",
        "%.17g" % s.t,
        _fmt(s.joint_torque.tolist()),
        _fmt(s.joint_velocity.tolist()),
        " ".join("1" if c else "0" for c in s.contact),
        _fmt(s.foot_pos_base.ravel().tolist()),
        _fmt(s.foot_pos_des_base.ravel().tolist()),
        _fmt(s.foot_vel_base.ravel().tolist()),
        _fmt(s.foot_vel_des_base.ravel().tolist()),
        _fmt(s.base_quat.tolist()),
        _fmt(s.base_pos.tolist()),
        _fmt(s.segment_accel.ravel().tolist()),
        _fmt(s.segment_mass.tolist()),
        _fmt(s.com_world.tolist()),
    ]
    if s.foot_pos_world is None:
        parts.append("0")
    else:
        parts.append("1")
        parts.append(_fmt(s.foot_pos_world.ravel().tolist()))
    return " ".join(parts)


def write_stream(header: StreamHeader, samples: Sequence[ProprioSample], path) -> None:
    """Validate, then write a telemetry file. Nothing is written on invalid input."""
    validate_stream(header, samples)
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        fh.write(format_header(header) + "\n")
        for s in samples:
            fh.write(format_sample(s) + "\n")


def parse_header(line: str, lineno: int = 1) -> StreamHeader:
    tokens = line.split()
    if not tokens or tokens[0] != "#HEADER":
        raise TelemetryError("expected #HEADER record", line=lineno)
    if len(tokens) < 8:
        raise TelemetryError("truncated #HEADER record", line=lineno)
    try:
        header = StreamHeader(
            robot_mass=float(tokens[1]),
            gravity=np.array([float(v) for v in tokens[2:5]]),
            joint_count=int(tokens[5]),
            segment_count=int(tokens[6]),
            sample_rate_hz=float(tokens[7]),
        )
    except ValueError as exc:
        raise TelemetryError(f"malformed #HEADER record ({exc})", line=lineno) from None
    try:
        header.validate()
    except TelemetryError as exc:
        raise TelemetryError(str(exc), line=lineno) from None
    return header


def parse_sample(line: str, header: StreamHeader, record: int, lineno: int) -> ProprioSample:
    tokens = line.split()
    if not tokens or tokens[0] != "#SAMPLE":
        raise TelemetryError("expected #SAMPLE record", record=record, line=lineno)
    nj, ns = header.joint_count, header.segment_count
    n_fixed = 1 + 2 * nj + 4 + 48 + 4 + 3 + 3 * ns + ns + 3 + 1
    body = tokens[1:]
    if len(body) < n_fixed:
        raise TelemetryError("truncated #SAMPLE record", record=record, line=lineno)
    try:
        contact_tokens = body[1 + 2 * nj : 5 + 2 * nj]
        if any(c not in ("0", "1") for c in contact_tokens):
            raise ValueError("contact flags must be 0 or 1")
        has_world_tok = body[n_fixed - 1]
        if has_world_tok not in ("0", "1"):
            raise ValueError("has_foot_world must be 0 or 1")
        has_world = has_world_tok == "1"
        if has_world and len(body) < n_fixed + 12:
            raise ValueError("missing foot_pos_world values")
        floats = np.array(
            [float(v) for v in body[: 1 + 2 * nj]]
            + [float(v) for v in body[5 + 2 * nj : n_fixed - 1]]
        )
        world = (
            np.array([float(v) for v in body[n_fixed : n_fixed + 12]]).reshape(4, 3)
            if has_world
            else None
        )
    except ValueError as exc:
        raise TelemetryError(f"malformed #SAMPLE record ({exc})", record=record, line=lineno) from None

    pos = 0

    def take(n, shape=None):
        nonlocal pos
        out = floats[pos : pos + n]
        pos += n
        return out.reshape(shape) if shape else out.copy()

    t = float(take(1)[0])
    tau = take(nj)
    qd = take(nj)
    sample = ProprioSample(
        t=t,
        joint_torque=tau,
        joint_velocity=qd,
        contact=np.array([c == "1" for c in contact_tokens]),
        foot_pos_base=take(12, (4, 3)),
        foot_pos_des_base=take(12, (4, 3)),
        foot_vel_base=take(12, (4, 3)),
        foot_vel_des_base=take(12, (4, 3)),
        base_quat=take(4),
        base_pos=take(3),
        segment_accel=take(3 * ns, (ns, 3)),
        segment_mass=take(ns),
        com_world=take(3),
        foot_pos_world=world,
    )
    validate_sample(sample, header, record=record, line=lineno)
    return sample


def read_stream(path) -> tuple[StreamHeader, list[ProprioSample]]:
    """Read and validate a telemetry file, returning (header, samples)."""
    path = Path(path)
    header = None
    samples: list[ProprioSample] = []
    prev_t = None
    with path.open("r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            if header is None:
                header = parse_header(line, lineno)
                continue
            record = len(samples) + 1
            s = parse_sample(line, header, record, lineno)
            if prev_t is not None and not s.t > prev_t:
                raise TelemetryError("non-monotonic time", record=record, line=lineno)
            prev_t = s.t
            samples.append(s)
    if header is None:
        raise TelemetryError(f"{path} has no #HEADER record")
    return header, samples
