"""Scenario descriptions for the synthetic walker, with JSON round-tripping."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from ..telemetry import LUNAR_GRAVITY
from .terrain import CraterField, FlatTerrain, RampTestbed, terrain_from_dict

COMMANDED_SPEED = 0.2
RAMP_START_OFFSET = 0.5


@dataclass(frozen=True)
class GaitParams:
    period: float = 0.8
    duty: float = 0.6
    clearance: float = 0.06

    def __post_init__(self):
        if not self.period > 0:
            raise ValueError("gait period must be > 0")
        if not 0.5 < self.duty < 1.0:
            raise ValueError("trot duty factor must lie in (0.5, 1)")


@dataclass(frozen=True)
class InjectedSlip:
    """A stance foot sliding horizontally by ``displacement`` over ``duration``.

    The vertical component of ``displacement`` is ignored: the foot stays on
    the surface, and the realized 3D displacement goes to the ground truth.
    """

    t_start: float
    foot: int
    displacement: tuple[float, float, float]
    duration: float

    def __post_init__(self):
        if self.foot not in (0, 1, 2, 3):
            raise ValueError("foot must be 0..3")
        if not self.duration > 0:
            raise ValueError("slip duration must be > 0")
        object.__setattr__(self, "displacement", tuple(float(v) for v in self.displacement))


@dataclass(frozen=True)
class NoiseParams:
    pose: float = 0.0
    velocity: float = 0.0


@dataclass(frozen=True)
class PowerModel:
    """Mechanical power ``m g v (c0 + c1 a + c2 a^2)``, ``a`` the signed slope angle (rad).

    Along a constant slope this makes the Cost of Transport exactly
    ``c0 + c1 a + c2 a^2``.
    """

    c0: float = 1.2
    c1: float = 1.0
    c2: float = 4.0

    def __post_init__(self):
        lowest = self.c0 - (self.c1**2 / (4 * self.c2) if self.c2 > 0 else 0.0)
        if self.c0 <= 0 or self.c2 < 0 or lowest <= 0:
            raise ValueError("power model must stay positive")

    def cot(self, slope_rad):
        return self.c0 + self.c1 * slope_rad + self.c2 * slope_rad**2


@dataclass(frozen=True)
class ScenarioSpec:
    terrain: object
    waypoints: tuple
    speed: float = COMMANDED_SPEED
    gait: GaitParams = field(default_factory=GaitParams)
    injected_slips: tuple = ()
    noise: NoiseParams = field(default_factory=NoiseParams)
    gravity: float = LUNAR_GRAVITY
    sample_rate_hz: float = 500.0
    seed: int = 0
    power: PowerModel = field(default_factory=PowerModel)
    turn_radius: float = 1.0
    truth_grid: tuple = (50, 50, 0.4)
    emit_foot_world: bool = False
    name: str = ""

    def __post_init__(self):
        object.__setattr__(self, "waypoints", tuple(tuple(float(v) for v in w) for w in self.waypoints))
        object.__setattr__(self, "injected_slips", tuple(self.injected_slips))
        if not self.speed > 0:
            raise ValueError("speed must be > 0")
        if not self.gravity > 0:
            raise ValueError("gravity magnitude must be > 0")
        if not self.sample_rate_hz > 0:
            raise ValueError("sample rate must be > 0")

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "terrain": self.terrain.to_dict(),
            "waypoints": [list(w) for w in self.waypoints],
            "speed": self.speed,
            "gait": asdict(self.gait),
            "injected_slips": [asdict(s) | {"displacement": list(s.displacement)} for s in self.injected_slips],
            "noise": asdict(self.noise),
            "gravity": self.gravity,
            "sample_rate_hz": self.sample_rate_hz,
            "seed": self.seed,
            "power": asdict(self.power),
            "turn_radius": self.turn_radius,
            "truth_grid": list(self.truth_grid),
            "emit_foot_world": self.emit_foot_world,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ScenarioSpec":
        d = dict(d)
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown scenario keys: {sorted(unknown)}")
        if "terrain" not in d or "waypoints" not in d:
            raise ValueError("scenario needs 'terrain' and 'waypoints'")
        d["terrain"] = terrain_from_dict(d["terrain"])
        if "gait" in d:
            d["gait"] = GaitParams(**d["gait"])
        if "noise" in d:
            d["noise"] = NoiseParams(**d["noise"])
        if "power" in d:
            d["power"] = PowerModel(**d["power"])
        if "injected_slips" in d:
            d["injected_slips"] = tuple(InjectedSlip(**s) for s in d["injected_slips"])
        if "truth_grid" in d:
            d["truth_grid"] = tuple(d["truth_grid"])
        return cls(**d)


def save_scenario(spec: ScenarioSpec, path) -> None:
    Path(path).write_text(json.dumps(spec.to_dict(), indent=2) + "\n", encoding="utf-8")


def load_scenario(path) -> ScenarioSpec:
    return ScenarioSpec.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def ramp_scenario(alpha_deg: float, direction: str = "forward", **kwargs) -> ScenarioSpec:
    """Straight traversal of the ramp testbed, starting on one approach."""
    terrain_kw = {k: kwargs.pop(k) for k in ("ramp_length", "platform_length", "approach_length") if k in kwargs}
    terrain = RampTestbed(alpha_deg, **terrain_kw)
    lo, hi = terrain.x_start + RAMP_START_OFFSET, terrain.x_end - RAMP_START_OFFSET
    if direction == "forward":
        waypoints = ((lo, 0.0), (hi, 0.0))
    elif direction == "reverse":
        waypoints = ((hi, 0.0), (lo, 0.0))
    else:
        raise ValueError(f"direction must be 'forward' or 'reverse', got {direction!r}")
    n_cells = int(2 * round((hi - lo) / 0.4)) + 4
    kwargs.setdefault("truth_grid", (n_cells, 20, 0.4))
    kwargs.setdefault("name", f"ramp_{alpha_deg:g}deg_{direction}")
    return ScenarioSpec(terrain=terrain, waypoints=waypoints, **kwargs)


def ramp_segments(terrain: RampTestbed, direction: str) -> dict:
    """x-ranges of the ascending and descending ramps for a traversal direction."""
    seg = terrain.segments()
    if direction == "forward":
        return {"ascending": seg["first_ramp"], "descending": seg["second_ramp"]}
    return {"ascending": seg["second_ramp"], "descending": seg["first_ramp"]}


def flat_scenario(length: float = 6.0, **kwargs) -> ScenarioSpec:
    kwargs.setdefault("name", "flat")
    return ScenarioSpec(terrain=FlatTerrain(), waypoints=((0.0, 0.0), (length, 0.0)), **kwargs)


# corner-to-corner routes across the crater field; the first is direct
CRATER_ROUTES = (
    ((-8.5, -8.5), (8.5, 8.5)),
    ((-8.5, -8.5), (-3.0, 4.0), (8.5, 8.5)),
    ((-8.5, -8.5), (4.0, -3.0), (8.5, 8.5)),
)


def crater_scenario(route: int, terrain_seed: int = 7, **kwargs) -> ScenarioSpec:
    kwargs.setdefault("truth_grid", (100, 100, 0.4))
    kwargs.setdefault("name", f"crater_trajectory_{route + 1}")
    return ScenarioSpec(terrain=CraterField(seed=terrain_seed), waypoints=CRATER_ROUTES[route], **kwargs)


@dataclass(frozen=True)
class SweepItem:
    angle_deg: float
    repeat: int
    direction: str
    scenario: ScenarioSpec


def sweep(angles, repeats: int, seed: int = 0, **kwargs) -> list[SweepItem]:
    """One ramp scenario per (angle, repeat, traversal direction)."""
    items = []
    for angle in angles:
        if abs(angle) > 20:
            raise ValueError(f"sweep angles must lie within +-20 deg, got {angle}")
        for rep in range(repeats):
            for direction in ("forward", "reverse"):
                spec = ramp_scenario(angle, direction, seed=seed + rep, **kwargs)
                items.append(SweepItem(float(angle), rep, direction, spec))
    return items


def with_slips(spec: ScenarioSpec, slips) -> ScenarioSpec:
    return replace(spec, injected_slips=tuple(slips))
