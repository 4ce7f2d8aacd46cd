"""Analytic terrains: flat ground, the symmetric ramp testbed, a crater field.

Every terrain exposes vectorized ``height(x, y)`` and ``gradient(x, y)``,
``base_height(x, y, heading)`` and ``base_gradient(x, y, heading)`` (the
surface seen by the body, smoothed where the surface has kinks) and
``bounds``.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

BODY_LENGTH = 0.5


@dataclass(frozen=True)
class FlatTerrain:
    z0: float = 0.0
    kind: str = field(default="flat", init=False)

    @property
    def bounds(self):
        return None

    def height(self, x, y):
        return np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape) + self.z0

    def gradient(self, x, y):
        z = np.zeros(np.broadcast(np.asarray(x), np.asarray(y)).shape)
        return z, z.copy()

    def base_height(self, x, y, heading):
        return self.height(x, y)

    def base_gradient(self, x, y, heading):
        return self.gradient(x, y)

    def to_dict(self):
        return {"kind": self.kind, "z0": self.z0}


@dataclass(frozen=True)
class RampTestbed:
    """Approach, ascending ramp, platform, descending ramp, exit, along +x.

    Both ramps share the inclination ``alpha_deg``; lengths are horizontal.
    The surface depends on x only and is continuous and piecewise linear.
    """

    alpha_deg: float
    ramp_length: float = 3.2
    platform_length: float = 2.0
    approach_length: float = 1.0
    x_start: float = 0.0
    width: float = 4.0
    kind: str = field(default="ramp_testbed", init=False)

    def __post_init__(self):
        if abs(self.alpha_deg) >= 90:
            raise ValueError("ramp angle must lie in (-90, 90) degrees")
        if min(self.ramp_length, self.platform_length, self.approach_length, self.width) <= 0:
            raise ValueError("testbed lengths must be > 0")

    @property
    def slope(self) -> float:
        return math.tan(math.radians(self.alpha_deg))

    @property
    def breaks(self) -> tuple[float, float, float, float]:
        a0 = self.x_start + self.approach_length
        a1 = a0 + self.ramp_length
        a2 = a1 + self.platform_length
        a3 = a2 + self.ramp_length
        return a0, a1, a2, a3

    @property
    def kinks_x(self) -> tuple[float, float, float, float]:
        return self.breaks

    @property
    def x_end(self) -> float:
        return self.breaks[3] + self.approach_length

    @property
    def bounds(self):
        return (self.x_start, self.x_end, -self.width / 2, self.width / 2)

    def profile(self, x):
        a0, a1, a2, a3 = self.breaks
        k = self.slope
        top = k * self.ramp_length
        x = np.asarray(x, dtype=float)
        return np.select(
            [x < a0, x < a1, x < a2, x < a3],
            [np.zeros_like(x), (x - a0) * k, np.full_like(x, top), top - (x - a2) * k],
            default=0.0,
        )

    def profile_slope(self, x):
        a0, a1, a2, a3 = self.breaks
        k = self.slope
        x = np.asarray(x, dtype=float)
        return np.select([x < a0, x < a1, x < a2, x < a3], [0.0, k, 0.0, -k], default=0.0)

    def antiderivative(self, x):
        """Integral of the profile from ``a0``; exact piecewise quadratic."""
        a0, a1, a2, a3 = self.breaks
        k = self.slope
        top = k * self.ramp_length
        x = np.asarray(x, dtype=float)
        c1 = 0.5 * k * (a1 - a0) ** 2
        c2 = c1 + top * (a2 - a1)
        c3 = c2 + top * (a3 - a2) - 0.5 * k * (a3 - a2) ** 2
        u = x - a2
        return np.select(
            [x < a0, x < a1, x < a2, x < a3],
            [np.zeros_like(x), 0.5 * k * (x - a0) ** 2, c1 + top * (x - a1), c2 + top * u - 0.5 * k * u**2],
            default=c3,
        )

    def height(self, x, y):
        return self.profile(np.asarray(x) + 0 * np.asarray(y))

    def gradient(self, x, y):
        gx = self.profile_slope(np.asarray(x) + 0 * np.asarray(y))
        return gx, np.zeros_like(gx)

    def base_height(self, x, y, heading):
        """Profile averaged over one body length along the heading (C1)."""
        x = np.asarray(x, dtype=float) + 0 * np.asarray(y)
        c = np.abs(np.cos(heading)) * BODY_LENGTH
        c = np.broadcast_to(c, x.shape)
        out = self.profile(x)
        ok = c > 1e-9
        half = 0.5 * c[ok]
        out[ok] = (self.antiderivative(x[ok] + half) - self.antiderivative(x[ok] - half)) / c[ok]
        return out

    def base_gradient(self, x, y, heading):
        """Gradient of ``base_height`` with the averaging window held fixed."""
        x = np.asarray(x, dtype=float) + 0 * np.asarray(y)
        c = np.broadcast_to(np.abs(np.cos(heading)) * BODY_LENGTH, x.shape)
        gx = self.profile_slope(x)
        ok = c > 1e-9
        half = 0.5 * c[ok]
        gx[ok] = (self.profile(x[ok] + half) - self.profile(x[ok] - half)) / c[ok]
        return gx, np.zeros_like(gx)

    def segments(self) -> dict:
        a0, a1, a2, a3 = self.breaks
        return {"first_ramp": (a0, a1), "platform": (a1, a2), "second_ramp": (a2, a3)}

    def to_dict(self):
        d = asdict(self)
        d["kind"] = self.kind
        return d


@dataclass(frozen=True)
class _Feature:
    cx: float
    cy: float
    size: float
    amp: float


@dataclass(frozen=True)
class CraterField:
    """Seeded smooth relief plus radial craters inside a square patch.

    Bumps are Gaussian; a crater of radius R and depth D is
    ``-D (1 - (rho/R)^2)^2`` inside R, which is C1 at its rim. The relief is
    scaled down if needed so ``|h| <= max_relief`` over the patch.
    """

    seed: int = 0
    size: float = 20.0
    cx: float = 0.0
    cy: float = 0.0
    max_relief: float = 1.5
    max_crater_width: float = 2.5
    max_crater_depth: float = 1.0
    n_craters: int = 14
    n_bumps: int = 8
    kind: str = field(default="crater_field", init=False)
    _bumps: tuple = field(default=(), init=False, repr=False, compare=False)
    _craters: tuple = field(default=(), init=False, repr=False, compare=False)
    _scale: float = field(default=1.0, init=False, repr=False, compare=False)

    def __post_init__(self):
        rng = np.random.default_rng(self.seed)
        half = self.size / 2
        bumps = []
        for _ in range(self.n_bumps):
            bumps.append(
                _Feature(
                    self.cx + rng.uniform(-half, half),
                    self.cy + rng.uniform(-half, half),
                    rng.uniform(2.0, 4.5),
                    rng.uniform(-0.8, 0.8),
                )
            )
        craters = []
        for _ in range(self.n_craters):
            width = rng.uniform(1.0, self.max_crater_width)
            depth = rng.uniform(0.1, min(self.max_crater_depth, 0.25 * width))
            craters.append(
                _Feature(
                    self.cx + rng.uniform(-half + 1, half - 1),
                    self.cy + rng.uniform(-half + 1, half - 1),
                    width / 2,
                    depth,
                )
            )
        object.__setattr__(self, "_bumps", tuple(bumps))
        object.__setattr__(self, "_craters", tuple(craters))
        xs = np.linspace(self.cx - half, self.cx + half, 401)
        X, Y = np.meshgrid(xs, xs)
        peak = float(np.max(np.abs(self._raw_height(X, Y))))
        if peak > self.max_relief:
            object.__setattr__(self, "_scale", self.max_relief / peak)

    @property
    def bounds(self):
        half = self.size / 2
        return (self.cx - half, self.cx + half, self.cy - half, self.cy + half)

    def _raw_height(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        h = np.zeros(np.broadcast(x, y).shape)
        for b in self._bumps:
            h = h + b.amp * np.exp(-((x - b.cx) ** 2 + (y - b.cy) ** 2) / (2 * b.size**2))
        for c in self._craters:
            u2 = ((x - c.cx) ** 2 + (y - c.cy) ** 2) / c.size**2
            h = h - c.amp * np.where(u2 < 1, (1 - u2) ** 2, 0.0)
        return h

    def height(self, x, y):
        return self._scale * self._raw_height(x, y)

    def gradient(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        gx = np.zeros(np.broadcast(x, y).shape)
        gy = np.zeros_like(gx)
        for b in self._bumps:
            e = b.amp * np.exp(-((x - b.cx) ** 2 + (y - b.cy) ** 2) / (2 * b.size**2))
            gx = gx - e * (x - b.cx) / b.size**2
            gy = gy - e * (y - b.cy) / b.size**2
        for c in self._craters:
            u2 = ((x - c.cx) ** 2 + (y - c.cy) ** 2) / c.size**2
            # d/dx of -D (1 - u2)^2 = 4 D (1 - u2) (x - cx) / R^2
            k = np.where(u2 < 1, 4 * c.amp * (1 - u2) / c.size**2, 0.0)
            gx = gx + k * (x - c.cx)
            gy = gy + k * (y - c.cy)
        return self._scale * gx, self._scale * gy

    def base_height(self, x, y, heading):
        return self.height(x, y)

    def base_gradient(self, x, y, heading):
        return self.gradient(x, y)

    def to_dict(self):
        return {
            "kind": self.kind,
            "seed": self.seed,
            "size": self.size,
            "cx": self.cx,
            "cy": self.cy,
            "max_relief": self.max_relief,
            "max_crater_width": self.max_crater_width,
            "max_crater_depth": self.max_crater_depth,
            "n_craters": self.n_craters,
            "n_bumps": self.n_bumps,
        }


def terrain_from_dict(d: dict):
    d = dict(d)
    kind = d.pop("kind")
    if kind == "flat":
        return FlatTerrain(**d)
    if kind == "ramp_testbed":
        return RampTestbed(**d)
    if kind == "crater_field":
        return CraterField(**d)
    raise ValueError(f"unknown terrain kind {kind!r}")
