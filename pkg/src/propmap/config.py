"""Run configuration as flat, typed ``key = value`` text.

Lines are ``key = value``; ``#`` starts a comment. Unknown keys are rejected,
values are parsed by the type of their default. Lists are comma separated.
The canonical dump (sorted keys, fixed formatting) is hashed into a
fingerprint that goes into every exported map.
"""

from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass, field
from pathlib import Path

from .slip import SlipConfig

# key -> (default, help)
SCHEMA: dict[str, tuple[object, str]] = {
    "grid.n_x": (50, "cells along x"),
    "grid.n_y": (50, "cells along y"),
    "grid.resolution": (0.4, "cell size, m"),
    "grid.origin": ("auto", "'auto' (first CoM position) or 'x,y' in m"),
    "slip.h": (0.01, "velocity-ratio stabilizer"),
    "slip.eps_p": (0.02, "position discrepancy threshold, m"),
    "slip.percentile": (90.0, "percentile of the rolling velocity window"),
    "slip.window": (200, "rolling window length, stance samples per foot"),
    "slip.min_samples": (10, "window fill before the velocity threshold arms"),
    "cot.d_min": (0.001, "minimum segment distance for a CoT value, m"),
    "smoothing.enabled": (False, "write smoothed layers at export"),
    "smoothing.sigma": (1.0, "Gaussian sigma, cells"),
    "harness.sample_rate_hz": (500.0, "telemetry rate for generated scenarios"),
    "harness.duty": (0.6, "trot duty factor"),
    "harness.period": (0.8, "trot stride period, s"),
    "sweep.angles": ([-20.0, -15.0, -10.0, -5.0, 0.0, 5.0, 10.0, 15.0, 20.0], "ramp angles, deg"),
    "sweep.repeats": (4, "traversals per angle and direction"),
    "sweep.margin_cells": (1, "cells trimmed at each ramp end before averaging"),
    "seed": (0, "seed for every random draw"),
}


class ConfigError(ValueError):
    pass


def _parse_value(key: str, raw: str):
    default = SCHEMA[key][0]
    raw = raw.strip()
    try:
        if isinstance(default, bool):
            low = raw.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError(raw)
            return v
        if isinstance(default, list):
            return [float(tok) for tok in raw.split(",") if tok.strip()]
        return raw
    except ValueError:
        raise ConfigError(f"{key}: cannot parse {raw!r} as {type(default).__name__}") from None


def _coerce(key: str, v):
    default = SCHEMA[key][0]
    if isinstance(v, str) and not isinstance(default, str):
        return _parse_value(key, v)
    if isinstance(default, bool):
        return bool(v)
    if isinstance(default, int):
        if isinstance(v, float) and not v.is_integer():
            raise ConfigError(f"{key}: expected an integer, got {v!r}")
        return int(v)
    if isinstance(default, float):
        return float(v)
    if isinstance(default, list):
        return [float(x) for x in v]
    return str(v)


def _format_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, list):
        return ", ".join(repr(float(x)) for x in v)
    return str(v)


@dataclass(frozen=True)
class RunConfig:
    values: dict = field(default_factory=lambda: {k: v for k, (v, _) in SCHEMA.items()})

    def __post_init__(self):
        merged = {k: v for k, (v, _) in SCHEMA.items()}
        for k, v in self.values.items():
            if k not in SCHEMA:
                raise ConfigError(f"unknown config key {k!r}")
            merged[k] = _coerce(k, v)
        object.__setattr__(self, "values", merged)
        self.slip_config()  # validates slip keys
        if self["grid.n_x"] < 1 or self["grid.n_y"] < 1 or not self["grid.resolution"] > 0:
            raise ConfigError("grid needs n_x, n_y >= 1 and resolution > 0")
        if self["cot.d_min"] < 0 or self["smoothing.sigma"] < 0:
            raise ConfigError("cot.d_min and smoothing.sigma must be >= 0")
        if self["sweep.repeats"] < 1 or self["sweep.margin_cells"] < 0:
            raise ConfigError("sweep.repeats must be >= 1 and sweep.margin_cells >= 0")
        self.origin()

    def __getitem__(self, key):
        return self.values[key]

    def with_values(self, **kw) -> "RunConfig":
        """Copy with overrides; keys use ``__`` for the dot (``grid__n_x``)."""
        vals = dict(self.values)
        vals.update({k.replace("__", "."): v for k, v in kw.items()})
        return RunConfig(vals)

    def origin(self):
        raw = self["grid.origin"].strip()
        if raw == "auto":
            return None
        try:
            x, y = (float(p) for p in raw.split(","))
        except ValueError:
            raise ConfigError(f"grid.origin must be 'auto' or 'x,y', got {raw!r}") from None
        return x, y

    def slip_config(self) -> SlipConfig:
        try:
            return SlipConfig(
                h=self["slip.h"],
                eps_p=self["slip.eps_p"],
                percentile=self["slip.percentile"],
                window=self["slip.window"],
                min_samples=self["slip.min_samples"],
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def dumps(self) -> str:
        return "".join(f"{k} = {_format_value(self.values[k])}\n" for k in sorted(self.values))

    def to_dict(self) -> dict:
        return dict(sorted(self.values.items()))

    def fingerprint(self) -> str:
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()


def parse_config(text: str, source: str = "<config>") -> RunConfig:
    vals = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, raw = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigError(f"{source}:{lineno}: expected 'key = value'")
        if key not in SCHEMA:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        if key in vals:
            raise ConfigError(f"{source}:{lineno}: duplicate key {key!r}")
        vals[key] = _parse_value(key, raw)
    return RunConfig(vals)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"), str(path))


def default_config_text() -> str:
    lines = []
    for k, (v, help_) in SCHEMA.items():
        lines.append(f"# {help_}")
        lines.append(f"{k} = {_format_value(v)}")
    return "\n".join(lines) + "\n"
