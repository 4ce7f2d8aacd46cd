"""Fixed-resolution multi-layer 2.5D terrain grid.

Row ``i`` indexes y, column ``j`` indexes x. Mean layers (elevation, cot,
giim, giam) are running means with a per-layer visit count. The slip layer
is an event counter; its visit count is the number of stance-foot samples
seen in the cell, so a visited cell without slips reads 0 rather than
invalid.
"""

from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, NamedTuple

import numpy as np
from PIL import Image
from scipy import ndimage

MEAN_LAYERS = ("elevation", "cot", "giim", "giam")
LAYERS = ("elevation", "slip_count", "cot", "giim", "giam")
FORMAT_VERSION = 1


@dataclass(frozen=True)
class GridSpec:
    n_x: int
    n_y: int
    r: float
    x0: float = 0.0
    y0: float = 0.0

    def __post_init__(self):
        if self.n_x < 1 or self.n_y < 1:
            raise ValueError("grid needs at least one cell per axis")
        if not self.r > 0:
            raise ValueError("resolution must be > 0")

    def cell_center(self, i: int, j: int) -> tuple[float, float]:
        return (
            self.x0 + (j + 0.5 - self.n_x / 2) * self.r,
            self.y0 + (i + 0.5 - self.n_y / 2) * self.r,
        )

    def centers(self) -> tuple[np.ndarray, np.ndarray]:
        """Cell-center coordinate arrays ``(X, Y)`` of shape (n_y, n_x)."""
        xs = self.x0 + (np.arange(self.n_x) + 0.5 - self.n_x / 2) * self.r
        ys = self.y0 + (np.arange(self.n_y) + 0.5 - self.n_y / 2) * self.r
        return np.meshgrid(xs, ys)

    def to_dict(self) -> dict:
        return asdict(self)


def _floor_coord(v: float, v0: float, r: float, n: int) -> int:
    q = (v - v0) / r + n / 2
    k = math.floor(q)
    frac = q - k
    if frac < 1e-6 or frac > 1 - 1e-6:
        # near a cell edge the rounded quotient can land on the wrong side;
        # redo it exactly with the inputs' integer ratios
        pv, qv = float(v).as_integer_ratio()
        p0, q0 = float(v0).as_integer_ratio()
        pr, qr = float(r).as_integer_ratio()
        num = (pv * q0 - p0 * qv) * qr
        den = qv * q0 * pr
        k = (2 * num + n * den) // (2 * den)
    return k


def index(spec: GridSpec, x: float, y: float) -> tuple[int, int] | None:
    """Cell ``(i, j)`` containing ``(x, y)``, or None when outside the grid.

    The floor is exact for the given float inputs, including points lying
    on cell edges.
    """
    if not (math.isfinite(x) and math.isfinite(y)):
        return None
    i = _floor_coord(y, spec.y0, spec.r, spec.n_y)
    j = _floor_coord(x, spec.x0, spec.r, spec.n_x)
    if 0 <= i < spec.n_y and 0 <= j < spec.n_x:
        return i, j
    return None


def update_mean(value: float, n: int, obs: float) -> tuple[float, int]:
    if n < 0:
        raise ValueError("count must be >= 0")
    if n == 0:
        return float(obs), 1
    return (n * value + obs) / (n + 1), n + 1


class MapObservation(NamedTuple):
    """One tagged update. ``layer`` is a mean layer, ``"stance"`` or ``"slip"``."""

    layer: str
    x: float
    y: float
    value: float = 0.0


@dataclass
class TerrainGrid:
    spec: GridSpec
    values: dict = field(init=False)
    counts: dict = field(init=False)
    dropped: dict = field(init=False)

    def __post_init__(self):
        shape = (self.spec.n_y, self.spec.n_x)
        self.values = {name: np.zeros(shape) for name in LAYERS}
        self.counts = {name: np.zeros(shape, dtype=np.int64) for name in LAYERS}
        self.dropped = {name: 0 for name in LAYERS}

    def valid(self, layer: str) -> np.ndarray:
        return self.counts[layer] > 0

    def layer(self, name: str) -> np.ndarray:
        """Layer values with invalid cells as nan."""
        out = self.values[name].copy()
        out[~self.valid(name)] = np.nan
        return out

    def add_mean(self, layer: str, cell, value: float) -> bool:
        if cell is None:
            self.dropped[layer] += 1
            return False
        i, j = cell
        v, n = update_mean(self.values[layer][i, j], int(self.counts[layer][i, j]), value)
        self.values[layer][i, j] = v
        self.counts[layer][i, j] = n
        return True

    def add_stance(self, cell) -> None:
        if cell is not None:
            self.counts["slip_count"][cell] += 1

    def add_slip_event(self, cell) -> bool:
        if cell is None:
            self.dropped["slip_count"] += 1
            return False
        self.values["slip_count"][cell] += 1
        self.counts["slip_count"][cell] = max(1, self.counts["slip_count"][cell])
        return True


def count_slip(grid: TerrainGrid, verdict, feet_xy) -> TerrainGrid:
    """Add one event per foot that starts a slip run, at that foot's cell."""
    for f, starts in enumerate(verdict.onset):
        if starts and verdict.beta[f]:
            grid.add_slip_event(index(grid.spec, feet_xy[f][0], feet_xy[f][1]))
    return grid


def ingest(grid: TerrainGrid, observations: Iterable[MapObservation]) -> TerrainGrid:
    """Apply tagged observations in order. Routing and slip guarding happen upstream."""
    spec = grid.spec
    for obs in observations:
        cell = index(spec, obs.x, obs.y)
        if obs.layer == "stance":
            grid.add_stance(cell)
        elif obs.layer == "slip":
            grid.add_slip_event(cell)
        elif obs.layer in MEAN_LAYERS:
            grid.add_mean(obs.layer, cell, obs.value)
        else:
            raise ValueError(f"unknown layer {obs.layer!r}")
    return grid


def gaussian_kernel(sigma: float) -> np.ndarray:
    radius = math.ceil(3 * sigma)
    ax = np.arange(-radius, radius + 1, dtype=float)
    g = np.exp(-(ax**2) / (2 * sigma**2))
    return np.outer(g, g)


def smooth(layer: np.ndarray, sigma: float, valid: np.ndarray | None = None) -> np.ndarray:
    """Gaussian smoothing that keeps the layer's total over valid cells.

    Each valid cell spreads its value over the valid in-bounds cells within
    ``ceil(3 sigma)``, with Gaussian weights renormalized per source cell.
    Invalid cells stay nan.
    """
    if sigma < 0:
        raise ValueError("sigma must be >= 0")
    layer = np.asarray(layer, dtype=float)
    if valid is None:
        valid = np.isfinite(layer)
    if sigma == 0:
        return np.where(valid, layer, np.nan)
    kernel = gaussian_kernel(sigma)
    mask = valid.astype(float)
    norm = ndimage.correlate(mask, kernel, mode="constant", cval=0.0)
    src = np.where(valid, np.nan_to_num(layer) / np.where(valid, norm, 1.0), 0.0)
    out = ndimage.convolve(src, kernel, mode="constant", cval=0.0)
    return np.where(valid, out, np.nan)


class EmptySummary(ValueError):
    pass


@dataclass(frozen=True)
class GridSummary:
    total_slip: int | None
    mean_cot: float | None
    mean_giim: float | None
    mean_giam: float | None

    def as_row(self) -> list:
        return [self.total_slip, self.mean_cot, self.mean_giim, self.mean_giam]


def summarize_layers(layers: dict) -> GridSummary:
    """Summary from nan-masked layer arrays."""

    def mean(name):
        vals = layers[name][np.isfinite(layers[name])]
        return float(np.mean(vals)) if vals.size else None

    slip = layers["slip_count"][np.isfinite(layers["slip_count"])]
    out = GridSummary(
        int(round(float(np.sum(slip)))) if slip.size else None,
        mean("cot"),
        mean("giim"),
        mean("giam"),
    )
    if all(v is None for v in out.as_row()):
        raise EmptySummary("grid has no valid cells")
    return out


def summarize(grid: TerrainGrid) -> GridSummary:
    return summarize_layers({name: grid.layer(name) for name in LAYERS})


def to_gray(layer: np.ndarray) -> np.ndarray:
    """8-bit image of a layer: valid cells min-max scaled, invalid cells 0.

    A constant layer maps to 128. The image is flipped so +y points up.
    """
    valid = np.isfinite(layer)
    img = np.zeros(layer.shape, dtype=np.uint8)
    if valid.any():
        lo, hi = float(np.min(layer[valid])), float(np.max(layer[valid]))
        if hi > lo:
            scaled = np.rint((layer[valid] - lo) / (hi - lo) * 255.0)
            img[valid] = scaled.astype(np.uint8)
        else:
            img[valid] = 128
    return img[::-1]


def write_matrix(path: Path, arr: np.ndarray) -> None:
    lines = [" ".join("nan" if not math.isfinite(v) else "%.17g" % v for v in row) for row in arr.tolist()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_matrix(path: Path) -> np.ndarray:
    rows = [[float(tok) for tok in line.split()] for line in Path(path).read_text(encoding="utf-8").splitlines() if line.strip()]
    return np.array(rows, dtype=float)


def export(grid: TerrainGrid, directory, metadata: dict | None = None, sigma: float = 0.0) -> list[Path]:
    """Write layer matrices, visit counts, images and ``metadata.json``.

    With ``sigma > 0`` smoothed copies are written as ``<layer>.smoothed.txt``
    and the images show the smoothed layers.
    """
    out = Path(directory)
    out.mkdir(parents=True, exist_ok=True)
    written = []
    for name in LAYERS:
        raw = grid.layer(name)
        path = out / f"{name}.txt"
        write_matrix(path, raw)
        written.append(path)
        cpath = out / f"{name}.count.txt"
        write_matrix(cpath, grid.counts[name].astype(float))
        written.append(cpath)
        shown = raw
        if sigma > 0:
            shown = smooth(raw, sigma, grid.valid(name))
            spath = out / f"{name}.smoothed.txt"
            write_matrix(spath, shown)
            written.append(spath)
        ipath = out / f"{name}.png"
        Image.fromarray(to_gray(shown)).save(ipath, format="PNG")
        written.append(ipath)
    meta = {
        "format_version": FORMAT_VERSION,
        "grid": grid.spec.to_dict(),
        "layers": list(LAYERS),
        "dropped": dict(grid.dropped),
        "smoothing_sigma": sigma,
    }
    meta.update(metadata or {})
    mpath = out / "metadata.json"
    mpath.write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8")
    written.append(mpath)
    return written


def load_export(directory) -> tuple[GridSpec, dict, dict]:
    """Read back ``(spec, layers, metadata)`` from an export directory."""
    d = Path(directory)
    meta = json.loads((d / "metadata.json").read_text(encoding="utf-8"))
    spec = GridSpec(**meta["grid"])
    layers = {}
    for name in meta["layers"]:
        arr = read_matrix(d / f"{name}.txt")
        layers[name] = arr.reshape(spec.n_y, spec.n_x)
    return spec, layers, meta
