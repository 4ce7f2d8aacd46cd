"""Stream-order mapping pipeline and the evaluations built on its maps.

Per sample: slip verdict, then slip events and stance visits, elevation from
non-slipping stance feet, CoT segmentation by CoM cell, and stability
margins keyed by the CoM cell.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import stability
from .config import RunConfig
from .elevation import feet_world, observe
from .energetics import CellCotSegmenter, instantaneous_power
from .gridmap import GridSpec, GridSummary, TerrainGrid, count_slip, index
from .slip import SlipDetector
from .telemetry import N_FEET, StreamHeader, quat_to_matrix

DESIGN_RECORD = {
    "slip_event": "one event per maximal run of flagged samples on a foot, at its first sample",
    "slip_layer_validity": "a cell is valid for slip_count once any stance foot sample falls in it",
    "cot_window": "per CoM cell, from entering to leaving the cell; the last cell is flushed at stream end",
    "cot_distance": "horizontal base path length",
    "polyhedron_faces": "triangles (CoM, a, b) over CCW hull pairs of the gravity-projected contacts",
    "two_contact_faces": "two faces with opposite normals about the single tumbling axis",
    "margin_guard": "no margin update for a sample where any stance foot is flagged slipping",
    "grid_origin": "first CoM ground projection unless configured",
}


@dataclass
class MapStats:
    samples: int = 0
    elevation_obs: int = 0
    slip_events: list = field(default_factory=lambda: [0] * N_FEET)
    margin_updates: int = 0
    margin_skipped_slip: int = 0
    margin_skipped_support: int = 0
    cot_obs: int = 0
    cot_discarded: int = 0
    energy_J: float = 0.0
    distance_m: float = 0.0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass
class MapResult:
    grid: TerrainGrid
    stats: MapStats
    slip_log: list  # (t, foot, cell) per counted event

    def metadata(self, cfg: RunConfig, extra: dict | None = None) -> dict:
        meta = {
            "config": cfg.to_dict(),
            "config_fingerprint": cfg.fingerprint(),
            "design": DESIGN_RECORD,
            "stats": self.stats.to_dict(),
        }
        meta.update(extra or {})
        return meta


def grid_spec_for(cfg: RunConfig, origin_xy) -> GridSpec:
    o = cfg.origin()
    if o is None:
        o = (float(origin_xy[0]), float(origin_xy[1]))
    return GridSpec(cfg["grid.n_x"], cfg["grid.n_y"], cfg["grid.resolution"], o[0], o[1])


def build_map(header: StreamHeader, samples, cfg: RunConfig | None = None) -> MapResult:
    cfg = cfg or RunConfig()
    if not samples:
        o = cfg.origin() or (0.0, 0.0)
        return MapResult(TerrainGrid(grid_spec_for(cfg, o)), MapStats(), [])
    spec = grid_spec_for(cfg, samples[0].com_world[:2])
    grid = TerrainGrid(spec)
    stats = MapStats()
    detector = SlipDetector(cfg.slip_config())
    g_vec = np.asarray(header.gravity, dtype=float)
    g_mag = header.gravity_magnitude
    mass = header.robot_mass
    seg = CellCotSegmenter(mass, g_mag, cfg["cot.d_min"])
    slip_log = []

    for s in samples:
        stats.samples += 1
        verdict = detector.detect(s)
        world = feet_world(s, quat_to_matrix(s.base_quat))
        wl = world.tolist()
        com_cell = index(spec, float(s.com_world[0]), float(s.com_world[1]))

        for f, on in enumerate(s.contact.tolist()):
            if on:
                grid.add_stance(index(spec, wl[f][0], wl[f][1]))
        if verdict.onset.any():
            count_slip(grid, verdict, world)
            for f in np.nonzero(verdict.onset)[0]:
                stats.slip_events[f] += 1
                slip_log.append((s.t, int(f), index(spec, wl[f][0], wl[f][1])))

        for ob in observe(s, verdict, world):
            grid.add_mean("elevation", index(spec, ob.xy[0], ob.xy[1]), ob.h)
            stats.elevation_obs += 1

        obs = seg.step(s.t, instantaneous_power(s.joint_torque, s.joint_velocity), s.base_pos[:2], com_cell)
        if obs is not None:
            grid.add_mean("cot", obs.cell, obs.cot)
            stats.cot_obs += 1

        if verdict.beta.any():
            stats.margin_skipped_slip += 1
            continue
        contacts = world[s.contact]
        try:
            a = stability.gia(g_vec, mass, s.segment_mass, s.segment_accel)
            m = stability.margins(s.com_world, contacts, g_vec, a)
        except stability.StabilityError:
            stats.margin_skipped_support += 1
            continue
        grid.add_mean("giim", com_cell, m.giim)
        grid.add_mean("giam", com_cell, m.giam)
        stats.margin_updates += 1

    obs = seg.flush()
    if obs is not None:
        grid.add_mean("cot", obs.cell, obs.cot)
        stats.cot_obs += 1
    stats.cot_discarded = seg.discarded
    stats.energy_J = seg.total.e_joules
    stats.distance_m = seg.total.d_meters
    return MapResult(grid, stats, slip_log)


# -- evaluation --------------------------------------------------------------


class EvaluationError(ValueError):
    pass


def elevation_rmse(mapped: np.ndarray, truth: np.ndarray) -> float:
    """RMSE over cells valid (finite) in both arrays."""
    mapped = np.asarray(mapped, dtype=float)
    truth = np.asarray(truth, dtype=float)
    if mapped.shape != truth.shape:
        raise EvaluationError(f"grid shapes differ: {mapped.shape} vs {truth.shape}")
    ok = np.isfinite(mapped) & np.isfinite(truth)
    if not ok.any():
        raise EvaluationError("no cell is valid in both grids")
    return float(np.sqrt(np.mean((mapped[ok] - truth[ok]) ** 2)))


TABLE_METRICS = ("Total Slippage", "Overall CoT", "Avg. GIIM", "Avg. GIAM")


def _cell(v, fmt: str) -> str:
    if v is None:
        return "empty"
    return fmt.format(v)


def format_table(names, summaries: list[GridSummary], digits: int = 2) -> str:
    """Aligned metric-by-map table, one column per map."""
    fmts = ("{:d}", f"{{:.{digits}f}}", f"{{:.{digits}f}}", f"{{:.{digits}f}}")
    rows = [["Metric", *names]]
    for k, metric in enumerate(TABLE_METRICS):
        rows.append([metric] + [_cell(s.as_row()[k], fmts[k]) for s in summaries])
    widths = [max(len(r[c]) for r in rows) for c in range(len(rows[0]))]
    lines = []
    for n, r in enumerate(rows):
        cells = [r[0].ljust(widths[0])] + [r[c].rjust(widths[c]) for c in range(1, len(r))]
        lines.append("  ".join(cells).rstrip())
        if n == 0:
            lines.append("  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def table_tsv(names, summaries: list[GridSummary]) -> str:
    """Machine-readable table: full-precision values, ``nan`` for empty."""
    out = ["metric\t" + "\t".join(names)]
    for k, metric in enumerate(TABLE_METRICS):
        vals = []
        for s in summaries:
            v = s.as_row()[k]
            vals.append("nan" if v is None else (str(v) if k == 0 else "%.17g" % v))
        out.append(metric + "\t" + "\t".join(vals))
    return "\n".join(out) + "\n"


def parse_table_tsv(text: str) -> dict:
    lines = text.strip().splitlines()
    names = lines[0].split("\t")[1:]
    table = {n: {} for n in names}
    for line in lines[1:]:
        metric, *vals = line.split("\t")
        for n, v in zip(names, vals):
            table[n][metric] = None if v == "nan" else (int(v) if metric == TABLE_METRICS[0] else float(v))
    return table


# -- slope sweep -------------------------------------------------------------

SWEEP_METRICS = ("cot", "giim", "giam")


def segment_mean(layer: np.ndarray, spec: GridSpec, x_range, margin_cells: int = 1) -> float | None:
    """Mean of valid cells whose center x lies inside ``x_range`` shrunk by the margin."""
    lo, hi = sorted(x_range)
    lo += margin_cells * spec.r
    hi -= margin_cells * spec.r
    X, _ = spec.centers()
    sel = (X >= lo) & (X <= hi) & np.isfinite(layer)
    if not sel.any():
        return None
    return float(np.mean(layer[sel]))


class RankError(ValueError):
    pass


def fit_degree4(angles_deg, values) -> np.ndarray:
    """Least-squares quartic in degrees, highest power first."""
    angles = np.asarray(angles_deg, dtype=float)
    values = np.asarray(values, dtype=float)
    distinct = np.unique(angles)
    if len(distinct) < 5:
        raise RankError(f"a degree-4 fit needs at least 5 distinct angles, got {len(distinct)}")
    return np.polyfit(angles, values, 4)


def decreasing_in_magnitude(coeffs, angles_deg) -> bool:
    """Fitted curve strictly decreases with |angle| on each side of zero over the sampled angles."""
    a = np.unique(np.abs(np.asarray(angles_deg, dtype=float)))
    ok = True
    for side in (1.0, -1.0):
        vals = np.polyval(coeffs, side * a)
        ok &= bool(np.all(np.diff(vals) < 0))
    return ok


def traversal_segment(terrain, direction: str):
    """x-range of the ramp whose slope along the walking direction equals the testbed angle."""
    seg = terrain.segments()
    return seg["first_ramp"] if direction == "forward" else seg["second_ramp"]


def sweep_point(result: MapResult, terrain, direction: str, margin_cells: int) -> dict:
    spec = result.grid.spec
    rng = traversal_segment(terrain, direction)
    return {m: segment_mean(result.grid.layer(m), spec, rng, margin_cells) for m in SWEEP_METRICS}


def aggregate_sweep(points: list[tuple[float, dict]]) -> dict:
    """Per-angle means of each metric, angles ascending."""
    by_angle: dict[float, dict[str, list]] = {}
    for angle, vals in points:
        slot = by_angle.setdefault(float(angle), {m: [] for m in SWEEP_METRICS})
        for m in SWEEP_METRICS:
            if vals[m] is not None:
                slot[m].append(vals[m])
    out = {}
    for angle in sorted(by_angle):
        out[angle] = {m: (float(np.mean(v)) if v else math.nan) for m, v in by_angle[angle].items()}
    return out


def fit_sweep(per_angle: dict) -> dict:
    angles = np.array(sorted(per_angle))
    fits = {}
    for m in SWEEP_METRICS:
        vals = np.array([per_angle[a][m] for a in angles])
        ok = np.isfinite(vals)
        fits[m] = fit_degree4(angles[ok], vals[ok])
    return fits

