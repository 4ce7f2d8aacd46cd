"""Command-line entry point: ``propmap <verb> ...``.

Verbs: simulate, map, eval-elevation, compare, sweep. Exit codes are
0 success, 1 usage, 2 validation, 3 I/O.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import gridmap, pipeline
from .config import ConfigError, RunConfig, load_config
from .simharness import groundtruth, scenario as scen
from .simharness.terrain import terrain_from_dict
from .simharness.walker import ScenarioError, generate, plan_slips
from .telemetry import TelemetryError, read_stream, write_stream

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_IO = 0, 1, 2, 3

TELEMETRY_FILE = "telemetry.txt"
GROUNDTRUTH_FILE = "groundtruth.txt"
TABLE_SLIPS = (21, 13, 15)  # injected events per crater route


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def _fmt(v) -> str:
    return "nan" if v is None or not np.isfinite(v) else "%.17g" % v


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def preset_scenario(name: str, seed: int, cfg: RunConfig) -> scen.ScenarioSpec:
    """``flat``, ``ramp:<deg>[:reverse]`` or ``crater:<1..3>``."""
    parts = name.split(":")
    common = {
        "seed": seed,
        "sample_rate_hz": cfg["harness.sample_rate_hz"],
        "gait": scen.GaitParams(period=cfg["harness.period"], duty=cfg["harness.duty"]),
    }
    try:
        if parts[0] == "flat" and len(parts) == 1:
            return scen.flat_scenario(**common)
        if parts[0] == "ramp" and len(parts) in (2, 3):
            direction = parts[2] if len(parts) == 3 else "forward"
            return scen.ramp_scenario(float(parts[1]), direction, **common)
        if parts[0] == "crater" and len(parts) == 2:
            route = int(parts[1]) - 1
            if not 0 <= route < len(scen.CRATER_ROUTES):
                raise ValueError(f"crater route must be 1..{len(scen.CRATER_ROUTES)}")
            spec = scen.crater_scenario(route, **common)
            return scen.with_slips(spec, plan_slips(spec, TABLE_SLIPS[route], seed=seed + route))
    except ValueError as exc:
        raise UsageError(f"bad preset {name!r}: {exc}") from None
    raise UsageError(f"unknown preset {name!r}; use flat, ramp:<deg>[:reverse] or crater:<1..3>")


def _config(args) -> RunConfig:
    cfg = load_config(args.config) if args.config else RunConfig()
    if args.seed is not None:
        cfg = cfg.with_values(seed=args.seed)
    return cfg


# -- verbs -------------------------------------------------------------------


def cmd_simulate(args) -> int:
    cfg = _config(args)
    if (args.scenario is None) == (args.preset is None):
        raise UsageError("simulate needs exactly one of SCENARIO or --preset")
    if args.preset:
        spec = preset_scenario(args.preset, cfg["seed"], cfg)
    else:
        spec = scen.load_scenario(args.scenario)
        if args.seed is not None:
            spec = replace(spec, seed=args.seed)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    run = generate(spec)
    write_stream(run.header, run.samples, out / TELEMETRY_FILE)
    groundtruth.write_groundtruth(run.truth, out / GROUNDTRUTH_FILE)
    scen.save_scenario(spec, out / "scenario.json")
    print(f"{len(run.samples)} samples, {len(run.truth.slips)} injected slips -> {out}")
    return EXIT_OK


def cmd_map(args) -> int:
    cfg = _config(args)
    path = Path(args.telemetry)
    header, samples = read_stream(path)
    result = pipeline.build_map(header, samples, cfg)
    sigma = cfg["smoothing.sigma"] if cfg["smoothing.enabled"] else 0.0
    meta = result.metadata(cfg, {"telemetry": {"name": path.name, "sha256": _sha256(path), "samples": len(samples)}})
    gridmap.export(result.grid, args.out, meta, sigma=sigma)
    s = result.stats
    print(f"{s.samples} samples, {sum(s.slip_events)} slip events, {s.cot_obs} CoT cells -> {args.out}")
    return EXIT_OK


def truth_on_grid(gt: groundtruth.GroundTruth, spec: gridmap.GridSpec) -> np.ndarray:
    """Terrain heights at the cell centers of ``spec``."""
    if gt.grid == spec:
        return gt.heights
    terrain = terrain_from_dict(gt.scenario["terrain"])
    X, Y = spec.centers()
    return np.asarray(terrain.height(X, Y), dtype=float)


def cmd_eval_elevation(args) -> int:
    spec, layers, _ = gridmap.load_export(args.map)
    gt = groundtruth.read_groundtruth(args.groundtruth)
    rmse = pipeline.elevation_rmse(layers["elevation"], truth_on_grid(gt, spec))
    cells = int(np.sum(np.isfinite(layers["elevation"])))
    print(f"elevation RMSE {rmse:.6f} m over {cells} cells")
    if args.out:
        Path(args.out).write_text(json.dumps({"rmse_m": rmse, "cells": cells}, indent=2) + "\n", encoding="utf-8")
    return EXIT_OK


def cmd_compare(args) -> int:
    if len(args.maps) < 2:
        raise UsageError("compare needs at least two maps")
    names = args.names.split(",") if args.names else [Path(m).name for m in args.maps]
    if len(names) != len(args.maps):
        raise UsageError("--names must list one name per map")
    summaries, empty = [], []
    for name, m in zip(names, args.maps):
        _, layers, _ = gridmap.load_export(m)
        try:
            summaries.append(gridmap.summarize_layers(layers))
        except gridmap.EmptySummary:
            empty.append(name)
            summaries.append(gridmap.GridSummary(None, None, None, None))
    sys.stdout.write(pipeline.format_table(names, summaries))
    for name in empty:
        print(f"warning: map {name!r} has no valid cells", file=sys.stderr)
    if args.out:
        Path(args.out).write_text(pipeline.table_tsv(names, summaries), encoding="utf-8")
    return EXIT_VALIDATION if empty else EXIT_OK


def run_sweep(cfg: RunConfig, progress=None) -> dict:
    """Generate, map and reduce every sweep scenario; returns points, per-angle means and fits."""
    angles = cfg["sweep.angles"]
    if len(set(angles)) < 5:
        raise pipeline.RankError(f"a degree-4 fit needs at least 5 distinct angles, got {len(set(angles))}")
    gait = scen.GaitParams(period=cfg["harness.period"], duty=cfg["harness.duty"])
    items = scen.sweep(angles, cfg["sweep.repeats"], seed=cfg["seed"], sample_rate_hz=cfg["harness.sample_rate_hz"], gait=gait)
    points = []
    for k, item in enumerate(items):
        run = generate(item.scenario)
        result = pipeline.build_map(run.header, run.samples, cfg)
        vals = pipeline.sweep_point(result, item.scenario.terrain, item.direction, cfg["sweep.margin_cells"])
        points.append((item, vals))
        if progress:
            progress(k + 1, len(items), item)
    per_angle = pipeline.aggregate_sweep([(it.angle_deg, v) for it, v in points])
    fits = pipeline.fit_sweep(per_angle)
    return {"points": points, "per_angle": per_angle, "fits": fits, "power": items[0].scenario.power if items else None}


def write_sweep(out: Path, res: dict) -> None:
    out.mkdir(parents=True, exist_ok=True)
    ms = pipeline.SWEEP_METRICS
    lines = ["angle_deg\trepeat\tdirection\t" + "\t".join(ms)]
    for item, vals in res["points"]:
        lines.append(f"{_fmt(item.angle_deg)}\t{item.repeat}\t{item.direction}\t" + "\t".join(_fmt(vals[m]) for m in ms))
    (out / "points.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["angle_deg\t" + "\t".join(ms)]
    for a, vals in res["per_angle"].items():
        lines.append(_fmt(a) + "\t" + "\t".join(_fmt(vals[m]) for m in ms))
    (out / "per_angle.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    lines = ["metric\tc4\tc3\tc2\tc1\tc0"]
    for m in ms:
        lines.append(m + "\t" + "\t".join(_fmt(c) for c in res["fits"][m]))
    (out / "fits.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")

    angles = sorted(res["per_angle"])
    grid = np.linspace(angles[0], angles[-1], 4 * int(round(angles[-1] - angles[0])) + 1)
    power = res["power"]
    lines = ["angle_deg\t" + "\t".join(f"{m}_fit" for m in ms) + "\tcot_model"]
    for a in grid:
        fitted = [np.polyval(res["fits"][m], a) for m in ms]
        lines.append("\t".join(_fmt(v) for v in [a, *fitted, power.cot(np.radians(a))]))
    (out / "curves.tsv").write_text("\n".join(lines) + "\n", encoding="utf-8")


def cmd_sweep(args) -> int:
    cfg = _config(args)
    if args.angles:
        cfg = cfg.with_values(sweep__angles=[float(a) for a in args.angles.split(",")])
    if args.repeats is not None:
        cfg = cfg.with_values(sweep__repeats=args.repeats)

    def progress(k, n, item):
        print(f"[{k}/{n}] {item.angle_deg:g} deg, repeat {item.repeat}, {item.direction}", file=sys.stderr)

    res = run_sweep(cfg, progress)
    out = Path(args.out)
    write_sweep(out, res)
    (out / "config.txt").write_text(cfg.dumps(), encoding="utf-8")
    angles = list(res["per_angle"])
    mono = pipeline.decreasing_in_magnitude(res["fits"]["giim"], angles)
    print(f"{len(res['points'])} runs over {len(angles)} angles -> {out}")
    print(f"fitted GIIM decreasing in |angle|: {'yes' if mono else 'no'}")
    return EXIT_OK


# -- entry -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--seed", type=int, help="override the seed")

    p = _Parser(prog="propmap", description="Proprioceptive terrain mapping and its synthetic walker.")
    sub = p.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    s = sub.add_parser("simulate", parents=[common], help="generate telemetry and ground truth")
    s.add_argument("scenario", nargs="?", help="scenario JSON file")
    s.add_argument("--preset", help="flat | ramp:<deg>[:reverse] | crater:<1..3>")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("map", parents=[common], help="build and export a gridmap from telemetry")
    s.add_argument("telemetry")
    s.add_argument("--out", required=True, help="export directory")
    s.set_defaults(func=cmd_map)

    s = sub.add_parser("eval-elevation", parents=[common], help="elevation RMSE against ground truth")
    s.add_argument("map", help="export directory")
    s.add_argument("groundtruth", help="ground-truth file")
    s.add_argument("--out", help="write the result as JSON")
    s.set_defaults(func=cmd_eval_elevation)

    s = sub.add_parser("compare", parents=[common], help="summary table over several maps")
    s.add_argument("maps", nargs="+", help="export directories")
    s.add_argument("--names", help="comma-separated column names")
    s.add_argument("--out", help="write the table as TSV")
    s.set_defaults(func=cmd_compare)

    s = sub.add_parser("sweep", parents=[common], help="ramp-angle sweep with quartic fits")
    s.add_argument("--angles", help="comma-separated angles, deg (overrides config)")
    s.add_argument("--repeats", type=int, help="traversals per angle and direction")
    s.add_argument("--out", required=True, help="output directory")
    s.set_defaults(func=cmd_sweep)
    return p


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(exc, file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (TelemetryError, ScenarioError, ConfigError, ValueError) as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
