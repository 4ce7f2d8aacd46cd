"""Ground-truth record for a generated run, and its text file format.

File layout, one section per line prefix::

    #GROUNDTRUTH 1
    #SCENARIO <scenario as one-line JSON>
    #TOTALS <energy_J> <distance_m> <duration_s> <sample_count>
    #GRID <n_x> <n_y> <r> <x0> <y0>
    #ROW <i> <n_x terrain heights at cell centers of row i>
    #SLIP <foot> <t_start> <duration> <dx> <dy> <dz> <magnitude> <peak_delta_p>
    #STATE <t> <com_x> <com_y> <com_z> <stance_0> .. <stance_3>

Floats are written with 17 significant digits so files round-trip exactly.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..gridmap import GridSpec

FORMAT_TAG = "#GROUNDTRUTH 1"


@dataclass(frozen=True)
class SlipRecord:
    foot: int
    t_start: float
    duration: float
    displacement: tuple
    magnitude: float
    peak_delta_p: float


@dataclass
class GroundTruth:
    scenario: dict
    grid: GridSpec
    heights: np.ndarray
    slips: list = field(default_factory=list)
    energy_J: float = 0.0
    distance_m: float = 0.0
    duration_s: float = 0.0
    t: np.ndarray = field(default_factory=lambda: np.zeros(0))
    com: np.ndarray = field(default_factory=lambda: np.zeros((0, 3)))
    stance: np.ndarray = field(default_factory=lambda: np.zeros((0, 4), bool))

    @property
    def sample_count(self) -> int:
        return len(self.t)

    def __eq__(self, other) -> bool:
        if not isinstance(other, GroundTruth):
            return NotImplemented
        return (
            self.scenario == other.scenario
            and self.grid == other.grid
            and np.array_equal(self.heights, other.heights)
            and self.slips == other.slips
            and (self.energy_J, self.distance_m, self.duration_s) == (other.energy_J, other.distance_m, other.duration_s)
            and np.array_equal(self.t, other.t)
            and np.array_equal(self.com, other.com)
            and np.array_equal(self.stance, other.stance)
        )


def truth_grid(spec, walker) -> tuple[GridSpec, np.ndarray]:
    """Terrain heights at cell centers of a grid centered on the start CoM."""
    n_x, n_y, r = spec.truth_grid
    x0, y0 = walker.base_position(0.0)[0, :2]
    grid = GridSpec(int(n_x), int(n_y), float(r), float(x0), float(y0))
    X, Y = grid.centers()
    return grid, np.asarray(walker.terrain.height(X, Y), dtype=float)


def _f(v) -> str:
    return "%.17g" % v


def write_groundtruth(gt: GroundTruth, path) -> None:
    g = gt.grid
    lines = [
        FORMAT_TAG,
        "#SCENARIO " + json.dumps(gt.scenario, sort_keys=True, separators=(",", ":")),
        f"#TOTALS {_f(gt.energy_J)} {_f(gt.distance_m)} {_f(gt.duration_s)} {gt.sample_count}",
        f"#GRID {g.n_x} {g.n_y} {_f(g.r)} {_f(g.x0)} {_f(g.y0)}",
    ]
    for i, row in enumerate(gt.heights.tolist()):
        lines.append(f"#ROW {i} " + " ".join(_f(v) for v in row))
    for s in gt.slips:
        vals = (s.t_start, s.duration, *s.displacement, s.magnitude, s.peak_delta_p)
        lines.append(f"#SLIP {s.foot} " + " ".join(_f(v) for v in vals))
    for k in range(gt.sample_count):
        c = gt.com[k]
        st = " ".join("1" if b else "0" for b in gt.stance[k])
        lines.append(f"#STATE {_f(gt.t[k])} {_f(c[0])} {_f(c[1])} {_f(c[2])} {st}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_groundtruth(path) -> GroundTruth:
    text = Path(path).read_text(encoding="utf-8").splitlines()
    if not text or text[0].strip() != FORMAT_TAG:
        raise ValueError(f"{path}: not a ground-truth file")
    scenario, totals, grid = None, None, None
    rows, slips, t, com, stance = {}, [], [], [], []
    for lineno, line in enumerate(text[1:], start=2):
        if not line.strip():
            continue
        tag, _, rest = line.partition(" ")
        try:
            if tag == "#SCENARIO":
                scenario = json.loads(rest)
            elif tag == "#TOTALS":
                e, d, dur, n = rest.split()
                totals = (float(e), float(d), float(dur), int(n))
            elif tag == "#GRID":
                nx, ny, r, x0, y0 = rest.split()
                grid = GridSpec(int(nx), int(ny), float(r), float(x0), float(y0))
            elif tag == "#ROW":
                tok = rest.split()
                rows[int(tok[0])] = [float(v) for v in tok[1:]]
            elif tag == "#SLIP":
                tok = rest.split()
                v = [float(x) for x in tok[1:]]
                slips.append(SlipRecord(int(tok[0]), v[0], v[1], tuple(v[2:5]), v[5], v[6]))
            elif tag == "#STATE":
                tok = rest.split()
                t.append(float(tok[0]))
                com.append([float(x) for x in tok[1:4]])
                stance.append([tok[k] == "1" for k in range(4, 8)])
            else:
                raise ValueError(f"unknown section {tag!r}")
        except (ValueError, IndexError) as exc:
            raise ValueError(f"{path}: line {lineno}: {exc}") from exc
    if scenario is None or totals is None or grid is None:
        raise ValueError(f"{path}: missing #SCENARIO, #TOTALS or #GRID section")
    if sorted(rows) != list(range(grid.n_y)) or any(len(r) != grid.n_x for r in rows.values()):
        raise ValueError(f"{path}: terrain rows do not match the grid")
    if len(t) != totals[3]:
        raise ValueError(f"{path}: expected {totals[3]} state rows, found {len(t)}")
    return GroundTruth(
        scenario=scenario,
        grid=grid,
        heights=np.array([rows[i] for i in range(grid.n_y)]),
        slips=slips,
        energy_J=totals[0],
        distance_m=totals[1],
        duration_s=totals[2],
        t=np.array(t),
        com=np.array(com).reshape(-1, 3),
        stance=np.array(stance, dtype=bool).reshape(-1, 4),
    )
