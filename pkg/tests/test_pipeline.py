import numpy as np
import pytest
from helpers import header, sample

from propmap import pipeline
from propmap.config import RunConfig
from propmap.gridmap import GridSpec, GridSummary, summarize
from propmap.simharness import RampTestbed


def test_empty_stream_gives_untouched_grid():
    res = pipeline.build_map(header(), [], RunConfig())
    assert res.stats.samples == 0
    assert not any(res.grid.valid(layer).any() for layer in res.grid.values)


def test_one_standing_sample_routes_updates():
    res = pipeline.build_map(header(), [sample()], RunConfig())
    g = res.grid
    assert g.counts["elevation"].sum() == 4
    assert g.valid("giim").sum() == 1 and g.valid("giam").sum() == 1
    # the CoM sits at the grid origin
    assert g.valid("giim")[25, 25]
    assert res.stats.margin_updates == 1


def test_grid_origin_from_config():
    cfg = RunConfig().with_values(grid__origin="100, 100")
    res = pipeline.build_map(header(), [sample()], cfg)
    # everything lands outside the grid centered at (100, 100)
    assert res.grid.dropped["elevation"] == 4


def test_flat_run_maps_cleanly(flat_map, flat_run):
    g = flat_map.grid
    slip = g.layer("slip_count")
    assert np.nansum(slip) == 0 and np.isfinite(slip).sum() > 0
    giim = g.layer("giim")
    assert np.nanmin(giim) > 0
    assert flat_map.stats.margin_skipped_support == 0
    assert flat_map.stats.energy_J == pytest.approx(flat_run.truth.energy_J, rel=1e-3)
    assert np.allclose(g.layer("elevation")[g.valid("elevation")], 0.0, atol=1e-12)


def test_replay_is_bit_identical(flat_run):
    a = pipeline.build_map(flat_run.header, flat_run.samples, RunConfig())
    b = pipeline.build_map(flat_run.header, flat_run.samples, RunConfig())
    for name in a.grid.values:
        assert np.array_equal(a.grid.layer(name), b.grid.layer(name), equal_nan=True)


def test_ramp_profile_is_reconstructed(ramp_run):
    res = pipeline.build_map(ramp_run.header, ramp_run.samples, RunConfig())
    elev = res.grid.layer("elevation")
    X, Y = res.grid.spec.centers()
    truth = RampTestbed(10.0).height(X, Y)
    assert pipeline.elevation_rmse(elev, truth) < 0.1
    # along the walking line the map rises, holds, then falls
    a0, a1, a2, a3 = RampTestbed(10.0).breaks
    seen = np.isfinite(elev).any(axis=0)
    row = np.nanmean(elev[:, seen], axis=0)
    xs = X[0][seen]
    up = row[(xs > a0 + 0.4) & (xs < a1 - 0.4)]
    flat = row[(xs > a1 + 0.4) & (xs < a2 - 0.4)]
    down = row[(xs > a2 + 0.4) & (xs < a3 - 0.4)]
    assert np.all(np.diff(up) > 0) and np.all(np.diff(down) < 0)
    assert np.ptp(flat) < 0.02


def test_rmse_examples():
    t = np.arange(12.0).reshape(3, 4)
    assert pipeline.elevation_rmse(t, t) == 0.0
    assert pipeline.elevation_rmse(t + 0.1, t) == pytest.approx(0.1)
    with pytest.raises(pipeline.EvaluationError):
        pipeline.elevation_rmse(np.full((3, 4), np.nan), t)
    with pytest.raises(pipeline.EvaluationError):
        pipeline.elevation_rmse(t[:2], t)


def test_table_reproduces_values():
    s = [GridSummary(21, 1.35, 0.59, 0.92), GridSummary(13, 1.12, 0.67, 0.71)]
    text = pipeline.format_table(["T1", "T2"], s)
    lines = text.splitlines()
    assert lines[2].split()[-2:] == ["21", "13"]
    assert "1.35" in lines[3] and "1.12" in lines[3]
    assert lines[4].split()[-2:] == ["0.59", "0.67"]
    assert lines[5].split()[-2:] == ["0.92", "0.71"]
    for metric in pipeline.TABLE_METRICS:
        assert metric in text
    parsed = pipeline.parse_table_tsv(pipeline.table_tsv(["T1", "T2"], s))
    assert parsed["T1"] == {"Total Slippage": 21, "Overall CoT": 1.35, "Avg. GIIM": 0.59, "Avg. GIAM": 0.92}
    same = pipeline.format_table(["a", "b"], [s[0], s[0]]).splitlines()
    assert all(line.split()[-1] == line.split()[-2] for line in same[2:])


def test_empty_table_cells():
    text = pipeline.table_tsv(["x"], [GridSummary(None, 1.0, None, None)])
    assert pipeline.parse_table_tsv(text)["x"]["Total Slippage"] is None


def test_quartic_fit():
    angles = np.arange(-20, 21, 5.0)
    vals = 0.3 - 0.002 * angles + 0.0004 * angles**2
    c = pipeline.fit_degree4(angles, vals)
    assert np.max(np.abs(np.polyval(c, angles) - vals)) <= 1e-9
    with pytest.raises(pipeline.RankError):
        pipeline.fit_degree4([0, 5, 10, 15, 15], [1, 2, 3, 4, 5])


def test_decreasing_in_magnitude():
    angles = np.arange(-20, 21, 5.0)
    assert pipeline.decreasing_in_magnitude([0, 0, -1e-3, 0, 0.5], angles)
    assert not pipeline.decreasing_in_magnitude([0, 0, -1e-3, 0.05, 0.5], angles)


def test_segment_mean_trims_margin():
    spec = GridSpec(10, 1, 1.0, 5.0, 0.0)
    layer = np.arange(10.0)[None, :]
    # centers are 0.5 .. 9.5
    assert pipeline.segment_mean(layer, spec, (2.0, 8.0), 1) == pytest.approx(np.mean([3, 4, 5, 6]))
    assert pipeline.segment_mean(np.full((1, 10), np.nan), spec, (2.0, 8.0), 1) is None


def test_aggregate_and_fit_sweep():
    pts = []
    for a in (-20, -10, 0, 10, 20):
        for rep in range(2):
            pts.append((a, {"cot": 1.0 + a * a * 1e-3 + rep * 0.01, "giim": 0.5 - abs(a) * 0.01, "giam": None}))
    per = pipeline.aggregate_sweep(pts)
    assert list(per) == [-20.0, -10.0, 0.0, 10.0, 20.0]
    assert per[0.0]["cot"] == pytest.approx(1.005)
    assert np.isnan(per[0.0]["giam"])
    with pytest.raises(pipeline.RankError):
        pipeline.fit_sweep(per)


def test_summary_matches_layers(flat_map):
    s = summarize(flat_map.grid)
    cot = flat_map.grid.layer("cot")
    assert s.mean_cot == pytest.approx(float(np.nanmean(cot)), rel=1e-12)
    assert s.total_slip == 0
