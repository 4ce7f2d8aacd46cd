import math
from dataclasses import replace

import numpy as np
import pytest

from propmap.simharness import (
    CraterField,
    FlatTerrain,
    InjectedSlip,
    NoiseParams,
    PowerModel,
    RampTestbed,
    ScenarioError,
    ScenarioSpec,
    Walker,
    crater_scenario,
    flat_scenario,
    generate,
    load_scenario,
    plan_slips,
    ramp_scenario,
    read_groundtruth,
    save_scenario,
    sweep,
    write_groundtruth,
)
from propmap.simharness.path import PlanarPath
from propmap.simharness.scenario import ramp_segments
from propmap.simharness.terrain import terrain_from_dict
from propmap.telemetry import write_stream

# -- terrain -----------------------------------------------------------------


def test_ramp_profile_segments():
    t = RampTestbed(10.0)
    a0, a1, a2, a3 = t.breaks
    k = math.tan(math.radians(10.0))
    assert t.height(a0, 0.0) == 0.0
    assert float(t.height(a1, 0.0)) == pytest.approx(k * 3.2)
    assert float(t.height(0.5 * (a1 + a2), 1.0)) == pytest.approx(k * 3.2)
    assert float(t.height(a3 + 0.3, 0.0)) == 0.0
    xs = np.linspace(t.x_start, t.x_end, 2001)
    assert np.max(np.abs(np.diff(t.profile(xs)))) < 1e-2  # continuous


@pytest.mark.parametrize("terrain", [RampTestbed(-15.0), CraterField(seed=3)])
def test_gradients_match_finite_differences(terrain):
    rng = np.random.default_rng(0)
    lo_x, hi_x, lo_y, hi_y = terrain.bounds
    x = rng.uniform(lo_x + 0.1, hi_x - 0.1, 300)
    y = rng.uniform(lo_y + 0.1, hi_y - 0.1, 300)
    if isinstance(terrain, RampTestbed):
        keep = np.min(np.abs(x[:, None] - np.array(terrain.breaks)), axis=1) > 1e-3
        x, y = x[keep], y[keep]
    gx, gy = terrain.gradient(x, y)
    e = 1e-6
    fx = (terrain.height(x + e, y) - terrain.height(x - e, y)) / (2 * e)
    fy = (terrain.height(x, y + e) - terrain.height(x, y - e)) / (2 * e)
    assert np.allclose(gx, fx, atol=1e-6) and np.allclose(gy, fy, atol=1e-6)


def test_crater_field_bounds_and_seed():
    a, b = CraterField(seed=7), CraterField(seed=7)
    assert a.bounds == (-10.0, 10.0, -10.0, 10.0)
    xs = np.linspace(-10, 10, 401)
    X, Y = np.meshgrid(xs, xs)
    assert np.array_equal(a.height(X, Y), b.height(X, Y))
    assert np.max(np.abs(a.height(X, Y))) <= 1.5 + 1e-12
    for c in a._craters:
        assert 2 * c.size <= 2.5 and c.amp <= 1.0
    assert not np.array_equal(a.height(X, Y), CraterField(seed=8).height(X, Y))


def test_terrain_dict_roundtrip():
    for t in (FlatTerrain(0.3), RampTestbed(5.0, ramp_length=2.0), CraterField(seed=2)):
        assert terrain_from_dict(t.to_dict()) == t
    with pytest.raises(ValueError):
        terrain_from_dict({"kind": "moon"})


# -- path --------------------------------------------------------------------


def test_path_corner_is_rounded_and_arc_length():
    p = PlanarPath([(0, 0), (4, 0), (4, 4)], turn_radius=1.0)
    assert p.length == pytest.approx(3 + 3 + math.pi / 2)
    s = np.linspace(0, p.length, 4001)
    xy = p.position(s)
    steps = np.hypot(*np.diff(xy, axis=0).T)
    assert np.allclose(steps, s[1] - s[0], rtol=1e-6)
    assert np.max(np.abs(np.diff(p.heading(s)))) < 1e-2
    assert np.allclose(p.position([p.length])[0], [4, 4])


def test_path_rejects_bad_waypoints():
    with pytest.raises(ValueError):
        PlanarPath([(0, 0)])
    with pytest.raises(ValueError):
        PlanarPath([(0, 0), (0, 0), (1, 0)])
    with pytest.raises(ValueError, match="reverses"):
        PlanarPath([(0, 0), (1, 0), (0, 0)])


# -- scenarios ---------------------------------------------------------------


def test_scenario_json_roundtrip(tmp_path):
    spec = replace(
        crater_scenario(1, seed=4),
        injected_slips=(InjectedSlip(3.0, 2, (0.05, 0.0, 0.0), 0.1),),
        noise=NoiseParams(0.001, 0.01),
    )
    save_scenario(spec, tmp_path / "s.json")
    assert load_scenario(tmp_path / "s.json") == spec
    with pytest.raises(ValueError, match="unknown scenario keys"):
        ScenarioSpec.from_dict({**spec.to_dict(), "colour": 1})


def test_sweep_counts():
    items = sweep([5, 10, 15, 20], 4)
    assert len(items) == 32
    assert {(i.angle_deg, i.direction) for i in items} == {(a, d) for a in (5, 10, 15, 20) for d in ("forward", "reverse")}
    assert sweep([], 4) == []
    with pytest.raises(ValueError):
        sweep([25], 1)
    zero = [i for i in sweep([0], 1)]
    assert zero[0].scenario.terrain == zero[1].scenario.terrain


def test_ramp_segments_swap_with_direction():
    t = RampTestbed(10.0)
    f, r = ramp_segments(t, "forward"), ramp_segments(t, "reverse")
    assert f["ascending"] == r["descending"] and f["descending"] == r["ascending"]


def test_power_model_validation():
    assert PowerModel().cot(0.0) == 1.2
    with pytest.raises(ValueError):
        PowerModel(c0=0.1, c1=2.0, c2=1.0)


# -- walker --------------------------------------------------------------------


def test_out_of_bounds_path_names_waypoint():
    spec = ScenarioSpec(terrain=RampTestbed(10.0), waypoints=((1.0, 0.0), (30.0, 0.0)))
    with pytest.raises(ScenarioError, match=r"waypoint 1 \(30, 0\)"):
        Walker(spec)


def test_slip_must_fit_in_stance():
    spec = flat_scenario(length=2.0)
    with pytest.raises(ScenarioError, match="stance"):
        Walker(replace(spec, injected_slips=(InjectedSlip(0.45, 0, (0.05, 0, 0), 0.1),)))
    with pytest.raises(ScenarioError, match="two slips"):
        Walker(
            replace(
                spec,
                injected_slips=(
                    InjectedSlip(0.05, 0, (0.05, 0, 0), 0.05),
                    InjectedSlip(0.2, 0, (0.05, 0, 0), 0.05),
                ),
            )
        )


def test_trot_pattern(flat_run):
    stance = np.array([s.contact for s in flat_run.samples])
    # diagonal pairs move together
    assert np.array_equal(stance[:, 0], stance[:, 3])
    assert np.array_equal(stance[:, 1], stance[:, 2])
    assert stance.mean() == pytest.approx(0.6, abs=0.02)
    assert (stance.sum(axis=1) == 4).any() and (stance.sum(axis=1) == 2).any()


def test_base_follows_commanded_speed(flat_run):
    t = flat_run.truth.t
    xy = flat_run.truth.com[:, :2]
    v = np.hypot(*np.diff(xy, axis=0).T) / np.diff(t)
    assert np.allclose(v, 0.2, rtol=1e-9)


def test_desired_equals_actual_without_slips(ramp_run):
    for s in ramp_run.samples[::7]:
        assert np.allclose(s.foot_pos_base, s.foot_pos_des_base, atol=1e-12)
        st = s.contact
        assert np.allclose(s.foot_vel_base[st], s.foot_vel_des_base[st], atol=1e-9)


def test_stance_feet_are_planted(ramp_run):
    from propmap.elevation import feet_world

    prev = None
    for s in ramp_run.samples[:400]:
        w = feet_world(s)
        if prev is not None:
            both = s.contact & prev[1]
            assert np.allclose(w[both], prev[0][both], atol=1e-9)
        prev = (w, s.contact)


def test_stance_velocity_matches_position_derivative(ramp_run):
    s = ramp_run.samples
    dt = s[1].t - s[0].t
    for k in range(200, 260):
        fd = (s[k + 1].foot_pos_base - s[k - 1].foot_pos_base) / (2 * dt)
        both = s[k - 1].contact & s[k].contact & s[k + 1].contact
        assert np.allclose(fd[both], s[k].foot_vel_base[both], atol=2e-3)


def test_energy_matches_closed_form(ramp_run):
    from propmap.energetics import EnergyAccumulator, accumulate

    acc = EnergyAccumulator()
    for s in ramp_run.samples:
        acc = accumulate(acc, s)
    assert acc.e_joules == pytest.approx(ramp_run.truth.energy_J, rel=1e-3)
    assert acc.d_meters == pytest.approx(ramp_run.truth.distance_m, rel=1e-9)


def test_injected_slip_moves_foot():
    spec = flat_scenario(length=3.0, sample_rate_hz=200.0)
    slips = plan_slips(spec, 3, seed=1)
    run = generate(replace(spec, injected_slips=tuple(slips)))
    assert len(run.truth.slips) == 3
    for rec, slip in zip(run.truth.slips, slips):
        assert rec.foot == slip.foot and rec.t_start == slip.t_start
        assert rec.magnitude == pytest.approx(math.hypot(*slip.displacement[:2]), rel=1e-9)
        assert rec.magnitude > 0.02 and rec.peak_delta_p > 0.02


def test_plan_slips_is_seeded_and_spaced():
    spec = flat_scenario(length=8.0)
    a, b = plan_slips(spec, 10, seed=3), plan_slips(spec, 10, seed=3)
    assert a == b and a != plan_slips(spec, 10, seed=4)
    for f in range(4):
        ts = sorted(s.t_start for s in a if s.foot == f)
        assert all(np.diff(ts) >= 2.5)
    with pytest.raises(ScenarioError):
        plan_slips(flat_scenario(length=1.0), 50)


def test_generation_is_deterministic(tmp_path):
    spec = replace(flat_scenario(length=1.0, sample_rate_hz=100.0, seed=9), noise=NoiseParams(0.002, 0.01))
    paths = []
    for k in range(2):
        run = generate(spec)
        p = tmp_path / f"t{k}.txt"
        write_stream(run.header, run.samples, p)
        write_groundtruth(run.truth, tmp_path / f"g{k}.txt")
        paths.append(p)
    assert paths[0].read_bytes() == paths[1].read_bytes()
    assert (tmp_path / "g0.txt").read_bytes() == (tmp_path / "g1.txt").read_bytes()
    other = generate(replace(spec, seed=10))
    assert not np.array_equal(other.samples[5].base_pos, generate(spec).samples[5].base_pos)


def test_groundtruth_roundtrip(tmp_path, ramp_run):
    p = tmp_path / "gt.txt"
    write_groundtruth(ramp_run.truth, p)
    back = read_groundtruth(p)
    assert back == ramp_run.truth
    assert back.sample_count == len(ramp_run.samples)
    X, Y = back.grid.centers()
    terrain = RampTestbed(10.0)
    assert np.array_equal(back.heights, terrain.height(X, Y))


def test_groundtruth_reader_rejects_garbage(tmp_path):
    p = tmp_path / "gt.txt"
    p.write_text("#SOMETHING\n")
    with pytest.raises(ValueError):
        read_groundtruth(p)


def test_ramp_scenario_direction():
    f, r = ramp_scenario(10.0), ramp_scenario(10.0, "reverse")
    assert f.waypoints == tuple(reversed(r.waypoints))
    with pytest.raises(ValueError):
        ramp_scenario(10.0, "sideways")
