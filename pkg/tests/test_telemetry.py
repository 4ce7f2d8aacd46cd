import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from helpers import header, random_stream, sample

from propmap.telemetry import (
    StreamHeader,
    TelemetryError,
    quat_to_matrix,
    read_stream,
    validate_sample,
    write_stream,
    yaw_quat,
)


def test_empty_body_reads_as_empty_sequence(tmp_path):
    p = tmp_path / "s.txt"
    write_stream(header(), [], p)
    hdr, samples = read_stream(p)
    assert hdr == header()
    assert samples == []


def test_repeated_timestamp_names_the_record(tmp_path):
    p = tmp_path / "s.txt"
    good = [sample(0.0), sample(0.01)]
    write_stream(header(), good, p)
    text = p.read_text().splitlines()
    # duplicate the second record to get t = 0.0, 0.01, 0.01
    p.write_text("\n".join([*text, text[-1]]) + "\n")
    with pytest.raises(TelemetryError, match="non-monotonic time at record 3"):
        read_stream(p)


def test_write_refuses_zero_mass(tmp_path):
    hdr = StreamHeader(0.0, np.array([0, 0, -1.62]), 12, 5, 500.0)
    p = tmp_path / "s.txt"
    with pytest.raises(TelemetryError, match="robot_mass"):
        write_stream(hdr, [], p)
    assert not p.exists()


def test_mass_reads_back_exactly(tmp_path):
    p = tmp_path / "s.txt"
    write_stream(header(mass=21.0), [sample()], p)
    hdr, _ = read_stream(p)
    assert hdr.robot_mass == 21.0


def test_trot_stream_roundtrip(tmp_path):
    from propmap.simharness import flat_scenario, generate

    run = generate(flat_scenario(length=2.0, sample_rate_hz=500.0))
    # 10 s at 500 Hz, both endpoints included
    assert len(run.samples) == 5001
    p = tmp_path / "trot.txt"
    write_stream(run.header, run.samples, p)
    hdr, back = read_stream(p)
    assert hdr == run.header
    assert back == run.samples


@settings(max_examples=25, deadline=None)
@given(seed=st.integers(0, 2**32 - 1), n=st.integers(0, 20), world=st.booleans())
def test_random_stream_roundtrip(tmp_path_factory, seed, n, world):
    rng = np.random.default_rng(seed)
    hdr, samples = random_stream(rng, n, nj=int(rng.integers(1, 13)), ns=int(rng.integers(1, 6)), with_world=world)
    p = tmp_path_factory.mktemp("rt") / "s.txt"
    write_stream(hdr, samples, p)
    back_hdr, back = read_stream(p)
    assert back_hdr == hdr
    assert back == samples


def test_trailing_fields_are_ignored(tmp_path):
    p = tmp_path / "s.txt"
    write_stream(header(), [sample(0.0), sample(0.5)], p)
    lines = p.read_text().splitlines()
    p.write_text("\n".join(line + " 7 8 9" for line in lines) + "\n")
    _, back = read_stream(p)
    assert back == [sample(0.0), sample(0.5)]


@pytest.mark.parametrize(
    "override, message",
    [
        ({"segment_mass": np.full(5, 4.0)}, "segment masses sum"),
        ({"segment_mass": np.array([22.0, -1.0, 0.0, 0.0, 0.0])}, "segment_mass must be > 0"),
        ({"base_quat": np.array([1.0, 0.2, 0.0, 0.0])}, "orthonormal"),
        ({"joint_torque": np.zeros(11)}, "joint_torque has shape"),
        ({"com_world": np.array([0.0, np.nan, 0.0])}, "com_world is not finite"),
    ],
)
def test_invariant_violations_name_the_record(override, message):
    with pytest.raises(TelemetryError, match=message) as exc:
        validate_sample(sample(**override), header(), record=7)
    assert "record 7" in str(exc.value)


def test_malformed_line_reports_line_number(tmp_path):
    p = tmp_path / "s.txt"
    write_stream(header(), [sample(0.0), sample(0.1)], p)
    lines = p.read_text().splitlines()
    lines[2] = lines[2].replace("#SAMPLE 0.10000000000000001", "#SAMPLE abc")
    p.write_text("\n".join(lines) + "\n")
    with pytest.raises(TelemetryError, match="record 2, line 3"):
        read_stream(p)


def test_missing_header(tmp_path):
    p = tmp_path / "s.txt"
    p.write_text("")
    with pytest.raises(TelemetryError, match="no #HEADER"):
        read_stream(p)


def test_yaw_quaternion_matches_rotation():
    R = quat_to_matrix(yaw_quat(np.pi / 2))
    assert np.allclose(R @ [1, 0, 0], [0, 1, 0], atol=1e-15)
