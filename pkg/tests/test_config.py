import pytest

from propmap.config import ConfigError, RunConfig, default_config_text, load_config, parse_config


def test_defaults_roundtrip_through_text():
    cfg = parse_config(default_config_text())
    assert cfg == RunConfig()
    assert parse_config(cfg.dumps()) == cfg


def test_parse_types_and_comments():
    cfg = parse_config(
        """
        # grid
        grid.resolution = 0.25   # m
        smoothing.enabled = yes
        sweep.angles = -10, 0, 10
        grid.origin = 1.5, -2
        seed = 42
        """
    )
    assert cfg["grid.resolution"] == 0.25
    assert cfg["smoothing.enabled"] is True
    assert cfg["sweep.angles"] == [-10.0, 0.0, 10.0]
    assert cfg.origin() == (1.5, -2.0)
    assert cfg["seed"] == 42
    assert RunConfig().origin() is None


@pytest.mark.parametrize(
    "text, message",
    [
        ("bogus = 1", "unknown config key"),
        ("seed = 1\nseed = 2", "duplicate"),
        ("grid.n_x = many", "cannot parse"),
        ("grid.n_x", "expected 'key = value'"),
        ("slip.percentile = 100", "percentile"),
        ("grid.resolution = 0", "resolution"),
        ("grid.origin = 1", "grid.origin"),
        ("slip.h = nan", "cannot parse"),
    ],
)
def test_rejections(text, message):
    with pytest.raises(ConfigError, match=message):
        parse_config(text)


def test_line_numbers_in_errors():
    with pytest.raises(ConfigError, match="cfg:3"):
        parse_config("seed = 1\n\nnope = 2\n", "cfg")


def test_fingerprint_tracks_values(tmp_path):
    a = RunConfig()
    b = a.with_values(slip__eps_p=0.03)
    assert a.fingerprint() == RunConfig().fingerprint()
    assert a.fingerprint() != b.fingerprint()
    p = tmp_path / "c.txt"
    p.write_text(b.dumps())
    assert load_config(p).fingerprint() == b.fingerprint()
    assert b.slip_config().eps_p == 0.03


def test_integer_keys_refuse_fractions():
    with pytest.raises(ConfigError):
        RunConfig({"grid.n_x": 2.5})
