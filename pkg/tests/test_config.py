"""Config schema, file parsing, and derived-object construction tests."""

import pytest

from dualcast.errors import ConfigError
from dualcast import config as cfgmod


def test_default_config_is_self_consistent():
    cfg = cfgmod.default_config()
    assert cfg["lookback"] == 96
    assert cfg["horizon"] == 96
    assert cfg["split"] == "6:2:2"
    # every default must survive its own parser
    for key, value in cfg.items():
        if isinstance(value, str):
            assert cfgmod.parse_value(key, value) == value


def test_parse_value_types_and_bounds():
    assert cfgmod.parse_value("lookback", "48") == 48
    assert cfgmod.parse_value("sample_ratio", "0.25") == 0.25
    assert cfgmod.parse_value("ablation", "freq_only") == "freq_only"
    with pytest.raises(ConfigError):
        cfgmod.parse_value("lookback", "3.5")
    with pytest.raises(ConfigError):
        cfgmod.parse_value("lookback", "2")  # below minimum 4
    with pytest.raises(ConfigError):
        cfgmod.parse_value("base_lr", "inf")
    with pytest.raises(ConfigError):
        cfgmod.parse_value("ablation", "none_of_these")
    with pytest.raises(ConfigError):
        cfgmod.parse_value("no_such_key", "1")


def test_apply_set_requires_key_equals_value():
    cfg = cfgmod.default_config()
    cfgmod.apply_set(cfg, "seed=9")
    assert cfg["seed"] == 9
    with pytest.raises(ConfigError):
        cfgmod.apply_set(cfg, "seed")
    with pytest.raises(ConfigError):
        cfgmod.apply_set(cfg, "mystery=1")


def test_load_config_file_with_comments(tmp_path):
    path = tmp_path / "a.cfg"
    path.write_text(
        "# run settings\nlookback = 48\n\nhorizon = 12   \n# done\nseed = 4\n"
    )
    cfg = cfgmod.load_config(path)
    assert (cfg["lookback"], cfg["horizon"], cfg["seed"]) == (48, 12, 4)


def test_load_config_reports_offending_line(tmp_path):
    path = tmp_path / "bad.cfg"
    path.write_text("lookback = 48\nwat\n")
    with pytest.raises(ConfigError) as exc:
        cfgmod.load_config(path)
    assert ":2:" in str(exc.value)  # file:line prefix


def test_load_config_missing_file():
    with pytest.raises(ConfigError):
        cfgmod.load_config("/nope/none.cfg")


def test_load_config_applies_sets_after_file(tmp_path):
    path = tmp_path / "c.cfg"
    path.write_text("seed = 1\n")
    cfg = cfgmod.load_config(path, sets=("seed=2",))
    assert cfg["seed"] == 2


def test_parse_split_normalizes():
    assert cfgmod.parse_split("6:2:2") == pytest.approx((0.6, 0.2, 0.2))
    assert cfgmod.parse_split("0.7:0.1:0.2") == pytest.approx((0.7, 0.1, 0.2))
    with pytest.raises(ConfigError):
        cfgmod.parse_split("1:1")
    with pytest.raises(ConfigError):
        cfgmod.parse_split("a:b:c")
    with pytest.raises(ConfigError):
        cfgmod.parse_split("0:0:0")


def test_derived_objects_reflect_config():
    cfg = cfgmod.default_config()
    cfg["lookback"], cfg["horizon"] = 48, 12
    cfg["hidden_dim"], cfg["heads"], cfg["num_layers"] = 8, 2, 2
    spec = cfgmod.window_spec_from(cfg)
    assert (spec.lookback, spec.horizon) == (48, 12)
    model_cfg = cfgmod.model_config_from(cfg, channels=3)
    assert model_cfg.channels == 3
    assert model_cfg.hidden_dim == 8
    train_cfg = cfgmod.train_config_from(cfg)
    assert train_cfg.max_steps is None  # 0 means disabled
    cfg["max_steps"] = 25
    assert cfgmod.train_config_from(cfg).max_steps == 25


def test_synth_spec_wraps_validation_into_config_error():
    cfg = cfgmod.default_config()
    cfg["synth_coeffs"] = "0,0"
    with pytest.raises(ConfigError):
        cfgmod.synth_spec_from(cfg)
