"""Flat key=value run configuration for the command line tools.

One schema covers every subcommand: a config file holds `key = value` lines
(# comments and blank lines allowed), and --set key=value overrides beat the
file. Unknown keys are rejected rather than ignored so typos fail loudly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .data import WindowSpec
from .errors import ConfigError, ContractError
from .model import ModelConfig
from .pipeline import TrainConfig
from .synthetic import SyntheticPeriodicSignal

__all__ = [
    "SCHEMA",
    "default_config",
    "parse_value",
    "apply_set",
    "load_config",
    "parse_split",
    "window_spec_from",
    "model_config_from",
    "train_config_from",
    "synth_spec_from",
]


@dataclass(frozen=True)
class _Field:
    parse: callable
    default: object


def _int(minimum=None):
    def parse(key, text):
        try:
            value = int(text, 10)
        except ValueError:
            raise ConfigError(f"{key}: {text!r} is not an integer") from None
        if minimum is not None and value < minimum:
            raise ConfigError(f"{key}: must be >= {minimum}, got {value}")
        return value

    return parse


def _float(key, text):
    try:
        value = float(text)
    except ValueError:
        raise ConfigError(f"{key}: {text!r} is not a number") from None
    if not math.isfinite(value):
        raise ConfigError(f"{key}: must be finite, got {text!r}")
    return value


def _str(key, text):
    return text


def _choice(*options):
    def parse(key, text):
        if text not in options:
            raise ConfigError(f"{key}: {text!r} is not one of {options}")
        return text

    return parse


SCHEMA = {
    # data source: a CSV path, or empty for the built-in synthetic generator
    "data": _Field(_str, ""),
    "split": _Field(_str, "6:2:2"),
    "lookback": _Field(_int(4), 96),
    "horizon": _Field(_int(1), 96),
    "hidden_dim": _Field(_int(1), 16),
    "heads": _Field(_int(1), 4),
    "num_layers": _Field(_int(1), 3),
    "sample_ratio": _Field(_float, 0.4),
    "lag_factor": _Field(_int(1), 3),
    "lag_policy": _Field(_choice("factor", "direct"), "factor"),
    "harmonics": _Field(_int(1), 3),
    "ffn_mult": _Field(_int(1), 4),
    "weight_reduce": _Field(_choice("mean", "median"), "mean"),
    "ablation": _Field(
        _choice("full", "time_only", "freq_only", "uniform", "no_revin"), "full"
    ),
    "seed": _Field(_int(0), 0),
    "batch_size": _Field(_int(1), 32),
    "max_epochs": _Field(_int(1), 20),
    "patience": _Field(_int(1), 3),
    "base_lr": _Field(_float, 1e-4),
    # 0 disables the cap
    "max_steps": _Field(_int(0), 0),
    "trials": _Field(_int(1), 200),
    "synth_period": _Field(_int(3), 24),
    "synth_repeats": _Field(_int(2), 40),
    "synth_coeffs": _Field(_str, "1.0,0.5,0.25"),
    "synth_sigma": _Field(_float, 0.1),
    "synth_channels": _Field(_int(1), 2),
    "standin_rows": _Field(_int(1), 2000),
}


def default_config():
    return {key: field.default for key, field in SCHEMA.items()}


def parse_value(key, text):
    if key not in SCHEMA:
        raise ConfigError(f"unknown config key {key!r}")
    return SCHEMA[key].parse(key, text.strip())


def apply_set(cfg, assignment):
    key, sep, value = assignment.partition("=")
    if not sep:
        raise ConfigError(f"--set needs key=value, got {assignment!r}")
    cfg[key.strip()] = parse_value(key.strip(), value)


def load_config(path=None, sets=()):
    """Defaults, then the file at `path` (if any), then --set overrides."""
    cfg = default_config()
    if path is not None:
        try:
            with open(path) as handle:
                lines = handle.readlines()
        except OSError as err:
            raise ConfigError(f"cannot read config {path}: {err}") from None
        for lineno, raw in enumerate(lines, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise ConfigError(f"{path}:{lineno}: expected key = value, got {raw!r}")
            cfg[key.strip()] = parse_value(key.strip(), value)
    for assignment in sets:
        apply_set(cfg, assignment)
    return cfg


def parse_split(text):
    """"6:2:2" or "0.7:0.1:0.2" -> a (train, val, test) fraction triple."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ConfigError(f"split needs three parts a:b:c, got {text!r}")
    try:
        shares = [float(p) for p in parts]
    except ValueError:
        raise ConfigError(f"split parts must be numbers, got {text!r}") from None
    if any(s < 0 for s in shares) or sum(shares) <= 0:
        raise ConfigError(f"split parts must be non-negative with a positive sum, got {text!r}")
    total = sum(shares)
    return tuple(s / total for s in shares)


def window_spec_from(cfg):
    return WindowSpec(cfg["lookback"], cfg["horizon"])


def model_config_from(cfg, channels):
    return ModelConfig(
        lookback=cfg["lookback"],
        horizon=cfg["horizon"],
        channels=channels,
        hidden_dim=cfg["hidden_dim"],
        heads=cfg["heads"],
        num_layers=cfg["num_layers"],
        sample_ratio=cfg["sample_ratio"],
        lag_factor=cfg["lag_factor"],
        lag_policy=cfg["lag_policy"],
        harmonics=cfg["harmonics"],
        ffn_mult=cfg["ffn_mult"],
        weight_reduce=cfg["weight_reduce"],
        seed=cfg["seed"],
    )


def train_config_from(cfg):
    return TrainConfig(
        batch_size=cfg["batch_size"],
        max_epochs=cfg["max_epochs"],
        patience=cfg["patience"],
        base_lr=cfg["base_lr"],
        seed=cfg["seed"],
        max_steps=cfg["max_steps"] or None,
    )


def synth_spec_from(cfg):
    text = cfg["synth_coeffs"].strip()
    try:
        coeffs = tuple(float(p) for p in text.split(",") if p.strip())
    except ValueError:
        raise ConfigError(f"synth_coeffs: {cfg['synth_coeffs']!r} is not a comma list of numbers") from None
    if not coeffs:
        raise ConfigError("synth_coeffs: need at least one coefficient")
    try:
        return SyntheticPeriodicSignal(
            period=cfg["synth_period"],
            repeats=cfg["synth_repeats"],
            harmonic_coeffs=coeffs,
            residual_sigma=cfg["synth_sigma"],
            seed=cfg["seed"],
        )
    except ContractError as err:
        raise ConfigError(f"synthetic signal settings: {err}") from None
