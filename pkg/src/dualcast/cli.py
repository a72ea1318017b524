"""Command line front end.

Every subcommand writes one deterministic report to stdout: floats go
through %.17g, nothing is timestamped, and the seed is echoed, so running
the same command twice produces byte-identical output. Progress chatter
(--verbose) goes to stderr and never touches the report.

Exit codes: 0 ok, 2 configuration, 3 data, 4 training, 5 verification.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import itertools
import sys

import numpy as np

from . import config as cfgmod
from . import data
from . import model as mdl
from . import pipeline
from . import spectral as sp
from .errors import ConfigError, ContractError, DataError, TrainingError, VerificationError
from .pipeline import format_float

__all__ = ["main"]

_GRADCHECK_PARAM_LIMIT = 20000
_SWEEP_KEYS = ("sample_ratio", "lag_factor", "harmonics")


def _load_dataset(cfg):
    if cfg["data"]:
        return data.load_csv(cfg["data"])
    return data.synth_dataset(
        cfgmod.synth_spec_from(cfg), channels=cfg["synth_channels"]
    )


def _windowed_splits(dataset, cfg, spec):
    ratios = cfgmod.parse_split(cfg["split"])
    parts = data.split(dataset, ratios, window_spec=spec)
    if len(parts.train) < spec.span:
        raise DataError(
            f"train segment has {len(parts.train)} rows, need at least "
            f"lookback+horizon = {spec.span}"
        )
    stats = data.normalize_stats(parts.train)
    windowed = []
    for segment in (parts.train, parts.val, parts.test):
        if len(segment) >= spec.span:
            windowed.append(list(data.windows(data.apply_stats(segment, stats), spec)))
        else:
            windowed.append([])
    return stats, windowed


def _emit(lines, report_path=None):
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    if report_path:
        with open(report_path, "w") as handle:
            handle.write(text)


def _source_line(cfg):
    return cfg["data"] if cfg["data"] else "synthetic"


def _metric_lines(report):
    lines = [f"[{report.label}]"]
    lines.extend(f"{k} = {format_float(v)}" for k, v in report.values.items())
    return lines


def _log(args):
    if not getattr(args, "verbose", False):
        return None
    return lambda msg: print(msg, file=sys.stderr)


# -- subcommands ---------------------------------------------------------------


def cmd_train(cfg, args):
    dataset = _load_dataset(cfg)
    spec = cfgmod.window_spec_from(cfg)
    stats, (train_w, val_w, test_w) = _windowed_splits(dataset, cfg, spec)
    if not train_w:
        raise DataError("no training windows after the split")
    model = mdl.ablation_variant(
        mdl.init_model(cfgmod.model_config_from(cfg, dataset.channels)),
        cfg["ablation"],
    )
    result = pipeline.train(
        model, train_w, val_w, cfgmod.train_config_from(cfg), log=_log(args)
    )
    if args.out:
        try:
            mdl.save_checkpoint(args.out, model)
        except OSError as err:
            raise DataError(f"cannot write checkpoint {args.out}: {err}") from None
    lines = [
        "[train]",
        f"seed = {cfg['seed']}",
        f"data = {_source_line(cfg)}",
        f"split = {cfg['split']}",
        f"channels = {dataset.channels}",
        f"windows = {len(train_w)}/{len(val_w)}/{len(test_w)}",
        f"ablation = {cfg['ablation']}",
        f"parameters = {mdl.count_parameters(model)}",
        f"epochs_run = {len(result.history)}",
        f"steps = {result.steps}",
        f"stopped_early = {int(result.stopped_early)}",
        f"best_epoch = {result.best_epoch}",
        f"best_val_mse = {format_float(result.best_val)}",
    ]
    for entry in result.history:
        lines.append(f"epoch.{entry.epoch}.train_loss = {format_float(entry.train_loss)}")
        lines.append(f"epoch.{entry.epoch}.val_mse = {format_float(entry.val_mse)}")
        lines.append(f"epoch.{entry.epoch}.lr = {format_float(entry.lr)}")
    if args.out:
        lines.append(f"checkpoint = {args.out}")
    if test_w:
        lines.extend(_metric_lines(pipeline.evaluate(model, test_w, stats, "test")))
        lines.extend(_metric_lines(pipeline.naive_baseline(test_w, stats, "naive")))
    else:
        lines.append("test_windows = 0")
    _emit(lines, args.report)
    return 0


def cmd_eval(cfg, args):
    try:
        model = mdl.load_checkpoint(args.checkpoint)
    except OSError as err:
        raise DataError(f"cannot read checkpoint {args.checkpoint}: {err}") from None
    except (ContractError, ConfigError) as err:
        raise DataError(f"bad checkpoint {args.checkpoint}: {err}") from None
    dataset = _load_dataset(cfg)
    if dataset.channels != model.config.channels:
        raise DataError(
            f"dataset has {dataset.channels} channels, checkpoint expects "
            f"{model.config.channels}"
        )
    spec = data.WindowSpec(model.config.lookback, model.config.horizon)
    stats, (_, _, test_w) = _windowed_splits(dataset, cfg, spec)
    if not test_w:
        raise DataError("no test windows after the split")
    lines = [
        "[eval]",
        f"seed = {cfg['seed']}",
        f"data = {_source_line(cfg)}",
        f"split = {cfg['split']}",
        f"checkpoint = {args.checkpoint}",
        f"channels = {dataset.channels}",
        f"test_windows = {len(test_w)}",
    ]
    lines.extend(_metric_lines(pipeline.evaluate(model, test_w, stats, "test")))
    lines.extend(_metric_lines(pipeline.naive_baseline(test_w, stats, "naive")))
    _emit(lines, args.report)
    return 0


def cmd_analyze(cfg, args):
    dataset = _load_dataset(cfg)
    lookback = cfg["lookback"]
    if dataset.rows < lookback:
        raise DataError(
            f"dataset has {dataset.rows} rows, need at least lookback = {lookback}"
        )
    window = dataset.values[-lookback:]
    centered = window - window.mean(axis=0, keepdims=True)
    freq_w, time_w, shares, bins = mdl.fusion_weights(
        centered, cfg["harmonics"], cfg["weight_reduce"]
    )
    lines = [
        "[analyze]",
        f"seed = {cfg['seed']}",
        f"data = {_source_line(cfg)}",
        f"rows = {dataset.rows}",
        f"channels = {dataset.channels}",
        f"lookback = {lookback}",
        f"harmonics = {cfg['harmonics']}",
        f"weight_reduce = {cfg['weight_reduce']}",
        f"freq_weight = {format_float(freq_w)}",
        f"time_weight = {format_float(time_w)}",
    ]
    for c, name in enumerate(dataset.channel_names):
        k = int(bins[c])
        period = lookback / k if k > 0 else float("nan")
        lines.append(f"channel.{name}.basis_bin = {k}")
        lines.append(f"channel.{name}.period_steps = {format_float(period)}")
        lines.append(f"channel.{name}.share = {format_float(shares[c])}")
    _emit(lines, args.report)
    return 0


def cmd_verify_theorem(cfg, args):
    if cfg["synth_sigma"] <= 0:
        raise ConfigError("synth_sigma must be positive: the bound compares "
                          "periodic to residual energy")
    base = cfgmod.synth_spec_from(cfg)
    reports = []
    for i in range(cfg["trials"]):
        reports.append(sp.verify_theorem(dataclasses.replace(base, seed=cfg["seed"] + i)))
    held = sum(r.holds for r in reports)
    binding = [r for r in reports if r.binding]
    margins = [r.harmonic_fraction - r.bound for r in binding]
    lines = [
        "[verify-theorem]",
        f"seed = {cfg['seed']}",
        f"trials = {cfg['trials']}",
        f"period = {base.period}",
        f"series_len = {base.length}",
        f"held = {held}",
        f"binding_trials = {len(binding)}",
        f"mean_energy_ratio = {format_float(np.mean([r.energy_ratio for r in reports]))}",
        f"min_margin = {format_float(min(margins) if margins else float('nan'))}",
        f"result = {'pass' if held == cfg['trials'] else 'fail'}",
    ]
    _emit(lines, args.report)
    if held != cfg["trials"]:
        raise VerificationError(
            f"{cfg['trials'] - held} of {cfg['trials']} trials fell below the bound"
        )
    return 0


def cmd_gradcheck(cfg, args):
    dataset = _load_dataset(cfg)
    spec = cfgmod.window_spec_from(cfg)
    if dataset.rows < spec.span:
        raise DataError(
            f"dataset has {dataset.rows} rows, need lookback+horizon = {spec.span}"
        )
    model = mdl.init_model(cfgmod.model_config_from(cfg, dataset.channels))
    n_params = mdl.count_parameters(model)
    if n_params > _GRADCHECK_PARAM_LIMIT:
        raise ConfigError(
            f"model has {n_params} parameters; finite differences over more "
            f"than {_GRADCHECK_PARAM_LIMIT} is impractical. Shrink lookback, "
            f"hidden_dim, or num_layers."
        )
    x = dataset.values[: spec.lookback]
    y = dataset.values[spec.lookback : spec.span]
    check = pipeline.gradcheck_model(model, x, y)
    passed = check.max_rel_err <= args.tol
    lines = [
        "[gradcheck]",
        f"seed = {cfg['seed']}",
        f"data = {_source_line(cfg)}",
        f"parameters = {n_params}",
        f"tol = {format_float(args.tol)}",
        f"max_rel_err = {format_float(check.max_rel_err)}",
        f"worst = {check.worst_param}",
        f"result = {'pass' if passed else 'fail'}",
    ]
    _emit(lines, args.report)
    if not passed:
        raise VerificationError(
            f"gradient check failed: max relative error "
            f"{format_float(check.max_rel_err)} over tol {format_float(args.tol)}"
        )
    return 0


def _parse_grid(pairs):
    grid = {}
    for pair in pairs or ():
        key, sep, values = pair.partition("=")
        key = key.strip()
        if not sep or key not in _SWEEP_KEYS:
            raise ConfigError(
                f"--grid needs key=v1,v2 with key in {_SWEEP_KEYS}, got {pair!r}"
            )
        grid[key] = [cfgmod.parse_value(key, v) for v in values.split(",") if v.strip()]
        if not grid[key]:
            raise ConfigError(f"--grid {key}: no values given")
    if not grid:
        grid = {"sample_ratio": [0.25, 0.5, 1.0]}
    return grid


def _combo_label(keys, combo):
    parts = []
    for key, value in zip(keys, combo):
        text = format_float(value) if isinstance(value, float) else str(value)
        parts.append(f"{key}={text}")
    return " ".join(parts)


def cmd_sweep(cfg, args):
    grid = _parse_grid(args.grid)
    keys = sorted(grid)
    dataset = _load_dataset(cfg)
    spec = cfgmod.window_spec_from(cfg)
    _, (train_w, val_w, _) = _windowed_splits(dataset, cfg, spec)
    if not train_w:
        raise DataError("no training windows after the split")
    if not val_w:
        raise DataError("sweep ranks by validation MSE; the split gives no "
                        "validation windows")
    log = _log(args)
    rows = []
    for combo in itertools.product(*(grid[k] for k in keys)):
        run_cfg = dict(cfg)
        run_cfg.update(zip(keys, combo))
        model = mdl.init_model(cfgmod.model_config_from(run_cfg, dataset.channels))
        result = pipeline.train(
            model, train_w, val_w, cfgmod.train_config_from(run_cfg), log=None
        )
        rows.append((result.best_val, _combo_label(keys, combo)))
        if log is not None:
            log(f"{rows[-1][1]}: val_mse {result.best_val:.6g}")
    rows.sort(key=lambda row: row[0])
    grid_text = " ".join(
        "{}={}".format(k, ",".join(str(v) for v in grid[k])) for k in keys
    )
    lines = [
        "[sweep]",
        f"seed = {cfg['seed']}",
        f"data = {_source_line(cfg)}",
        f"grid = {grid_text}",
        f"combos = {len(rows)}",
    ]
    lines.extend(f"{label} -> val_mse = {format_float(val)}" for val, label in rows)
    lines.append(f"best = {rows[0][1]}")
    _emit(lines, args.report)
    return 0


def cmd_synth(cfg, args):
    if args.kind == "periodic":
        spec = cfgmod.synth_spec_from(cfg)
        dataset = data.synth_dataset(spec, channels=cfg["synth_channels"])
        ratios = [
            data.synth_generate(dataclasses.replace(spec, seed=spec.seed + c)).energy_ratio
            for c in range(dataset.channels)
        ]
    else:
        dataset = data.hourly_standin(cfg["standin_rows"], seed=cfg["seed"])
        ratios = None
    try:
        handle = open(args.out, "w", newline="")
    except OSError as err:
        raise DataError(f"cannot write {args.out}: {err}") from None
    with handle:
        writer = csv.writer(handle)
        if dataset.timestamps is not None:
            writer.writerow(["date"] + dataset.channel_names)
            for stamp, row in zip(dataset.timestamps, dataset.values):
                writer.writerow([stamp] + [format_float(v) for v in row])
        else:
            writer.writerow(dataset.channel_names)
            for row in dataset.values:
                writer.writerow([format_float(v) for v in row])
    lines = [
        "[synth]",
        f"seed = {cfg['seed']}",
        f"kind = {args.kind}",
        f"rows = {dataset.rows}",
        f"channels = {dataset.channels}",
        f"out = {args.out}",
    ]
    if ratios is not None:
        lines.extend(
            f"energy_ratio.{c} = {format_float(r)}" for c, r in enumerate(ratios)
        )
    _emit(lines, args.report)
    return 0


# -- argument parsing ----------------------------------------------------------


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="path to a key = value config file")
    common.add_argument(
        "--set",
        action="append",
        metavar="KEY=VALUE",
        help="override one config key (repeatable)",
    )
    common.add_argument("--report", help="also write the report to this file")
    common.add_argument(
        "--verbose", action="store_true", help="progress lines on stderr"
    )
    parser = argparse.ArgumentParser(
        prog="dualcast",
        description="Dual-branch long-horizon forecaster: train, evaluate, "
        "analyze, and verify.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", parents=[common], help="fit a model and score it")
    p.add_argument("--out", help="write the trained model checkpoint here")
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", parents=[common], help="score a saved checkpoint")
    p.add_argument("--checkpoint", required=True, help="checkpoint written by train")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser(
        "analyze", parents=[common], help="periodicity profile of a dataset window"
    )
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser(
        "verify-theorem",
        parents=[common],
        help="check the harmonic energy bound on synthetic trials",
    )
    p.set_defaults(func=cmd_verify_theorem)

    p = sub.add_parser(
        "gradcheck",
        parents=[common],
        help="finite-difference audit of every parameter gradient",
    )
    p.add_argument("--tol", type=float, default=1e-3, help="max relative error")
    p.set_defaults(func=cmd_gradcheck)

    p = sub.add_parser(
        "sweep", parents=[common], help="grid search over sampling settings"
    )
    p.add_argument(
        "--grid",
        action="append",
        metavar="KEY=V1,V2",
        help=f"values to sweep; keys: {', '.join(_SWEEP_KEYS)} (repeatable)",
    )
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("synth", parents=[common], help="write a synthetic CSV")
    p.add_argument("--out", required=True, help="CSV path to write")
    p.add_argument(
        "--kind",
        choices=("periodic", "hourly"),
        default="periodic",
        help="periodic: harmonic mixture; hourly: benchmark-shaped stand-in",
    )
    p.set_defaults(func=cmd_synth)
    return parser


def main(argv=None):
    args = _parser().parse_args(argv)
    try:
        cfg = cfgmod.load_config(args.config, args.set or ())
        return args.func(cfg, args)
    except ConfigError as err:
        print(f"error: {err}", file=sys.stderr)
        return 2
    except DataError as err:
        print(f"error: {err}", file=sys.stderr)
        return 3
    except TrainingError as err:
        print(f"error: {err}", file=sys.stderr)
        return 4
    except VerificationError as err:
        print(f"error: {err}", file=sys.stderr)
        return 5
