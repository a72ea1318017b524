"""Training, evaluation, and gradient-audit loops around the forecaster.

Everything here is deterministic given its seeds: batch order comes from a
per-epoch generator seeded with (seed, epoch), and reports format floats with
%.17g so a written report re-reads and re-writes byte for byte.
"""

from __future__ import annotations

import contextlib
import math
from dataclasses import dataclass, field

import numpy as np

from . import model as mdl
from .errors import ConfigError, ContractError, NumericError, TrainingError
from .tensor import Tensor, finite_diff_check

__all__ = [
    "mse",
    "mae",
    "rmse",
    "wape",
    "format_float",
    "MetricsReport",
    "OptimState",
    "init_optimizer",
    "adam_step",
    "cosine_lr",
    "TrainConfig",
    "EpochStats",
    "TrainResult",
    "train",
    "mean_window_mse",
    "evaluate",
    "naive_baseline",
    "ModelGradCheck",
    "gradcheck_model",
]


# -- metrics -------------------------------------------------------------------


def _paired(pred, target):
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ContractError(
            f"metric shapes differ: {pred.shape} vs {target.shape}"
        )
    return pred, target


def mse(pred, target):
    pred, target = _paired(pred, target)
    return float(np.mean((pred - target) ** 2))


def mae(pred, target):
    pred, target = _paired(pred, target)
    return float(np.mean(np.abs(pred - target)))


def rmse(pred, target):
    return math.sqrt(mse(pred, target))


def wape(pred, target):
    """Sum of absolute errors over sum of absolute targets; nan when the
    target is identically zero (the ratio has no meaning there)."""
    pred, target = _paired(pred, target)
    denom = float(np.sum(np.abs(target)))
    if denom == 0.0:
        return float("nan")
    return float(np.sum(np.abs(pred - target)) / denom)


def format_float(value):
    # 17 significant digits round-trips any float64 exactly
    return "%.17g" % float(value)


@dataclass
class MetricsReport:
    label: str
    values: dict

    def to_text(self):
        lines = [f"[{self.label}]"]
        lines.extend(f"{k} = {format_float(v)}" for k, v in self.values.items())
        return "\n".join(lines) + "\n"

    @classmethod
    def from_text(cls, text):
        lines = [ln for ln in text.splitlines() if ln.strip()]
        if not lines or not (lines[0].startswith("[") and lines[0].endswith("]")):
            raise ContractError("report must start with a [label] line")
        values = {}
        for ln in lines[1:]:
            key, sep, val = ln.partition(" = ")
            if not sep:
                raise ContractError(f"malformed report line: {ln!r}")
            values[key] = float(val)
        return cls(lines[0][1:-1], values)


# -- optimizer -----------------------------------------------------------------


@dataclass
class OptimState:
    first_moment: dict
    second_moment: dict
    step: int = 0


def init_optimizer(params):
    return OptimState(
        {name: np.zeros_like(p.data) for name, p in params.items()},
        {name: np.zeros_like(p.data) for name, p in params.items()},
    )


def adam_step(params, state, lr, betas=(0.9, 0.999), eps=1e-8):
    """One Adam update with bias correction, in place.

    Parameters whose grad is None are skipped (a branch with fusion weight 0
    never touches its projections). Non-finite gradients or updates raise
    TrainingError carrying the step index.
    """
    beta1, beta2 = betas
    state.step += 1
    t = state.step
    for name, p in params.items():
        g = p.grad
        if g is None:
            continue
        if not np.all(np.isfinite(g)):
            raise TrainingError(f"non-finite gradient in {name} at step {t}", step=t)
        m = state.first_moment[name] = beta1 * state.first_moment[name] + (1 - beta1) * g
        v = state.second_moment[name] = beta2 * state.second_moment[name] + (
            1 - beta2
        ) * (g * g)
        p.data -= lr * (m / (1 - beta1**t)) / (np.sqrt(v / (1 - beta2**t)) + eps)
        if not np.all(np.isfinite(p.data)):
            raise TrainingError(
                f"parameter {name} became non-finite at step {t}", step=t
            )


def cosine_lr(step, total_steps, base_lr):
    """Cosine decay from base_lr at step 0 to 0 at total_steps, clamped after."""
    if total_steps < 1:
        raise ContractError(f"total_steps must be >= 1, got {total_steps}")
    frac = min(max(step, 0), total_steps) / total_steps
    return base_lr * 0.5 * (1.0 + math.cos(math.pi * frac))


# -- training loop -------------------------------------------------------------


@dataclass(frozen=True)
class TrainConfig:
    batch_size: int = 32
    max_epochs: int = 20
    patience: int = 3
    base_lr: float = 1e-4
    seed: int = 0
    total_steps: int = None  # cosine horizon; defaults to the full schedule
    max_steps: int = None  # hard cap on optimizer steps, mid-epoch included

    def __post_init__(self):
        if self.batch_size < 1 or self.max_epochs < 1 or self.patience < 1:
            raise ConfigError(
                "batch_size, max_epochs, and patience must be positive"
            )
        if not (self.base_lr > 0):
            raise ConfigError(f"base_lr must be positive, got {self.base_lr}")
        for label, v in (("total_steps", self.total_steps), ("max_steps", self.max_steps)):
            if v is not None and v < 1:
                raise ConfigError(f"{label} must be >= 1 when set, got {v}")


@dataclass
class EpochStats:
    epoch: int
    train_loss: float
    val_mse: float
    lr: float


@dataclass
class TrainResult:
    history: list
    best_val: float
    best_epoch: int
    steps: int
    stopped_early: bool
    restored_best: bool


@contextlib.contextmanager
def _no_grad(model):
    params = model.parameters()
    saved = {name: p.requires_grad for name, p in params.items()}
    for p in params.values():
        p.requires_grad = False
    try:
        yield
    finally:
        for name, p in params.items():
            p.requires_grad = saved[name]


def _window_loss(model, x, y):
    diff = mdl.forward(model, x) - Tensor(y)
    return (diff * diff).mean()


def mean_window_mse(model, pairs):
    """Mean per-window MSE of predictions; no graphs are built."""
    pairs = list(pairs)
    if not pairs:
        raise ContractError("no windows to score")
    with _no_grad(model):
        return float(
            np.mean([mse(mdl.forward(model, x).data, y) for x, y in pairs])
        )


def train(model, train_pairs, val_pairs, config, log=None):
    """Adam + cosine schedule with patience-based early stopping.

    train_pairs and val_pairs are (x, y) window pairs, already scaled. Batch
    order reshuffles every epoch from a (seed, epoch)-seeded generator and
    the last short batch is used. The batch loss is the mean of per-window
    MSEs, differentiated as one graph. When validation windows exist, the
    epoch with the lowest validation MSE wins: its weights are restored at
    the end, and `patience` non-improving epochs stop the run.
    """
    train_pairs = list(train_pairs)
    val_pairs = list(val_pairs)
    if not train_pairs:
        raise ContractError("no training windows")
    params = model.parameters()
    opt = init_optimizer(params)
    n = len(train_pairs)
    steps_per_epoch = -(-n // config.batch_size)
    if config.total_steps is not None:
        total = config.total_steps
    elif config.max_steps is not None:
        total = config.max_steps
    else:
        total = config.max_epochs * steps_per_epoch
    best = math.inf
    best_epoch = -1
    snapshot = None
    bad_epochs = 0
    step = 0
    lr = config.base_lr
    history = []
    stopped_early = False
    out_of_steps = False
    for epoch in range(config.max_epochs):
        order = np.random.default_rng((config.seed, epoch)).permutation(n)
        epoch_loss = 0.0
        seen = 0
        for start in range(0, n, config.batch_size):
            if config.max_steps is not None and step >= config.max_steps:
                out_of_steps = True
                break
            batch = [train_pairs[j] for j in order[start : start + config.batch_size]]
            for p in params.values():
                p.grad = None
            try:
                loss = _window_loss(model, *batch[0])
                for x, y in batch[1:]:
                    loss = loss + _window_loss(model, x, y)
                loss = loss * (1.0 / len(batch))
                value = float(loss.data)
                loss.backward()
            except NumericError as err:
                raise TrainingError(
                    f"non-finite value during step {step + 1}: {err}", step=step + 1
                ) from err
            lr = cosine_lr(step, total, config.base_lr)
            adam_step(params, opt, lr)
            step += 1
            epoch_loss += value * len(batch)
            seen += len(batch)
        if seen == 0:
            break
        train_loss = epoch_loss / seen
        val_mse = mean_window_mse(model, val_pairs) if val_pairs else float("nan")
        history.append(EpochStats(epoch, train_loss, val_mse, lr))
        if log is not None:
            log(
                f"epoch {epoch}: train_loss {train_loss:.6g} "
                f"val_mse {val_mse:.6g} lr {lr:.3g}"
            )
        if val_pairs:
            if val_mse < best:
                best = val_mse
                best_epoch = epoch
                bad_epochs = 0
                snapshot = {name: p.data.copy() for name, p in params.items()}
            else:
                bad_epochs += 1
                if bad_epochs >= config.patience:
                    stopped_early = True
                    break
        if out_of_steps:
            break
    if snapshot is not None:
        for name, p in params.items():
            p.data[...] = snapshot[name]
    return TrainResult(
        history=history,
        best_val=best if best_epoch >= 0 else float("nan"),
        best_epoch=best_epoch,
        steps=step,
        stopped_early=stopped_early,
        restored_best=snapshot is not None,
    )


# -- evaluation ----------------------------------------------------------------


def _stacked_report(preds, targets, stats, label):
    preds = np.stack(preds)
    targets = np.stack(targets)
    values = {"mse": mse(preds, targets), "mae": mae(preds, targets)}
    if stats is not None:
        raw_p = preds * stats.std + stats.mean
        raw_t = targets * stats.std + stats.mean
        values["raw_mae"] = mae(raw_p, raw_t)
        values["raw_rmse"] = rmse(raw_p, raw_t)
        values["raw_wape"] = wape(raw_p, raw_t)
    return MetricsReport(label, values)


def evaluate(model, pairs, stats=None, label="eval"):
    """Score a model on (x, y) window pairs without touching its weights.

    Metrics are reported on the scale the windows arrive in; passing the
    NormStats that scaled them adds raw_mae / raw_rmse / raw_wape on the
    original scale.
    """
    pairs = list(pairs)
    if not pairs:
        raise ContractError("no windows to evaluate")
    preds = []
    targets = []
    with _no_grad(model):
        for x, y in pairs:
            preds.append(mdl.forward(model, x).data)
            targets.append(np.asarray(y, dtype=np.float64))
    return _stacked_report(preds, targets, stats, label)


def naive_baseline(pairs, stats=None, label="naive"):
    """Repeat each window's last row across the horizon and score that."""
    pairs = list(pairs)
    if not pairs:
        raise ContractError("no windows to evaluate")
    preds = []
    targets = []
    for x, y in pairs:
        x = np.asarray(x, dtype=np.float64)
        y = np.asarray(y, dtype=np.float64)
        preds.append(np.repeat(x[-1:], len(y), axis=0))
        targets.append(y)
    return _stacked_report(preds, targets, stats, label)


# -- gradient audit ------------------------------------------------------------


@dataclass
class ModelGradCheck:
    per_param: dict
    max_rel_err: float
    worst_param: str


def gradcheck_model(model, x, target, step=1e-6, params=None):
    """Finite-difference audit of d(loss)/d(parameter) for every parameter.

    The forward pass is replayed against a frozen trace (fixed fusion pair
    and lag choices) so the loss is a smooth function of the weights; loss is
    the MSE against `target`. Cost scales with parameter count times two
    forward passes, so keep the model small. Returns per-parameter results
    and the worst relative error.
    """
    x = np.asarray(x, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    _, trace = mdl.trace_forward(model, x)
    all_params = model.parameters()
    if params is None:
        names = list(all_params)
    else:
        unknown = [name for name in params if name not in all_params]
        if unknown:
            raise ContractError(f"unknown parameters: {unknown}")
        names = list(params)

    def loss_fn(_):
        diff = mdl.forward(model, x, fixed=trace) - Tensor(target)
        return (diff * diff).mean()

    results = {}
    for name in names:
        results[name] = finite_diff_check(loss_fn, all_params[name], step=step)
    for p in all_params.values():
        p.grad = None
    worst = max(names, key=lambda name: results[name].max_rel_err)
    return ModelGradCheck(
        per_param=results,
        max_rel_err=results[worst].max_rel_err,
        worst_param=worst,
    )
