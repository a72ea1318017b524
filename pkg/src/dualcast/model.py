"""The forecaster: instance-normalized dual-branch encoder with a flat head.

Forward pass over one window x of shape (lookback, channels):

1. reversible instance normalization (per-channel mean/std captured from the
   window, learnable affine), so the network sees a scale-free series;
2. one fusion weight pair (freq_weight, time_weight) computed from the
   normalized window's spectrum, constant with respect to gradients;
3. a per-step linear embedding to the hidden width (no positional encoding;
   the frequency content itself carries position);
4. encoder layers, each owning one frequency band of the sampling plan
   (layer 1 highest): residual fusion of the two branches, layer norm, a
   GELU feed-forward block, layer norm;
5. a dense head from the flattened (lookback * hidden) features to
   (horizon * channels), reshaped and de-normalized back to input scale.

Ablation variants are views over the same parameters that pin the fusion
pair or drop the normalization; they exist so branch contributions can be
measured without retraining plumbing.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

import numpy as np

from . import attention as att
from . import spectral as sp
from .errors import (
    ConfigError,
    ContractError,
    DegenerateSignalError,
    NoDominantFrequency,
    ShapeError,
)
from .tensor import Tensor, gelu, layer_norm

__all__ = [
    "ModelConfig",
    "RevinStats",
    "LayerParams",
    "DualBranchForecaster",
    "FrozenForward",
    "init_model",
    "forward",
    "trace_forward",
    "fusion_weights",
    "ablation_variant",
    "count_parameters",
    "parameter_checksum",
    "save_checkpoint",
    "load_checkpoint",
    "ABLATION_MODES",
]

ABLATION_MODES = ("full", "time_only", "freq_only", "uniform", "no_revin")

_REVIN_EPS = 1e-5
_NORM_EPS = 1e-5


@dataclass(frozen=True)
class ModelConfig:
    lookback: int
    horizon: int
    channels: int
    hidden_dim: int = 16
    heads: int = 4
    num_layers: int = 3
    sample_ratio: float = 0.4
    lag_factor: int = 3
    lag_policy: str = "factor"
    harmonics: int = 3
    ffn_mult: int = 4
    weight_reduce: str = "mean"
    seed: int = 0

    def __post_init__(self):
        if self.lookback < 4:
            raise ConfigError(f"lookback must be >= 4, got {self.lookback}")
        if self.horizon < 1:
            raise ConfigError(f"horizon must be >= 1, got {self.horizon}")
        if self.channels < 1:
            raise ConfigError(f"channels must be >= 1, got {self.channels}")
        if self.hidden_dim < 1 or self.hidden_dim % self.heads != 0:
            raise ConfigError(
                f"hidden_dim {self.hidden_dim} must be a positive multiple of "
                f"heads {self.heads}"
            )
        if self.num_layers < 1:
            raise ConfigError(f"num_layers must be >= 1, got {self.num_layers}")
        if not (0.0 < self.sample_ratio <= 1.0):
            raise ConfigError(f"sample_ratio must be in (0, 1], got {self.sample_ratio}")
        if self.lag_factor < 1:
            raise ConfigError(f"lag_factor must be >= 1, got {self.lag_factor}")
        if self.lag_policy not in ("factor", "direct"):
            raise ConfigError(f"unknown lag_policy {self.lag_policy!r}")
        if self.harmonics < 1:
            raise ConfigError(f"harmonics must be >= 1, got {self.harmonics}")
        if self.ffn_mult < 1:
            raise ConfigError(f"ffn_mult must be >= 1, got {self.ffn_mult}")
        if self.weight_reduce not in ("mean", "median"):
            raise ConfigError(f"unknown weight_reduce {self.weight_reduce!r}")


@dataclass
class RevinStats:
    """Per-channel window statistics captured during normalization."""

    mean: np.ndarray
    std: np.ndarray


@dataclass
class LayerParams:
    time_proj: att.BranchProjections
    freq_proj: att.BranchProjections
    norm1_gain: Tensor
    norm1_bias: Tensor
    norm2_gain: Tensor
    norm2_bias: Tensor
    ffn_w1: Tensor
    ffn_b1: Tensor
    ffn_w2: Tensor
    ffn_b2: Tensor


@dataclass
class DualBranchForecaster:
    config: ModelConfig
    plan: sp.SamplingPlan
    revin_gain: Tensor
    revin_bias: Tensor
    embed_w: Tensor
    embed_b: Tensor
    layers: list
    head_w: Tensor
    head_b: Tensor
    # ablation state: None means data-driven fusion; a pair pins (freq, time)
    fusion_override: tuple = None
    use_revin: bool = True

    def parameters(self):
        """Name -> Tensor, in a fixed order (drives init, optimizer, I/O)."""
        out = {
            "revin.gain": self.revin_gain,
            "revin.bias": self.revin_bias,
            "embed.weight": self.embed_w,
            "embed.bias": self.embed_b,
        }
        for i, layer in enumerate(self.layers):
            for branch, proj in (("time", layer.time_proj), ("freq", layer.freq_proj)):
                out[f"layers.{i}.{branch}.w_q"] = proj.w_q
                out[f"layers.{i}.{branch}.w_k"] = proj.w_k
                out[f"layers.{i}.{branch}.w_v"] = proj.w_v
                out[f"layers.{i}.{branch}.w_o"] = proj.w_o
            out[f"layers.{i}.norm1.gain"] = layer.norm1_gain
            out[f"layers.{i}.norm1.bias"] = layer.norm1_bias
            out[f"layers.{i}.norm2.gain"] = layer.norm2_gain
            out[f"layers.{i}.norm2.bias"] = layer.norm2_bias
            out[f"layers.{i}.ffn.w1"] = layer.ffn_w1
            out[f"layers.{i}.ffn.b1"] = layer.ffn_b1
            out[f"layers.{i}.ffn.w2"] = layer.ffn_w2
            out[f"layers.{i}.ffn.b2"] = layer.ffn_b2
        out["head.weight"] = self.head_w
        out["head.bias"] = self.head_b
        return out


@dataclass
class FrozenForward:
    """Discrete choices captured from one forward pass, replayable later."""

    freq_weight: float
    time_weight: float
    lags: list = field(default_factory=list)  # [layer][head] -> lag indices


def _uniform(rng, fan_in, shape):
    bound = 1.0 / np.sqrt(fan_in)
    return Tensor(rng.uniform(-bound, bound, size=shape), requires_grad=True)


def _param(data):
    return Tensor(data, requires_grad=True)


def init_model(config):
    """Build a model with seed-determined fan-in-uniform weights.

    The draw order equals the parameters() order, so one seed fixes every
    weight bit-for-bit.
    """
    rng = np.random.default_rng(config.seed)
    c, d = config.channels, config.hidden_dim
    length, horizon = config.lookback, config.horizon
    plan = sp.make_plan(config.num_layers, config.sample_ratio, length)
    revin_gain = _param(np.ones(c))
    revin_bias = _param(np.zeros(c))
    embed_w = _uniform(rng, c, (c, d))
    embed_b = _param(np.zeros(d))
    layers = []
    for _ in range(config.num_layers):
        projs = []
        for _branch in range(2):
            projs.append(
                att.BranchProjections(
                    _uniform(rng, d, (d, d)),
                    _uniform(rng, d, (d, d)),
                    _uniform(rng, d, (d, d)),
                    _uniform(rng, d, (d, d)),
                    config.heads,
                )
            )
        hidden = config.ffn_mult * d
        layers.append(
            LayerParams(
                time_proj=projs[0],
                freq_proj=projs[1],
                norm1_gain=_param(np.ones(d)),
                norm1_bias=_param(np.zeros(d)),
                norm2_gain=_param(np.ones(d)),
                norm2_bias=_param(np.zeros(d)),
                ffn_w1=_uniform(rng, d, (d, hidden)),
                ffn_b1=_param(np.zeros(hidden)),
                ffn_w2=_uniform(rng, hidden, (hidden, d)),
                ffn_b2=_param(np.zeros(d)),
            )
        )
    head_w = _uniform(rng, length * d, (length * d, horizon * c))
    head_b = _param(np.zeros(horizon * c))
    return DualBranchForecaster(
        config=config,
        plan=plan,
        revin_gain=revin_gain,
        revin_bias=revin_bias,
        embed_w=embed_w,
        embed_b=embed_b,
        layers=layers,
        head_w=head_w,
        head_b=head_b,
    )


def fusion_weights(window, harmonics, reduce="mean"):
    """Data-driven (freq_weight, time_weight, per-channel shares, basis bins).

    Channels whose spectrum is flat (no dominant non-DC component) count as
    fully aperiodic: share 0, basis bin -1. The pair is constant w.r.t.
    gradients by construction (computed outside the graph).
    """
    window = np.asarray(window, dtype=np.float64)
    cols = window[:, None] if window.ndim == 1 else window
    spectrum = sp.rfft(cols)
    shares = np.zeros(cols.shape[1])
    bins = np.full(cols.shape[1], -1, dtype=np.intp)
    for ch in range(cols.shape[1]):
        try:
            bins[ch], shares[ch] = sp.channel_harmonic_share(
                spectrum.bins[:, ch], cols.shape[0], harmonics
            )
        except (NoDominantFrequency, DegenerateSignalError):
            shares[ch] = 0.0
    freq_weight = float(np.mean(shares) if reduce == "mean" else np.median(shares))
    return freq_weight, 1.0 - freq_weight, shares, bins


def _normalize(model, x):
    """RevIN forward: returns the normalized tensor and the captured stats."""
    if not model.use_revin:
        return Tensor(x), RevinStats(
            np.zeros(x.shape[1]), np.ones(x.shape[1])
        )
    mean = x.mean(axis=0)
    std = np.maximum(x.std(axis=0), _REVIN_EPS)
    stats = RevinStats(mean, std)
    normed = (Tensor(x) - mean) / std
    return normed * model.revin_gain + model.revin_bias, stats


def _denormalize(model, y, stats):
    if not model.use_revin:
        return y
    return (y - model.revin_bias) / model.revin_gain * stats.std + stats.mean


def _ffn(layer, u):
    return gelu(u @ layer.ffn_w1 + layer.ffn_b1) @ layer.ffn_w2 + layer.ffn_b2


def _run(model, x, fixed, collector):
    cfg = model.config
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (cfg.lookback, cfg.channels):
        raise ShapeError(
            f"window shape {x.shape} does not match "
            f"({cfg.lookback}, {cfg.channels})"
        )
    normed, stats = _normalize(model, x)
    if fixed is not None:
        w_freq, w_time = fixed.freq_weight, fixed.time_weight
    elif model.fusion_override is not None:
        w_freq, w_time = model.fusion_override
    else:
        w_freq, w_time, _, _ = fusion_weights(
            normed.data, cfg.harmonics, cfg.weight_reduce
        )
    count = att.lag_count(cfg.lookback, cfg.lag_factor, cfg.lag_policy)
    h = normed @ model.embed_w + model.embed_b
    for i, layer in enumerate(model.layers):
        band = model.plan.bands[i]
        mix = h
        if w_time != 0.0:
            mix = mix + w_time * att.time_branch(h, band, layer.time_proj)
        if w_freq != 0.0:
            frozen = fixed.lags[i] if fixed is not None else None
            branch_out, selections = att.freq_branch(
                h, band, layer.freq_proj, count, fixed_lags=frozen
            )
            mix = mix + w_freq * branch_out
            if collector is not None:
                collector.lags.append([s.lags for s in selections])
        elif collector is not None:
            collector.lags.append([])
        u = layer_norm(mix, layer.norm1_gain, layer.norm1_bias, eps=_NORM_EPS)
        h = layer_norm(
            u + _ffn(layer, u), layer.norm2_gain, layer.norm2_bias, eps=_NORM_EPS
        )
    flat = h.reshape(1, cfg.lookback * cfg.hidden_dim)
    out = (flat @ model.head_w + model.head_b).reshape(cfg.horizon, cfg.channels)
    if collector is not None:
        collector.freq_weight = w_freq
        collector.time_weight = w_time
    return _denormalize(model, out, stats)


def forward(model, x, fixed=None):
    """One window in, one horizon out; returns a (horizon, channels) tensor.

    `fixed` replays the fusion pair and per-head lag choices captured by
    trace_forward, which makes the pass a smooth function of the parameters
    (finite-difference checks need that).
    """
    return _run(model, x, fixed, None)


def trace_forward(model, x):
    """Forward plus the FrozenForward describing its discrete choices."""
    trace = FrozenForward(0.0, 0.0)
    out = _run(model, x, None, trace)
    return out, trace


def ablation_variant(model, mode):
    """A view over the same parameters with the fusion rule pinned.

    full: data-driven pair; time_only: (0, 1); freq_only: (1, 0);
    uniform: (0.5, 0.5); no_revin: identity normalization, data-driven pair.
    """
    if mode not in ABLATION_MODES:
        raise ConfigError(f"unknown ablation mode {mode!r}; pick from {ABLATION_MODES}")
    override = {
        "full": None,
        "time_only": (0.0, 1.0),
        "freq_only": (1.0, 0.0),
        "uniform": (0.5, 0.5),
        "no_revin": None,
    }[mode]
    return dataclasses.replace(
        model, fusion_override=override, use_revin=(mode != "no_revin")
    )


def count_parameters(model):
    return sum(int(p.size) for p in model.parameters().values())


def parameter_checksum(model):
    """Order-sensitive digest of all parameter values (debug/reproducibility)."""
    import hashlib

    digest = hashlib.sha256()
    for name, p in model.parameters().items():
        digest.update(name.encode())
        digest.update(np.ascontiguousarray(p.data).tobytes())
    return digest.hexdigest()


def save_checkpoint(path, model):
    """Single-file container: config json + every named parameter array."""
    meta = {
        "config": dataclasses.asdict(model.config),
        "fusion_override": list(model.fusion_override)
        if model.fusion_override is not None
        else None,
        "use_revin": model.use_revin,
        "format": "dualcast-checkpoint-v1",
    }
    arrays = {name: p.data for name, p in model.parameters().items()}
    # a file handle keeps the exact path (np.savez appends .npz to bare names)
    with open(path, "wb") as handle:
        np.savez(
            handle,
            __meta__=np.frombuffer(json.dumps(meta).encode(), dtype=np.uint8),
            **arrays,
        )


def load_checkpoint(path):
    """Rebuild a model from a checkpoint; every array shape is validated."""
    try:
        bundle = np.load(path)
    except (ValueError, OSError) as err:
        raise ContractError(f"{path} is not a model checkpoint: {err}") from None
    with bundle:
        if "__meta__" not in bundle:
            raise ContractError(f"{path} is not a model checkpoint (missing meta)")
        meta = json.loads(bytes(bundle["__meta__"]).decode())
        arrays = {k: bundle[k] for k in bundle.files if k != "__meta__"}
    config = ModelConfig(**meta["config"])
    model = init_model(config)
    params = model.parameters()
    missing = set(params) - set(arrays)
    extra = set(arrays) - set(params)
    if missing or extra:
        raise ContractError(
            f"checkpoint parameter set mismatch: missing {sorted(missing)}, "
            f"unexpected {sorted(extra)}"
        )
    for name, p in params.items():
        if arrays[name].shape != p.data.shape:
            raise ShapeError(
                f"checkpoint array {name} has shape {arrays[name].shape}, "
                f"model needs {p.data.shape}"
            )
        p.data = np.asarray(arrays[name], dtype=np.float64)
    override = meta.get("fusion_override")
    model.fusion_override = tuple(override) if override is not None else None
    model.use_revin = bool(meta.get("use_revin", True))
    return model
