"""Dual attention branches over one frequency band.

Both branches project the embedded sequence to queries, keys, and values,
move them through the one-sided spectrum, keep only the layer's band, and
return to the time domain. They differ in how positions exchange information:

* the time branch runs plain scaled-dot-product attention on the
  band-filtered projections, head by head;
* the frequency branch scores circular lags through the correlation theorem
  (inverse transform of conj(Q) * K), picks the top lags per head, and
  aggregates circularly shifted values with softmax weights over the selected
  raw scores.

Lag indices are discrete and carry no gradient; the scores feeding the
softmax, and everything downstream of the value path, stay differentiable.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, ContractError, ShapeError
from .spectral import irfft_tensors, rfft_tensors
from .tensor import Tensor, concat, gather_rows, pad_rows, roll, softmax

__all__ = [
    "BranchProjections",
    "LagSelection",
    "scaled_dot_attention",
    "time_branch",
    "autocorr_scores",
    "select_lags",
    "time_delay_aggregate",
    "freq_branch",
    "lag_count",
]


@dataclass
class BranchProjections:
    """Square projection weights for one branch plus the head count."""

    w_q: Tensor
    w_k: Tensor
    w_v: Tensor
    w_o: Tensor
    heads: int

    def __post_init__(self):
        width = self.w_q.shape[0]
        for name in ("w_q", "w_k", "w_v", "w_o"):
            w = getattr(self, name)
            if w.shape != (width, width):
                raise ShapeError(f"{name} must be square ({width}, {width}), got {w.shape}")
        if self.heads < 1 or width % self.heads != 0:
            raise ConfigError(
                f"head count {self.heads} must divide the width {width}"
            )

    @property
    def width(self):
        return self.w_q.shape[0]

    @property
    def head_dim(self):
        return self.width // self.heads


@dataclass
class LagSelection:
    """Chosen circular lags and their softmax weights (aligned, same length)."""

    lags: list
    probs: Tensor


def lag_count(series_len, factor, policy="factor"):
    """How many lags the frequency branch keeps.

    policy "factor": floor(factor * ln(series_len)); policy "direct": factor
    itself. Both are clamped to [1, series_len].
    """
    if policy == "factor":
        raw = math.floor(factor * math.log(series_len))
    elif policy == "direct":
        raw = int(factor)
    else:
        raise ConfigError(f"unknown lag policy {policy!r}")
    return min(series_len, max(1, raw))


def scaled_dot_attention(q, k, v):
    """softmax(q k^T / sqrt(d)) v for one head; inputs are (L, d)."""
    if q.shape != k.shape or q.shape[0] != v.shape[0]:
        raise ShapeError(
            f"attention shapes disagree: q {q.shape}, k {k.shape}, v {v.shape}"
        )
    scale = 1.0 / math.sqrt(q.shape[1])
    scores = (q @ k.T) * scale
    return softmax(scores, axis=-1) @ v


def _band_filter(x, band, series_len):
    """rfft -> keep [start, stop) -> zero-pad -> irfft, columnwise."""
    re, im = rfft_tensors(x)
    total = series_len // 2 + 1
    re = pad_rows(re[band.start : band.stop], band.start, total)
    im = pad_rows(im[band.start : band.stop], band.start, total)
    return irfft_tensors(re, im, series_len)


def time_branch(x, band, proj):
    """Self-attention over band-filtered projections; returns (L, D)."""
    length = x.shape[0]
    q = _band_filter(x @ proj.w_q, band, length)
    k = _band_filter(x @ proj.w_k, band, length)
    v = _band_filter(x @ proj.w_v, band, length)
    d = proj.head_dim
    outs = []
    for h in range(proj.heads):
        cols = slice(h * d, (h + 1) * d)
        outs.append(scaled_dot_attention(q[:, cols], k[:, cols], v[:, cols]))
    return concat(outs, axis=1) @ proj.w_o


def autocorr_scores(q_re, q_im, k_re, k_im, start, series_len):
    """Circular cross-correlation scores from band-sliced spectra.

    Inputs are the (F, d) real/imaginary parts of the query and key spectra
    for bins [start, start+F). The product conj(Q) * K, padded back to the
    full one-sided layout and inverted, gives R with
    R[tau] = sum_t q[t] k[(t + tau) mod L] when the band covers the whole
    spectrum, and the band-limited version of the same correlation otherwise.
    Returns an (L, d) tensor, one correlation sequence per column.
    """
    if not (q_re.shape == q_im.shape == k_re.shape == k_im.shape):
        raise ShapeError("query/key spectrum slices must share one shape")
    total = series_len // 2 + 1
    if start < 0 or start + q_re.shape[0] > total:
        raise ContractError(
            f"slice of {q_re.shape[0]} bins at offset {start} exceeds {total}"
        )
    prod_re = q_re * k_re + q_im * k_im
    prod_im = q_re * k_im - q_im * k_re
    prod_re = pad_rows(prod_re, start, total)
    prod_im = pad_rows(prod_im, start, total)
    return irfft_tensors(prod_re, prod_im, series_len)


def select_lags(scores, count):
    """Top `count` lags by score, ties to the smaller lag; softmax over them.

    `scores` is a length-L tensor. The lag indices are constants; the probs
    keep their gradient through the gathered raw scores.
    """
    if scores.ndim != 1:
        raise ShapeError(f"select_lags expects a 1-d score tensor, got {scores.shape}")
    length = scores.shape[0]
    if not (1 <= count <= length):
        raise ContractError(f"lag count {count} outside [1, {length}]")
    order = np.argsort(-scores.data, kind="stable")  # stable: ties keep low lag first
    lags = [int(i) for i in order[:count]]
    return LagSelection(lags, softmax(gather_rows(scores, lags), axis=0))


def time_delay_aggregate(values, selection):
    """Probability-weighted sum of circularly shifted values.

    Shift semantics: lag tau contributes values[(t + tau) mod L] at position t.
    """
    out = None
    for i, tau in enumerate(selection.lags):
        term = selection.probs[i : i + 1] * roll(values, -tau, axis=0)
        out = term if out is None else out + term
    return out


def freq_branch(x, band, proj, count, fixed_lags=None):
    """Lag aggregation driven by band-limited correlation; returns (L, D).

    Per head: score lags with the correlation of that head's query/key
    spectrum slices (averaged over the head dimension), keep the top `count`
    lags, and blend circular shifts of the head's time-domain values. The
    value path is padded back to the full layout and inverted before any
    shifting, so rolling happens in the time domain. `fixed_lags`, when
    given, pins the lag indices per head (probabilities still follow the
    current scores); it exists so gradient checks can hold the discrete
    choice constant.
    """
    length = x.shape[0]
    total = length // 2 + 1
    q_re, q_im = rfft_tensors(x @ proj.w_q)
    k_re, k_im = rfft_tensors(x @ proj.w_k)
    sl = slice(band.start, band.stop)
    scores_all = autocorr_scores(
        q_re[sl], q_im[sl], k_re[sl], k_im[sl], band.start, length
    )
    values = _band_filter(x @ proj.w_v, band, length)
    d = proj.head_dim
    outs = []
    selections = []
    for h in range(proj.heads):
        cols = slice(h * d, (h + 1) * d)
        head_scores = scores_all[:, cols].mean(axis=1)
        if fixed_lags is None:
            selection = select_lags(head_scores, count)
        else:
            lags = list(fixed_lags[h])
            selection = LagSelection(
                lags, softmax(gather_rows(head_scores, lags), axis=0)
            )
        selections.append(selection)
        outs.append(time_delay_aggregate(values[:, cols], selection))
    out = concat(outs, axis=1) @ proj.w_o
    return out, selections
