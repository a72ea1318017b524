"""Spectral analysis: transforms, band plans, periodicity, and the energy bound.

Conventions, fixed across the package:

* Forward transform is the unnormalized one-sided DFT of a real series,
  ``F[j] = sum_t x[t] exp(-2i pi j t / L)`` for ``j = 0 .. floor(L/2)``; the
  inverse carries the ``1/L`` factor. This matches ``numpy.fft.rfft/irfft``,
  which back the implementation.
* A length-L series has ``M = L // 2 + 1`` one-sided bins. Bin 0 is DC; for
  even L the last bin is the Nyquist bin. Total energy uses the one-sided
  weights (1 for DC and Nyquist, 2 elsewhere) so that the weighted sum of
  squared magnitudes equals ``L`` times the time-domain energy exactly
  (Parseval).
* Frequency bands are half-open ``[start, stop)`` index ranges; layer 1 of a
  sampling plan holds the highest frequencies and the last layer reaches down
  to DC.

Two surfaces live here: plain-numpy analysis on :class:`Spectrum` values, and
differentiable transforms (:func:`rfft_tensors` / :func:`irfft_tensors`) on
autodiff tensors, used inside the attention branches. Both share the same
convention; the differentiable path treats real and imaginary parts as two
real-valued tensors with hand-derived adjoints.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    ConfigError,
    ContractError,
    DegenerateSignalError,
    NoDominantFrequency,
    ShapeError,
)
from .synthetic import SyntheticPeriodicSignal, synth_generate
from .tensor import Tensor

__all__ = [
    "Spectrum",
    "Band",
    "BandSlice",
    "SamplingPlan",
    "PeriodicityWeight",
    "TheoremReport",
    "rfft",
    "irfft",
    "make_plan",
    "sample",
    "zero_pad",
    "pad_slice",
    "one_sided_energy_weights",
    "spectrum_energy",
    "peak_detect",
    "channel_harmonic_share",
    "harmonic_energy_ratio",
    "theorem_lower_bound",
    "augmented_energy_ratio",
    "verify_theorem",
    "rfft_tensors",
    "irfft_tensors",
]

# absolute tolerance for "this bin must be purely real" checks on DC/Nyquist
_IMAG_TOL = 1e-12


# ---------------------------------------------------------------------------
# types


@dataclass
class Spectrum:
    """One-sided spectrum of a real series of length `series_len`.

    `bins` is complex with shape (M,) or (M, C) where M = series_len//2 + 1.
    """

    bins: np.ndarray
    series_len: int

    def __post_init__(self):
        self.bins = np.asarray(self.bins, dtype=np.complex128)
        expected = self.series_len // 2 + 1
        if self.bins.shape[0] != expected:
            raise ShapeError(
                f"spectrum of a length-{self.series_len} series needs "
                f"{expected} bins, got {self.bins.shape[0]}"
            )

    @property
    def bin_count(self):
        return self.bins.shape[0]


@dataclass(frozen=True)
class Band:
    """Half-open one-sided bin range [start, stop) owned by one layer."""

    layer: int
    start: int
    stop: int

    def __post_init__(self):
        if not (0 <= self.start <= self.stop):
            raise ContractError(f"invalid band [{self.start}, {self.stop})")

    @property
    def width(self):
        return self.stop - self.start


@dataclass
class BandSlice:
    """Contiguous run of bins cut from a spectrum; remembers where it came from."""

    bins: np.ndarray
    start: int
    series_len: int


@dataclass
class SamplingPlan:
    """Frequency bands assigned to the encoder layers, highest first."""

    n_layers: int
    ratio: float
    bin_count: int
    series_len: int
    regime: str  # "partition" (ratio <= 1/n_layers) or "overlap"
    bands: list


@dataclass
class PeriodicityWeight:
    """Fusion weights from the harmonic energy share of the dominant frequency.

    `freq_weight + time_weight == 1.0` exactly; `channel_weights` holds the
    per-channel shares before reduction and `basis_bins` the detected
    fundamental bin per channel (-1 where detection failed and the channel
    was counted as aperiodic).
    """

    freq_weight: float
    time_weight: float
    channel_weights: np.ndarray
    basis_bins: np.ndarray
    harmonics: int


@dataclass
class TheoremReport:
    """One verification record for the harmonic-energy lower bound."""

    energy_ratio: float  # periodic energy over residual energy, realized
    harmonic_fraction: float  # measured weighted harmonic share of total energy
    bound: float
    binding: bool  # bound is vacuous (0) unless energy_ratio > 4
    holds: bool
    period: int
    series_len: int


# ---------------------------------------------------------------------------
# transforms (numpy path)


def rfft(x):
    """One-sided DFT of a real series, shape (L,) or (L, C) -> Spectrum."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim not in (1, 2) or x.shape[0] < 2:
        raise ShapeError(f"rfft expects (L,) or (L, C) with L >= 2, got {x.shape}")
    return Spectrum(np.fft.rfft(x, axis=0), x.shape[0])


def irfft(spectrum, series_len):
    """Invert a one-sided spectrum back to a length-`series_len` real series."""
    if spectrum.series_len != series_len:
        raise ContractError(
            f"spectrum belongs to a length-{spectrum.series_len} series, "
            f"asked to invert to length {series_len}"
        )
    bins = spectrum.bins
    dc_imag = np.max(np.abs(np.atleast_1d(bins[0]).imag))
    if dc_imag > _IMAG_TOL:
        raise ContractError(f"irfft: DC bin imaginary part {dc_imag:.3e} beyond {_IMAG_TOL}")
    if series_len % 2 == 0:
        nyq_imag = np.max(np.abs(np.atleast_1d(bins[-1]).imag))
        if nyq_imag > _IMAG_TOL:
            raise ContractError(
                f"irfft: Nyquist bin imaginary part {nyq_imag:.3e} beyond {_IMAG_TOL}"
            )
    return np.fft.irfft(bins, n=series_len, axis=0)


def one_sided_energy_weights(bin_count, series_len):
    """Parseval weights: 1 at DC (and Nyquist for even length), else 2."""
    w = np.full(bin_count, 2.0)
    w[0] = 1.0
    if series_len % 2 == 0:
        w[-1] = 1.0
    return w


def spectrum_energy(spectrum):
    """Weighted one-sided energy; equals series_len * sum(x**2) by Parseval."""
    w = one_sided_energy_weights(spectrum.bin_count, spectrum.series_len)
    mags2 = np.abs(spectrum.bins) ** 2
    if mags2.ndim > 1:
        w = w[:, None]
    return (w * mags2).sum(axis=0)


# ---------------------------------------------------------------------------
# band plans


def make_plan(n_layers, ratio, series_len):
    """Assign a frequency band to each of `n_layers` layers.

    When ratio <= 1/n_layers the bands partition [0, M) exactly (consecutive
    floor boundaries); otherwise each band has width floor(ratio * M), the
    starts descend linearly from floor(M * (1 - ratio)) to 0, and adjacent
    bands overlap. Layer 1 always takes the highest frequencies and the last
    layer starts at DC.
    """
    if not isinstance(n_layers, int) or n_layers < 1:
        raise ConfigError(f"n_layers must be a positive int, got {n_layers!r}")
    if not (0.0 < ratio <= 1.0):
        raise ConfigError(f"sampling ratio must be in (0, 1], got {ratio!r}")
    if series_len < 2:
        raise ConfigError(f"series_len must be >= 2, got {series_len}")
    bins = series_len // 2 + 1
    if n_layers > bins:
        raise ConfigError(
            f"{n_layers} layers cannot each own bins out of only {bins}"
        )
    bands = []
    if n_layers == 1 or ratio <= 1.0 / n_layers:
        regime = "partition"
        for n in range(1, n_layers + 1):
            start = math.floor(bins * (1.0 - n / n_layers))
            stop = math.floor(bins * (1.0 - (n - 1) / n_layers))
            bands.append(Band(n, start, stop))
    else:
        regime = "overlap"
        width = math.floor(ratio * bins)
        for n in range(1, n_layers + 1):
            start = math.floor(bins * (1.0 - ratio) * (1.0 - (n - 1) / (n_layers - 1)))
            bands.append(Band(n, start, min(start + width, bins)))
    return SamplingPlan(n_layers, float(ratio), bins, series_len, regime, bands)


def sample(spectrum, band):
    """Cut `band` out of a spectrum, keeping the offset for later padding."""
    if band.stop > spectrum.bin_count:
        raise ContractError(
            f"band [{band.start}, {band.stop}) exceeds {spectrum.bin_count} bins"
        )
    return BandSlice(spectrum.bins[band.start : band.stop].copy(), band.start, spectrum.series_len)


def zero_pad(bins, start, total_bins):
    """Embed `bins` rows at [start, start+len) inside `total_bins` zero rows."""
    bins = np.asarray(bins, dtype=np.complex128)
    if start < 0 or start + bins.shape[0] > total_bins:
        raise ContractError(
            f"cannot place {bins.shape[0]} bins at offset {start} in {total_bins}"
        )
    out = np.zeros((total_bins,) + bins.shape[1:], dtype=np.complex128)
    out[start : start + bins.shape[0]] = bins
    return out


def pad_slice(band_slice):
    """Zero-pad a BandSlice back to the full one-sided layout -> Spectrum."""
    total = band_slice.series_len // 2 + 1
    return Spectrum(zero_pad(band_slice.bins, band_slice.start, total), band_slice.series_len)


# ---------------------------------------------------------------------------
# periodicity analysis


def peak_detect(spectrum):
    """Dominant non-DC bin per channel; ties resolve to the lowest index.

    Raises NoDominantFrequency when every non-DC magnitude is below 1e-12.
    Returns an int for 1-d spectra, an int array of shape (C,) otherwise.
    """
    mags = np.abs(np.atleast_2d(spectrum.bins.T).T)  # (M, C)
    if mags.shape[0] < 2:
        raise ContractError("peak detection needs at least one non-DC bin")
    ks = np.empty(mags.shape[1], dtype=np.intp)
    for c in range(mags.shape[1]):
        tail = mags[1:, c]
        if float(tail.max()) < 1e-12:
            raise NoDominantFrequency(
                f"channel {c}: all non-DC magnitudes below 1e-12"
            )
        ks[c] = int(tail.argmax()) + 1
    if spectrum.bins.ndim == 1:
        return int(ks[0])
    return ks


def channel_harmonic_share(col_bins, series_len, n_harmonics):
    """Weighted harmonic share for one channel; raises on flat spectra."""
    spec = Spectrum(col_bins, series_len)
    k = peak_detect(spec)
    w = one_sided_energy_weights(spec.bin_count, series_len)
    mags2 = np.abs(col_bins) ** 2
    total = float((w * mags2).sum())
    if total <= 0.0:
        raise DegenerateSignalError("channel has zero spectral energy")
    harmonics = [j * k for j in range(1, n_harmonics + 1) if j * k < spec.bin_count]
    share = float(sum(w[j] * mags2[j] for j in harmonics)) / total
    return k, min(max(share, 0.0), 1.0)


def harmonic_energy_ratio(x, n_harmonics, reduce="mean"):
    """Periodicity weights for a series: harmonic energy share of the total.

    Per channel: detect the dominant bin k, collect its first `n_harmonics`
    multiples that fall below the bin count, and divide their weighted energy
    by the total weighted energy (DC included in the denominator). The
    per-channel shares are reduced (mean or median) to one scalar pair with
    freq_weight + time_weight == 1 exactly. The share is invariant under
    positive scaling of x. Channels whose peak detection fails propagate the
    error; callers that want flat channels treated as aperiodic should catch
    NoDominantFrequency per channel (the model does).
    """
    if n_harmonics < 1:
        raise ContractError(f"n_harmonics must be >= 1, got {n_harmonics}")
    if reduce not in ("mean", "median"):
        raise ConfigError(f"unknown reduction {reduce!r}")
    x = np.asarray(x, dtype=np.float64)
    cols = x[:, None] if x.ndim == 1 else x
    spectrum = rfft(cols)
    shares = np.empty(cols.shape[1])
    ks = np.empty(cols.shape[1], dtype=np.intp)
    for c in range(cols.shape[1]):
        ks[c], shares[c] = channel_harmonic_share(
            spectrum.bins[:, c], cols.shape[0], n_harmonics
        )
    freq_weight = float(np.mean(shares) if reduce == "mean" else np.median(shares))
    return PeriodicityWeight(
        freq_weight=freq_weight,
        time_weight=1.0 - freq_weight,
        channel_weights=shares,
        basis_bins=ks,
        harmonics=int(n_harmonics),
    )


# ---------------------------------------------------------------------------
# harmonic-energy lower bound


def theorem_lower_bound(energy_ratio):
    """Lower bound on the harmonic energy share given periodic/residual ratio r.

    For r > 4 the bound is (r - 2 sqrt(r)) / (r - 2 sqrt(r) + 1); for
    0 < r <= 4 the bound is vacuous and 0.0 is returned (callers can check
    `energy_ratio > 4` for bindingness). Nonpositive ratios are a contract
    violation.
    """
    if energy_ratio <= 0.0:
        raise ContractError(f"energy ratio must be positive, got {energy_ratio}")
    if energy_ratio <= 4.0:
        return 0.0
    s = energy_ratio - 2.0 * math.sqrt(energy_ratio)
    return s / (s + 1.0)


def augmented_energy_ratio(e_periodic, e_high, e_residual):
    """Ratio with above-band periodic energy folded in: (E_p + E_hi) / E_r.

    The same closed-form bound applies at this augmented ratio. Under discrete
    sampling high-frequency periodic content aliases onto the harmonic comb,
    so e_high is an accounting split, not a separate signal path.
    """
    if e_residual <= 0.0:
        raise ContractError(f"residual energy must be positive, got {e_residual}")
    if e_periodic < 0.0 or e_high < 0.0:
        raise ContractError("energies must be non-negative")
    return (e_periodic + e_high) / e_residual


def verify_theorem(sig):
    """Check the lower bound on one synthetic decomposition.

    The measured harmonic fraction uses every multiple of the base bin
    k = series_len / period present in the one-sided layout, DC included,
    which is exactly the comb the bound's derivation sums over. `holds` is
    checked against bound - 1e-9 to absorb roundoff and is trivially true
    when the bound is vacuous.
    """
    if not isinstance(sig, SyntheticPeriodicSignal):
        raise ContractError("verify_theorem expects a SyntheticPeriodicSignal")
    made = synth_generate(sig)
    e_p = float(np.sum(made.periodic**2))
    e_r = float(np.sum(made.residual**2))
    if e_r <= 0.0:
        raise DegenerateSignalError("residual energy is zero")
    ratio = e_p / e_r
    spectrum = rfft(made.series)
    length = sig.length
    k = length // sig.period  # repeats; exact because length = period * repeats
    w = one_sided_energy_weights(spectrum.bin_count, length)
    mags2 = np.abs(spectrum.bins) ** 2
    total = float((w * mags2).sum())
    comb = np.arange(0, spectrum.bin_count, k)
    harmonic = float((w[comb] * mags2[comb]).sum())
    fraction = harmonic / total
    bound = theorem_lower_bound(ratio)
    binding = ratio > 4.0
    holds = True if not binding else fraction >= bound - 1e-9
    return TheoremReport(
        energy_ratio=ratio,
        harmonic_fraction=fraction,
        bound=bound,
        binding=binding,
        holds=holds,
        period=sig.period,
        series_len=length,
    )


# ---------------------------------------------------------------------------
# differentiable transforms


def rfft_tensors(x):
    """Forward transform of a real tensor -> (real part, imaginary part).

    Both outputs are real tensors of shape (M, ...) sharing `x` as parent.
    The adjoint of each is the real part of the unnormalized inverse applied
    to the one-sided gradient, zero-extended to length L (no Hermitian
    doubling, because each one-sided entry is an independent output here).
    """
    if x.ndim not in (1, 2) or x.shape[0] < 2:
        raise ShapeError(f"rfft_tensors expects (L,) or (L, C), got {x.shape}")
    length = x.shape[0]
    spec = np.fft.rfft(x.data, axis=0)
    m = spec.shape[0]

    def backward_re(g):
        buf = np.zeros((length,) + g.shape[1:], dtype=np.complex128)
        buf[:m] = g
        return (np.fft.ifft(buf, axis=0).real * length,)

    def backward_im(g):
        buf = np.zeros((length,) + g.shape[1:], dtype=np.complex128)
        buf[:m] = 1j * g
        return (np.fft.ifft(buf, axis=0).real * length,)

    re = Tensor._make(np.ascontiguousarray(spec.real), (x,), backward_re, "rfft_re")
    im = Tensor._make(np.ascontiguousarray(spec.imag), (x,), backward_im, "rfft_im")
    return re, im


def irfft_tensors(re, im, series_len):
    """Inverse transform of (real, imaginary) tensors -> real length-L tensor.

    Requires the DC (and Nyquist, for even length) imaginary parts to vanish
    within 1e-12; numpy's inverse ignores them, so their gradients are zero.
    Middle bins carry the Hermitian factor 2 in the adjoint.
    """
    if re.shape != im.shape:
        raise ShapeError(f"real/imaginary shapes differ: {re.shape} vs {im.shape}")
    m = series_len // 2 + 1
    if re.shape[0] != m:
        raise ShapeError(
            f"need {m} one-sided bins for length {series_len}, got {re.shape[0]}"
        )
    even = series_len % 2 == 0
    dc_imag = float(np.max(np.abs(np.atleast_1d(im.data[0]))))
    if dc_imag > _IMAG_TOL:
        raise ContractError(f"irfft_tensors: DC imaginary part {dc_imag:.3e}")
    if even:
        nyq_imag = float(np.max(np.abs(np.atleast_1d(im.data[-1]))))
        if nyq_imag > _IMAG_TOL:
            raise ContractError(f"irfft_tensors: Nyquist imaginary part {nyq_imag:.3e}")
    data = np.fft.irfft(re.data + 1j * im.data, n=series_len, axis=0)
    weights = one_sided_energy_weights(m, series_len).reshape((m,) + (1,) * (re.ndim - 1))

    def backward(g):
        spec = np.fft.rfft(g, axis=0)
        g_re = weights * spec.real / series_len
        g_im = weights * spec.imag / series_len
        g_im[0] = 0.0
        if even:
            g_im[-1] = 0.0
        return (g_re, g_im)

    return Tensor._make(data, (re, im), backward, "irfft")
