"""Seeded synthetic series with a known periodic/residual decomposition.

The generator builds one period as a sum of sinusoids at multiples of the base
frequency, tiles it, and adds white Gaussian residual noise. Tiling makes the
periodic part exactly periodic (bitwise equal across repeats), which the
spectral verifier relies on, and keeping every harmonic strictly below the
per-period Nyquist frequency keeps its spectrum confined to the harmonic comb.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError

__all__ = ["SyntheticPeriodicSignal", "SynthResult", "synth_generate"]


@dataclass(frozen=True)
class SyntheticPeriodicSignal:
    """Spec for one channel: series length is period * repeats."""

    period: int
    repeats: int
    harmonic_coeffs: tuple = (1.0,)
    residual_sigma: float = 0.1
    seed: int = 0

    def __post_init__(self):
        if self.period < 3:
            raise ContractError(f"period must be >= 3, got {self.period}")
        if self.repeats < 2:
            raise ContractError(f"repeats must be >= 2, got {self.repeats}")
        coeffs = tuple(float(c) for c in self.harmonic_coeffs)
        object.__setattr__(self, "harmonic_coeffs", coeffs)
        if not coeffs or not any(c != 0.0 for c in coeffs):
            raise ContractError("harmonic_coeffs needs at least one nonzero entry")
        # highest harmonic j has frequency j/period; keep j < period/2 so the
        # periodic part stays strictly below the per-period Nyquist bin
        if len(coeffs) > (self.period - 1) // 2:
            raise ContractError(
                f"{len(coeffs)} harmonics exceed the (period-1)//2 = "
                f"{(self.period - 1) // 2} limit for period {self.period}"
            )
        if self.residual_sigma < 0:
            raise ContractError("residual_sigma must be >= 0")

    @property
    def length(self):
        return self.period * self.repeats


@dataclass
class SynthResult:
    series: np.ndarray
    periodic: np.ndarray
    residual: np.ndarray
    energy_ratio: float  # periodic energy over residual energy
    spec: SyntheticPeriodicSignal = field(repr=False, default=None)


def synth_generate(spec):
    """Generate (series, periodic part, residual part, realized energy ratio).

    The realized ratio is computed from the actual samples, not the nominal
    sigma, so chi-square fluctuation of the noise energy is reflected in it.
    A sigma of zero is floored at 1e-12 to keep the ratio finite.
    """
    rng = np.random.default_rng(spec.seed)
    tau = spec.period
    t = np.arange(tau, dtype=np.float64)
    one_period = np.zeros(tau)
    for j, c in enumerate(spec.harmonic_coeffs, start=1):
        phase = rng.uniform(0.0, 2.0 * np.pi)
        if c != 0.0:
            one_period += c * np.cos(2.0 * np.pi * j * t / tau + phase)
    periodic = np.tile(one_period, spec.repeats)
    sigma = max(spec.residual_sigma, 1e-12)
    residual = rng.normal(0.0, sigma, spec.length)
    e_periodic = float(np.sum(periodic * periodic))
    e_residual = float(np.sum(residual * residual))
    ratio = e_periodic / e_residual
    return SynthResult(periodic + residual, periodic, residual, ratio, spec)
