"""Dual-branch long-horizon forecaster with hierarchical frequency sampling.

The model couples two attention branches per encoder layer: one over the
time-domain series, one over autocorrelation-selected lags computed in the
frequency domain, each restricted to a per-layer frequency band. A
data-driven periodicity weight blends the branches. Everything runs on an
in-package float64 autodiff engine so every gradient can be audited against
finite differences.
"""

from .errors import (
    ConfigError,
    ContractError,
    DataError,
    DegenerateSignalError,
    DualcastError,
    NoDominantFrequency,
    NumericError,
    ParseError,
    ShapeError,
    TrainingError,
    VerificationError,
)
from .tensor import (
    GradCheckResult,
    Tensor,
    finite_diff_check,
    gelu,
    layer_norm,
    softmax,
)
from .synthetic import SyntheticPeriodicSignal, SynthResult, synth_generate
from .spectral import (
    Band,
    PeriodicityWeight,
    SamplingPlan,
    Spectrum,
    TheoremReport,
    harmonic_energy_ratio,
    irfft,
    make_plan,
    peak_detect,
    rfft,
    theorem_lower_bound,
    verify_theorem,
)
from .attention import BranchProjections, freq_branch, time_branch
from .model import (
    ABLATION_MODES,
    DualBranchForecaster,
    ModelConfig,
    ablation_variant,
    count_parameters,
    forward,
    fusion_weights,
    init_model,
    load_checkpoint,
    parameter_checksum,
    save_checkpoint,
    trace_forward,
)
from .data import (
    Dataset,
    NormStats,
    WindowSpec,
    apply_stats,
    hourly_standin,
    invert_stats,
    load_csv,
    normalize_stats,
    split,
    synth_dataset,
    windows,
)
from .pipeline import (
    MetricsReport,
    TrainConfig,
    TrainResult,
    evaluate,
    gradcheck_model,
    mae,
    mse,
    naive_baseline,
    rmse,
    train,
    wape,
)

__version__ = "0.1.0"

__all__ = [
    "DualcastError",
    "ConfigError",
    "ContractError",
    "ShapeError",
    "NumericError",
    "DataError",
    "ParseError",
    "TrainingError",
    "NoDominantFrequency",
    "DegenerateSignalError",
    "VerificationError",
    "Tensor",
    "GradCheckResult",
    "finite_diff_check",
    "softmax",
    "gelu",
    "layer_norm",
    "SyntheticPeriodicSignal",
    "SynthResult",
    "synth_generate",
    "Spectrum",
    "Band",
    "SamplingPlan",
    "PeriodicityWeight",
    "TheoremReport",
    "rfft",
    "irfft",
    "make_plan",
    "peak_detect",
    "harmonic_energy_ratio",
    "theorem_lower_bound",
    "verify_theorem",
    "BranchProjections",
    "time_branch",
    "freq_branch",
    "ModelConfig",
    "DualBranchForecaster",
    "ABLATION_MODES",
    "init_model",
    "forward",
    "trace_forward",
    "fusion_weights",
    "ablation_variant",
    "count_parameters",
    "parameter_checksum",
    "save_checkpoint",
    "load_checkpoint",
    "Dataset",
    "WindowSpec",
    "NormStats",
    "load_csv",
    "split",
    "normalize_stats",
    "apply_stats",
    "invert_stats",
    "windows",
    "synth_dataset",
    "hourly_standin",
    "MetricsReport",
    "TrainConfig",
    "TrainResult",
    "train",
    "evaluate",
    "naive_baseline",
    "gradcheck_model",
    "mse",
    "mae",
    "rmse",
    "wape",
    "__version__",
]
