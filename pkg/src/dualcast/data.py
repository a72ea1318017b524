"""Dataset loading, chronological splitting, scaling, and windowing.

CSV loading is intentionally strict: every numeric cell must parse to a
finite float, and the error for a bad cell names its 1-based row and column.
The only tolerated non-numeric content is an optional header row and an
optional leading date/ID column, both auto-detected.
"""

from __future__ import annotations

import csv
import datetime
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .errors import ContractError, DataError, ParseError
from .synthetic import SyntheticPeriodicSignal, SynthResult, synth_generate

__all__ = [
    "Dataset",
    "WindowSpec",
    "SplitResult",
    "load_csv",
    "split",
    "NormStats",
    "normalize_stats",
    "apply_stats",
    "invert_stats",
    "windows",
    "window_count",
    "SyntheticPeriodicSignal",
    "SynthResult",
    "synth_generate",
    "synth_dataset",
    "hourly_standin",
]


@dataclass
class Dataset:
    name: str
    values: np.ndarray  # (rows, channels) float64, all finite
    channel_names: list
    timestamps: list = None

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.ndim != 2:
            raise ContractError(f"values must be 2-d, got shape {self.values.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ContractError("dataset values must be finite")
        if len(self.channel_names) != self.values.shape[1]:
            raise ContractError(
                f"{len(self.channel_names)} channel names for "
                f"{self.values.shape[1]} channels"
            )

    @property
    def rows(self):
        return self.values.shape[0]

    @property
    def channels(self):
        return self.values.shape[1]


@dataclass(frozen=True)
class WindowSpec:
    lookback: int
    horizon: int

    def __post_init__(self):
        if self.lookback < 1 or self.horizon < 1:
            raise ContractError(
                f"lookback and horizon must be positive, got "
                f"({self.lookback}, {self.horizon})"
            )

    @property
    def span(self):
        return self.lookback + self.horizon


@dataclass
class SplitResult:
    train: np.ndarray
    val: np.ndarray
    test: np.ndarray
    boundaries: tuple
    warnings: list = field(default_factory=list)

    def segments(self):
        return {"train": self.train, "val": self.val, "test": self.test}


def _parse_cell(text, row, col):
    try:
        value = float(text)
    except ValueError:
        raise ParseError(
            f"row {row}, column {col}: {text!r} is not a number", row=row, column=col
        ) from None
    if not math.isfinite(value):
        raise ParseError(
            f"row {row}, column {col}: non-finite value {text!r}", row=row, column=col
        )
    return value


def _is_float(text):
    try:
        return math.isfinite(float(text))
    except ValueError:
        return False


def load_csv(path, name=None):
    """Load a CSV of numeric channels into a Dataset.

    Auto-detection: a first row with any non-numeric cell is a header; a
    first column whose first data cell is non-numeric is a date/ID column and
    is kept as timestamps, not data. Everything else must be finite numbers;
    offending cells raise ParseError with 1-based row/column. Rows must all
    have the same width.
    """
    try:
        with open(path, newline="") as handle:
            rows = [row for row in csv.reader(handle)]
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from None
    if not rows:
        raise DataError(f"{path}: file is empty")
    width = len(rows[0])
    if width == 0:
        raise DataError(f"{path}: first row has no cells")
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(
                f"row {i + 1}: has {len(row)} cells, expected {width}", row=i + 1
            )
    has_header = not all(_is_float(cell) for cell in rows[0])
    data_rows = rows[1:] if has_header else rows
    first_data_row = 2 if has_header else 1
    if not data_rows:
        raise DataError(f"{path}: header only, no data rows")
    date_col = not _is_float(data_rows[0][0])
    start_col = 1 if date_col else 0
    if start_col >= width:
        raise DataError(f"{path}: no numeric columns")
    values = np.empty((len(data_rows), width - start_col))
    for i, row in enumerate(data_rows):
        for j in range(start_col, width):
            values[i, j - start_col] = _parse_cell(row[j], first_data_row + i, j + 1)
    if has_header:
        channel_names = [rows[0][j] for j in range(start_col, width)]
    else:
        channel_names = [f"ch{j}" for j in range(width - start_col)]
    timestamps = [row[0] for row in data_rows] if date_col else None
    return Dataset(
        name=name or str(path),
        values=values,
        channel_names=channel_names,
        timestamps=timestamps,
    )


def split(dataset, ratios, window_spec=None):
    """Chronological train/val/test split at floor boundaries.

    `ratios` is a (train, val, test) triple summing to 1. Boundaries are
    floor(ratio * rows) with a 1e-9 nudge so ratio triples that are exact in
    decimal (0.7 + 0.1) don't lose a row to binary float error. When
    `window_spec` is given, segments too short to yield a single window are
    flagged in the result's warnings list.
    """
    ratios = tuple(float(r) for r in ratios)
    if len(ratios) != 3 or any(r < 0 for r in ratios) or abs(sum(ratios) - 1.0) > 1e-9:
        raise ContractError(f"ratios must be 3 non-negatives summing to 1, got {ratios}")
    n = dataset.rows
    b1 = math.floor(ratios[0] * n + 1e-9)
    b2 = math.floor((ratios[0] + ratios[1]) * n + 1e-9)
    segments = {
        "train": dataset.values[:b1],
        "val": dataset.values[b1:b2],
        "test": dataset.values[b2:],
    }
    notes = []
    if window_spec is not None:
        for label, seg in segments.items():
            if len(seg) < window_spec.span:
                notes.append(
                    f"{label} segment has {len(seg)} rows, shorter than "
                    f"lookback+horizon = {window_spec.span}; it yields no windows"
                )
    return SplitResult(
        train=segments["train"],
        val=segments["val"],
        test=segments["test"],
        boundaries=(b1, b2),
        warnings=notes,
    )


@dataclass
class NormStats:
    mean: np.ndarray
    std: np.ndarray


def normalize_stats(values):
    """Per-channel mean and population std (floored at 1e-8) of `values`.

    Fit on the training segment only; apply everywhere.
    """
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 2 or len(values) == 0:
        raise ContractError(f"need a non-empty (rows, channels) array, got {values.shape}")
    return NormStats(values.mean(axis=0), np.maximum(values.std(axis=0), 1e-8))


def apply_stats(values, stats):
    return (np.asarray(values, dtype=np.float64) - stats.mean) / stats.std


def invert_stats(values, stats):
    return np.asarray(values, dtype=np.float64) * stats.std + stats.mean


def window_count(segment_rows, spec):
    return max(0, segment_rows - spec.span + 1)


def windows(segment, spec):
    """Yield (x, y) pairs sliding by 1; x is (lookback, C), y is (horizon, C).

    Windows never straddle segment boundaries because they are cut from one
    segment. A segment too short for a single window yields nothing and
    raises a UserWarning.
    """
    segment = np.asarray(segment, dtype=np.float64)
    count = window_count(len(segment), spec)
    if count == 0:
        warnings.warn(
            f"segment of {len(segment)} rows yields no windows for "
            f"lookback+horizon = {spec.span}",
            stacklevel=2,
        )
        return
    for i in range(count):
        yield segment[i : i + spec.lookback], segment[
            i + spec.lookback : i + spec.span
        ]


def synth_dataset(spec, channels=1, name="synthetic"):
    """Multi-channel synthetic Dataset; channel c uses seed spec.seed + c."""
    import dataclasses

    if channels < 1:
        raise ContractError(f"channels must be >= 1, got {channels}")
    cols = []
    for c in range(channels):
        made = synth_generate(dataclasses.replace(spec, seed=spec.seed + c))
        cols.append(made.series)
    return Dataset(
        name=name,
        values=np.stack(cols, axis=1),
        channel_names=[f"ch{c}" for c in range(channels)],
    )


def hourly_standin(rows, channels=7, seed=0, name="hourly-standin"):
    """Benchmark-shaped stand-in: hourly series with daily and weekly cycles.

    Produces the same file layout as the public hourly load benchmarks (a
    date column plus numeric channels) for tests and demos that need one
    without shipping the real data: per channel, a daily (24) and weekly
    (168) sinusoid mixture plus a slow trend and AR(1) noise, with
    channel-specific scales and offsets.
    """
    rng = np.random.default_rng(seed)
    t = np.arange(rows, dtype=np.float64)
    values = np.empty((rows, channels))
    for c in range(channels):
        daily_amp = rng.uniform(0.8, 1.6)
        weekly_amp = rng.uniform(0.2, 0.6)
        phase_d = rng.uniform(0, 2 * np.pi)
        phase_w = rng.uniform(0, 2 * np.pi)
        trend = rng.uniform(-0.3, 0.3) * t / max(rows, 1)
        noise = np.empty(rows)
        prev = 0.0
        eps = rng.normal(0.0, 0.25, rows)
        for i in range(rows):
            prev = 0.7 * prev + eps[i]
            noise[i] = prev
        scale = rng.uniform(0.5, 8.0)
        offset = rng.uniform(-5.0, 15.0)
        values[:, c] = offset + scale * (
            daily_amp * np.sin(2 * np.pi * t / 24.0 + phase_d)
            + weekly_amp * np.sin(2 * np.pi * t / 168.0 + phase_w)
            + trend
            + 0.35 * noise
        )
    start = datetime.datetime(2016, 7, 1)
    timestamps = [
        (start + datetime.timedelta(hours=int(h))).strftime("%Y-%m-%d %H:%M:%S")
        for h in range(rows)
    ]
    return Dataset(
        name=name,
        values=values,
        channel_names=[f"sensor_{c + 1}" for c in range(channels - 1)] + ["target"],
        timestamps=timestamps,
    )
