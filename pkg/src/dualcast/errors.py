"""Error taxonomy shared across the package.

Every failure mode named by a module contract maps to one of these classes so
callers (and the command line front end) can translate them into exit codes
without string matching.
"""


class DualcastError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(DualcastError, ValueError):
    """Invalid configuration value, unknown key, or inconsistent settings."""


class ContractError(DualcastError, ValueError):
    """A documented precondition was violated by the caller."""


class ShapeError(ContractError):
    """Operands have incompatible shapes; the message names both."""


class NumericError(DualcastError, ArithmeticError):
    """An operation produced a NaN or Inf; raised at the op that made it."""


class DataError(DualcastError, ValueError):
    """Dataset-level failure that is not a cell-level parse problem."""


class ParseError(DataError):
    """Malformed dataset file; carries the offending row and column."""

    def __init__(self, message, row=None, column=None):
        super().__init__(message)
        self.row = row
        self.column = column


class TrainingError(DualcastError, RuntimeError):
    """Training aborted; carries the optimizer step where it happened."""

    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class NoDominantFrequency(DualcastError, ValueError):
    """Peak detection found no usable non-DC component (flat spectrum)."""


class DegenerateSignalError(DualcastError, ValueError):
    """A signal with zero total energy where a ratio is required."""


class VerificationError(DualcastError, RuntimeError):
    """A verification command found violations (gradient check, bound check)."""
