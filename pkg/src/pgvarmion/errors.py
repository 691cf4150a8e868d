"""Exception taxonomy shared across the package.

Every error raised on purpose derives from PgvError so callers (and the
command line driver) can map failures to stable exit codes.
"""


class PgvError(Exception):
    """Base class for all package errors."""


class InvalidArgumentError(PgvError, ValueError):
    """An argument or configuration value is out of contract."""


class DegenerateBasisError(PgvError):
    """Trial basis components are numerically dependent, or a mass matrix
    is not symmetric positive definite."""


class UnsupportedForcingError(PgvError):
    """Forcing family tag not recognized by a solver or sampler."""


class CovarianceError(PgvError):
    """Covariance matrix not positive definite even after jitter escalation."""


class ZeroNormError(PgvError):
    """Relative error requested against a reference field with zero norm."""


class NumericError(PgvError):
    """Numerical failure at run time (NaN/Inf in training, solver breakdown)."""


class DataFormatError(PgvError):
    """A dataset or checkpoint file is missing, truncated, or corrupt."""
