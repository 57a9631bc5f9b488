"""Exception hierarchy shared across the package."""

from __future__ import annotations


class SaariLabError(Exception):
    """Base class for all package-specific errors."""


class CombinabilityError(SaariLabError):
    """Two jets disagree in dimension, degree, or base point."""


class DegreeDeficitError(SaariLabError):
    """A jet does not carry enough Taylor orders for the requested operation."""


class EvaluationDomainError(SaariLabError):
    """A sampled function returned non-finite values."""


class SingularityError(SaariLabError):
    """A pairwise separation fell below the collision tolerance.

    Carries the offending body pair when known.
    """

    def __init__(self, message: str, pair: tuple[int, int] | None = None):
        super().__init__(message)
        self.pair = pair


class NoConvergenceError(SaariLabError):
    """An iterative solver ran out of iterations.

    ``residual`` holds the final residual norm for diagnostics.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class InsufficientSamplesError(SaariLabError):
    """A trajectory does not surround the probe time with enough samples."""


class InternalConsistencyError(SaariLabError):
    """Two independent computations of the same quantity disagree."""


class ConfigError(SaariLabError):
    """An experiment configuration is malformed or incomplete."""
