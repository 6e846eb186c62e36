"""Exception types shared across the package.

Each maps to a distinct CLI exit code (see cli.py), so callers can tell a
bad config from an infeasible geometry from a stalled solve.
"""


class ManisacError(Exception):
    """Base class for all package-specific errors."""


class ConfigError(ManisacError):
    """Configuration file missing, unparsable, or schema-invalid."""


class InfeasibleLayoutError(ManisacError):
    """Requested antenna layout cannot satisfy the placement constraints."""


class NumericalConditioningError(ManisacError):
    """A linear solve hit an ill-conditioned matrix (condition > 1e12)."""


class StalledSolverError(ManisacError):
    """Ascent line search failed repeatedly; carries the last feasible iterate."""

    def __init__(self, message, last_iterate=None):
        super().__init__(message)
        self.last_iterate = last_iterate


class ComplexityGuardError(ManisacError):
    """An exhaustive search was requested above its size guard."""


class ResourceGuardError(ManisacError):
    """A grid or batch request exceeds the configured resource cap."""
