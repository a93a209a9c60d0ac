"""Exception hierarchy.

Two branches matter for the CLI exit codes: :class:`UsageError` (and
subclasses) map to exit code 2, every other :class:`CoactError` maps to
exit code 1.  A *verdict* (a condition that fails, a test that is not
significant) is never an error.
"""


class CoactError(Exception):
    """Base class for analysis failures (exit code 1 in the CLI)."""

    exit_code = 1


class UsageError(CoactError):
    """Caller mistake: bad arguments, malformed roles, unknown names."""

    exit_code = 2


class DomainError(UsageError):
    """A value, level, or variable that does not exist in the declared domain."""


class InputFormatError(UsageError):
    """An input file that does not match its documented schema."""


class DegenerateDichotomizationError(CoactError):
    """A dichotomization block (or its complement) is empty on the data."""


class EstimationError(CoactError):
    """Nonparametric estimation cannot proceed (e.g. an empty cell)."""


class FitError(CoactError):
    """Model fitting failed (non-convergence, infeasible constraints)."""


class BootstrapError(CoactError):
    """Too many bootstrap resamples failed to produce a statistic."""
