"""Exception hierarchy.

Input problems (malformed files, inadmissible metrics, coarse grids) derive
from :class:`InputError`; numerical failures (solver, Newton, candidate
searches, clustered eigenvalues where a simple one is required) derive from
:class:`NumericalError`.  The CLI maps the two families to exit codes 2 and 3.
"""


class HodgeLabError(Exception):
    """Base class for all package errors."""


class InputError(HodgeLabError, ValueError):
    """Malformed or inconsistent input."""


class AliasError(InputError):
    """Sample grid too coarse for the truncation being evaluated."""


class AdmissibilityError(InputError):
    """Metric is not positive definite (with margin) at some grid node."""


class PreconditionError(HodgeLabError, ValueError):
    """An operation was called outside its documented domain."""


class DegenerateTransportError(PreconditionError):
    """Transport tensor requested where the carrying 1-form nearly vanishes."""


class NumericalError(HodgeLabError, RuntimeError):
    """A numerical procedure failed."""


class ConditioningError(NumericalError):
    """Gram system of the closed basis is too ill-conditioned to solve."""


class ClusteredEigenvalueError(NumericalError):
    """A simple eigenvalue was required but the requested one is clustered."""


class SearchFailure(NumericalError):
    """A constructive perturbation search exhausted its candidates."""
