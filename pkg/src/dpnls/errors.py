"""Exception hierarchy shared by every module.

The CLI maps these onto exit codes: domain errors exit 2, numerical
failures exit 3 and internal-consistency failures exit 4.
"""


class DpnlsError(Exception):
    """Base class for all library errors."""


class DomainError(DpnlsError, ValueError):
    """An argument lies outside the region where an operation is defined."""


class PoleError(DomainError):
    """Gamma-type function evaluated at a non-positive integer."""


class NumericalError(DpnlsError, RuntimeError):
    """A numerical procedure failed to deliver its accuracy contract."""


class QuadratureError(NumericalError):
    """Adaptive quadrature did not converge."""


class DivergenceError(NumericalError):
    """A series or integral that was required to converge diverges."""


class SeriesError(NumericalError):
    """Series summation hit its term cap before reaching the tolerance."""


class RootFindingError(NumericalError):
    """Bracketing failed or no sign change was found."""


class ConsistencyError(DpnlsError, AssertionError):
    """Two independent computations of the same quantity disagree."""
