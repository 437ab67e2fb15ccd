"""Exception types shared across the package."""


class KofilterError(Exception):
    """Base class for all package-specific errors."""


class ZeroColumn(KofilterError):
    """A design column has (numerically) zero Euclidean norm."""

    def __init__(self, index):
        self.index = index
        super().__init__(f"column {index} has zero norm (< 1e-14)")


class ConvergenceFailure(KofilterError):
    """An iterative routine hit its iteration cap before meeting tolerance."""

    def __init__(self, message, residual=None):
        self.residual = residual
        super().__init__(message)


class NotPositiveSemiDefinite(KofilterError):
    """A matrix required to be PSD/PD failed the pivot test."""

    def __init__(self, pivot_index, pivot=None, message=None):
        self.pivot_index = pivot_index
        self.pivot = pivot
        if message is None:
            message = f"pivot {pivot_index} = {pivot} violates positive semidefiniteness"
        super().__init__(message)


class RankDeficient(KofilterError):
    """A matrix required to have full column rank is numerically rank deficient."""


class DimensionError(KofilterError):
    """Input dimensions violate a hard requirement (e.g. n < 2p for knockoffs)."""


class InfeasibleS(KofilterError):
    """The knockoff gap vector s violates diag(s) <= 2*Sigma."""


class InvalidEpsilon(KofilterError):
    """FRPP privacy-style parameter epsilon must be strictly positive."""


class InvalidGrid(KofilterError):
    """An epsilon grid is empty or contains negative values."""


class AssertionFailure(KofilterError):
    """A Monte-Carlo verifier found a violated property.

    ``details`` carries the offending indices / test statistics so CLI
    reports and negative-control tests can show what failed.
    """

    def __init__(self, message, details=None):
        self.details = details or {}
        super().__init__(message)
