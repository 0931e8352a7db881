"""Exception hierarchy shared by all modules."""


class ScottShiftError(Exception):
    """Base class for every error raised by this package."""


class DomainError(ScottShiftError, ValueError):
    """Argument outside the mathematical domain of a function."""


class SupercriticalError(DomainError):
    """Coupling exceeds the critical value of the requested operator."""

    def __init__(self, message, critical=None):
        super().__init__(message)
        self.critical = critical


class QuadratureError(ScottShiftError):
    """Adaptive quadrature failed to reach the requested tolerance."""

    def __init__(self, message, error_estimate=None):
        super().__init__(message)
        self.error_estimate = error_estimate


class GridResolutionError(ScottShiftError):
    """The momentum grid does not resolve the requested bound states."""


class TailFitError(GridResolutionError):
    """Level-tail power-law fit is not summable (exponent <= 1)."""


class ConvergenceError(ScottShiftError):
    """Iterative solver hit its iteration cap or failed to bracket."""
