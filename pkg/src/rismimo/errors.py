"""Exception types shared across the package."""


class RisError(Exception):
    """Base class for all errors raised by rismimo."""


class DomainError(RisError, ValueError):
    """An argument lies outside the domain where an operation is defined."""


class ShapeError(RisError, ValueError):
    """Array dimensions do not match."""


class LengthError(RisError, ValueError):
    """A bit or sample sequence has the wrong length."""


class NumericalError(RisError, ArithmeticError):
    """Base class for failures of a numerical procedure."""


class SingularChannelError(NumericalError):
    """A channel matrix is (numerically) singular."""


class UndefinedRatioError(NumericalError):
    """A ratio is requested whose denominator is exactly zero."""


class ConvergenceError(NumericalError):
    """An iterative solver did not converge."""


class UnreachableTargetError(NumericalError):
    """A requested harmonic amplitude exceeds what the hardware can produce."""
