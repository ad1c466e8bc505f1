"""Exception types raised by the solvers."""


class BicError(Exception):
    """Base class for all package errors."""


class DomainError(BicError, ValueError):
    """Argument outside the domain of a function (e.g. below threshold)."""


class ContinuationError(BicError, ValueError):
    """The integration contour of a cut integral would cross a pole."""


class AccuracyError(BicError, ArithmeticError):
    """Quadrature failed to reach the requested tolerance.

    Attributes
    ----------
    achieved : float
        Difference between the last two refinement levels.
    """

    def __init__(self, message: str, achieved: float):
        super().__init__(f"{message} (achieved {achieved:.3e})")
        self.achieved = achieved


class DecompositionError(BicError, ValueError):
    """Parity conjugation did not produce a block-diagonal matrix."""


class ConvergenceError(BicError, ArithmeticError):
    """An iterative solver did not converge; ``trajectory`` holds its iterates."""

    def __init__(self, message: str, trajectory=None):
        super().__init__(message)
        self.trajectory = list(trajectory or [])
