"""Bound states in the continuum for emitter arrays coupled to a 1D massive boson field."""

from .params import EmitterArrayParams, Sector, Sheet
from .errors import (AccuracyError, BicError, ContinuationError, ConvergenceError,
                     DecompositionError, DomainError)

__version__ = "0.1.0"

__all__ = [
    "EmitterArrayParams", "Sector", "Sheet",
    "AccuracyError", "BicError", "ContinuationError", "ConvergenceError",
    "DecompositionError", "DomainError", "__version__",
]
