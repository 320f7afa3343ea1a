"""
Exception hierarchy for CARMA simulation and estimation
Every error raised by the library derives from CarmaLevyError and can be
rendered as a machine-readable dictionary for the command-line tool
"""

from typing import Any, Dict, List, Optional


class CarmaLevyError(Exception):
    """Base exception for all library errors"""

    def __init__(self, message: str, **details: Any) -> None:
        super().__init__(message)
        self.message = message
        self.details: Dict[str, Any] = details

    def to_dict(self) -> Dict[str, Any]:
        """Render the error as a JSON-friendly dictionary"""
        return {
            "error": type(self).__name__,
            "message": self.message,
            "details": self.details,
        }


class DimensionError(CarmaLevyError):
    """Raised when a matrix or vector has the wrong shape"""
    pass


class DomainError(CarmaLevyError):
    """Raised when numeric input is non-finite or outside its domain"""
    pass


class NonStationaryError(CarmaLevyError):
    """Raised when an operation needs eigenvalues with negative real part"""
    pass


class RepeatedEigenvalueError(CarmaLevyError):
    """Raised when the canonical decomposition meets coincident eigenvalues"""
    pass


class SpecError(CarmaLevyError):
    """Raised when a CARMA specification violates its invariants"""
    pass


class ParamError(CarmaLevyError):
    """Raised when Levy model parameters or sampling arguments are invalid"""
    pass


class NumericalError(CarmaLevyError):
    """Raised when a computation loses finiteness or fails to converge"""

    def __init__(self, message: str, step: Optional[int] = None, **details: Any) -> None:
        if step is not None:
            details["step"] = step
        super().__init__(message, **details)
        self.step = step


class UnsupportedError(CarmaLevyError):
    """Raised when a method is requested for a model it does not cover"""
    pass


class DataError(CarmaLevyError):
    """Raised when observations or increments are malformed or too short"""
    pass


class RecoveryError(CarmaLevyError):
    """Raised when driving increments cannot be recovered for a model"""
    pass


class FitError(CarmaLevyError):
    """Raised when an optimizer does not converge; carries the incumbent"""

    def __init__(
        self,
        message: str,
        best_params: Optional[Dict[str, float]] = None,
        trace: Optional[List[float]] = None,
        **details: Any,
    ) -> None:
        super().__init__(message, best_params=best_params or {}, trace=trace or [], **details)
        self.best_params = best_params or {}
        self.trace = trace or []


# Errors that describe bad user input rather than a model failure
INPUT_ERRORS = (SpecError, ParamError, DataError, DimensionError, DomainError)


__all__ = [
    'CarmaLevyError',
    'DimensionError',
    'DomainError',
    'NonStationaryError',
    'RepeatedEigenvalueError',
    'SpecError',
    'ParamError',
    'NumericalError',
    'UnsupportedError',
    'DataError',
    'RecoveryError',
    'FitError',
    'INPUT_ERRORS',
]
