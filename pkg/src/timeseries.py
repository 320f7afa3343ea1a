"""
Equally spaced observation series, the only data representation the estimator accepts
"""

import logging
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import DataError

logger = logging.getLogger(__name__)

SPACING_TOLERANCE = 1e-8


@dataclass(frozen=True, eq=False)
class TimeSeries:
    """
    Observations Y at times t0, t0 + h, ..., t0 + N h

    Raises:
        DataError: If h is not positive or values are not finite
    """

    t0: float
    h: float
    values: np.ndarray

    def __post_init__(self) -> None:
        if not (np.isfinite(self.h) and self.h > 0):
            raise DataError("sampling step h must be positive", h=float(self.h))
        if not np.isfinite(self.t0):
            raise DataError("t0 must be finite")
        values = np.array(self.values, dtype=float).ravel()
        if values.size == 0:
            raise DataError("time series is empty")
        if not np.all(np.isfinite(values)):
            raise DataError("time series has non-finite values")
        values.setflags(write=False)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "values", values)

    def __len__(self) -> int:
        return self.values.size

    def times(self) -> np.ndarray:
        return self.t0 + self.h * np.arange(self.values.size)

    def shifted(self, c: float) -> "TimeSeries":
        """Copy with c added to every observation"""
        return TimeSeries(self.t0, self.h, self.values + c)

    @classmethod
    def from_times(cls, times: Sequence[float], values: Sequence[float]) -> "TimeSeries":
        """
        Build from explicit time stamps, checking equal spacing

        The step is snapped to 12 significant digits so that a grid written at
        full precision and read back reproduces the original step exactly.

        Raises:
            DataError: If stamps are too few, unsorted or irregular
        """
        t = np.asarray(times, dtype=float).ravel()
        y = np.asarray(values, dtype=float).ravel()
        if t.size != y.size:
            raise DataError("times and values differ in length", times=int(t.size), values=int(y.size))
        if t.size < 2:
            raise DataError("at least two observations are needed")
        if not np.all(np.isfinite(t)):
            raise DataError("time stamps must be finite")
        steps = np.diff(t)
        h = float(f"{(t[-1] - t[0]) / (t.size - 1):.12g}")
        if h <= 0:
            raise DataError("time stamps must be increasing")
        jitter = float(np.max(np.abs(steps - h))) / h
        if jitter > SPACING_TOLERANCE:
            raise DataError("observations are not equally spaced", max_relative_jitter=jitter)
        return cls(t0=float(t[0]), h=h, values=y)


__all__ = ['TimeSeries']
