"""
Non-parametric recovery of the driving Levy increments from observations
and aggregation of increments to coarser time steps
"""

import logging
import math

import numpy as np

from .carma_model import CarmaSpec, canonical_states, is_stationary, spectral
from .errors import DataError, NonStationaryError, NumericalError, ParamError, RecoveryError
from .levy import IncrementSeries
from .linalg import companion_eigvals, companion_matrix, mat_exp
from .timeseries import TimeSeries

logger = logging.getLogger(__name__)

IMAGINARY_RESIDUE_TOL = 1e-6
BURN_IN_TIME_CONSTANTS = 5.0


class Stencils:
    """Finite-difference schemes for the higher state components"""
    FORWARD = "forward"   # inverts the Euler recursion exactly, loses one point per level
    CENTRAL = "central"   # one-sided at the ends, keeps every point


def _integrate_ma_state(ma: np.ndarray, y: np.ndarray, h: float) -> np.ndarray:
    """
    Solve dXq = B Xq dt + e_q Y/b_q from Xq(0) = 0

    Exponential stepping over each interval with trapezoidal forcing.
    Columns are X_0, ..., X_{q-1}.
    """
    q = ma.size - 1
    B = companion_matrix(ma[:q][::-1] / ma[q])
    E = mat_exp(B, h)
    e_q = np.zeros(q)
    e_q[-1] = 0.5 * h / ma[q]
    carried = E @ e_q

    states = np.zeros((y.size, q))
    for n in range(y.size - 1):
        states[n + 1] = E @ states[n] + carried * y[n] + e_q * y[n + 1]
    return states


def _reconstruct_states(spec: CarmaSpec, y: np.ndarray, h: float, stencil: str) -> np.ndarray:
    """State trajectory X (rows are times) from the mean-corrected observations"""
    p, q = spec.p, spec.q
    ma = spec.ma_coefficients

    if q >= 1:
        lower = _integrate_ma_state(ma, y, h)
        top = (y - lower @ ma[:q]) / ma[q]
        columns = [lower[:, j] for j in range(q)] + [top]
    else:
        columns = [y / ma[0]]

    while len(columns) < p:
        last = columns[-1]
        if stencil == Stencils.FORWARD:
            columns.append(np.diff(last) / h)
        else:
            columns.append(np.gradient(last, h))

    length = min(col.size for col in columns)
    return np.column_stack([col[:length] for col in columns])


def _burn_in(spec: CarmaSpec, h: float, count: int) -> int:
    if spec.q == 0:
        return 0
    ma = spec.ma_coefficients
    roots = companion_eigvals(ma[:spec.q][::-1] / ma[spec.q])
    slowest = float(np.max(roots.real))
    if slowest >= 0.0:
        logger.warning("MA polynomial has roots with non-negative real part; "
                       "recovered increments do not forget the initial condition")
        return 0
    return min(count, math.ceil(BURN_IN_TIME_CONSTANTS / (abs(slowest) * h)))


def recover_increments(spec: CarmaSpec, data: TimeSeries, stencil: str = Stencils.FORWARD) -> IncrementSeries:
    """
    Recover the driver increments from observations under a fitted specification

    Steps: mean-correct the data; integrate the MA state X_0..X_{q-1} and
    read X_q off the observation equation (X_0 = Y/b_0 when q = 0);
    difference the last component for the remaining ones; map to the
    canonical vector; invert the CAR(1) equation of the component with the
    largest real eigenvalue using a trapezoidal integral. The effective MA
    vector is sigma * b, so increments are in driver units.

    With the forward stencil N_values - (p - q) increments are returned, with
    the central stencil N_values - 1. The first ceil(5 / (|Re mu| h))
    increments, mu the slowest MA root, are flagged as burn-in.

    Raises:
        NonStationaryError: If the specification is not stationary
        RepeatedEigenvalueError: If eigenvalues are not distinct
        RecoveryError: If no eigenvalue is real or its weight vanishes
        NumericalError: If the recovered increments keep an imaginary residue
    """
    if stencil not in (Stencils.FORWARD, Stencils.CENTRAL):
        raise ParamError(f"unknown finite-difference stencil: {stencil}", stencil=stencil)
    if not is_stationary(spec).stationary:
        raise NonStationaryError("increment recovery needs a stationary specification")

    effective = spec.replace(b=spec.sigma * spec.b, sigma=1.0, c0=0.0, noise=None)
    decomposition = spectral(effective)
    h = data.h
    y = data.values - np.mean(data.values)
    if y.size < spec.p + 1:
        raise DataError("too few observations for increment recovery", n=int(y.size), p=spec.p)

    lambdas = decomposition.lambdas
    real = np.abs(lambdas.imag) <= 1e-8 * np.maximum(1.0, np.abs(lambdas))
    if not np.any(real):
        raise RecoveryError("no real eigenvalue; the canonical CAR(1) inversion is not applicable",
                            lambdas=[str(v) for v in lambdas])
    candidates = np.flatnonzero(real)
    r = int(candidates[np.argmax(lambdas[candidates].real)])
    lam = float(lambdas[r].real)
    alpha = complex(decomposition.alphas[r])
    if abs(alpha) == 0.0:
        raise RecoveryError("MA polynomial vanishes at the selected eigenvalue", eigenvalue=lam)

    states = _reconstruct_states(effective, y, h, stencil)
    component = canonical_states(effective, states, decomposition)[:, r]
    raw = (component[1:] - component[:-1] - lam * 0.5 * h * (component[1:] + component[:-1])) / alpha

    residue = float(np.max(np.abs(raw.imag))) if raw.size else 0.0
    if residue > IMAGINARY_RESIDUE_TOL * max(1.0, float(np.max(np.abs(raw.real)))):
        raise NumericalError("recovered increments have a non-negligible imaginary part", residue=residue)

    values = raw.real
    burn_in = _burn_in(effective, h, values.size)
    logger.info("Recovered %d increments (lambda=%g, alpha=%g, burn-in %d)",
                values.size, lam, alpha.real, burn_in)
    return IncrementSeries(h=h, values=values, t0=data.t0, burn_in=burn_in)


def aggregate(increments: IncrementSeries, target_dt: float) -> IncrementSeries:
    """
    Sum consecutive blocks of k = target_dt / h increments

    Returns floor(N / k) increments; a trailing partial block is dropped.

    Raises:
        DataError: If target_dt is not an integer multiple of h or too long
    """
    h = increments.h
    ratio = target_dt / h
    k = int(round(ratio))
    if k < 1 or abs(ratio - k) > 1e-9 * ratio:
        raise DataError("aggregation step must be an integer multiple of h", h=h, target_dt=float(target_dt))
    if k == 1:
        return increments
    blocks = len(increments) // k
    if blocks < 1:
        raise DataError("not enough increments for one aggregated step", n=len(increments), k=k)
    values = increments.values[:blocks * k].reshape(blocks, k).sum(axis=1)
    return IncrementSeries(
        h=float(target_dt),
        values=values,
        t0=increments.t0,
        burn_in=min(blocks, math.ceil(increments.burn_in / k)),
    )


__all__ = [
    'Stencils',
    'recover_increments',
    'aggregate',
]
