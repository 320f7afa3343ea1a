"""
Kalman-filter quasi-likelihood for equally spaced observations of a CARMA process

The state recursion is X_n = e^{Ah} X_{n-1} + U_n with Cov(U_n) = Q and the
observation Y*_n = b'X_n, where Y* is the series minus its sample mean.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional

import numpy as np
from scipy import signal

from .carma_model import CarmaSpec, build_state_space, is_stationary, sampled_covariances
from .errors import DataError, NonStationaryError, NumericalError
from .linalg import mat_exp
from .timeseries import TimeSeries

logger = logging.getLogger(__name__)

MIN_INNOVATION_VAR = 1e-300
STEADY_STATE_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class KalmanState:
    """Prior and posterior moments of the state at one observation"""

    x_prior: np.ndarray
    P_prior: np.ndarray
    x_post: np.ndarray
    P_post: np.ndarray
    innovation: float
    innovation_var: float
    gain: np.ndarray


@dataclass(frozen=True, eq=False)
class FilterOutput:
    """
    Result of one filter pass

    Attributes:
        loglik: Gaussian quasi-log-likelihood
        innovations: One-step prediction errors u_n
        innovation_vars: Their variances b' Sigma_{n|n-1} b
        states: Per-step KalmanState trace when requested
        mean: Sample mean removed from the data
        steady_state_from: First index computed by the steady-state filter, if any
    """

    loglik: float
    innovations: np.ndarray
    innovation_vars: np.ndarray
    states: Optional[List[KalmanState]] = None
    mean: float = 0.0
    steady_state_from: Optional[int] = None

    @property
    def standardized_innovations(self) -> np.ndarray:
        return self.innovations / np.sqrt(self.innovation_vars)


def _symmetrize(M: np.ndarray) -> np.ndarray:
    return 0.5 * (M + M.T)


def _steady_state_tail(Phi: np.ndarray, b: np.ndarray, gain: np.ndarray,
                       inputs: np.ndarray, outputs: np.ndarray, tail: np.ndarray) -> np.ndarray:
    """
    Innovations of the fixed-gain filter as an ARMA recursion

    With s_n = (I - K b') Phi s_{n-1} + K y_n and u_n = y_n - b' Phi s_{n-1},
    u is y passed through 1 - c'(zI - M)^{-1} K. The recursion is started from
    the last p inputs and outputs of the exact filter.
    """
    p = b.size
    M = (np.eye(p) - np.outer(gain, b)) @ Phi
    c = b @ Phi
    num, den = signal.ss2tf(M, gain[:, None], -c[None, :], np.array([[1.0]]))
    num = num[0]
    zi = signal.lfiltic(num, den, outputs[::-1], inputs[::-1])
    values, _ = signal.lfilter(num, den, tail, zi=zi)
    return values


def filter_loglik(
    spec: CarmaSpec,
    data: TimeSeries,
    keep_states: bool = False,
    steady_state: bool = True,
) -> FilterOutput:
    """
    Quasi-log-likelihood of the observations under a CARMA specification

    Initialization X_{0|0} = 0, Sigma_{0|0} = Q_inf; prediction with e^{Ah}
    and Q; correction with gain K = Sigma b / (b' Sigma b). Covariances are
    symmetrized after each update. Once Sigma_{n|n-1} has converged the
    remaining innovations come from the steady-state filter unless
    steady_state is False or the state trace is kept.

    Args:
        spec: CARMA specification (c0 is irrelevant after mean correction)
        data: Equally spaced observations
        keep_states: Return the per-step KalmanState trace
        steady_state: Allow the steady-state shortcut

    Returns:
        FilterOutput with the log-likelihood and innovations

    Raises:
        DataError: If there are fewer than p + 2 observations
        NonStationaryError: If the specification is not stationary
        NumericalError: If an innovation variance is not positive
    """
    y = data.values
    N = y.size
    p = spec.p
    if N < p + 2:
        raise DataError("Kalman filter needs at least p + 2 observations", n=int(N), p=p)

    check = is_stationary(spec)
    if not check.stationary:
        raise NonStationaryError("CARMA specification is not stationary",
                                 max_real_part=float(np.max(check.lambdas.real)))

    ss = build_state_space(spec)
    b = ss.bvec
    Phi = mat_exp(ss.A, data.h)
    Qinf, Q = sampled_covariances(spec, data.h)

    mean = float(np.mean(y))
    ystar = y - mean

    innovations = np.empty(N)
    variances = np.empty(N)
    trace: Optional[List[KalmanState]] = [] if keep_states else None
    shortcut = steady_state and not keep_states

    x = np.zeros(p)
    P = Qinf.copy()
    previous_prior: Optional[np.ndarray] = None
    converged_at: Optional[int] = None
    switch_at: Optional[int] = None

    for n in range(N):
        x_prior = Phi @ x
        P_prior = _symmetrize(Phi @ P @ Phi.T + Q)
        Pb = P_prior @ b
        F = float(b @ Pb)
        if not F > MIN_INNOVATION_VAR:
            raise NumericalError("innovation variance is not positive", step=n, innovation_var=F)

        u = ystar[n] - float(b @ x_prior)
        K = Pb / F
        x = x_prior + K * u
        P = _symmetrize(P_prior - np.outer(K, Pb))

        innovations[n] = u
        variances[n] = F
        if trace is not None:
            trace.append(KalmanState(x_prior, P_prior, x.copy(), P.copy(), u, F, K))

        if shortcut and converged_at is None and previous_prior is not None:
            scale = float(np.max(np.abs(P_prior)))
            if np.max(np.abs(P_prior - previous_prior)) <= STEADY_STATE_TOL * scale:
                converged_at = n
        previous_prior = P_prior

        if converged_at is not None and n == converged_at + p and n + 1 < N:
            switch_at = n + 1
            tail = _steady_state_tail(
                Phi, b, K,
                inputs=ystar[n - p + 1:n + 1],
                outputs=innovations[n - p + 1:n + 1],
                tail=ystar[n + 1:],
            )
            innovations[n + 1:] = tail
            variances[n + 1:] = F
            break

    loglik = -0.5 * float(np.sum(np.log(2.0 * np.pi * variances))) - 0.5 * float(np.sum(innovations ** 2 / variances))
    if not np.isfinite(loglik):
        raise NumericalError("log-likelihood is not finite")

    if switch_at is not None:
        logger.debug("Kalman filter reached steady state at step %d of %d", switch_at, N)

    return FilterOutput(
        loglik=loglik,
        innovations=innovations,
        innovation_vars=variances,
        states=trace,
        mean=mean,
        steady_state_from=switch_at,
    )


__all__ = [
    'KalmanState',
    'FilterOutput',
    'filter_loglik',
]
