"""
Derivative-free minimization and numerical-Hessian standard errors
Shared by the CARMA quasi-likelihood fit and the Levy noise fit
"""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import minimize

from .errors import FitError

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray], float]


@dataclass
class SimplexResult:
    """Outcome of a restarted Nelder-Mead search"""

    x: np.ndarray
    fun: float
    converged: bool
    nfev: int
    nit: int
    message: str
    trace: List[float] = field(default_factory=list)


class _TrackedObjective:
    """Wraps an objective, remembering the best point and the improving values"""

    def __init__(self, objective: Objective) -> None:
        self.objective = objective
        self.best_x: Optional[np.ndarray] = None
        self.best_f = np.inf
        self.trace: List[float] = []

    def __call__(self, theta: np.ndarray) -> float:
        value = float(self.objective(np.asarray(theta, dtype=float)))
        if not np.isfinite(value):
            return np.inf
        if value < self.best_f:
            self.best_f = value
            self.best_x = np.array(theta, dtype=float)
            self.trace.append(value)
        return value


def minimize_simplex(
    objective: Objective,
    x0: Sequence[float],
    bounds: Optional[Sequence[Tuple[Optional[float], Optional[float]]]] = None,
    maxiter: Optional[int] = None,
    ftol: float = 1e-10,
    xtol: float = 1e-8,
) -> SimplexResult:
    """
    Nelder-Mead search restarted once from the incumbent

    Args:
        objective: Function to minimize; may return inf at invalid points
        x0: Starting point
        bounds: Optional (low, high) pairs, None for an open side
        maxiter: Iteration budget per run, default 500 * dim
        ftol: Function tolerance relative to max(1, |f(x0)|)
        xtol: Absolute parameter tolerance

    Returns:
        SimplexResult; converged reflects the restarted run

    Raises:
        FitError: If the objective is not finite at the starting point
    """
    start = np.asarray(x0, dtype=float).ravel()
    dim = start.size
    tracked = _TrackedObjective(objective)
    f0 = tracked(start)
    if not np.isfinite(f0):
        raise FitError("objective is not finite at the starting point", trace=[])

    options = {
        "maxiter": maxiter if maxiter is not None else 500 * dim,
        "xatol": xtol,
        "fatol": ftol * max(1.0, abs(f0)),
    }
    first = minimize(tracked, start, method="Nelder-Mead", bounds=bounds, options=options)
    logger.debug("Simplex run 1: f=%.10g nit=%d (%s)", first.fun, first.nit, first.message)

    restart_from = tracked.best_x if tracked.best_x is not None else first.x
    second = minimize(tracked, restart_from, method="Nelder-Mead", bounds=bounds, options=options)
    logger.debug("Simplex run 2: f=%.10g nit=%d (%s)", second.fun, second.nit, second.message)

    best_x = tracked.best_x if tracked.best_x is not None else second.x
    return SimplexResult(
        x=np.array(best_x, dtype=float),
        fun=float(tracked.best_f),
        converged=bool(second.success),
        nfev=int(first.nfev + second.nfev),
        nit=int(first.nit + second.nit),
        message=str(second.message),
        trace=list(tracked.trace),
    )


def _steps(theta: np.ndarray) -> np.ndarray:
    return np.maximum(1e-5, 1e-5 * np.abs(theta))


def _evaluate_all(objective: Objective, points: List[np.ndarray], threads: int) -> List[float]:
    if threads > 1 and len(points) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return [float(v) for v in pool.map(objective, points)]
    return [float(objective(pt)) for pt in points]


def numerical_hessian(objective: Objective, theta: Sequence[float], threads: int = 1) -> np.ndarray:
    """
    Central-difference Hessian with step max(1e-5, 1e-5 |theta_i|)

    Evaluations are independent and run on up to `threads` workers.
    """
    center = np.asarray(theta, dtype=float).ravel()
    dim = center.size
    steps = _steps(center)

    points: List[np.ndarray] = [center.copy()]
    index: Dict[Tuple[int, int, int, int], int] = {}

    def shifted(i: int, si: int, j: int, sj: int) -> np.ndarray:
        pt = center.copy()
        pt[i] += si * steps[i]
        pt[j] += sj * steps[j]
        return pt

    for i in range(dim):
        for si in (1, -1):
            index[(i, si, i, 0)] = len(points)
            pt = center.copy()
            pt[i] += si * steps[i]
            points.append(pt)
        for j in range(i + 1, dim):
            for si in (1, -1):
                for sj in (1, -1):
                    index[(i, si, j, sj)] = len(points)
                    points.append(shifted(i, si, j, sj))

    values = _evaluate_all(objective, points, threads)
    f0 = values[0]
    H = np.empty((dim, dim))
    for i in range(dim):
        f_plus = values[index[(i, 1, i, 0)]]
        f_minus = values[index[(i, -1, i, 0)]]
        H[i, i] = (f_plus - 2.0 * f0 + f_minus) / steps[i] ** 2
        for j in range(i + 1, dim):
            mixed = (
                values[index[(i, 1, j, 1)]]
                - values[index[(i, 1, j, -1)]]
                - values[index[(i, -1, j, 1)]]
                + values[index[(i, -1, j, -1)]]
            ) / (4.0 * steps[i] * steps[j])
            H[i, j] = H[j, i] = mixed
    return H


def standard_errors(
    objective: Objective,
    theta_hat: Sequence[float],
    names: Optional[Sequence[str]] = None,
    threads: int = 1,
    rcond: float = 1e-10,
) -> Dict[str, float]:
    """
    Standard errors from the inverse numerical Hessian of a negative log-likelihood

    Eigen-directions with curvature at or below rcond * max curvature are
    treated as unidentified; coordinates loading on them are reported as NaN.
    Degeneracy is reported in-band and never raises.

    Args:
        objective: Negative log-likelihood
        theta_hat: Optimum
        names: Coordinate names, default theta0, theta1, ...
        threads: Workers for Hessian evaluations
        rcond: Relative eigenvalue cut-off

    Returns:
        Mapping of coordinate name to standard error
    """
    theta = np.asarray(theta_hat, dtype=float).ravel()
    labels = list(names) if names is not None else [f"theta{i}" for i in range(theta.size)]
    if theta.size == 0:
        return {}

    H = numerical_hessian(objective, theta, threads)
    if not np.all(np.isfinite(H)):
        logger.warning("Hessian has non-finite entries; standard errors unavailable")
        return {name: float("nan") for name in labels}

    w, V = np.linalg.eigh(0.5 * (H + H.T))
    scale = float(np.max(np.abs(w)))
    if scale == 0.0:
        return {name: float("nan") for name in labels}

    keep = w > rcond * scale
    covariance = (V[:, keep] / w[keep]) @ V[:, keep].T
    errors = np.sqrt(np.clip(np.diag(covariance), 0.0, None))
    if not np.all(keep):
        loading = np.sum(V[:, ~keep] ** 2, axis=1)
        errors = np.where(loading > 1e-8, np.nan, errors)
        logger.info("Hessian is not positive definite; %d direction(s) unidentified", int(np.sum(~keep)))
    return {name: float(se) for name, se in zip(labels, errors)}


__all__ = [
    'SimplexResult',
    'minimize_simplex',
    'numerical_hessian',
    'standard_errors',
]
