"""
Small dense matrix kernels for the CARMA pipeline
Matrix exponential, continuous Lyapunov solve and companion-matrix eigenstructure
"""

import logging
from typing import Optional

import numpy as np
from scipy import linalg as sla

from .errors import DimensionError, DomainError, NonStationaryError, RepeatedEigenvalueError

logger = logging.getLogger(__name__)

DEFAULT_EIGEN_GAP = 1e-8


def _as_square(A, name: str = "A") -> np.ndarray:
    """Validate and return a finite square float matrix"""
    M = np.atleast_2d(np.asarray(A, dtype=float))
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionError(f"{name} must be square, got shape {M.shape}", shape=list(M.shape))
    if not np.all(np.isfinite(M)):
        raise DomainError(f"{name} has non-finite entries")
    return M


def mat_exp(A, t: float = 1.0) -> np.ndarray:
    """
    Matrix exponential e^{At} by scaling and squaring with Pade approximation

    Args:
        A: Square real matrix
        t: Finite time multiplier

    Returns:
        The matrix e^{At}

    Raises:
        DimensionError: If A is not square
        DomainError: If A or t is not finite
    """
    M = _as_square(A)
    if not np.isfinite(t):
        raise DomainError("t must be finite", t=float(t))
    if t == 0.0:
        return np.eye(M.shape[0])
    return sla.expm(M * t)


def lyapunov_solve(A, C) -> np.ndarray:
    """
    Solve A X + X A' = -C through the Kronecker linearization

    The p^2 x p^2 system (I kron A + A kron I) vec(X) = -vec(C) is solved
    directly; p is small so the dense solve is adequate.

    Args:
        A: Square matrix whose eigenvalues have strictly negative real part
        C: Symmetric right-hand side of matching size

    Returns:
        Symmetric solution X

    Raises:
        NonStationaryError: If A is not stable or the system is singular
    """
    M = _as_square(A)
    Cm = _as_square(C, "C")
    if Cm.shape != M.shape:
        raise DimensionError("A and C must have the same shape", a_shape=list(M.shape), c_shape=list(Cm.shape))

    eigvals = np.linalg.eigvals(M)
    if np.max(eigvals.real) >= 0.0:
        raise NonStationaryError(
            "Lyapunov equation needs eigenvalues with negative real part",
            max_real_part=float(np.max(eigvals.real)),
        )

    p = M.shape[0]
    identity = np.eye(p)
    system = np.kron(identity, M) + np.kron(M, identity)
    try:
        vec_x = np.linalg.solve(system, -Cm.flatten(order="F"))
    except np.linalg.LinAlgError as e:
        raise NonStationaryError(f"Lyapunov system is singular: {e}") from e

    X = vec_x.reshape((p, p), order="F")
    return 0.5 * (X + X.T)


def companion_matrix(a) -> np.ndarray:
    """Companion matrix with ones on the superdiagonal and (-a_p, ..., -a_1) on the last row"""
    coeffs = np.asarray(a, dtype=float).ravel()
    p = coeffs.size
    if p == 0:
        raise DimensionError("coefficient vector must be non-empty")
    if not np.all(np.isfinite(coeffs)):
        raise DomainError("coefficients must be finite")
    A = np.zeros((p, p))
    if p > 1:
        A[:-1, 1:] = np.eye(p - 1)
    A[-1, :] = -coeffs[::-1]
    return A


def companion_eigvals(a) -> np.ndarray:
    """
    Roots of z^p + a_1 z^{p-1} + ... + a_p

    Computed as eigenvalues of the companion matrix and returned sorted by
    real part, then imaginary part.
    """
    return np.sort_complex(np.linalg.eigvals(companion_matrix(a)).astype(complex))


def has_distinct(lambdas, gap: float = DEFAULT_EIGEN_GAP) -> bool:
    """Whether all eigenvalues are pairwise separated by more than the relative gap"""
    lam = np.asarray(lambdas, dtype=complex).ravel()
    if lam.size < 2:
        return True
    scale = max(1.0, float(np.max(np.abs(lam))))
    diffs = np.abs(lam[:, None] - lam[None, :])
    np.fill_diagonal(diffs, np.inf)
    return bool(np.min(diffs) > gap * scale)


def vandermonde_eigvecs(lambdas, gap: Optional[float] = None) -> np.ndarray:
    """
    Eigenvector matrix R of the companion matrix

    Column j is [1, lambda_j, lambda_j^2, ..., lambda_j^{p-1}].

    Raises:
        RepeatedEigenvalueError: If two eigenvalues are closer than the gap
    """
    lam = np.asarray(lambdas, dtype=complex).ravel()
    if lam.size == 0:
        raise DimensionError("eigenvalue vector must be non-empty")
    if not has_distinct(lam, DEFAULT_EIGEN_GAP if gap is None else gap):
        raise RepeatedEigenvalueError(
            "eigenvalues are not pairwise distinct",
            lambdas=[str(v) for v in lam],
        )
    return np.vander(lam, N=lam.size, increasing=True).T


__all__ = [
    'mat_exp',
    'lyapunov_solve',
    'companion_matrix',
    'companion_eigvals',
    'has_distinct',
    'vandermonde_eigvecs',
]
