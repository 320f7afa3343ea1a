"""
CARMA(p,q) specification and derived structural objects
Companion state-space form, stationarity, kernel, autocovariance, sampled
covariance matrices and the spectral (canonical) decomposition
"""

import dataclasses
import logging
from dataclasses import dataclass
from typing import Any, Dict, Mapping, NamedTuple, Optional, Tuple, Union

import numpy as np

from .errors import DomainError, NonStationaryError, SpecError
from .levy import LevyModel
from .linalg import (
    DEFAULT_EIGEN_GAP,
    companion_eigvals,
    companion_matrix,
    has_distinct,
    lyapunov_solve,
    mat_exp,
    vandermonde_eigvecs,
)

logger = logging.getLogger(__name__)

DEFAULT_STATIONARITY_MARGIN = 1e-10

ArrayLike = Union[float, np.ndarray]


def _is_integer(value: Any) -> bool:
    return isinstance(value, (int, np.integer)) and not isinstance(value, bool)


@dataclass(frozen=True, eq=False)
class CarmaSpec:
    """
    CARMA(p,q) model: a(D)Y = b(D)DL observed as Y = c0 + sigma * b'X

    Attributes:
        p: Autoregressive order
        q: Moving-average order, strictly below p
        a: AR coefficients (a_1, ..., a_p)
        b: MA coefficients (b_0, ..., b_{p-1}), zero-padded past b_q
        sigma: Positive scale
        c0: Location
        noise: Optional driving Levy model attached to the specification
    """

    p: int
    q: int
    a: np.ndarray
    b: np.ndarray
    sigma: float = 1.0
    c0: float = 0.0
    noise: Optional[LevyModel] = None

    def __post_init__(self) -> None:
        if not _is_integer(self.p) or self.p < 1:
            raise SpecError("p must be a positive integer", p=self.p)
        if not _is_integer(self.q) or self.q < 0:
            raise SpecError("q must be a non-negative integer", q=self.q)
        if self.p <= self.q:
            raise SpecError("p > q violated", p=int(self.p), q=int(self.q))

        try:
            a = np.array(self.a, dtype=float).ravel()
            b = np.array(self.b, dtype=float).ravel()
        except (TypeError, ValueError) as e:
            raise SpecError(f"coefficients must be real numbers: {e}") from e

        if a.size != self.p:
            raise SpecError("a must have length p", p=int(self.p), length=int(a.size))
        if not self.q + 1 <= b.size <= self.p:
            raise SpecError("b must have between q+1 and p entries", q=int(self.q), length=int(b.size))
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise SpecError("coefficients must be finite")
        if np.any(b[self.q + 1:] != 0.0):
            raise SpecError("b_j = 0 for j > q violated", q=int(self.q))
        if b[self.q] == 0.0:
            raise SpecError("b_q != 0 violated", q=int(self.q))
        if not (np.isfinite(self.sigma) and self.sigma > 0):
            raise SpecError("sigma must be positive and finite", sigma=self.sigma)
        if not np.isfinite(self.c0):
            raise SpecError("c0 must be finite", c0=self.c0)
        if self.noise is not None and not isinstance(self.noise, LevyModel):
            raise SpecError("noise must be a LevyModel")

        padded = np.zeros(self.p)
        padded[:b.size] = b
        a.setflags(write=False)
        padded.setflags(write=False)
        object.__setattr__(self, "p", int(self.p))
        object.__setattr__(self, "q", int(self.q))
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", padded)
        object.__setattr__(self, "sigma", float(self.sigma))
        object.__setattr__(self, "c0", float(self.c0))

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, CarmaSpec):
            return NotImplemented
        return (
            self.p == other.p
            and self.q == other.q
            and np.array_equal(self.a, other.a)
            and np.array_equal(self.b, other.b)
            and self.sigma == other.sigma
            and self.c0 == other.c0
            and self.noise == other.noise
        )

    @property
    def ma_coefficients(self) -> np.ndarray:
        """The unpadded MA coefficients (b_0, ..., b_q)"""
        return self.b[:self.q + 1].copy()

    def replace(self, **changes: Any) -> "CarmaSpec":
        """Copy with fields replaced; invariants are re-checked"""
        return dataclasses.replace(self, **changes)

    def to_dict(self) -> Dict[str, Any]:
        """JSON-ready dictionary with the unpadded MA vector"""
        data: Dict[str, Any] = {
            "p": self.p,
            "q": self.q,
            "a": [float(v) for v in self.a],
            "b": [float(v) for v in self.ma_coefficients],
            "sigma": self.sigma,
            "c0": self.c0,
        }
        if self.noise is not None:
            data["noise"] = self.noise.to_dict()
        return data

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "CarmaSpec":
        """
        Build a spec from its JSON dictionary; sigma and c0 default to 1 and 0

        Raises:
            SpecError: On missing fields or invariant violations
        """
        missing = [key for key in ("p", "q", "a", "b") if key not in data]
        if missing:
            raise SpecError(f"spec document is missing fields: {', '.join(missing)}", missing=missing)
        noise = data.get("noise")
        return cls(
            p=data["p"],
            q=data["q"],
            a=data["a"],
            b=data["b"],
            sigma=data.get("sigma", 1.0),
            c0=data.get("c0", 0.0),
            noise=LevyModel.from_dict(noise) if noise is not None else None,
        )


@dataclass(frozen=True, eq=False)
class StateSpace:
    """Companion-form state space dX = AX dt + e dL, Y = b'X"""

    A: np.ndarray
    e: np.ndarray
    bvec: np.ndarray

    @property
    def p(self) -> int:
        return self.A.shape[0]

    def coefficients(self) -> Tuple[np.ndarray, np.ndarray]:
        """Read (a, b) back from the companion matrix and output vector"""
        return -self.A[-1, ::-1].copy(), self.bvec.copy()


class StationarityCheck(NamedTuple):
    stationary: bool
    distinct: bool
    lambdas: np.ndarray


class SampledCovariances(NamedTuple):
    Qinf: np.ndarray
    Q: np.ndarray


@dataclass(frozen=True, eq=False)
class SpectralDecomposition:
    """
    Eigenstructure used by the canonical form Y~ = LambdaTilde R^{-1} X

    alphas[r] = b(lambda_r) / a'(lambda_r) are the weights of the CAR(1)
    components in the kernel.
    """

    lambdas: np.ndarray
    R: np.ndarray
    Rinv: np.ndarray
    alphas: np.ndarray
    LambdaTilde: np.ndarray


def build_state_space(spec: CarmaSpec) -> StateSpace:
    """Companion matrix A, unit vector e = (0,...,0,1) and padded MA vector"""
    e = np.zeros(spec.p)
    e[-1] = 1.0
    return StateSpace(A=companion_matrix(spec.a), e=e, bvec=np.array(spec.b, dtype=float))


def ar_polynomial(spec: CarmaSpec, z: ArrayLike) -> ArrayLike:
    """a(z) = z^p + a_1 z^{p-1} + ... + a_p"""
    return np.polyval(np.r_[1.0, spec.a], z)


def ar_derivative(spec: CarmaSpec, z: ArrayLike) -> ArrayLike:
    """a'(z)"""
    return np.polyval(np.polyder(np.r_[1.0, spec.a]), z)


def ma_polynomial(spec: CarmaSpec, z: ArrayLike) -> ArrayLike:
    """b(z) = b_0 + b_1 z + ... + b_q z^q"""
    return np.polyval(spec.ma_coefficients[::-1], z)


def is_stationary(
    spec: CarmaSpec,
    margin: float = DEFAULT_STATIONARITY_MARGIN,
    gap: float = DEFAULT_EIGEN_GAP,
) -> StationarityCheck:
    """Stationary iff max Re(lambda) < -margin; also reports eigenvalue distinctness"""
    lambdas = companion_eigvals(spec.a)
    return StationarityCheck(
        stationary=bool(np.max(lambdas.real) < -margin),
        distinct=has_distinct(lambdas, gap),
        lambdas=lambdas,
    )


def _require_stationary(spec: CarmaSpec) -> None:
    check = is_stationary(spec)
    if not check.stationary:
        raise NonStationaryError(
            "CARMA specification is not stationary",
            max_real_part=float(np.max(check.lambdas.real)),
        )


def kernel(spec: CarmaSpec, t: ArrayLike) -> ArrayLike:
    """g(t) = b' e^{At} e for t >= 0 and 0 for t < 0"""
    ss = build_state_space(spec)
    times = np.asarray(t, dtype=float)
    values = np.array([
        float(ss.bvec @ mat_exp(ss.A, ti) @ ss.e) if ti >= 0 else 0.0
        for ti in times.ravel()
    ])
    if times.ndim == 0:
        return float(values[0])
    return values.reshape(times.shape)


def stationary_covariance(spec: CarmaSpec, driver_variance: float = 1.0) -> np.ndarray:
    """Q_inf solving A Q + Q A' = -sigma^2 Var(L_1) e e'"""
    ss = build_state_space(spec)
    C = spec.sigma ** 2 * driver_variance * np.outer(ss.e, ss.e)
    return lyapunov_solve(ss.A, C)


def autocovariance(spec: CarmaSpec, h: ArrayLike, driver_variance: float = 1.0) -> ArrayLike:
    """
    Autocovariance of the observed process at lag h

    gamma(h) = b' e^{A|h|} Q_inf b with a unit-variance driver unless
    driver_variance says otherwise.

    Raises:
        NonStationaryError: If the specification is not stationary
    """
    _require_stationary(spec)
    ss = build_state_space(spec)
    Qinf = stationary_covariance(spec, driver_variance)
    lags = np.asarray(h, dtype=float)
    values = np.array([
        float(ss.bvec @ mat_exp(ss.A, abs(lag)) @ Qinf @ ss.bvec) for lag in lags.ravel()
    ])
    if lags.ndim == 0:
        return float(values[0])
    return values.reshape(lags.shape)


def sampled_covariances(spec: CarmaSpec, h: float, driver_variance: float = 1.0) -> SampledCovariances:
    """
    Stationary covariance Q_inf and one-step noise covariance Q for step h

    Q = Q_inf - e^{Ah} Q_inf e^{A'h}, the integral of e^{Au} e e' e^{A'u}
    over [0, h] scaled by sigma^2 Var(L_1).

    Raises:
        DomainError: If h is not positive and finite
        NonStationaryError: If the specification is not stationary
    """
    if not (np.isfinite(h) and h > 0):
        raise DomainError("sampling step h must be positive", h=float(h))
    _require_stationary(spec)
    ss = build_state_space(spec)
    Qinf = stationary_covariance(spec, driver_variance)
    Phi = mat_exp(ss.A, h)
    Q = Qinf - Phi @ Qinf @ Phi.T
    return SampledCovariances(Qinf=Qinf, Q=0.5 * (Q + Q.T))


def stationary_mean(spec: CarmaSpec, driver_mean: Optional[float] = None) -> np.ndarray:
    """
    E[X] = -A^{-1} e mu = (mu / a_p) e_1 with mu the driver mean

    Only the level component X_0 has a non-zero mean; mu is taken from
    spec.noise when omitted.
    """
    _require_stationary(spec)
    if driver_mean is None:
        driver_mean = spec.noise.mean(1.0) if spec.noise is not None else 0.0
    mean = np.zeros(spec.p)
    mean[0] = driver_mean / spec.a[-1]
    return mean


def observation_mean(spec: CarmaSpec, driver_mean: Optional[float] = None) -> float:
    """E[Y] = c0 + sigma b' E[X]"""
    return float(spec.c0 + spec.sigma * spec.b @ stationary_mean(spec, driver_mean))


def spectral(spec: CarmaSpec, gap: float = DEFAULT_EIGEN_GAP) -> SpectralDecomposition:
    """
    Spectral decomposition of the companion matrix

    Raises:
        RepeatedEigenvalueError: If eigenvalues are not pairwise distinct
    """
    lambdas = companion_eigvals(spec.a)
    R = vandermonde_eigvecs(lambdas, gap)
    Rinv = np.linalg.inv(R)
    b_at_lambdas = ma_polynomial(spec, lambdas)
    alphas = b_at_lambdas / ar_derivative(spec, lambdas)
    return SpectralDecomposition(
        lambdas=lambdas,
        R=R,
        Rinv=Rinv,
        alphas=alphas,
        LambdaTilde=np.diag(b_at_lambdas),
    )


def canonical_states(spec: CarmaSpec, X: np.ndarray, decomposition: Optional[SpectralDecomposition] = None) -> np.ndarray:
    """Map a state trajectory (rows are times) to the canonical vector LambdaTilde R^{-1} X"""
    dec = decomposition if decomposition is not None else spectral(spec)
    states = np.atleast_2d(np.asarray(X, dtype=float))
    return (dec.LambdaTilde @ dec.Rinv @ states.T).T


def describe_state_space(spec: CarmaSpec) -> str:
    """Plain-text rendering of the state equations and the observation equation"""
    lines = []
    for j in range(spec.p - 1):
        lines.append(f"dX{j} = X{j + 1} dt")
    drift = " ".join(
        f"{'-' if coef >= 0 else '+'} {abs(coef):g}*X{j}"
        for j, coef in enumerate(spec.a[::-1])
    )
    lines.append(f"dX{spec.p - 1} = ({drift.lstrip('+ ')}) dt + dL")
    observation = " + ".join(f"{coef:g}*X{j}" for j, coef in enumerate(spec.ma_coefficients))
    lines.append(f"Y = {spec.c0:g} + {spec.sigma:g}*({observation})")
    return "\n".join(lines)


__all__ = [
    'CarmaSpec',
    'StateSpace',
    'StationarityCheck',
    'SampledCovariances',
    'SpectralDecomposition',
    'build_state_space',
    'ar_polynomial',
    'ar_derivative',
    'ma_polynomial',
    'is_stationary',
    'kernel',
    'stationary_covariance',
    'autocovariance',
    'sampled_covariances',
    'stationary_mean',
    'observation_mean',
    'spectral',
    'canonical_states',
    'describe_state_space',
]
