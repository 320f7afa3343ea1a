"""
Driving Levy noise families
Increment sampling, characteristic functions, closed-form and Fourier-inverted
densities, moments and maximum-likelihood fitting of noise parameters

Families and parameters:
    Brownian(mu, sigma)
    CompoundPoissonNormal(lambda, mu, sigma)   Poisson(lambda) jumps ~ N(mu, sigma^2)
    VarianceGamma(lambda, alpha, beta, mu)     Brownian with drift beta on a gamma clock
    NormalInverseGaussian(alpha, beta, delta, mu)
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
from scipy import stats
from scipy.integrate import quad, trapezoid
from scipy.special import gammaln, k1e, kve, logsumexp

from config.settings import CarmaLevyConfig

from .errors import DataError, DomainError, FitError, NumericalError, ParamError
from .optimization import minimize_simplex, standard_errors

logger = logging.getLogger(__name__)

ArrayLike = Union[float, np.ndarray]


class LevyFamily(str, Enum):
    """Supported driving-noise families; values are the JSON family strings"""

    BROWNIAN = "Brownian"
    COMPOUND_POISSON_NORMAL = "CompoundPoissonNormal"
    VARIANCE_GAMMA = "VarianceGamma"
    NORMAL_INVERSE_GAUSSIAN = "NormalInverseGaussian"

    @property
    def parameter_names(self) -> Tuple[str, ...]:
        return PARAMETER_NAMES[self]

    @classmethod
    def parse(cls, value: Union[str, "LevyFamily"]) -> "LevyFamily":
        """Accept a family, its exact name or a short alias (brownian, cp, vg, nig)"""
        if isinstance(value, cls):
            return value
        text = str(value).strip()
        for member in cls:
            if member.value == text:
                return member
        alias = FAMILY_ALIASES.get(text.lower().replace("-", "").replace("_", ""))
        if alias is None:
            raise ParamError(f"unknown Levy family: {value!r}", family=str(value))
        return alias


PARAMETER_NAMES: Dict[LevyFamily, Tuple[str, ...]] = {
    LevyFamily.BROWNIAN: ("mu", "sigma"),
    LevyFamily.COMPOUND_POISSON_NORMAL: ("lambda", "mu", "sigma"),
    LevyFamily.VARIANCE_GAMMA: ("lambda", "alpha", "beta", "mu"),
    LevyFamily.NORMAL_INVERSE_GAUSSIAN: ("alpha", "beta", "delta", "mu"),
}

FAMILY_ALIASES: Dict[str, LevyFamily] = {
    "brownian": LevyFamily.BROWNIAN,
    "bm": LevyFamily.BROWNIAN,
    "gaussian": LevyFamily.BROWNIAN,
    "cp": LevyFamily.COMPOUND_POISSON_NORMAL,
    "compoundpoisson": LevyFamily.COMPOUND_POISSON_NORMAL,
    "compoundpoissonnormal": LevyFamily.COMPOUND_POISSON_NORMAL,
    "vg": LevyFamily.VARIANCE_GAMMA,
    "variancegamma": LevyFamily.VARIANCE_GAMMA,
    "nig": LevyFamily.NORMAL_INVERSE_GAUSSIAN,
    "normalinversegaussian": LevyFamily.NORMAL_INVERSE_GAUSSIAN,
}


@dataclass(frozen=True)
class LevyModel:
    """
    A Levy process law: family tag plus named parameters per unit time

    Raises:
        ParamError: If parameter names or values violate the family invariants
    """

    family: LevyFamily
    params: Dict[str, float]

    def __post_init__(self) -> None:
        family = LevyFamily.parse(self.family)
        expected = family.parameter_names
        given = dict(self.params)
        if set(given) != set(expected):
            raise ParamError(
                f"{family.value} expects parameters {', '.join(expected)}",
                family=family.value,
                given=sorted(given),
            )
        try:
            values = {name: float(given[name]) for name in expected}
        except (TypeError, ValueError) as e:
            raise ParamError(f"parameters must be real numbers: {e}") from e
        if not all(np.isfinite(v) for v in values.values()):
            raise ParamError("parameters must be finite", family=family.value)
        _check_invariants(family, values)
        object.__setattr__(self, "family", family)
        object.__setattr__(self, "params", values)

    @classmethod
    def create(cls, family: Union[str, LevyFamily], **params: float) -> "LevyModel":
        return cls(LevyFamily.parse(family), params)

    @classmethod
    def from_vector(cls, family: Union[str, LevyFamily], vector: Sequence[float]) -> "LevyModel":
        fam = LevyFamily.parse(family)
        values = list(np.asarray(vector, dtype=float).ravel())
        if len(values) != len(fam.parameter_names):
            raise ParamError(f"{fam.value} expects {len(fam.parameter_names)} parameters")
        return cls(fam, dict(zip(fam.parameter_names, values)))

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "LevyModel":
        """Build from the noise sub-document {"family": ..., "params": {...}}"""
        if "family" not in data or "params" not in data:
            raise ParamError("noise document needs 'family' and 'params'")
        return cls(LevyFamily.parse(data["family"]), dict(data["params"]))

    def to_dict(self) -> Dict[str, Any]:
        return {"family": self.family.value, "params": dict(self.params)}

    def vector(self) -> np.ndarray:
        return np.array([self.params[name] for name in self.family.parameter_names])

    def __getitem__(self, name: str) -> float:
        return self.params[name]

    def cumulants(self, t: float = 1.0) -> np.ndarray:
        """First four cumulants of L_t"""
        return _unit_cumulants(self) * t

    def mean(self, t: float = 1.0) -> float:
        return float(self.cumulants(t)[0])

    def variance(self, t: float = 1.0) -> float:
        return float(self.cumulants(t)[1])

    def skewness(self, t: float = 1.0) -> float:
        k = self.cumulants(t)
        return float(k[2] / k[1] ** 1.5)

    def excess_kurtosis(self, t: float = 1.0) -> float:
        k = self.cumulants(t)
        return float(k[3] / k[1] ** 2)

    def scaled(self, c: float) -> "LevyModel":
        """Law of c * L for c > 0"""
        if not (np.isfinite(c) and c > 0):
            raise ParamError("scale factor must be positive", c=float(c))
        p = self.params
        if self.family is LevyFamily.BROWNIAN:
            new = {"mu": c * p["mu"], "sigma": c * p["sigma"]}
        elif self.family is LevyFamily.COMPOUND_POISSON_NORMAL:
            new = {"lambda": p["lambda"], "mu": c * p["mu"], "sigma": c * p["sigma"]}
        elif self.family is LevyFamily.VARIANCE_GAMMA:
            new = {"lambda": p["lambda"], "alpha": p["alpha"] / c, "beta": p["beta"] / c, "mu": c * p["mu"]}
        else:
            new = {"alpha": p["alpha"] / c, "beta": p["beta"] / c, "delta": c * p["delta"], "mu": c * p["mu"]}
        return LevyModel(self.family, new)


def _check_invariants(family: LevyFamily, p: Mapping[str, float]) -> None:
    if family is LevyFamily.BROWNIAN:
        if p["sigma"] <= 0:
            raise ParamError("Brownian requires sigma > 0", sigma=p["sigma"])
    elif family is LevyFamily.COMPOUND_POISSON_NORMAL:
        if p["lambda"] <= 0 or p["sigma"] <= 0:
            raise ParamError("CompoundPoissonNormal requires lambda > 0 and sigma > 0")
    elif family is LevyFamily.VARIANCE_GAMMA:
        if p["lambda"] <= 0 or not p["alpha"] > abs(p["beta"]):
            raise ParamError("VarianceGamma requires lambda > 0 and alpha > |beta|")
    else:
        if p["delta"] <= 0 or not p["alpha"] > abs(p["beta"]):
            raise ParamError("NormalInverseGaussian requires delta > 0 and alpha > |beta|")


def _unit_cumulants(model: LevyModel) -> np.ndarray:
    p = model.params
    if model.family is LevyFamily.BROWNIAN:
        return np.array([p["mu"], p["sigma"] ** 2, 0.0, 0.0])
    if model.family is LevyFamily.COMPOUND_POISSON_NORMAL:
        lam, mu, s2 = p["lambda"], p["mu"], p["sigma"] ** 2
        return lam * np.array([
            mu,
            mu ** 2 + s2,
            mu ** 3 + 3 * mu * s2,
            mu ** 4 + 6 * mu ** 2 * s2 + 3 * s2 ** 2,
        ])
    if model.family is LevyFamily.VARIANCE_GAMMA:
        lam, alpha, beta, mu = p["lambda"], p["alpha"], p["beta"], p["mu"]
        theta = 2.0 / (alpha ** 2 - beta ** 2)
        return np.array([
            mu + beta * lam * theta,
            lam * theta + beta ** 2 * lam * theta ** 2,
            3 * beta * lam * theta ** 2 + 2 * beta ** 3 * lam * theta ** 3,
            3 * lam * theta ** 2 + 12 * beta ** 2 * lam * theta ** 3 + 6 * beta ** 4 * lam * theta ** 4,
        ])
    alpha, beta, delta, mu = p["alpha"], p["beta"], p["delta"], p["mu"]
    gamma = np.sqrt(alpha ** 2 - beta ** 2)
    return np.array([
        mu + delta * beta / gamma,
        delta * alpha ** 2 / gamma ** 3,
        3 * beta * delta * alpha ** 2 / gamma ** 5,
        3 * delta * alpha ** 2 * (alpha ** 2 + 4 * beta ** 2) / gamma ** 7,
    ])


@dataclass(frozen=True, eq=False)
class IncrementSeries:
    """
    Increments of a Levy path over consecutive steps of length h

    Attributes:
        h: Step length
        values: Increments L_{t0+(k+1)h} - L_{t0+kh}
        t0: Start time of the first increment
        burn_in: Number of leading increments flagged as transient
    """

    h: float
    values: np.ndarray
    t0: float = 0.0
    burn_in: int = 0

    def __post_init__(self) -> None:
        if not (np.isfinite(self.h) and self.h > 0):
            raise DataError("increment step h must be positive", h=float(self.h))
        values = np.array(self.values, dtype=float).ravel()
        if values.size < 1:
            raise DataError("increment series is empty")
        if not np.all(np.isfinite(values)):
            raise DataError("increment series has non-finite values")
        if not 0 <= int(self.burn_in) <= values.size:
            raise DataError("burn_in outside the series", burn_in=int(self.burn_in))
        values.setflags(write=False)
        object.__setattr__(self, "h", float(self.h))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "t0", float(self.t0))
        object.__setattr__(self, "burn_in", int(self.burn_in))

    def __len__(self) -> int:
        return self.values.size

    def times(self) -> np.ndarray:
        """End time of each increment"""
        return self.t0 + self.h * np.arange(1, self.values.size + 1)

    def drop(self, k: int) -> "IncrementSeries":
        """Discard the first k increments"""
        if not 0 <= k < self.values.size:
            raise DataError("cannot drop that many increments", k=int(k), n=int(self.values.size))
        return IncrementSeries(
            h=self.h,
            values=self.values[k:],
            t0=self.t0 + k * self.h,
            burn_in=max(0, self.burn_in - k),
        )

    def after_burn_in(self) -> "IncrementSeries":
        return self.drop(self.burn_in) if self.burn_in else self

    def summary(self) -> Dict[str, float]:
        """Count, mean, sd, min, quartiles and max"""
        v = self.values
        q1, median, q3 = np.percentile(v, [25, 50, 75])
        return {
            "count": int(v.size),
            "mean": float(np.mean(v)),
            "sd": float(np.std(v, ddof=1)) if v.size > 1 else 0.0,
            "min": float(np.min(v)),
            "q1": float(q1),
            "median": float(median),
            "q3": float(q3),
            "max": float(np.max(v)),
        }


@dataclass(frozen=True)
class NoiseFit:
    """Maximum-likelihood fit of a Levy family to increments"""

    model: LevyModel
    stderr: Dict[str, float]
    loglik: float
    n: int
    h: float
    converged: bool = True
    at_boundary: Tuple[str, ...] = field(default_factory=tuple)
    n_atoms: int = 0

    @property
    def params(self) -> Dict[str, float]:
        return dict(self.model.params)

    @property
    def minus_two_loglik(self) -> float:
        return -2.0 * self.loglik


def sample_increments(model: LevyModel, h: float, n: int, seed: Optional[int] = None) -> IncrementSeries:
    """
    Draw n independent increments L_h - L_0

    Args:
        model: Levy law
        h: Step length, positive
        n: Number of increments, at least one
        seed: Seed of a private numpy Generator

    Raises:
        ParamError: If h or n are invalid
    """
    if not (np.isfinite(h) and h > 0):
        raise ParamError("step h must be positive", h=float(h))
    if int(n) < 1:
        raise ParamError("n must be at least 1", n=int(n))
    n = int(n)
    rng = np.random.default_rng(seed)
    p = model.params

    if model.family is LevyFamily.BROWNIAN:
        values = rng.normal(p["mu"] * h, p["sigma"] * np.sqrt(h), size=n)
    elif model.family is LevyFamily.COMPOUND_POISSON_NORMAL:
        counts = rng.poisson(p["lambda"] * h, size=n)
        values = np.zeros(n)
        jumped = counts > 0
        k = counts[jumped]
        values[jumped] = rng.normal(p["mu"] * k, p["sigma"] * np.sqrt(k))
    elif model.family is LevyFamily.VARIANCE_GAMMA:
        scale = 2.0 / (p["alpha"] ** 2 - p["beta"] ** 2)
        clock = rng.gamma(shape=p["lambda"] * h, scale=scale, size=n)
        values = p["mu"] * h + p["beta"] * clock + np.sqrt(clock) * rng.standard_normal(n)
    else:
        gamma = np.sqrt(p["alpha"] ** 2 - p["beta"] ** 2)
        delta_h = p["delta"] * h
        clock = rng.wald(delta_h / gamma, delta_h ** 2, size=n)
        values = p["mu"] * h + p["beta"] * clock + np.sqrt(clock) * rng.standard_normal(n)

    return IncrementSeries(h=h, values=values)


def char_fn(model: LevyModel, u: ArrayLike, t: float = 1.0) -> Union[complex, np.ndarray]:
    """Characteristic function E[exp(i u L_t)]"""
    if not (np.isfinite(t) and t > 0):
        raise DomainError("t must be positive", t=float(t))
    freq = np.asarray(u, dtype=float)
    p = model.params
    iu = 1j * freq

    if model.family is LevyFamily.BROWNIAN:
        exponent = t * (iu * p["mu"] - 0.5 * freq ** 2 * p["sigma"] ** 2)
    elif model.family is LevyFamily.COMPOUND_POISSON_NORMAL:
        jump_cf = np.exp(iu * p["mu"] - 0.5 * freq ** 2 * p["sigma"] ** 2)
        exponent = p["lambda"] * t * (jump_cf - 1.0)
    elif model.family is LevyFamily.VARIANCE_GAMMA:
        alpha, beta = p["alpha"], p["beta"]
        exponent = iu * p["mu"] * t + p["lambda"] * t * (
            np.log(alpha ** 2 - beta ** 2) - np.log(alpha ** 2 - (beta + iu) ** 2)
        )
    else:
        alpha, beta = p["alpha"], p["beta"]
        gamma = np.sqrt(alpha ** 2 - beta ** 2)
        exponent = iu * p["mu"] * t + p["delta"] * t * (gamma - np.sqrt(alpha ** 2 - (beta + iu) ** 2 + 0j))

    value = np.exp(exponent)
    if freq.ndim == 0:
        return complex(value)
    return value


def atom_probability(model: LevyModel, t: float = 1.0) -> float:
    """Mass of the point mass at zero in L_t (compound Poisson only)"""
    if model.family is LevyFamily.COMPOUND_POISSON_NORMAL:
        return float(np.exp(-model.params["lambda"] * t))
    return 0.0


def _poisson_terms(lam_t: float, tail: float) -> np.ndarray:
    last = int(stats.poisson.isf(tail, lam_t)) + 1
    return np.arange(1, max(last, 1) + 1)


def _log_density_closed(model: LevyModel, x: np.ndarray, t: float, poisson_tail: float) -> np.ndarray:
    p = model.params

    if model.family is LevyFamily.BROWNIAN:
        return stats.norm.logpdf(x, loc=p["mu"] * t, scale=p["sigma"] * np.sqrt(t))

    if model.family is LevyFamily.COMPOUND_POISSON_NORMAL:
        lam_t = p["lambda"] * t
        k = _poisson_terms(lam_t, poisson_tail)
        log_weights = stats.poisson.logpmf(k, lam_t)
        components = stats.norm.logpdf(x[:, None], loc=p["mu"] * k, scale=p["sigma"] * np.sqrt(k))
        return logsumexp(components + log_weights, axis=1)

    if model.family is LevyFamily.VARIANCE_GAMMA:
        lam_t = p["lambda"] * t
        alpha, beta = p["alpha"], p["beta"]
        nu = lam_t - 0.5
        y = x - p["mu"] * t
        ay = np.abs(y)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            log_f = (
                lam_t * np.log(alpha ** 2 - beta ** 2)
                + nu * np.log(ay)
                + np.log(kve(nu, alpha * ay))
                - alpha * ay
                + beta * y
                - 0.5 * np.log(np.pi)
                - gammaln(lam_t)
                - nu * np.log(2 * alpha)
            )
        singular = ~np.isfinite(log_f)
        if np.any(singular):
            if nu > 0:
                at_center = (
                    lam_t * np.log(alpha ** 2 - beta ** 2)
                    + gammaln(nu)
                    - np.log(2 * np.sqrt(np.pi))
                    - gammaln(lam_t)
                    - 2 * nu * np.log(alpha)
                )
                log_f = np.where(singular, at_center, log_f)
            else:
                log_f = np.where(singular, np.inf, log_f)
        return log_f

    alpha, beta = p["alpha"], p["beta"]
    gamma = np.sqrt(alpha ** 2 - beta ** 2)
    delta_t = p["delta"] * t
    y = x - p["mu"] * t
    s = np.sqrt(delta_t ** 2 + y ** 2)
    z = alpha * s
    return (
        np.log(alpha * delta_t / np.pi)
        + np.log(k1e(z))
        - z
        - np.log(s)
        + delta_t * gamma
        + beta * y
    )


def _fourier_quadrature(model: LevyModel, x: np.ndarray, t: float) -> np.ndarray:
    """
    Inversion on [0, inf) with QUADPACK's Fourier-integral routine, for laws whose
    characteristic function decays only polynomially

    f(x) = (1/pi) * integral of [Re phi(u) cos(ux) + Im phi(u) sin(ux)] over u > 0
    """
    atom = atom_probability(model, t)
    shift = 0.0
    if model.family is not LevyFamily.COMPOUND_POISSON_NORMAL:
        # a drifted phi never stops oscillating; invert the centred law at x - mu*t
        shift = model.params["mu"] * t
        model = LevyModel.create(model.family, **{**model.params, "mu": 0.0})

    def real_part(u: float) -> float:
        return float(np.real(char_fn(model, u, t))) - atom

    def imag_part(u: float) -> float:
        return float(np.imag(char_fn(model, u, t)))

    result = np.empty(x.size)
    for i, xi in enumerate(x - shift):
        omega = abs(xi)
        if omega < 1e-12:
            value, error = quad(real_part, 0.0, np.inf, limit=500)
        else:
            cosine, cos_error = quad(real_part, 0.0, np.inf, weight="cos", wvar=omega, limlst=200)
            sine, sin_error = quad(imag_part, 0.0, np.inf, weight="sin", wvar=omega, limlst=200)
            value, error = cosine + np.sign(xi) * sine, cos_error + sin_error
        if not (np.isfinite(value) and error <= 1e-7):
            raise NumericalError(
                "Fourier inversion did not converge", x=float(xi), t=float(t), error_estimate=float(error),
            )
        result[i] = value / np.pi
    return result


def density_fourier(model: LevyModel, x: ArrayLike, t: float = 1.0,
                    config: Optional[CarmaLevyConfig] = None) -> ArrayLike:
    """
    Density by inversion of the characteristic function

    f(x) = (1/2pi) * integral of Re[exp(-iux) phi(u)] du. When |phi| has decayed
    at the edge of the [-U, U] grid the trapezoidal rule on that grid is used;
    otherwise (variance gamma with small lambda*t) each point goes through
    adaptive oscillatory quadrature over the whole half line. For the compound
    Poisson family the atom is removed first, giving the continuous part.

    Raises:
        NumericalError: If the quadrature error estimate exceeds 1e-7
    """
    cfg = config or CarmaLevyConfig()
    points = np.asarray(x, dtype=float)
    flat = points.ravel()
    u = np.linspace(-cfg.fourier_u_max, cfg.fourier_u_max, cfg.fourier_points)
    phi = char_fn(model, u, t) - atom_probability(model, t)

    edge = float(max(abs(phi[0]), abs(phi[-1])))
    if edge > 1e-8:
        logger.debug("|phi(%g)| = %.3g, switching to oscillatory quadrature", cfg.fourier_u_max, edge)
        result = _fourier_quadrature(model, flat, t)
    else:
        result = np.empty(flat.size)
        chunk = 256
        for start in range(0, flat.size, chunk):
            block = flat[start:start + chunk]
            integrand = np.real(np.exp(-1j * np.outer(u, block)) * phi[:, None])
            result[start:start + chunk] = trapezoid(integrand, u, axis=0) / (2.0 * np.pi)

    if points.ndim == 0:
        return float(result[0])
    return result.reshape(points.shape)


def density(model: LevyModel, x: ArrayLike, t: float = 1.0, method: str = "auto",
            config: Optional[CarmaLevyConfig] = None) -> ArrayLike:
    """
    Density of L_t at x

    Every family has a closed form, used for method "auto" and "closed";
    "fourier" inverts the characteristic function. For compound Poisson the
    value is the continuous part; the atom at zero has mass atom_probability.

    Raises:
        NumericalError: If Fourier inversion does not converge
    """
    if not (np.isfinite(t) and t > 0):
        raise DomainError("t must be positive", t=float(t))
    if method == "fourier":
        return density_fourier(model, x, t, config)
    if method not in ("auto", "closed"):
        raise ParamError(f"unknown density method: {method}")

    cfg = config or CarmaLevyConfig()
    points = np.asarray(x, dtype=float)
    values = np.exp(_log_density_closed(model, points.ravel(), t, cfg.poisson_tail))
    if points.ndim == 0:
        return float(values[0])
    return values.reshape(points.shape)


def log_likelihood(model: LevyModel, x: Sequence[float], t: float,
                   atom_eps: Optional[float] = None,
                   config: Optional[CarmaLevyConfig] = None) -> float:
    """
    Sum of log densities of increments observed over steps of length t

    The compound Poisson atom enters as a N(0, atom_eps^2) kernel carrying
    mass exp(-lambda t).
    """
    cfg = config or CarmaLevyConfig()
    values = np.asarray(x, dtype=float).ravel()
    log_f = _log_density_closed(model, values, t, cfg.poisson_tail)
    if model.family is LevyFamily.COMPOUND_POISSON_NORMAL:
        eps = cfg.atom_eps if atom_eps is None else atom_eps
        log_atom = -model.params["lambda"] * t + stats.norm.logpdf(values, loc=0.0, scale=eps)
        log_f = np.logaddexp(log_f, log_atom)
    return float(np.sum(log_f))


def _to_free(family: LevyFamily, theta: np.ndarray) -> np.ndarray:
    if family is LevyFamily.COMPOUND_POISSON_NORMAL:
        lam, mu, sigma = theta
        return np.array([np.log(lam), mu, np.log(sigma)])
    if family is LevyFamily.VARIANCE_GAMMA:
        lam, alpha, beta, mu = theta
        return np.array([np.log(lam), np.log(alpha), np.arctanh(beta / alpha), mu])
    alpha, beta, delta, mu = theta
    return np.array([np.log(alpha), np.arctanh(beta / alpha), np.log(delta), mu])


def _from_free(family: LevyFamily, eta: np.ndarray) -> np.ndarray:
    if family is LevyFamily.COMPOUND_POISSON_NORMAL:
        return np.array([np.exp(eta[0]), eta[1], np.exp(eta[2])])
    if family is LevyFamily.VARIANCE_GAMMA:
        alpha = np.exp(eta[1])
        return np.array([np.exp(eta[0]), alpha, alpha * np.tanh(eta[2]), eta[3]])
    alpha = np.exp(eta[0])
    return np.array([alpha, alpha * np.tanh(eta[1]), np.exp(eta[2]), eta[3]])


def _moment_start(family: LevyFamily, x: np.ndarray, h: float, atom_eps: float) -> LevyModel:
    mean = float(np.mean(x)) / h
    var = max(float(np.var(x)) / h, 1e-12)
    kurt = float(stats.kurtosis(x, fisher=True))
    if not np.isfinite(kurt) or kurt <= 0.1:
        kurt = 1.0

    if family is LevyFamily.COMPOUND_POISSON_NORMAL:
        zero_share = float(np.mean(np.abs(x) < max(atom_eps, 1e-12)))
        if 0.0 < zero_share < 1.0:
            lam = -np.log(zero_share) / h
        else:
            lam = 3.0 / (kurt * h)
        lam = float(np.clip(lam, 1e-3, 1e3))
        mu = mean / lam
        sigma = np.sqrt(max(var / lam - mu ** 2, 1e-12))
        return LevyModel.create(family, **{"lambda": lam, "mu": mu, "sigma": sigma})
    if family is LevyFamily.VARIANCE_GAMMA:
        lam = float(np.clip(3.0 / (kurt * h), 1e-3, 1e3))
        return LevyModel.create(family, **{"lambda": lam, "alpha": np.sqrt(2 * lam / var), "beta": 0.0, "mu": mean})
    delta = np.sqrt(3.0 * var / (kurt * h))
    return LevyModel.create(family, alpha=delta / var, beta=0.0, delta=delta, mu=mean)


def _boundary_flags(model: LevyModel) -> Tuple[str, ...]:
    p = model.params
    flags = [name for name in ("lambda", "sigma", "delta") if name in p and p[name] < 1e-8]
    if "alpha" in p and abs(p["beta"]) > (1.0 - 1e-6) * p["alpha"]:
        flags.append("beta")
    return tuple(flags)


def fit_noise(
    increments: IncrementSeries,
    family: Union[str, LevyFamily],
    init: Optional[Union[LevyModel, Mapping[str, float]]] = None,
    config: Optional[CarmaLevyConfig] = None,
    atom_eps: Optional[float] = None,
) -> NoiseFit:
    """
    Maximum-likelihood fit of a Levy family to increments

    The Gaussian family uses its closed-form MLE. The other families are
    fitted by the restarted simplex search on an unconstrained
    reparameterization (log scales, beta = alpha * tanh(eta)); standard errors
    come from the numerical Hessian in the natural parameters.

    Args:
        increments: Increments at the time scale of the likelihood
        family: Family tag or alias
        init: Optional starting parameters; moment-based when omitted
        config: Numerical settings
        atom_eps: Width of the compound Poisson atom (config value when omitted)

    Returns:
        NoiseFit with parameters, standard errors and log-likelihood

    Raises:
        DataError: If fewer than 20 increments are given
        FitError: If the search does not converge
    """
    cfg = config or CarmaLevyConfig()
    fam = LevyFamily.parse(family)
    x = increments.values
    h = increments.h
    if x.size < 20:
        raise DataError("noise fit needs at least 20 increments", n=int(x.size))
    eps = cfg.atom_eps if atom_eps is None else float(atom_eps)
    names = fam.parameter_names

    def negative_loglik(theta: np.ndarray) -> float:
        try:
            model = LevyModel.from_vector(fam, theta)
        except ParamError:
            return np.inf
        value = -log_likelihood(model, x, h, eps, cfg)
        return value if np.isfinite(value) else np.inf

    logger.info("Fitting %s noise to %d increments (h=%g)", fam.value, x.size, h)

    if fam is LevyFamily.BROWNIAN:
        model = LevyModel.create(fam, mu=float(np.mean(x)) / h, sigma=float(np.std(x)) / np.sqrt(h))
        converged = True
    else:
        if init is None:
            start = _moment_start(fam, x, h, eps)
        elif isinstance(init, LevyModel):
            start = init if init.family is fam else _moment_start(fam, x, h, eps)
        else:
            start = LevyModel(fam, dict(init))

        def free_objective(eta: np.ndarray) -> float:
            with np.errstate(over="ignore", invalid="ignore"):
                return negative_loglik(_from_free(fam, eta))

        result = minimize_simplex(
            free_objective,
            _to_free(fam, start.vector()),
            maxiter=cfg.maxiter_per_dim * len(names),
            ftol=cfg.ftol,
        )
        best = _from_free(fam, result.x)
        if not result.converged:
            raise FitError(
                f"{fam.value} noise fit did not converge: {result.message}",
                best_params=dict(zip(names, map(float, best))),
                trace=result.trace,
            )
        model = LevyModel.from_vector(fam, best)
        converged = result.converged

    stderr = standard_errors(negative_loglik, model.vector(), names, threads=cfg.threads)
    loglik = log_likelihood(model, x, h, eps, cfg)
    n_atoms = int(np.sum(np.abs(x) < eps)) if fam is LevyFamily.COMPOUND_POISSON_NORMAL else 0
    flags = _boundary_flags(model)
    if flags:
        logger.warning("Noise parameters at the invariant boundary: %s", ", ".join(flags))

    logger.info("Noise fit done: -2logL=%.6f params=%s", -2.0 * loglik, model.params)
    return NoiseFit(
        model=model,
        stderr=stderr,
        loglik=loglik,
        n=int(x.size),
        h=h,
        converged=converged,
        at_boundary=flags,
        n_atoms=n_atoms,
    )


__all__ = [
    'LevyFamily',
    'PARAMETER_NAMES',
    'LevyModel',
    'IncrementSeries',
    'NoiseFit',
    'sample_increments',
    'char_fn',
    'atom_probability',
    'density',
    'density_fourier',
    'log_likelihood',
    'fit_noise',
]
