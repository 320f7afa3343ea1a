"""
Three-step estimation of Levy-driven CARMA models
Quasi-maximum likelihood for the AR/MA coefficients, recovery of the driver
increments and maximum-likelihood fitting of the noise parameters
"""

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np

from config.settings import CarmaLevyConfig

from .carma_model import CarmaSpec, build_state_space, is_stationary, observation_mean, stationary_covariance
from .errors import CarmaLevyError, DataError, FitError, ParamError, RecoveryError
from .kalman import filter_loglik
from .levy import IncrementSeries, LevyFamily, NoiseFit, fit_noise
from .linalg import mat_exp
from .optimization import minimize_simplex, standard_errors
from .recovery import Stencils, aggregate, recover_increments
from .timeseries import TimeSeries

logger = logging.getLogger(__name__)

SUMMARY_TITLE = "Two Stage Quasi-Maximum likelihood estimation"


class RecoveryMode(str, Enum):
    """What the fit returns besides the CARMA coefficients"""
    PARAMS_AND_INCREMENTS = "ParamsAndIncrements"
    INCREMENTS_ONLY = "IncrementsOnly"
    PARAMS_ONLY = "ParamsOnly"


class Normalization(str, Enum):
    """Identifiability constraint on (b, sigma)"""
    SIGMA = "sigma"   # sigma fixed to 1, every b_j free
    B0 = "b0"         # b_0 fixed to 1, sigma free


@dataclass
class QmleOptions:
    """
    Options of the quasi-maximum likelihood fit

    Attributes:
        normalization: Which of sigma or b_0 is pinned to one
        estimate_c0: Report a standard error for the location c0
        fixed: Parameters held at given values (names a1.., b0.., sigma)
        lower: Lower box bounds by parameter name
        upper: Upper box bounds by parameter name
        recovery_mode: Increments, noise parameters or both
        aggregation: Time step the increments are summed to before the noise fit; None disables
        stencil: Finite-difference stencil used by the recovery
        drop_increments: Leading recovered increments discarded before the noise fit
        atom_eps: Compound Poisson atom width for the noise likelihood
    """

    normalization: Normalization = Normalization.SIGMA
    estimate_c0: bool = False
    fixed: Dict[str, float] = field(default_factory=dict)
    lower: Dict[str, float] = field(default_factory=dict)
    upper: Dict[str, float] = field(default_factory=dict)
    recovery_mode: RecoveryMode = RecoveryMode.PARAMS_AND_INCREMENTS
    aggregation: Optional[float] = 1.0
    stencil: str = Stencils.FORWARD
    drop_increments: int = 0
    atom_eps: Optional[float] = None


@dataclass
class FitResult:
    """Outcome of qmle"""

    spec_hat: CarmaSpec
    estimates: Dict[str, float]
    stderr: Dict[str, float]
    loglik: float
    stationary: bool
    recovery_mode: RecoveryMode
    normalization: Normalization
    increments: Optional[IncrementSeries] = None
    noise_fit: Optional[NoiseFit] = None
    converged: bool = True
    n_evaluations: int = 0
    warnings: List[str] = field(default_factory=list)

    @property
    def minus_two_loglik(self) -> float:
        return -2.0 * self.loglik

    def coefficient_table(self) -> List[Tuple[str, float, float]]:
        """(name, estimate, stderr) rows for the CARMA coefficients"""
        return [(name, value, self.stderr.get(name, float("nan"))) for name, value in self.estimates.items()]

    def summary(self) -> str:
        """Human-readable summary block"""
        lines = [SUMMARY_TITLE, "", "Coefficients:", f"{'':>8}{'Estimate':>16}{'Std. Error':>16}"]
        for name, value, se in self.coefficient_table():
            lines.append(f"{name:>8}{value:>16.9f}{se:>16.9f}")
        if self.noise_fit is not None:
            for name, value in self.noise_fit.params.items():
                se = self.noise_fit.stderr.get(name, float("nan"))
                lines.append(f"{name:>8}{value:>16.9f}{se:>16.9f}")
        lines += ["", f"-2 log L: {self.minus_two_loglik:.6f}"]
        if not self.stationary:
            lines.append("Stationarity condition is NOT satisfied")

        if self.increments is not None:
            stats = self.increments.summary()
            lines += [
                "",
                f"Number of increments: {stats['count']}",
                f"Average of increments: {stats['mean']:.6f}",
                f"Standard Dev. of increments: {stats['sd']:.6f}",
            ]
        if self.noise_fit is not None:
            lines += ["", f"-2 log L of increments: {self.noise_fit.minus_two_loglik:.6f}"]
        if self.increments is not None:
            stats = self.increments.summary()
            lines += [
                "",
                "Summary statistics for increments:",
                f"{'Min.':>12}{'1st Qu.':>12}{'Median':>12}{'Mean':>12}{'3rd Qu.':>12}{'Max.':>12}",
                "".join(f"{stats[key]:>12.7f}" for key in ("min", "q1", "median", "mean", "q3", "max")),
            ]
        return "\n".join(lines)


def coefficient_names(p: int, q: int) -> List[str]:
    """Names of the CARMA coefficients in parameter-vector order"""
    return [f"a{i}" for i in range(1, p + 1)] + [f"b{j}" for j in range(q + 1)] + ["sigma"]


def _starting_values(init: CarmaSpec, normalization: Normalization) -> Dict[str, float]:
    ma = init.ma_coefficients
    values = {f"a{i}": float(v) for i, v in enumerate(init.a, start=1)}
    if normalization is Normalization.SIGMA:
        values.update({f"b{j}": float(init.sigma * v) for j, v in enumerate(ma)})
        values["sigma"] = 1.0
    else:
        if ma[0] == 0.0:
            raise ParamError("b0 normalization needs a non-zero b0 in the initial specification")
        values.update({f"b{j}": float(v / ma[0]) for j, v in enumerate(ma)})
        values["sigma"] = float(init.sigma * ma[0])
    return values


def _spec_from(init: CarmaSpec, values: Mapping[str, float]) -> CarmaSpec:
    return CarmaSpec(
        p=init.p,
        q=init.q,
        a=[values[f"a{i}"] for i in range(1, init.p + 1)],
        b=[values[f"b{j}"] for j in range(init.q + 1)],
        sigma=values["sigma"],
        c0=0.0,
        noise=init.noise,
    )


def _long_run_stderr_of_mean(spec: CarmaSpec, h: float, n: int) -> float:
    """Standard error of the sample mean of n observations from the stationary process"""
    ss = build_state_space(spec)
    Phi = mat_exp(ss.A, h)
    carried = stationary_covariance(spec) @ ss.bvec
    gamma0 = float(ss.bvec @ carried)
    weighted = 0.0
    for k in range(1, n):
        carried = Phi @ carried
        weighted += (1.0 - k / n) * float(ss.bvec @ carried)
    variance = (gamma0 + 2.0 * weighted) / n
    return float(np.sqrt(variance)) if variance > 0 else float("nan")


def qmle(
    data: TimeSeries,
    init: Union[CarmaSpec, Mapping[str, Any]],
    family: Optional[Union[str, LevyFamily]] = None,
    options: Optional[QmleOptions] = None,
    config: Optional[CarmaLevyConfig] = None,
) -> FitResult:
    """
    Quasi-maximum likelihood fit followed by increment recovery and noise fit

    The Kalman quasi-likelihood is maximized by a restarted Nelder-Mead
    search over the free coefficients; stationarity is checked after the
    search. A stationary optimum is followed by increment recovery and, when
    a family is given, by the noise fit on aggregated increments.

    Args:
        data: Equally spaced observations
        init: Initial specification (or its JSON dictionary)
        family: Levy family for the noise fit; None skips it
        options: Fit options
        config: Numerical settings

    Returns:
        FitResult whose loglik equals filter_loglik(spec_hat, data).loglik

    Raises:
        SpecError: If init is invalid
        DataError: If there are fewer than 5 (p + q + 1) observations
        FitError: If the search does not converge
    """
    cfg = config or CarmaLevyConfig()
    opts = options or QmleOptions()
    if not isinstance(init, CarmaSpec):
        init = CarmaSpec.from_dict(init)
    normalization = Normalization(opts.normalization)
    mode = RecoveryMode(opts.recovery_mode)
    fam = LevyFamily.parse(family) if family is not None else None

    p, q = init.p, init.q
    if len(data) < 5 * (p + q + 1):
        raise DataError("too few observations for the fit", n=len(data), required=5 * (p + q + 1))

    names = coefficient_names(p, q)
    values = _starting_values(init, normalization)
    pinned = {"sigma"} if normalization is Normalization.SIGMA else {"b0"}
    unknown = set(opts.fixed) - set(names)
    if unknown:
        raise ParamError(f"unknown fixed parameters: {', '.join(sorted(unknown))}")
    values.update({name: float(v) for name, v in opts.fixed.items()})
    pinned |= set(opts.fixed)
    free = [name for name in names if name not in pinned]

    def assemble(theta: np.ndarray) -> Dict[str, float]:
        full = dict(values)
        full.update(zip(free, map(float, theta)))
        return full

    def objective(theta: np.ndarray) -> float:
        try:
            with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
                return -filter_loglik(_spec_from(init, assemble(theta)), data).loglik
        except CarmaLevyError:
            return np.inf

    bounds = None
    if any(name in opts.lower or name in opts.upper for name in free):
        bounds = [(opts.lower.get(name), opts.upper.get(name)) for name in free]

    logger.info("Starting qmle for carma(%d,%d): %d observations, %d free parameters",
                p, q, len(data), len(free))
    theta0 = np.array([values[name] for name in free])
    try:
        search = minimize_simplex(
            objective,
            theta0,
            bounds=bounds,
            maxiter=cfg.maxiter_per_dim * max(1, len(free)),
            ftol=cfg.ftol,
        )
    except FitError as e:
        raise FitError(f"quasi-likelihood is not finite at the initial values: {e.message}",
                       best_params=dict(values), trace=e.trace) from e

    estimates = assemble(search.x)
    if not search.converged:
        raise FitError(f"quasi-likelihood search did not converge: {search.message}",
                       best_params=estimates, trace=search.trace)

    core = _spec_from(init, estimates)
    stderr = {name: 0.0 for name in names if name in pinned}
    stderr.update(standard_errors(objective, search.x, free, threads=cfg.threads))

    check = is_stationary(core)
    warnings: List[str] = []
    if check.stationary:
        logger.info("Stationarity condition is satisfied")
    else:
        message = "stationarity condition is not satisfied at the optimum; increment recovery skipped"
        logger.warning(message)
        warnings.append(message)

    recovered: Optional[IncrementSeries] = None
    noise_fit: Optional[NoiseFit] = None
    wants_increments = mode in (RecoveryMode.PARAMS_AND_INCREMENTS, RecoveryMode.INCREMENTS_ONLY)
    wants_noise = fam is not None and mode in (RecoveryMode.PARAMS_AND_INCREMENTS, RecoveryMode.PARAMS_ONLY)

    if check.stationary and (wants_increments or wants_noise):
        logger.info("Starting Estimation Increments")
        try:
            recovered = recover_increments(core, data, opts.stencil)
        except RecoveryError as e:
            logger.warning("Increment recovery failed: %s", e.message)
            warnings.append(f"increment recovery failed: {e.message}")

    if recovered is not None and wants_noise:
        series = recovered.drop(opts.drop_increments) if opts.drop_increments else recovered
        if opts.aggregation is not None:
            series = aggregate(series, opts.aggregation)
        logger.info("Starting Estimation parameter Noise")
        noise_fit = fit_noise(series, fam, None, cfg, opts.atom_eps)

    noise = noise_fit.model if noise_fit is not None else init.noise
    # recovered increments are centred, so the drift comes from the initial law
    driver_mean = init.noise.mean(1.0) if init.noise is not None else 0.0
    c0 = float(np.mean(data.values))
    if check.stationary:
        c0 -= observation_mean(core, driver_mean)
    spec_hat = core.replace(c0=c0, noise=noise)

    estimates["c0"] = c0
    if opts.estimate_c0 and check.stationary:
        stderr["c0"] = _long_run_stderr_of_mean(core, data.h, len(data))

    loglik = filter_loglik(spec_hat, data).loglik if check.stationary else -float(search.fun)
    logger.info("qmle finished: -2logL=%.6f after %d evaluations", -2.0 * loglik, search.nfev)

    return FitResult(
        spec_hat=spec_hat,
        estimates=estimates,
        stderr=stderr,
        loglik=loglik,
        stationary=check.stationary,
        recovery_mode=mode,
        normalization=normalization,
        increments=recovered if wants_increments else None,
        noise_fit=noise_fit,
        converged=search.converged,
        n_evaluations=search.nfev,
        warnings=warnings,
    )


__all__ = [
    'RecoveryMode',
    'Normalization',
    'QmleOptions',
    'FitResult',
    'coefficient_names',
    'qmle',
    'standard_errors',
    'recover_increments',
    'aggregate',
    'TimeSeries',
]
