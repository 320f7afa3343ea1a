"""
Sample-path generation for Levy-driven CARMA processes on an equally spaced grid
"""

import logging
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .carma_model import CarmaSpec, build_state_space, is_stationary, sampled_covariances
from .errors import DataError, NumericalError, ParamError, UnsupportedError
from .levy import IncrementSeries, LevyFamily, LevyModel, sample_increments
from .linalg import mat_exp
from .timeseries import TimeSeries

logger = logging.getLogger(__name__)


class SimulationMethods:
    """Available discretization schemes"""
    EULER = "euler"   # X_{k+1} = X_k + A X_k h + e dL_k
    EXACT = "exact"   # Gaussian transition, Brownian driver only


@dataclass(frozen=True)
class SamplingScheme:
    """Grid 0, h, ..., T with h = T / n"""

    terminal: float
    n: int

    def __post_init__(self) -> None:
        if not (np.isfinite(self.terminal) and self.terminal > 0):
            raise ParamError("terminal time must be positive", terminal=self.terminal)
        if int(self.n) != self.n or self.n < 2:
            raise ParamError("number of steps must be an integer >= 2", n=self.n)
        object.__setattr__(self, "terminal", float(self.terminal))
        object.__setattr__(self, "n", int(self.n))

    @property
    def h(self) -> float:
        return self.terminal / self.n

    def times(self) -> np.ndarray:
        return self.h * np.arange(self.n + 1)


@dataclass(frozen=True, eq=False)
class SimulatedPath:
    """
    Observed path y (n+1 points), latent states x ((n+1) x p) and the
    driver increments consumed between consecutive grid points
    """

    scheme: SamplingScheme
    y: np.ndarray
    x: np.ndarray
    noise: IncrementSeries
    spec: CarmaSpec
    model: LevyModel
    method: str = SimulationMethods.EULER

    def times(self) -> np.ndarray:
        return self.scheme.times()

    def as_time_series(self) -> TimeSeries:
        return TimeSeries(t0=0.0, h=self.scheme.h, values=self.y)


def _psd_factor(M: np.ndarray) -> np.ndarray:
    """Lower factor L with L L' = M, falling back to an eigen factor for singular M"""
    try:
        return np.linalg.cholesky(M)
    except np.linalg.LinAlgError:
        w, V = np.linalg.eigh(0.5 * (M + M.T))
        return V * np.sqrt(np.clip(w, 0.0, None))


def _first_blowup(x: np.ndarray) -> Optional[int]:
    bad = ~np.all(np.isfinite(x), axis=1)
    return int(np.argmax(bad)) if np.any(bad) else None


def _euler_states(A: np.ndarray, e: np.ndarray, x0: np.ndarray, h: float, dL: np.ndarray) -> np.ndarray:
    p = A.shape[0]
    step = np.eye(p) + h * A
    states = np.empty((dL.size + 1, p))
    states[0] = x0
    current = x0.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for k, increment in enumerate(dL):
            current = step @ current + e * increment
            states[k + 1] = current
    return states


def _exact_states(spec: CarmaSpec, model: LevyModel, x0: np.ndarray, h: float, steps: int,
                  rng: np.random.Generator):
    """Exact Gaussian transition drawn jointly with the Brownian increment it integrates"""
    ss = build_state_space(spec)
    p = spec.p
    mu = model.params["mu"]
    s2 = model.params["sigma"] ** 2

    unit = spec.replace(sigma=1.0, c0=0.0)
    Q = sampled_covariances(unit, h).Q
    Phi = mat_exp(ss.A, h)

    augmented = np.zeros((p + 1, p + 1))
    augmented[:p, :p] = ss.A
    augmented[:p, p] = ss.e
    m = mat_exp(augmented, h)[:p, p]

    joint = np.empty((p + 1, p + 1))
    joint[:p, :p] = Q
    joint[:p, p] = joint[p, :p] = m
    joint[p, p] = h
    factor = _psd_factor(s2 * joint)
    drift = mu * np.append(m, h)

    draws = rng.standard_normal((steps, p + 1)) @ factor.T + drift
    states = np.empty((steps + 1, p))
    states[0] = x0
    current = x0.copy()
    with np.errstate(over="ignore", invalid="ignore"):
        for k in range(steps):
            current = Phi @ current + draws[k, :p]
            states[k + 1] = current
    return states, draws[:, p]


def simulate(
    spec: CarmaSpec,
    model: Optional[LevyModel] = None,
    scheme: SamplingScheme = SamplingScheme(terminal=100.0, n=1000),
    seed: Optional[int] = 0,
    method: str = SimulationMethods.EULER,
    x0: Optional[Sequence[float]] = None,
    burn_in: int = 0,
    increments: Optional[Sequence[float]] = None,
) -> SimulatedPath:
    """
    Simulate Y = c0 + sigma b'X with dX = AX dt + e dL on the sampling grid

    Args:
        spec: CARMA specification
        model: Driving Levy law; defaults to spec.noise, then to Brownian(0, 1)
        scheme: Sampling grid
        seed: Seed of the private random generator
        method: "euler" or "exact" (Brownian driver only)
        x0: Initial state, zero by default
        burn_in: Leading steps simulated and then discarded
        increments: Explicit driver increments (n + burn_in of them) for Euler

    Returns:
        SimulatedPath whose noise holds exactly the increments consumed after burn-in

    Raises:
        UnsupportedError: For exact simulation with a non-Brownian driver
        NumericalError: If the state stops being finite, with the step index
    """
    if model is None:
        model = spec.noise if spec.noise is not None else LevyModel.create(LevyFamily.BROWNIAN, mu=0.0, sigma=1.0)
    if burn_in < 0:
        raise ParamError("burn_in must be non-negative", burn_in=burn_in)
    if method not in (SimulationMethods.EULER, SimulationMethods.EXACT):
        raise UnsupportedError(f"unknown simulation method: {method}", method=method)

    check = is_stationary(spec)
    if not check.stationary:
        logger.warning("Simulating a non-stationary CARMA(%d,%d); max Re(lambda)=%g",
                       spec.p, spec.q, float(np.max(check.lambdas.real)))

    h = scheme.h
    steps = scheme.n + burn_in
    start = np.zeros(spec.p) if x0 is None else np.asarray(x0, dtype=float).ravel()
    if start.size != spec.p:
        raise DataError("initial state must have length p", p=spec.p, length=int(start.size))

    if method == SimulationMethods.EXACT:
        if model.family is not LevyFamily.BROWNIAN:
            raise UnsupportedError("exact simulation is only available for a Brownian driver",
                                   family=model.family.value)
        if increments is not None:
            raise UnsupportedError("explicit increments are only supported by the Euler scheme")
        states, dL = _exact_states(spec, model, start, h, steps, np.random.default_rng(seed))
    else:
        if increments is None:
            dL = sample_increments(model, h, steps, seed).values
        else:
            dL = np.asarray(increments, dtype=float).ravel()
            if dL.size != steps:
                raise DataError("explicit increments must cover n + burn_in steps",
                                expected=steps, length=int(dL.size))
        ss = build_state_space(spec)
        states = _euler_states(ss.A, ss.e, start, h, dL)

    if (bad := _first_blowup(states)) is not None:
        raise NumericalError("simulated state is no longer finite", step=bad)

    states = states[burn_in:]
    consumed = np.array(dL[burn_in:], dtype=float)
    y = spec.c0 + spec.sigma * (states @ spec.b)
    logger.info("Simulated CARMA(%d,%d) path: %d steps of h=%g (%s, %s noise)",
                spec.p, spec.q, scheme.n, h, method, model.family.value)

    return SimulatedPath(
        scheme=scheme,
        y=y,
        x=states,
        noise=IncrementSeries(h=h, values=consumed),
        spec=spec,
        model=model,
        method=method,
    )


__all__ = [
    'SimulationMethods',
    'SamplingScheme',
    'SimulatedPath',
    'simulate',
]
