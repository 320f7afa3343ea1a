"""
Levy-driven CARMA(p,q) models
Simulation, Kalman-filter quasi-likelihood, increment recovery and noise fitting
"""

from .carma_model import CarmaSpec, sampled_covariances, stationary_covariance
from .errors import CarmaLevyError
from .estimator import FitResult, QmleOptions, qmle
from .kalman import filter_loglik
from .levy import IncrementSeries, LevyFamily, LevyModel, fit_noise
from .recovery import aggregate, recover_increments
from .simulator import SamplingScheme, simulate
from .timeseries import TimeSeries

__all__ = [
    'CarmaSpec',
    'sampled_covariances',
    'stationary_covariance',
    'CarmaLevyError',
    'FitResult',
    'QmleOptions',
    'qmle',
    'filter_loglik',
    'IncrementSeries',
    'LevyFamily',
    'LevyModel',
    'fit_noise',
    'aggregate',
    'recover_increments',
    'SamplingScheme',
    'simulate',
    'TimeSeries',
]

__version__ = "1.0.0"
__author__ = "carma-levy contributors"
__description__ = "Simulation and three-step estimation of Levy-driven CARMA models"
