"""
Tests for increment recovery and aggregation
"""

import math

import numpy as np
import pytest

from src.carma_model import CarmaSpec
from src.errors import DataError, NonStationaryError, ParamError, RecoveryError
from src.levy import IncrementSeries, LevyModel, sample_increments
from src.recovery import Stencils, aggregate, recover_increments
from src.simulator import SamplingScheme, simulate
from src.timeseries import TimeSeries


class TestRecoverIncrements:
    def test_car1_trapezoidal_inversion(self):
        theta, sigma, b0, h = 0.8, 1.3, 2.0, 0.1
        spec = CarmaSpec(p=1, q=0, a=[theta], b=[b0], sigma=sigma)
        y = np.random.default_rng(0).standard_normal(50).cumsum()
        recovered = recover_increments(spec, TimeSeries(t0=0.0, h=h, values=y))
        ystar = y - y.mean()
        expected = (ystar[1:] - ystar[:-1] + theta * 0.5 * h * (ystar[1:] + ystar[:-1])) / (sigma * b0)
        assert len(recovered) == 49
        assert recovered.burn_in == 0
        assert np.allclose(recovered.values, expected, atol=1e-12)

    def test_car1_matches_euler_inversion(self, brownian):
        spec = CarmaSpec(p=1, q=0, a=[0.8], b=[1.0])
        path = simulate(spec, brownian, SamplingScheme(10.0, 1000), seed=1)
        recovered = recover_increments(spec, path.as_time_series())
        # O(h) apart: theta h (X_n - X_{n-1}) / 2 and the mean correction
        assert np.max(np.abs(recovered.values - path.noise.values)) <= 0.02

    @pytest.mark.parametrize("stencil,lost", [(Stencils.FORWARD, None), (Stencils.CENTRAL, 1)])
    def test_count_formula(self, carma31, brownian, stencil, lost):
        path = simulate(carma31, brownian, SamplingScheme(50.0, 2000), seed=2)
        recovered = recover_increments(carma31, path.as_time_series(), stencil)
        expected_loss = carma31.p - carma31.q if lost is None else lost
        assert len(recovered) == path.y.size - expected_loss

    def test_reference_count(self, carma31, brownian):
        path = simulate(carma31, brownian, SamplingScheme(400.0, 16000), seed=3)
        recovered = recover_increments(carma31, path.as_time_series())
        assert abs(len(recovered) - 15997) <= 3

    def test_round_trip_gaussian(self, carma21, brownian):
        path = simulate(carma21, brownian, SamplingScheme(400.0, 16000), seed=4)
        recovered = recover_increments(carma21, path.as_time_series())
        start = recovered.burn_in
        injected = path.noise.values[start:len(recovered)]
        kept = recovered.values[start:]
        assert np.corrcoef(injected, kept)[0, 1] >= 0.95
        assert abs(np.mean(kept)) <= 3 * np.std(kept) / np.sqrt(kept.size)

    def test_burn_in_from_ma_root(self, carma21, brownian):
        path = simulate(carma21, brownian, SamplingScheme(100.0, 2000), seed=4)
        recovered = recover_increments(carma21, path.as_time_series())
        # b(z) = 1 + z has its root at -1
        assert recovered.burn_in == math.ceil(5.0 / (1.0 * 0.05))

    def test_driver_units_under_scale(self, carma21, brownian):
        path = simulate(carma21.replace(sigma=3.0), brownian, SamplingScheme(100.0, 4000), seed=5)
        recovered = recover_increments(carma21.replace(sigma=3.0), path.as_time_series())
        kept = recovered.after_burn_in().values
        assert np.std(kept) == pytest.approx(np.sqrt(0.025), rel=0.05)

    def test_compound_poisson_jumps_survive(self, carma21):
        noise = LevyModel.create("cp", **{"lambda": 1.0, "mu": 0.0, "sigma": 1.0})
        path = simulate(carma21, noise, SamplingScheme(200.0, 4000), seed=6)
        full = recover_increments(carma21, path.as_time_series())
        recovered = full.after_burn_in()
        injected = path.noise.values[full.burn_in:len(full)]
        assert np.mean(np.abs(recovered.values) < 0.02) > 0.5
        assert np.corrcoef(injected, recovered.values)[0, 1] >= 0.95

    def test_central_stencil_keeps_points(self, carma31, brownian):
        path = simulate(carma31, brownian, SamplingScheme(20.0, 800), seed=7)
        recovered = recover_increments(carma31, path.as_time_series(), Stencils.CENTRAL)
        assert len(recovered) == 800

    def test_unknown_stencil(self, carma31):
        with pytest.raises(ParamError):
            recover_increments(carma31, TimeSeries(t0=0.0, h=0.1, values=np.zeros(20)), "backward")

    def test_non_stationary(self):
        spec = CarmaSpec(p=1, q=0, a=[-0.3], b=[1.0])
        with pytest.raises(NonStationaryError):
            recover_increments(spec, TimeSeries(t0=0.0, h=0.1, values=np.zeros(20)))

    def test_no_real_eigenvalue(self):
        spec = CarmaSpec(p=2, q=0, a=[1.0, 4.0], b=[1.0])
        y = np.random.default_rng(8).standard_normal(20)
        with pytest.raises(RecoveryError):
            recover_increments(spec, TimeSeries(t0=0.0, h=0.1, values=y))


class TestAggregate:
    def test_blocks(self):
        values = np.random.default_rng(1).standard_normal(4000)
        series = IncrementSeries(h=0.05, values=values)
        result = aggregate(series, 1.0)
        assert len(result) == 200
        assert result.h == 1.0
        assert np.allclose(result.values, values.reshape(200, 20).sum(axis=1), atol=1e-12)
        assert result.values.sum() == pytest.approx(values.sum(), abs=1e-10)

    def test_partial_block_dropped(self):
        series = IncrementSeries(h=0.05, values=np.ones(3998))
        result = aggregate(series, 1.0)
        assert len(result) == 199
        assert np.allclose(result.values, 20.0)

    def test_identity(self):
        series = IncrementSeries(h=0.5, values=[1.0, 2.0])
        assert aggregate(series, 0.5) is series

    def test_burn_in_is_rescaled(self):
        series = IncrementSeries(h=0.1, values=np.ones(100), burn_in=25)
        assert aggregate(series, 1.0).burn_in == 3

    @pytest.mark.parametrize("target", [0.07, 0.0, -1.0])
    def test_not_a_multiple(self, target):
        with pytest.raises(DataError):
            aggregate(IncrementSeries(h=0.05, values=np.ones(100)), target)

    def test_too_short(self):
        with pytest.raises(DataError):
            aggregate(IncrementSeries(h=0.05, values=np.ones(10)), 1.0)

    def test_aggregation_composes(self):
        series = IncrementSeries(h=0.05, values=np.random.default_rng(2).standard_normal(4000), burn_in=30)
        stepwise = aggregate(aggregate(series, 0.25), 1.0)
        direct = aggregate(series, 1.0)
        assert len(stepwise) == len(direct) == 200
        assert np.allclose(stepwise.values, direct.values, atol=1e-12)
        assert stepwise.burn_in == direct.burn_in == 2


@pytest.mark.slow
class TestRefinement:
    @pytest.mark.parametrize("seed", [31, 32, 33])
    def test_correlation_improves_with_finer_sampling(self, carma21, brownian, seed):
        terminal, coarse_n = 200.0, 2000
        fine_n = 4 * coarse_n
        fine_noise = sample_increments(brownian, terminal / fine_n, fine_n, seed=seed).values
        coarse_noise = fine_noise.reshape(coarse_n, 4).sum(axis=1)

        def correlation(n: int, noise: np.ndarray) -> float:
            path = simulate(carma21, brownian, SamplingScheme(terminal, n), increments=noise)
            recovered = recover_increments(carma21, path.as_time_series())
            start = recovered.burn_in
            injected = path.noise.values[start:len(recovered)]
            return float(np.corrcoef(injected, recovered.values[start:])[0, 1])

        assert correlation(fine_n, fine_noise) >= correlation(coarse_n, coarse_noise)
