"""
Tests for CARMA specifications, stationarity, kernel, covariances and the spectral form
"""

import numpy as np
import pytest
from scipy import integrate

from src.carma_model import (
    CarmaSpec,
    autocovariance,
    build_state_space,
    canonical_states,
    describe_state_space,
    is_stationary,
    kernel,
    ma_polynomial,
    observation_mean,
    sampled_covariances,
    spectral,
    stationary_covariance,
    stationary_mean,
)
from src.errors import DomainError, NonStationaryError, SpecError
from src.levy import LevyModel
from src.linalg import mat_exp


class TestCarmaSpec:
    def test_padding(self, carma31):
        assert np.array_equal(carma31.b, [1.0, 0.23, 0.0])
        assert np.array_equal(carma31.ma_coefficients, [1.0, 0.23])

    def test_arrays_are_read_only(self, carma31):
        with pytest.raises(ValueError):
            carma31.a[0] = 1.0

    @pytest.mark.parametrize("fields", [
        dict(p=2, q=2, a=[1.0, 2.0], b=[1.0, 1.0, 1.0]),
        dict(p=2, q=1, a=[1.0], b=[1.0, 1.0]),
        dict(p=2, q=1, a=[1.0, 2.0], b=[1.0, 0.0]),
        dict(p=3, q=0, a=[1.0, 2.0, 3.0], b=[1.0, 0.5]),
        dict(p=2, q=1, a=[1.0, 2.0], b=[1.0, 1.0], sigma=0.0),
        dict(p=2, q=1, a=[1.0, np.nan], b=[1.0, 1.0]),
        dict(p=0, q=0, a=[], b=[1.0]),
    ])
    def test_invariants(self, fields):
        with pytest.raises(SpecError):
            CarmaSpec(**fields)

    def test_dict_round_trip(self, carma31):
        noise = LevyModel.create("NormalInverseGaussian", alpha=1.0, beta=0.0, delta=1.0, mu=0.0)
        spec = carma31.replace(sigma=2.0, c0=0.5, noise=noise)
        assert CarmaSpec.from_dict(spec.to_dict()) == spec

    def test_from_dict_defaults(self):
        spec = CarmaSpec.from_dict({"p": 3, "q": 1, "a": [4, 4.75, 1.5], "b": [1, 0.23]})
        assert spec.sigma == 1.0
        assert spec.c0 == 0.0
        assert spec.noise is None

    def test_from_dict_missing_fields(self):
        with pytest.raises(SpecError):
            CarmaSpec.from_dict({"p": 3, "a": [4, 4.75, 1.5]})


class TestStateSpace:
    def test_companion_layout(self, carma31):
        ss = build_state_space(carma31)
        assert np.array_equal(ss.A[-1], [-1.5, -4.75, -4.0])
        assert np.array_equal(ss.e, [0.0, 0.0, 1.0])

    def test_car1(self):
        ss = build_state_space(CarmaSpec(p=1, q=0, a=[0.8], b=[1.0]))
        assert np.array_equal(ss.A, [[-0.8]])
        assert np.array_equal(ss.e, [1.0])

    def test_coefficients_round_trip(self, carma31):
        a, b = build_state_space(carma31).coefficients()
        assert np.array_equal(a, carma31.a)
        assert np.array_equal(b, carma31.b)

    def test_describe(self, carma31):
        text = describe_state_space(carma31)
        assert "dX2" in text
        assert text.splitlines()[-1].startswith("Y = 0 + 1*(")


class TestStationarity:
    def test_reference_model(self, carma31):
        check = is_stationary(carma31)
        assert check.stationary
        assert check.distinct
        assert np.allclose(check.lambdas, [-2.0, -1.5, -0.5])

    def test_small_sample_model(self, carma21):
        assert is_stationary(carma21).stationary

    def test_unstable(self):
        assert not is_stationary(CarmaSpec(p=1, q=0, a=[-1.0], b=[1.0])).stationary

    def test_boundary_is_not_stationary(self):
        assert not is_stationary(CarmaSpec(p=2, q=0, a=[0.0, 1.0], b=[1.0])).stationary


class TestKernel:
    def test_car1(self):
        spec = CarmaSpec(p=1, q=0, a=[0.8], b=[1.0])
        t = np.array([0.0, 0.5, 2.0])
        assert np.allclose(kernel(spec, t), np.exp(-0.8 * t), atol=1e-14)

    def test_negative_time(self, carma31):
        assert kernel(carma31, -0.3) == 0.0

    def test_spectral_representation(self, carma31):
        dec = spectral(carma31)
        t = np.linspace(0.1, 5.0, 50)
        expansion = np.real(np.exp(np.outer(t, dec.lambdas)) @ dec.alphas)
        assert np.allclose(kernel(carma31, t), expansion, atol=1e-9)

    def test_spectral_representation_random(self, stable_specs):
        t = np.linspace(0.0, 10.0, 21)
        for spec in stable_specs(5):
            dec = spectral(spec)
            expansion = np.real(np.exp(np.outer(t, dec.lambdas)) @ dec.alphas)
            assert np.allclose(kernel(spec, t), expansion, atol=1e-9)


class TestAutocovariance:
    def test_car1(self):
        theta, sigma = 0.8, 1.3
        spec = CarmaSpec(p=1, q=0, a=[theta], b=[1.0], sigma=sigma)
        h = np.array([0.0, 0.4, 3.0])
        expected = sigma ** 2 * np.exp(-theta * h) / (2 * theta)
        assert np.allclose(autocovariance(spec, h), expected, rtol=1e-12)

    def test_bounded_by_variance(self, carma31):
        gamma = autocovariance(carma31, np.linspace(0.0, 10.0, 41))
        assert np.all(gamma[0] >= np.abs(gamma))

    @pytest.mark.parametrize("lag", [0.0, 0.5, 2.0])
    def test_kernel_convolution(self, carma31, lag):
        spec = carma31.replace(sigma=1.7)

        def integrand(u):
            return kernel(spec, u) * kernel(spec, u + lag)

        value, _ = integrate.quad(integrand, 0.0, np.inf, epsabs=1e-12, limit=200)
        assert autocovariance(spec, lag) == pytest.approx(spec.sigma ** 2 * value, abs=1e-6)

    def test_non_stationary(self):
        with pytest.raises(NonStationaryError):
            autocovariance(CarmaSpec(p=1, q=0, a=[-0.5], b=[1.0]), 1.0)


class TestSampledCovariances:
    def test_car1(self):
        theta, sigma, h = 0.8, 1.3, 0.25
        spec = CarmaSpec(p=1, q=0, a=[theta], b=[1.0], sigma=sigma)
        Qinf, Q = sampled_covariances(spec, h)
        assert Qinf[0, 0] == pytest.approx(sigma ** 2 / (2 * theta), rel=1e-12)
        assert Q[0, 0] == pytest.approx(sigma ** 2 * (1 - np.exp(-2 * theta * h)) / (2 * theta), rel=1e-10)

    @pytest.mark.parametrize("h", [0.01, 0.1, 1.0])
    def test_quadrature_oracle(self, stable_specs, h):
        for spec in stable_specs(10):
            ss = build_state_space(spec)

            def integrand(u):
                column = mat_exp(ss.A, u) @ ss.e
                return spec.sigma ** 2 * np.outer(column, column)

            expected, _ = integrate.quad_vec(integrand, 0.0, h, epsabs=1e-13, epsrel=1e-12)
            _, Q = sampled_covariances(spec, h)
            assert np.max(np.abs(Q - expected)) <= 1e-8

    def test_reference_model_quadrature(self, carma31):
        ss = build_state_space(carma31)
        expected, _ = integrate.quad_vec(
            lambda u: np.outer(mat_exp(ss.A, u) @ ss.e, mat_exp(ss.A, u) @ ss.e), 0.0, 0.025, epsabs=1e-14
        )
        assert np.max(np.abs(sampled_covariances(carma31, 0.025).Q - expected)) <= 1e-8

    def test_symmetric_psd(self, stable_specs):
        for spec in stable_specs(10):
            for h in (0.01, 0.5, 3.0):
                Qinf, Q = sampled_covariances(spec, h)
                for M in (Qinf, Q):
                    assert np.max(np.abs(M - M.T)) <= 1e-12
                    assert np.min(np.linalg.eigvalsh(M)) >= -1e-10

    def test_vanishes_with_step(self, carma31):
        assert np.max(np.abs(sampled_covariances(carma31, 1e-9).Q)) <= 1e-8

    def test_driver_variance_scales(self, carma31):
        Qinf = stationary_covariance(carma31)
        assert np.allclose(stationary_covariance(carma31, driver_variance=2.5), 2.5 * Qinf)

    @pytest.mark.parametrize("h", [0.0, -1.0, np.nan])
    def test_invalid_step(self, carma31, h):
        with pytest.raises(DomainError):
            sampled_covariances(carma31, h)


class TestSpectral:
    def test_car1(self):
        dec = spectral(CarmaSpec(p=1, q=0, a=[0.8], b=[2.5]))
        assert np.allclose(dec.alphas, [2.5])

    def test_lambda_tilde(self, carma31):
        dec = spectral(carma31)
        assert np.allclose(np.diag(dec.LambdaTilde), 1.0 + 0.23 * dec.lambdas)
        assert np.allclose(np.diag(dec.LambdaTilde), ma_polynomial(carma31, dec.lambdas))

    def test_canonical_states_are_car1(self, carma31):
        """Each canonical component of e^{Ah}X equals e^{lambda h} times the component of X"""
        dec = spectral(carma31)
        rng = np.random.default_rng(5)
        X = rng.standard_normal((4, 3))
        h = 0.3
        moved = (mat_exp(build_state_space(carma31).A, h) @ X.T).T
        Z, Zh = canonical_states(carma31, X, dec), canonical_states(carma31, moved, dec)
        assert np.allclose(Zh, Z * np.exp(dec.lambdas * h), atol=1e-12)

    def test_canonical_sum_reproduces_observation(self, carma31):
        rng = np.random.default_rng(6)
        X = rng.standard_normal((5, 3))
        Z = canonical_states(carma31, X)
        assert np.allclose(np.real(Z.sum(axis=1)), X @ carma31.b, atol=1e-12)


class TestStationaryMean:
    def test_level_component(self, carma31):
        mean = stationary_mean(carma31, driver_mean=0.6)
        assert np.allclose(mean, [0.6 / 1.5, 0.0, 0.0])

    def test_matches_drift_balance(self, carma31):
        ss = build_state_space(carma31)
        mean = stationary_mean(carma31, driver_mean=0.6)
        assert np.allclose(ss.A @ mean + 0.6 * ss.e, 0.0, atol=1e-14)

    def test_noise_default(self, carma31):
        noise = LevyModel.create("Brownian", mu=0.3, sigma=1.0)
        spec = carma31.replace(noise=noise, sigma=2.0, c0=1.0)
        assert observation_mean(spec) == pytest.approx(1.0 + 2.0 * 0.3 / 1.5)
        assert observation_mean(carma31) == 0.0
