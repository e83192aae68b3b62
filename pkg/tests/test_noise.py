import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from uibo.kernels import GaussianInput, SEKernelParams, expected_rkhs_value, se_kernel
from uibo.noise import (
    NoiseConfig,
    execute_query,
    pinsker_bound,
    se_lipschitz_constant,
    subgaussian_sigma_bounded,
    subgaussian_sigma_gaussian,
)
from uibo.objectives import BenchmarkObjective, eval_objective, sample_rkhs_objective

UNIT_SQUARE = [[0.0, 1.0], [0.0, 1.0]]
PARAMS = SEKernelParams(1.0, [0.1, 0.1])


def make_objective(seed=5):
    return BenchmarkObjective("rkhs_expansion", UNIT_SQUARE,
                              sample_rkhs_objective(seed, 30, UNIT_SQUARE, PARAMS))


class TestNoiseConfig:
    def test_isotropic_defaults(self):
        cfg = NoiseConfig.isotropic(2, exec_std=0.1, obs_sigma=0.1)
        assert np.allclose(cfg.exec_cov, 0.01 * np.eye(2))
        assert np.allclose(cfg.model_cov, 0.01 * np.eye(2))
        # localisation std defaults to half the execution std
        assert np.allclose(cfg.loc_cov, 0.0025 * np.eye(2))

    def test_rejects_negative_obs_sigma(self):
        with pytest.raises(ValueError):
            NoiseConfig.isotropic(2, obs_sigma=-0.1)

    def test_rejects_indefinite_covariance(self):
        with pytest.raises(ValueError):
            NoiseConfig(exec_cov=[[-1.0, 0.0], [0.0, 1.0]],
                        model_cov=np.eye(2), loc_cov=np.eye(2), obs_sigma=0.0)


class TestExecuteQuery:
    def test_noiseless_channel_is_exact(self):
        obj = make_objective()
        cfg = NoiseConfig.isotropic(2, exec_std=0.0, obs_sigma=0.0, loc_std=0.0)
        rng = np.random.default_rng(0)
        target = np.array([0.4, 0.6])
        out = execute_query(target, obj, cfg, rng)
        assert np.array_equal(out.true_location, target)
        assert out.observation == eval_objective(obj, target)
        assert out.loc_estimate.is_dirac
        assert np.array_equal(out.loc_estimate.mean, target)

    def test_empirical_standard_deviations(self):
        obj = make_objective()
        cfg = NoiseConfig.isotropic(2, exec_std=0.1, obs_sigma=0.1)
        rng = np.random.default_rng(1)
        target = np.array([0.5, 0.5])
        n = 100_000
        exec_dev = np.empty((n, 2))
        loc_dev = np.empty((n, 2))
        for i in range(n):
            out = execute_query(target, obj, cfg, rng)
            exec_dev[i] = out.true_location - target
            loc_dev[i] = out.loc_estimate.mean - out.true_location
        assert np.allclose(exec_dev.std(axis=0, ddof=1), 0.1, atol=0.003)
        assert np.allclose(loc_dev.std(axis=0, ddof=1), 0.05, atol=0.002)
        assert np.allclose(exec_dev.mean(axis=0), 0.0, atol=0.002)

    def test_loc_estimate_carries_configured_covariance(self):
        obj = make_objective()
        cfg = NoiseConfig.isotropic(2, exec_std=0.1, obs_sigma=0.1)
        out = execute_query([0.2, 0.8], obj, cfg, np.random.default_rng(2))
        assert np.array_equal(out.loc_estimate.covariance, cfg.loc_cov)


class TestSubgaussianConstants:
    def test_gaussian_formula(self):
        assert subgaussian_sigma_gaussian(1.0, 1.0, np.zeros((2, 2))) == 0.0
        val = subgaussian_sigma_gaussian(1.0, 1.0, 0.01 * np.eye(2))
        assert val == pytest.approx(np.sqrt(0.02), abs=1e-12)

    def test_bounded_formula(self):
        assert subgaussian_sigma_bounded(1.0, 1.0, [0.0, 0.0]) == 0.0
        val = subgaussian_sigma_bounded(1.0, 1.0, [0.2, 0.2])
        assert val == pytest.approx(0.5 * np.sqrt(0.08), abs=1e-12)

    def test_linear_scaling(self):
        cov = 0.02 * np.eye(3)
        base = subgaussian_sigma_gaussian(1.0, 2.0, cov)
        assert subgaussian_sigma_gaussian(2.0, 2.0, cov) == pytest.approx(2 * base)
        assert subgaussian_sigma_gaussian(1.0, 4.0, cov) == pytest.approx(2 * base)
        base_b = subgaussian_sigma_bounded(1.0, 2.0, [0.1, 0.3])
        assert subgaussian_sigma_bounded(2.0, 2.0, [0.1, 0.3]) == pytest.approx(2 * base_b)

    def test_rejects_negative_arguments(self):
        with pytest.raises(ValueError):
            subgaussian_sigma_gaussian(-1.0, 1.0, np.eye(2))
        with pytest.raises(ValueError):
            subgaussian_sigma_bounded(1.0, 1.0, [-0.1])

    @settings(max_examples=50, deadline=None)
    @given(st.floats(0.0, 10.0), st.floats(0.0, 10.0), st.floats(0.001, 2.0))
    def test_gaussian_constant_scales_with_both_factors(self, b, lip, var):
        cov = var * np.eye(2)
        val = subgaussian_sigma_gaussian(b, lip, cov)
        assert val == pytest.approx(b * lip * np.sqrt(2.0 * var), rel=1e-12)
        assert subgaussian_sigma_gaussian(2.0 * b, lip, cov) == pytest.approx(
            2.0 * val, rel=1e-12)

    def test_mgf_envelope_small(self):
        # single-configuration version of the large Monte Carlo check
        f = sample_rkhs_objective(41, 30, UNIT_SQUARE, PARAMS)
        cov = 0.005 * np.eye(2)
        mean = np.array([0.5, 0.5])
        sigma_f = subgaussian_sigma_gaussian(f.norm_b, se_lipschitz_constant(PARAMS), cov)
        expected = expected_rkhs_value(f, GaussianInput(mean, cov))
        draws = np.random.default_rng(8).multivariate_normal(mean, cov, size=200_000)
        centred = f.evaluate_many(draws) - expected
        for lam in (-2.0, -1.0, -0.5, 0.5, 1.0, 2.0):
            mgf = np.mean(np.exp(lam * centred))
            assert mgf <= 1.05 * np.exp(0.5 * lam * lam * sigma_f * sigma_f)


class TestLipschitzConstant:
    def test_values(self):
        assert se_lipschitz_constant(SEKernelParams(1.0, [1.0, 1.0])) == 1.0
        assert se_lipschitz_constant(SEKernelParams(1.0, [0.1, 0.1])) == pytest.approx(10.0)
        assert se_lipschitz_constant(SEKernelParams(4.0, [0.5, 0.2])) == pytest.approx(10.0)

    def test_finite_difference_oracle(self):
        # cross second derivative of k at x = x' via central differences
        params = SEKernelParams(1.0, [0.1, 0.25])
        x = np.array([0.3, 0.7])
        h = 1e-4
        for i, ell in enumerate([0.1, 0.25]):
            e = np.zeros(2)
            e[i] = h
            num = (se_kernel(x + e, x + e, params) - se_kernel(x + e, x - e, params)
                   - se_kernel(x - e, x + e, params) + se_kernel(x - e, x - e, params))
            fd = num / (4.0 * h * h)
            assert fd == pytest.approx(1.0 / ell ** 2, rel=1e-4)


class TestPinskerBound:
    def test_equal_covariances_exact_zero(self):
        cov = np.array([[0.02, 0.004], [0.004, 0.03]])
        assert pinsker_bound(1.7, cov, cov) == 0.0

    def test_scalar_formula(self):
        val = pinsker_bound(1.0, [[2.0]], [[1.0]])
        expected = 0.5 * np.sqrt(0.5 - 1.0 + np.log(2.0))
        assert val == pytest.approx(expected, abs=1e-12)

    def test_rotation_invariance(self):
        rng = np.random.default_rng(9)
        theta = 0.7
        rot = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
        for _ in range(10):
            a = rng.normal(size=(2, 2))
            b = rng.normal(size=(2, 2))
            shat = a @ a.T + 0.05 * np.eye(2)
            sq = b @ b.T + 0.05 * np.eye(2)
            plain = pinsker_bound(1.3, shat, sq)
            rotated = pinsker_bound(1.3, rot @ shat @ rot.T, rot @ sq @ rot.T)
            assert rotated == pytest.approx(plain, abs=1e-10)

    def test_rejects_singular(self):
        with pytest.raises(ValueError):
            pinsker_bound(1.0, np.zeros((2, 2)), np.eye(2))

    def test_scales_linearly_in_norm(self):
        shat = 2.0 * np.eye(2)
        sq = np.eye(2)
        assert pinsker_bound(2.0, shat, sq) == pytest.approx(
            2.0 * pinsker_bound(1.0, shat, sq))

    def test_bounds_mc_expectation_gap_small(self):
        # five-instance version of the large Monte Carlo validation
        rng = np.random.default_rng(10)
        for i in range(5):
            f = sample_rkhs_objective(50 + i, 30, UNIT_SQUARE, PARAMS)
            mean = rng.uniform(0.2, 0.8, 2)
            a = rng.normal(size=(2, 2)) * 0.1
            b = rng.normal(size=(2, 2)) * 0.1
            sq = a @ a.T + 0.005 * np.eye(2)
            shat = b @ b.T + 0.005 * np.eye(2)
            bound = pinsker_bound(f.norm_b, shat, sq)
            n = 100_000
            vq = f.evaluate_many(rng.multivariate_normal(mean, sq, size=n))
            vh = f.evaluate_many(rng.multivariate_normal(mean, shat, size=n))
            gap = abs(vq.mean() - vh.mean())
            se = np.sqrt(vq.var(ddof=1) / n + vh.var(ddof=1) / n)
            assert gap <= bound + 3.0 * se
