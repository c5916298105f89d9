import io
import math
import warnings

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from langevin_kit.exceptions import DimensionError, HypothesisError, HypothesisWarning, MissingOracleError
from langevin_kit.linalg import lmco_matrices
from langevin_kit.metrics import lmco_pushforward
from langevin_kit.model import (
    DiagonalGaussian,
    FiniteSumQuadratic,
    FunctionTarget,
    GaussianMeanMixture,
    IsotropicGaussian,
    MixtureTarget,
    TargetCertificate,
)
from langevin_kit.noise import GaussianNoise, SubsampledGradient, ZeroNoise
from langevin_kit.samplers import (
    ChainState,
    StepSchedule,
    compute_K1,
    lmc_ensemble,
    lmc_run,
    lmc_step,
    lmco_prime_run,
    lmco_prime_step,
    lmco_run,
    lmco_step,
    make_state,
    mlmc_ensemble,
    mlmc_run,
    nlmc_run,
    tau_scaled_run,
)


class TestComputeK1:
    def test_equal_constants_is_the_limit(self):
        # as M -> m+ the ratio tends to 0+, so its ceiling tends to 1
        assert compute_K1(5.0, 5.0, 10, 1e6) == 1
        assert compute_K1(5.0, 5.0 * (1 + 1e-9), 10, 1e6) == 1
        assert compute_K1(5.0, 5.0, 10, 1e-3) == 0

    def test_vanishing_numerator(self):
        m, M, p = 2.0, 7.0, 9
        W = math.sqrt(p) * (M / m) / math.sqrt(M + m)
        assert compute_K1(m, M, p, W) == 0

    def test_reference_value(self):
        num = math.log(11) - math.log(2) + 0.5 * math.log(30)
        expected = math.ceil(num / math.log(3))
        assert expected == 4
        assert compute_K1(10.0, 20.0, 100, 110.0) == 4

    def test_small_start_gives_zero(self):
        assert compute_K1(1.0, 10.0, 100, 0.1) == 0

    @pytest.mark.parametrize("args", [(0.0, 1.0, 1, 1.0), (2.0, 1.0, 1, 1.0), (1.0, 2.0, 0, 1.0), (1.0, 2.0, 1, -1.0)])
    def test_invalid(self, args):
        with pytest.raises(ValueError):
            compute_K1(*args)


class TestStepSchedule:
    def test_warm_up_is_constant(self):
        s = StepSchedule.theorem2(10.0, 20.0, K1=4)
        np.testing.assert_array_equal(s.steps(5), np.full(5, 2.0 / 30.0))
        assert s.step(5) == pytest.approx(2.0 / (30.0 + 20.0 / 3.0))

    def test_infinite_warm_up_is_constant(self):
        s = StepSchedule.theorem2(1.0, 3.0, K1=math.inf)
        np.testing.assert_array_equal(s.steps(100), np.full(100, 0.5))

    @given(
        m=st.floats(0.01, 10.0),
        ratio=st.floats(1.0, 100.0),
        K1=st.integers(0, 50),
    )
    @settings(max_examples=100, deadline=None)
    def test_non_increasing_and_capped(self, m, ratio, K1):
        M = m * ratio
        h = StepSchedule.theorem2(m, M, K1).steps(200)
        assert np.all(h > 0)
        assert np.all(np.diff(h) <= 0)
        assert np.all(h <= 2.0 / (m + M))

    def test_invalid(self):
        with pytest.raises(ValueError):
            StepSchedule.constant(-1.0)
        with pytest.raises(ValueError):
            StepSchedule("weird", h=1.0)


class TestLmcStep:
    def test_zero_step_is_identity(self):
        t = IsotropicGaussian(2.0, 3)
        s = make_state(t, np.ones(3), 0)
        np.testing.assert_array_equal(lmc_step(s, t, 0.0).theta, np.ones(3))

    def test_hand_expansion(self, rng):
        m, h = 3.0, 0.1
        mu = rng.standard_normal(2)
        t = IsotropicGaussian(m, mu=mu)
        theta, xi = rng.standard_normal(2), rng.standard_normal(2)
        s = lmc_step(ChainState(theta, 0, rng), t, h, xi=xi)
        expected = (1 - m * h) * theta + m * h * mu + math.sqrt(2 * h) * xi
        np.testing.assert_allclose(s.theta, expected, rtol=1e-15)
        assert s.k == 1

    def test_non_finite_gradient(self, rng):
        cert = TargetCertificate(1.0, 1.0, 1)
        t = FunctionTarget(cert, value=lambda x: 0.0, grad=lambda x: np.array([np.nan]))
        with pytest.raises(FloatingPointError):
            lmc_step(make_state(t, [0.0], 0), t, 0.1)

    def test_innovation_shape(self, rng):
        t = IsotropicGaussian(1.0, 2)
        with pytest.raises(DimensionError):
            lmc_step(make_state(t, np.zeros(2), 0), t, 0.1, xi=np.zeros(3))

    def test_distribution_after_50_steps(self):
        t = IsotropicGaussian(1.0, 1)
        h, k, n = 0.1, 50, 100_000
        X = lmc_ensemble(t, [0.0], StepSchedule.constant(h), k, n, seed=7)[:, 0]
        r = 1 - h
        var = 2 * h * (1 - r ** (2 * k)) / (1 - r**2)
        assert abs(X.mean()) <= 4 * math.sqrt(var / n)
        se_var = X.var(ddof=1) * math.sqrt(2 / (n - 1))
        assert abs(X.var(ddof=1) - var) <= 4 * se_var


class TestLmcRun:
    def test_zero_iterations(self):
        t = IsotropicGaussian(1.0, 2)
        state, trace = lmc_run(t, [1.0, 2.0], StepSchedule.constant(0.1), 0, seed=1)
        np.testing.assert_array_equal(state.theta, [1.0, 2.0])
        assert state.k == 0 and trace.ks == [0]

    def test_theorem2_warm_up_steps(self):
        t = DiagonalGaussian([10.0, 20.0])
        sched = StepSchedule.theorem2(10.0, 20.0, K1=4)
        _, trace = lmc_run(t, [0.0, 0.0], sched, 10, seed=1)
        assert trace.steps[:5] == [2.0 / 30.0] * 5
        assert trace.steps[5] < trace.steps[4]

    def test_deterministic(self):
        t = DiagonalGaussian([1.0, 2.0, 3.0])
        a = lmc_run(t, np.ones(3), StepSchedule.constant(0.2), 50, seed=11)[1]
        b = lmc_run(t, np.ones(3), StepSchedule.constant(0.2), 50, seed=11)[1]
        assert all(np.array_equal(x, y) for x, y in zip(a.thetas, b.thetas))
        c = lmc_run(t, np.ones(3), StepSchedule.constant(0.2), 50, seed=12)[1]
        assert not np.array_equal(a.thetas[-1], c.thetas[-1])

    def test_step_too_large_is_error(self):
        t = DiagonalGaussian([1.0, 2.0])
        with pytest.raises(HypothesisError):
            lmc_run(t, np.zeros(2), StepSchedule.constant(1.0), 1, seed=0)

    def test_case_b_regime_warns(self):
        t = DiagonalGaussian([1.0, 2.0])
        with pytest.warns(HypothesisWarning):
            lmc_run(t, np.zeros(2), StepSchedule.constant(0.8), 1, seed=0)

    def test_stride_and_csv(self):
        t = IsotropicGaussian(1.0, 2)
        _, trace = lmc_run(t, np.zeros(2), StepSchedule.constant(0.25), 7, seed=3, stride=3)
        assert trace.ks == [0, 3, 6, 7]
        buf = io.StringIO()
        trace.to_csv(buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "k,h_k,theta_0,theta_1"
        assert lines[1].startswith("0,0,")
        assert lines[2].startswith("3,0.25,")
        assert [float(v) for v in lines[-1].split(",")[2:]] == list(trace.thetas[-1])


class TestNoisyLmc:
    def test_zero_noise_matches_lmc(self):
        t = DiagonalGaussian([1.0, 3.0])
        a = lmc_run(t, np.ones(2), StepSchedule.constant(0.3), 40, seed=5)[1]
        b = nlmc_run(t, np.ones(2), 0.3, 40, ZeroNoise(2), seed=5)[1]
        assert all(np.array_equal(x, y) for x, y in zip(a.thetas, b.thetas))

    def test_full_batch_matches_zero_noise(self, rng):
        t = FiniteSumQuadratic(rng.uniform(0.5, 1.5, (4, 2)), rng.standard_normal((4, 2)))
        a = nlmc_run(t, np.zeros(2), 0.2, 30, ZeroNoise(2), seed=9)[1]
        b = nlmc_run(t, np.zeros(2), 0.2, 30, SubsampledGradient(t, batch_size=4), seed=9)[1]
        assert all(np.array_equal(x, y) for x, y in zip(a.thetas, b.thetas))

    def test_noise_does_not_change_innovations(self):
        """Innovations come from their own stream: a zero-variance bias only shifts the path deterministically."""
        t = IsotropicGaussian(1.0, 2)
        b = np.array([0.3, -0.1])
        h, K = 0.2, 20
        plain = nlmc_run(t, np.zeros(2), h, K, ZeroNoise(2), seed=4)[1].thetas
        biased = nlmc_run(t, np.zeros(2), h, K, GaussianNoise(b, sigma=0.0), seed=4)[1].thetas
        shift = np.zeros(2)
        for k in range(K):
            shift = (1 - h) * shift - h * b
            np.testing.assert_allclose(biased[k + 1] - plain[k + 1], shift, atol=1e-14)

    def test_constant_bias_shifts_stationary_mean(self):
        m, n = 2.0, 100_000
        b = np.array([0.4])
        t = IsotropicGaussian(m, 1)
        X = lmc_ensemble(t, [0.0], StepSchedule.constant(0.1), 200, n, seed=3, noise=GaussianNoise(b, 0.0))
        sd = X[:, 0].std(ddof=1)
        assert abs(X[:, 0].mean() - (-b[0] / m)) <= 4 * sd / math.sqrt(n)

    def test_noise_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            nlmc_run(IsotropicGaussian(1.0, 2), np.zeros(2), 0.1, 1, ZeroNoise(3), seed=0)

    def test_trace_records_noise_norms(self):
        t = IsotropicGaussian(1.0, 2)
        _, trace = nlmc_run(t, np.zeros(2), 0.1, 5, GaussianNoise([3.0, 4.0], 0.0), seed=0)
        assert trace.noise_norms == [5.0] * 5


class TestLmco:
    def test_isotropic_mean_step(self, rng):
        m, h = 2.0, 0.3
        t = IsotropicGaussian(m, 3)
        theta0 = rng.standard_normal(3)
        s = lmco_step(ChainState(theta0, 0, rng), t, h, xi=np.zeros(3))
        np.testing.assert_allclose(s.theta, math.exp(-h * m) * theta0, rtol=1e-14)

    def test_small_step_matches_lmc(self, rng):
        t = DiagonalGaussian([1.0, 4.0], rng.standard_normal(2))
        h = 1e-6
        theta, xi = rng.standard_normal(2), rng.standard_normal(2)
        a = lmco_step(ChainState(theta, 0, rng), t, h, xi=xi).theta
        b = lmc_step(ChainState(theta, 0, rng), t, h, xi=xi).theta
        # the noise scale differs at order h^{3/2}, the drift at order h^2
        assert np.linalg.norm(a - b) <= 10 * h**1.5 * (1 + np.linalg.norm(xi))

    def test_exact_law_matches_ou_recursion(self, rng):
        """Push mean and covariance through the affine step exactly and compare."""
        a = np.array([0.5, 2.0, 6.0])
        t = DiagonalGaussian(a, rng.standard_normal(3))
        h, K = 0.1, 25
        Mk, Sigma, _ = lmco_matrices(np.diag(a), h)
        A = np.eye(3) - Mk @ np.diag(a)
        theta0 = rng.standard_normal(3)
        mean, cov = theta0, np.zeros((3, 3))
        for _ in range(K):
            mean = A @ mean + Mk @ (a * t.mean)
            cov = A @ cov @ A.T + Sigma
        law = lmco_pushforward(t, theta0, h, K)
        np.testing.assert_allclose(law.mean, mean, rtol=1e-12)
        np.testing.assert_allclose(law.var, np.diag(cov), rtol=1e-12)

    def test_missing_hessian(self):
        cert = TargetCertificate(1.0, 1.0, 1)
        t = FunctionTarget(cert, value=lambda x: 0.5 * x @ x, grad=lambda x: x)
        with pytest.raises(MissingOracleError):
            lmco_run(t, [0.0], 0.1, 1, seed=0)

    def test_large_step_warns(self):
        with pytest.warns(HypothesisWarning):
            lmco_run(DiagonalGaussian([1.0, 2.0]), np.zeros(2), 0.5, 1, seed=0)


class TestLmcoPrime:
    def test_zero_hessian_reduces_to_lmc(self, rng):
        cert = TargetCertificate(1.0, 1.0, 2)
        g = np.array([0.3, -0.7])
        t = FunctionTarget(cert, value=lambda x: 0.0, grad=lambda x: g, hess=lambda x: np.zeros((2, 2)))
        theta, eta, eta2 = rng.standard_normal((3, 2))
        a = lmco_prime_step(ChainState(theta, 0, rng), t, 0.1, eta=eta, eta_prime=eta2).theta
        b = lmc_step(ChainState(theta, 0, rng), t, 0.1, xi=eta).theta
        np.testing.assert_allclose(a, b, rtol=1e-15)

    def test_drift(self, rng):
        m, h = 3.0, 0.01
        t = IsotropicGaussian(m, 2)
        theta = rng.standard_normal(2)
        new = lmco_prime_step(ChainState(theta, 0, rng), t, h, eta=np.zeros(2), eta_prime=np.zeros(2)).theta
        np.testing.assert_allclose(new - theta, -h * m * (1 - 0.5 * h * m) * theta, rtol=1e-13)

    def test_stochastic_term_covariance(self, rng):
        t = DiagonalGaussian([1.0, 3.0])
        h, n = 0.2, 20_000
        H = np.diag([1.0, 3.0])
        eta, eta2 = rng.standard_normal((2, n, 2))
        # a step from the minimizer has no drift: only the stochastic term remains
        start = ChainState(np.zeros(2), 0, rng)
        Z = np.stack([lmco_prime_step(start, t, h, eta=e, eta_prime=f).theta for e, f in zip(eta, eta2)])
        target = 2 * h * (np.eye(2) - h * H + h * h * H @ H / 3)
        prods = Z[:, :, None] * Z[:, None, :]
        se = prods.std(axis=0, ddof=1) / math.sqrt(n)
        assert np.all(np.abs(prods.mean(axis=0) - target) <= 3 * se + 1e-15)

    def test_large_step_warns(self):
        with pytest.warns(HypothesisWarning):
            lmco_prime_run(DiagonalGaussian([1.0, 2.0]), np.zeros(2), 0.5, 1, seed=0)


class TestMixture:
    def test_single_component_is_lmc(self):
        comp = DiagonalGaussian([1.0, 3.0], [0.5, -0.5])
        mix = MixtureTarget(lambda rng: 0, lambda eta: comp, comp.certificate)
        state, trace, eta = mlmc_run(mix, np.zeros(2), 60, seed=21, W2_0=5.0)
        sched = StepSchedule.theorem2(1.0, 3.0, compute_K1(1.0, 3.0, 2, 5.0))
        ref = lmc_run(comp, np.zeros(2), sched, 60, seed=21)[1]
        assert all(np.array_equal(x, y) for x, y in zip(trace.thetas, ref.thetas))
        assert trace.steps == ref.steps

    def test_seed_fixes_component_and_path(self):
        mix = GaussianMeanMixture([0.5, 0.5], [[-3.0], [3.0]], [1.0])
        a = mlmc_run(mix, [0.0], 30, seed=8, W2_0=4.0)
        b = mlmc_run(mix, [0.0], 30, seed=8, W2_0=4.0)
        assert a[2] == b[2]
        np.testing.assert_array_equal(a[0].theta, b[0].theta)

    def test_moments_of_two_component_mixture(self):
        mix = GaussianMeanMixture([0.3, 0.7], [[-2.0, 1.0], [1.0, 0.0]], [1.0, 2.0])
        X, etas = mlmc_ensemble(mix, np.zeros(2), 1000, 100_000, seed=13, W2_0=5.0)
        mean, var = mix.moments()
        n = X.shape[0]
        dev = (X - X.mean(axis=0)) ** 2
        assert np.all(np.abs(X.mean(axis=0) - mean) <= 4 * X.std(axis=0, ddof=1) / math.sqrt(n))
        assert np.all(np.abs(X.var(axis=0, ddof=1) - var) <= 4 * dev.std(axis=0, ddof=1) / math.sqrt(n))
        assert set(etas) == {0, 1}


class TestTauScaling:
    def test_gradient_descent_contraction(self, rng):
        a = np.array([1.0, 2.5, 4.0])
        t = DiagonalGaussian(a, rng.standard_normal(3))
        theta0 = rng.standard_normal(3)
        for K in (1, 5, 20):
            theta = tau_scaled_run(t, 0.0, "lmc", theta0, K=K).theta
            lhs = np.linalg.norm(theta - t.mean)
            assert lhs <= (1 - t.m / t.M) ** K * np.linalg.norm(theta0 - t.mean) * (1 + 1e-14)

    def test_newton_one_step(self, rng):
        t = DiagonalGaussian([1.0, 7.0], rng.standard_normal(2))
        theta = tau_scaled_run(t, 0.0, "lmco", rng.standard_normal(2), K=1).theta
        np.testing.assert_allclose(theta, t.mean, rtol=1e-14)

    def test_vanishing_temperature_gap(self, rng):
        t = DiagonalGaussian([1.0, 2.0])
        theta0 = np.array([2.0, -1.0])
        gd = tau_scaled_run(t, 0.0, "lmc", theta0, K=10, seed=3).theta
        gaps = [np.linalg.norm(tau_scaled_run(t, tau, "lmc", theta0, K=10, seed=3).theta - gd) for tau in (1.0, 0.1, 0.01)]
        assert gaps[0] > gaps[1] > gaps[2]
        np.testing.assert_allclose(np.array(gaps) / np.sqrt([1.0, 0.1, 0.01]), gaps[0], rtol=1e-10)

    def test_negative_tau(self):
        with pytest.raises(ValueError):
            tau_scaled_run(IsotropicGaussian(1.0, 1), -1.0, "lmc", [0.0])
