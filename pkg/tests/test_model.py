import math

import numpy as np
import pytest

from langevin_kit.exceptions import DimensionError, MissingOracleError
from langevin_kit.model import (
    DiagonalGaussian,
    FiniteSumQuadratic,
    FunctionTarget,
    GaussianMeanMixture,
    IsotropicGaussian,
    MixtureTarget,
    RidgeLogistic,
    ScaledTarget,
    TargetCertificate,
    certify,
    evaluate,
    initial_w2_bound,
    random_probe_pairs,
)

from conftest import central_difference


def _ridge(rng, n=3, p=2, lam=0.5):
    X = rng.standard_normal((n, p))
    y = np.array([1, -1, 1] * n)[:n]
    return RidgeLogistic(X, y, lam)


def _finite_sum(rng, n=6, p=3):
    a = rng.uniform(0.5, 2.0, size=(n, p))
    c = rng.standard_normal((n, p))
    return FiniteSumQuadratic(a, c)


class TestCertificate:
    def test_valid(self):
        c = TargetCertificate(m=1.0, M=4.0, p=3)
        assert c.condition_number == 4.0
        assert c.M2 is None

    @pytest.mark.parametrize(
        "kwargs",
        [
            dict(m=0.0, M=1.0, p=1),
            dict(m=2.0, M=1.0, p=1),
            dict(m=1.0, M=1.0, p=0),
            dict(m=1.0, M=1.0, p=1, M2=-1.0),
        ],
    )
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            TargetCertificate(**kwargs)


class TestEvaluate:
    def test_minimizer_of_isotropic(self):
        value, grad = evaluate(IsotropicGaussian(m=1.0, p=3), np.zeros(3))
        assert value == 0.0
        np.testing.assert_array_equal(grad, np.zeros(3))

    def test_isotropic_off_center(self):
        value, grad = evaluate(IsotropicGaussian(m=2.0, p=2), np.array([1.0, 0.0]))
        assert value == 1.0
        np.testing.assert_array_equal(grad, [2.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionError):
            evaluate(IsotropicGaussian(m=1.0, p=3), np.zeros(2))

    def test_ridge_logistic_at_origin(self, rng):
        t = _ridge(rng)
        value, grad = evaluate(t, np.zeros(2))
        assert value == pytest.approx(3 * math.log(2), rel=1e-14)
        np.testing.assert_allclose(grad, central_difference(t.value, np.zeros(2)), atol=1e-8)

    def test_ridge_logistic_zero_one_labels(self, rng):
        X = rng.standard_normal((4, 2))
        t01 = RidgeLogistic(X, [0, 1, 1, 0], 1.0)
        tpm = RidgeLogistic(X, [-1, 1, 1, -1], 1.0)
        x = rng.standard_normal(2)
        assert t01.value(x) == tpm.value(x)

    def test_ridge_constants(self, rng):
        X = rng.standard_normal((10, 3))
        t = RidgeLogistic(X, np.sign(rng.standard_normal(10)), 0.3)
        assert t.m == 0.3
        assert t.M == pytest.approx(0.3 + 0.25 * np.linalg.norm(X, 2) ** 2)

    def test_ridge_from_csv(self, tmp_path, rng):
        X = rng.standard_normal((5, 2))
        y = np.array([1, 0, 1, 1, 0])
        path = tmp_path / "data.csv"
        np.savetxt(path, np.column_stack([y, X]), delimiter=",")
        t = RidgeLogistic.from_csv(path, lam=1.0)
        np.testing.assert_allclose(t.X, X)
        np.testing.assert_array_equal(t.y, 2 * y - 1)


BUILTINS = {
    "isotropic": lambda rng: IsotropicGaussian(m=3.0, mu=rng.standard_normal(4)),
    "diagonal": lambda rng: DiagonalGaussian([1.0, 5.0, 2.0], rng.standard_normal(3)),
    "finite_sum": _finite_sum,
    "ridge": lambda rng: RidgeLogistic(rng.standard_normal((20, 3)), np.sign(rng.standard_normal(20)), 0.7),
}


@pytest.mark.parametrize("name", sorted(BUILTINS))
class TestBuiltinTargets:
    def test_gradient_matches_finite_differences(self, name, rng):
        t = BUILTINS[name](rng)
        for _ in range(100):
            x = rng.standard_normal(t.p)
            g = t.grad(x)
            fd = central_difference(t.value, x)
            assert np.linalg.norm(g - fd) <= 1e-5 * (1 + np.linalg.norm(g))

    def test_certify_declared_constants(self, name, rng):
        t = BUILTINS[name](rng)
        report = certify(t, random_probe_pairs(t.p, 1000, rng, scale=3.0), tolerance=1e-9)
        assert report.ok, report.violations[:3]

    def test_hessian_symmetric_in_spectrum(self, name, rng):
        t = BUILTINS[name](rng)
        H = t.hess(rng.standard_normal(t.p))
        np.testing.assert_allclose(H, H.T)
        lam = np.linalg.eigvalsh(H)
        assert lam[0] >= t.m - 1e-12 and lam[-1] <= t.M + 1e-12

    def test_hvp_matches_hessian(self, name, rng):
        t = BUILTINS[name](rng)
        x, v = rng.standard_normal(t.p), rng.standard_normal(t.p)
        np.testing.assert_allclose(t.hvp(x, v), t.hess(x) @ v, rtol=1e-12, atol=1e-12)

    def test_grad_batch_matches_rows(self, name, rng):
        t = BUILTINS[name](rng)
        X = rng.standard_normal((5, t.p))
        np.testing.assert_allclose(t.grad_batch(X), np.stack([t.grad(x) for x in X]), rtol=1e-12)


class TestQuadratic:
    def test_grad_equals_hvp_of_offset(self, rng):
        t = DiagonalGaussian(rng.uniform(1, 3, 5), rng.standard_normal(5))
        x = rng.standard_normal(5)
        np.testing.assert_array_equal(t.grad(x), t.hvp(x, x - t.mean))

    def test_default_certificate(self):
        t = DiagonalGaussian([1.0, 5.0])
        assert (t.m, t.M, t.M2, t.p) == (1.0, 5.0, 0.0, 2)

    def test_rejects_nonpositive_curvature(self):
        with pytest.raises(ValueError):
            DiagonalGaussian([1.0, 0.0])

    def test_finite_sum_mean_of_components(self, rng):
        t = _finite_sum(rng)
        x = rng.standard_normal(t.p)
        np.testing.assert_allclose(t.component_grads(x).mean(axis=0), t.grad(x), atol=1e-13)

    def test_ridge_components_average_to_gradient(self, rng):
        t = BUILTINS["ridge"](rng)
        x = rng.standard_normal(t.p)
        np.testing.assert_allclose(t.component_grads(x).mean(axis=0), t.grad(x), atol=1e-12)


class TestCertify:
    def test_isotropic_tight(self, rng):
        t = IsotropicGaussian(m=3.0, p=2)
        assert certify(t, random_probe_pairs(2, 50, rng)).ok

    def test_axis_pairs(self):
        t = DiagonalGaussian([1.0, 5.0])
        pairs = [(np.zeros(2), np.array([1.0, 0.0])), (np.zeros(2), np.array([0.0, 1.0]))]
        assert certify(t, pairs).ok

    def test_overstated_m_is_reported(self):
        t = DiagonalGaussian([1.0, 5.0], certificate=TargetCertificate(m=6.0, M=6.0, p=2))
        pairs = [(np.zeros(2), np.array([1.0, 0.0]))]
        report = certify(t, pairs)
        assert not report.ok
        assert report.count("strong_convexity") == 1
        assert report.violations[0].index == 0

    def test_understated_M_is_reported(self):
        t = DiagonalGaussian([1.0, 5.0], certificate=TargetCertificate(m=1.0, M=2.0, p=2))
        report = certify(t, [(np.zeros(2), np.array([0.0, 1.0]))])
        assert report.count("lipschitz") == 1

    def test_hessian_lipschitz_checked_when_declared(self, rng):
        X = rng.standard_normal((20, 2))
        t = RidgeLogistic(X, np.sign(rng.standard_normal(20)), 0.5, M2=1e-6)
        report = certify(t, random_probe_pairs(2, 50, rng))
        assert report.count("hessian_lipschitz") > 0


class TestInitialW2Bound:
    def test_at_minimizer(self):
        assert initial_w2_bound(IsotropicGaussian(m=1.0, p=4), np.zeros(4)) == 2.0

    def test_minimizer_route(self):
        t = IsotropicGaussian(m=10.0, p=100)
        theta0 = np.zeros(100)
        theta0[0] = 10.0
        # the lower-bound route gives sqrt((10*100 + 100)/10) = sqrt(110) as well
        assert initial_w2_bound(t, theta0) == pytest.approx(math.sqrt(110), rel=1e-14)

    def test_lower_bound_route(self):
        cert = TargetCertificate(m=2.0, M=2.0, p=4)
        t = FunctionTarget(cert, value=lambda x: 8.0, grad=lambda x: np.zeros(4), lower_bound=0.0)
        assert initial_w2_bound(t, np.zeros(4)) == pytest.approx(math.sqrt(10))

    def test_smaller_route_wins(self):
        cert = TargetCertificate(m=2.0, M=2.0, p=4)
        t = FunctionTarget(
            cert, value=lambda x: 8.0, grad=lambda x: np.zeros(4), minimizer=np.zeros(4), lower_bound=0.0
        )
        assert initial_w2_bound(t, np.zeros(4)) == pytest.approx(math.sqrt(2.0))

    def test_no_route(self):
        cert = TargetCertificate(m=1.0, M=1.0, p=1)
        t = FunctionTarget(cert, value=lambda x: 0.0, grad=lambda x: x)
        with pytest.raises(MissingOracleError):
            initial_w2_bound(t, np.zeros(1))


class TestScaledAndMixture:
    def test_scaled_target(self, rng):
        base = DiagonalGaussian([1.0, 4.0])
        s = ScaledTarget(base, 0.5)
        x = rng.standard_normal(2)
        assert s.value(x) == base.value(x) / 0.5
        assert (s.m, s.M) == (2.0, 8.0)
        np.testing.assert_allclose(s.hess(x), base.hess(x) / 0.5)

    def test_mixture_rejects_mismatched_component(self):
        cert = TargetCertificate(m=1.0, M=1.0, p=1)
        mix = MixtureTarget(lambda rng: 0, lambda eta: IsotropicGaussian(2.0, 1), cert)
        with pytest.raises(ValueError):
            mix.component(0)

    def test_gaussian_mean_mixture_moments(self):
        mix = GaussianMeanMixture([0.25, 0.75], [[-2.0], [2.0]], [4.0])
        mean, var = mix.moments()
        assert mean[0] == pytest.approx(1.0)
        # within-component 1/4 plus between-component 0.25*9 + 0.75*1
        assert var[0] == pytest.approx(0.25 + 3.0)
