"""Targets ``pi ~ exp(-f)`` with declared convexity/smoothness constants.

A target bundles a potential ``f`` with its oracles (value, gradient, optionally
Hessian) and a :class:`TargetCertificate` holding the constants ``m``, ``M``
and optionally ``M2``.  Constants are declared by the user and spot-checked by
:func:`certify`; they are never estimated.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.special import expit

from .exceptions import DimensionError, MissingOracleError

__all__ = [
    "TargetCertificate",
    "Target",
    "FunctionTarget",
    "DiagonalGaussian",
    "IsotropicGaussian",
    "FiniteSumQuadratic",
    "RidgeLogistic",
    "ScaledTarget",
    "MixtureTarget",
    "GaussianMeanMixture",
    "CertReport",
    "Violation",
    "evaluate",
    "certify",
    "random_probe_pairs",
    "initial_w2_bound",
]


@dataclass(frozen=True)
class TargetCertificate:
    """Declared constants of a strongly log-concave target.

    Parameters
    ----------
    m : float
        Strong convexity constant, ``m > 0``.
    M : float
        Gradient Lipschitz constant, ``M >= m``.
    p : int
        Dimension.
    M2 : float, optional
        Hessian Lipschitz constant (spectral norm), ``M2 >= 0``.
    """

    m: float
    M: float
    p: int
    M2: float | None = None

    def __post_init__(self):
        if not self.m > 0:
            raise ValueError(f"m must be positive, got {self.m!r}")
        if not self.M >= self.m:
            raise ValueError(f"need M >= m, got m={self.m!r}, M={self.M!r}")
        if int(self.p) != self.p or self.p < 1:
            raise ValueError(f"p must be a positive integer, got {self.p!r}")
        if self.M2 is not None and not self.M2 >= 0:
            raise ValueError(f"M2 must be non-negative, got {self.M2!r}")
        object.__setattr__(self, "p", int(self.p))

    @property
    def condition_number(self) -> float:
        return self.M / self.m


class Target:
    """Base class for potentials ``f`` on ``R^p``.

    Subclasses implement :meth:`value` and :meth:`grad`, and :meth:`hess` when a
    Hessian oracle exists.  ``minimizer`` and ``lower_bound`` are ``None`` when
    unknown.
    """

    certificate: TargetCertificate
    minimizer: np.ndarray | None = None
    lower_bound: float | None = None

    @property
    def p(self) -> int:
        return self.certificate.p

    @property
    def m(self) -> float:
        return self.certificate.m

    @property
    def M(self) -> float:
        return self.certificate.M

    @property
    def M2(self) -> float | None:
        return self.certificate.M2

    @property
    def has_hessian(self) -> bool:
        return False

    def check_point(self, theta) -> np.ndarray:
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.p,):
            raise DimensionError(f"expected a vector of shape ({self.p},), got {theta.shape}")
        return theta

    def value(self, theta) -> float:
        raise NotImplementedError

    def grad(self, theta) -> np.ndarray:
        raise NotImplementedError

    def hess(self, theta) -> np.ndarray:
        raise MissingOracleError(f"{type(self).__name__} has no Hessian oracle")

    def hvp(self, theta, v) -> np.ndarray:
        """Hessian-vector product; defaults to a dense product with :meth:`hess`."""
        return self.hess(theta) @ np.asarray(v, dtype=float)

    def grad_batch(self, thetas) -> np.ndarray:
        """Gradients at the rows of an ``(n, p)`` array."""
        return np.stack([self.grad(t) for t in np.asarray(thetas, dtype=float)])


class FunctionTarget(Target):
    """Target built from user-supplied callables."""

    def __init__(
        self,
        certificate: TargetCertificate,
        value: Callable,
        grad: Callable,
        hess: Callable | None = None,
        hvp: Callable | None = None,
        minimizer=None,
        lower_bound: float | None = None,
    ):
        self.certificate = certificate
        self._value = value
        self._grad = grad
        self._hess = hess
        self._hvp = hvp
        self.minimizer = None if minimizer is None else self.check_point(minimizer)
        self.lower_bound = lower_bound

    @property
    def has_hessian(self) -> bool:
        return self._hess is not None or self._hvp is not None

    def value(self, theta):
        return float(self._value(self.check_point(theta)))

    def grad(self, theta):
        return np.asarray(self._grad(self.check_point(theta)), dtype=float)

    def hess(self, theta):
        if self._hess is None:
            return super().hess(theta)
        return np.asarray(self._hess(self.check_point(theta)), dtype=float)

    def hvp(self, theta, v):
        if self._hvp is not None:
            return np.asarray(self._hvp(self.check_point(theta), v), dtype=float)
        return super().hvp(theta, v)


class DiagonalGaussian(Target):
    """Quadratic potential ``f(x) = 0.5 * sum_i a_i (x_i - mu_i)^2``.

    The target law is ``N(mu, diag(1/a))``.  Default constants are
    ``m = min(a)``, ``M = max(a)``, ``M2 = 0``; pass ``certificate`` to declare
    different ones (e.g. to exercise :func:`certify`).
    """

    def __init__(self, a, mu=None, certificate: TargetCertificate | None = None):
        a = np.atleast_1d(np.asarray(a, dtype=float))
        if a.ndim != 1 or np.any(a <= 0):
            raise ValueError("curvatures must be a 1-d array of positive numbers")
        mu = np.zeros_like(a) if mu is None else np.asarray(mu, dtype=float)
        if mu.shape != a.shape:
            raise DimensionError(f"mean has shape {mu.shape}, curvatures {a.shape}")
        self.curvatures = a
        self.mean = mu
        self.certificate = certificate or TargetCertificate(
            m=float(a.min()), M=float(a.max()), p=a.size, M2=0.0
        )
        if self.certificate.p != a.size:
            raise DimensionError("certificate dimension does not match curvatures")
        self.minimizer = mu
        self.lower_bound = 0.0

    @property
    def has_hessian(self):
        return True

    @property
    def variances(self) -> np.ndarray:
        return 1.0 / self.curvatures

    def value(self, theta):
        d = self.check_point(theta) - self.mean
        return 0.5 * float(np.dot(self.curvatures * d, d))

    def grad(self, theta):
        return self.curvatures * (self.check_point(theta) - self.mean)

    def grad_batch(self, thetas):
        return self.curvatures * (np.asarray(thetas, dtype=float) - self.mean)

    def hess(self, theta):
        self.check_point(theta)
        return np.diag(self.curvatures)

    def hvp(self, theta, v):
        return self.curvatures * np.asarray(v, dtype=float)

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``n`` exact samples from the target law."""
        return self.mean + rng.standard_normal((n, self.p)) / np.sqrt(self.curvatures)


class IsotropicGaussian(DiagonalGaussian):
    """``f(x) = (m/2) ||x - mu||^2``."""

    def __init__(self, m: float, p: int | None = None, mu=None):
        if mu is None:
            if p is None:
                raise ValueError("give either p or mu")
            mu = np.zeros(p)
        mu = np.atleast_1d(np.asarray(mu, dtype=float))
        if p is not None and mu.size != p:
            raise DimensionError("len(mu) != p")
        super().__init__(np.full(mu.size, float(m)), mu)


class FiniteSumQuadratic(DiagonalGaussian):
    """Average of ``n`` diagonal quadratics, ``f = (1/n) sum_i l_i``.

    ``l_i(x) = 0.5 * sum_j a[i, j] (x_j - c[i, j])^2``.  The sum is itself a
    diagonal quadratic (plus a constant), so every exact-law utility for
    :class:`DiagonalGaussian` applies.  Per-component gradients are exposed for
    :class:`~langevin_kit.noise.SubsampledGradient`.
    """

    def __init__(self, a, c):
        a = np.asarray(a, dtype=float)
        c = np.asarray(c, dtype=float)
        if a.ndim != 2 or a.shape != c.shape:
            raise DimensionError("a and c must be arrays of identical shape (n, p)")
        if np.any(a <= 0):
            raise ValueError("component curvatures must be positive")
        abar = a.mean(axis=0)
        center = (a * c).sum(axis=0) / a.sum(axis=0)
        super().__init__(abar, center)
        self.component_curvatures = a
        self.component_centers = c
        self._offset = float(np.mean(0.5 * np.sum(a * (c - center) ** 2, axis=1)))

    @property
    def n_components(self) -> int:
        return self.component_curvatures.shape[0]

    def value(self, theta):
        return super().value(theta) + self._offset

    def component_grads(self, theta) -> np.ndarray:
        """Gradients of every ``l_i`` at ``theta``, shape ``(n, p)``."""
        theta = self.check_point(theta)
        return self.component_curvatures * (theta - self.component_centers)


class RidgeLogistic(Target):
    """Ridge-penalised logistic regression potential.

    ``f(x) = sum_i log(1 + exp(-y_i <x_i, x>)) + (lam/2) ||x||^2`` with labels
    in ``{-1, +1}`` (``{0, 1}`` labels are mapped to ``{-1, +1}``).

    ``m = lam`` and ``M = lam + lambda_max(X^T X) / 4``, computed once.  ``M2``
    must be declared by the caller if a second-order method is used.
    """

    def __init__(self, X, y, lam: float, M2: float | None = None):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        y = np.asarray(y, dtype=float).ravel()
        if y.size != X.shape[0]:
            raise DimensionError("X and y disagree on the number of observations")
        if set(np.unique(y)) <= {0.0, 1.0}:
            y = 2.0 * y - 1.0
        if not set(np.unique(y)) <= {-1.0, 1.0}:
            raise ValueError("labels must be in {-1, +1} or {0, 1}")
        if not lam > 0:
            raise ValueError("ridge parameter must be positive")
        self.X = X
        self.y = y
        self.lam = float(lam)
        top = float(np.linalg.eigvalsh(X.T @ X)[-1]) if X.size else 0.0
        self.certificate = TargetCertificate(
            m=self.lam, M=self.lam + 0.25 * max(top, 0.0), p=X.shape[1], M2=M2
        )
        self.lower_bound = 0.0

    @classmethod
    def from_csv(cls, path, lam: float, M2: float | None = None):
        """Load a dataset with the label in the first column, one row per observation."""
        with open(path, newline="") as fh:
            rows = [[float(v) for v in row] for row in csv.reader(fh) if row]
        data = np.asarray(rows, dtype=float)
        return cls(data[:, 1:], data[:, 0], lam, M2=M2)

    @property
    def has_hessian(self):
        return True

    @property
    def n_components(self) -> int:
        return self.X.shape[0]

    def _margins(self, theta):
        return self.y * (self.X @ theta)

    def value(self, theta):
        theta = self.check_point(theta)
        return float(np.logaddexp(0.0, -self._margins(theta)).sum() + 0.5 * self.lam * theta @ theta)

    def grad(self, theta):
        theta = self.check_point(theta)
        w = -self.y * expit(-self._margins(theta))
        return self.X.T @ w + self.lam * theta

    def hess(self, theta):
        theta = self.check_point(theta)
        s = expit(self._margins(theta))
        return (self.X.T * (s * (1 - s))) @ self.X + self.lam * np.eye(self.p)

    def hvp(self, theta, v):
        theta = self.check_point(theta)
        s = expit(self._margins(theta))
        return self.X.T @ (s * (1 - s) * (self.X @ v)) + self.lam * np.asarray(v, dtype=float)

    def component_grads(self, theta) -> np.ndarray:
        """Gradients of ``l_i = n log(1 + exp(-y_i <x_i, x>)) + (lam/2)||x||^2``.

        These satisfy ``f = (1/n) sum_i l_i``.
        """
        theta = self.check_point(theta)
        n = self.n_components
        w = -self.y * expit(-self._margins(theta))
        return n * w[:, None] * self.X + self.lam * theta


class ScaledTarget(Target):
    """The tempered potential ``f / tau`` for ``tau > 0``.

    Constants scale as ``(m/tau, M/tau, M2/tau)``; the minimizer is unchanged.
    """

    def __init__(self, base: Target, tau: float):
        if not tau > 0:
            raise ValueError("tau must be positive")
        self.base = base
        self.tau = float(tau)
        c = base.certificate
        self.certificate = TargetCertificate(
            m=c.m / tau, M=c.M / tau, p=c.p, M2=None if c.M2 is None else c.M2 / tau
        )
        self.minimizer = base.minimizer
        self.lower_bound = None if base.lower_bound is None else base.lower_bound / tau

    @property
    def has_hessian(self):
        return self.base.has_hessian

    def value(self, theta):
        return self.base.value(theta) / self.tau

    def grad(self, theta):
        return self.base.grad(theta) / self.tau

    def hess(self, theta):
        return self.base.hess(theta) / self.tau

    def hvp(self, theta, v):
        return self.base.hvp(theta, v) / self.tau


class MixtureTarget:
    """Mixture ``pi(x) = int pi_1(x | eta) pi_0(d eta)`` of strongly log-concave laws.

    Parameters
    ----------
    sample_mixing : callable
        ``rng -> eta``, a draw from the mixing law ``pi_0``.
    component : callable
        ``eta -> Target``; every component must carry ``certificate``.
    certificate : TargetCertificate
        The shared constants.
    """

    def __init__(self, sample_mixing: Callable, component: Callable, certificate: TargetCertificate):
        self._sample_mixing = sample_mixing
        self._component = component
        self.certificate = certificate

    def sample_mixing(self, rng: np.random.Generator):
        return self._sample_mixing(rng)

    def component(self, eta) -> Target:
        target = self._component(eta)
        if target.certificate != self.certificate:
            raise ValueError(
                f"component {eta!r} has certificate {target.certificate}, "
                f"mixture declares {self.certificate}"
            )
        return target


class GaussianMeanMixture(MixtureTarget):
    """Finite mixture of Gaussians sharing the diagonal precision ``a``."""

    def __init__(self, weights, means, a):
        weights = np.asarray(weights, dtype=float)
        means = np.atleast_2d(np.asarray(means, dtype=float))
        a = np.asarray(a, dtype=float)
        if weights.ndim != 1 or weights.size != means.shape[0]:
            raise DimensionError("one weight per mixture component is required")
        if np.any(weights < 0) or not np.isclose(weights.sum(), 1.0):
            raise ValueError("weights must be a probability vector")
        if a.shape != (means.shape[1],):
            raise DimensionError("curvature vector must have length p")
        self.weights = weights
        self.means = means
        self.a = a
        cert = TargetCertificate(m=float(a.min()), M=float(a.max()), p=a.size, M2=0.0)
        super().__init__(
            lambda rng: int(rng.choice(weights.size, p=weights)),
            lambda eta: DiagonalGaussian(a, means[eta], certificate=cert),
            cert,
        )

    def moments(self) -> tuple[np.ndarray, np.ndarray]:
        """Exact mean and per-coordinate variance of the mixture."""
        mean = self.weights @ self.means
        second = self.weights @ (self.means**2) + 1.0 / self.a
        return mean, second - mean**2


def evaluate(target: Target, theta) -> tuple[float, np.ndarray]:
    """Return ``(f(theta), grad f(theta))``."""
    theta = target.check_point(theta)
    return target.value(theta), target.grad(theta)


@dataclass(frozen=True)
class Violation:
    kind: str  # "strong_convexity", "lipschitz" or "hessian_lipschitz"
    index: int
    lhs: float
    rhs: float


@dataclass
class CertReport:
    n_pairs: int
    violations: list[Violation] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    def count(self, kind: str) -> int:
        return sum(v.kind == kind for v in self.violations)


def random_probe_pairs(p: int, n: int, rng: np.random.Generator, scale: float = 1.0):
    """``n`` pairs of independent ``N(0, scale^2 I_p)`` points."""
    pts = scale * rng.standard_normal((n, 2, p))
    return [(x, y) for x, y in pts]


def certify(target: Target, probe_pairs: Sequence, tolerance: float = 1e-9) -> CertReport:
    """Spot-check the declared constants of ``target`` on pairs of points.

    For every pair ``(x, y)`` checks

    * ``f(x) - f(y) - <grad f(y), x - y> >= ((m - tolerance)/2) ||x - y||^2``
    * ``||grad f(x) - grad f(y)|| <= (M + tolerance) ||x - y||``
    * ``||hess f(x) - hess f(y)||_2 <= (M2 + tolerance) ||x - y||`` when ``M2``
      is declared and a Hessian is available.

    Violations are returned in the report, never raised.
    """
    if len(probe_pairs) < 1:
        raise ValueError("need at least one probe pair")
    cert = target.certificate
    report = CertReport(n_pairs=len(probe_pairs))
    check_hess = cert.M2 is not None and target.has_hessian
    for i, (x, y) in enumerate(probe_pairs):
        x = target.check_point(x)
        y = target.check_point(y)
        d = x - y
        dist2 = float(d @ d)
        gx, gy = target.grad(x), target.grad(y)
        gap = target.value(x) - target.value(y) - float(gy @ d)
        rhs = 0.5 * (cert.m - tolerance) * dist2
        if gap < rhs:
            report.violations.append(Violation("strong_convexity", i, gap, rhs))
        lip = float(np.linalg.norm(gx - gy))
        rhs = (cert.M + tolerance) * np.sqrt(dist2)
        if lip > rhs:
            report.violations.append(Violation("lipschitz", i, lip, rhs))
        if check_hess:
            hdiff = float(np.linalg.norm(target.hess(x) - target.hess(y), 2))
            rhs = (cert.M2 + tolerance) * np.sqrt(dist2)
            if hdiff > rhs:
                report.violations.append(Violation("hessian_lipschitz", i, hdiff, rhs))
    return report


def initial_w2_bound(target: Target, theta0) -> float:
    """Upper bound on ``W2(delta_theta0, pi)`` for a deterministic start.

    Two routes are used when available and the smaller value is returned:

    * known minimizer: ``W2^2 <= ||theta0 - theta*||^2 + p/m``;
    * known lower bound ``L <= f``: ``W2^2 <= (2 (f(theta0) - L) + p) / m``.
    """
    theta0 = target.check_point(theta0)
    p, m = target.p, target.m
    candidates = []
    if target.minimizer is not None:
        d = theta0 - target.minimizer
        candidates.append(float(d @ d) + p / m)
    if target.lower_bound is not None:
        candidates.append((2.0 * (target.value(theta0) - target.lower_bound) + p) / m)
    if not candidates:
        raise MissingOracleError("initial W2 bound needs a known minimizer or a lower bound on f")
    return float(np.sqrt(min(candidates)))
