"""Exact laws of Langevin chains on Gaussian targets and Wasserstein-2 distances.

On a diagonal quadratic potential every coordinate of an LMC or Ozaki chain
evolves as a scalar affine recursion driven by Gaussian noise, so a Gaussian
(or Dirac) start stays Gaussian with diagonal covariance.  These laws give the
exact ``W2(nu_k, pi)`` against which the guarantees are checked.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linear_sum_assignment

from .exceptions import DimensionError
from .model import DiagonalGaussian, Target
from .noise import GaussianNoise, NoiseModel, ZeroNoise
from .samplers import StepSchedule

__all__ = [
    "GaussianLaw",
    "target_law",
    "lmc_pushforward",
    "lmco_pushforward",
    "gaussian_w2",
    "empirical_w2",
    "MomentReport",
    "moment_report",
    "MAX_EMPIRICAL_N",
]

MAX_EMPIRICAL_N = 4096


@dataclass(frozen=True)
class GaussianLaw:
    """Gaussian with diagonal covariance; zero variances denote point masses."""

    mean: np.ndarray
    var: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        var = np.atleast_1d(np.asarray(self.var, dtype=float))
        if mean.shape != var.shape or mean.ndim != 1:
            raise DimensionError("mean and var must be vectors of equal length")
        if np.any(var < 0):
            raise ValueError("variances must be non-negative")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "var", var)

    @property
    def p(self) -> int:
        return self.mean.size

    @property
    def degenerate(self) -> bool:
        """True if some coordinate is a point mass."""
        return bool(np.any(self.var == 0))

    @classmethod
    def dirac(cls, x) -> "GaussianLaw":
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return cls(x, np.zeros_like(x))

    def sample(self, n: int, rng: np.random.Generator) -> np.ndarray:
        return self.mean + np.sqrt(self.var) * rng.standard_normal((n, self.p))


def _require_quadratic(target):
    if not isinstance(target, DiagonalGaussian):
        raise TypeError(f"closed-form laws need a diagonal quadratic target, got {type(target).__name__}")


def target_law(target: DiagonalGaussian) -> GaussianLaw:
    """The target ``pi = N(mu, diag(1/a))``."""
    _require_quadratic(target)
    return GaussianLaw(target.mean, 1.0 / target.curvatures)


def _start(target, theta0) -> GaussianLaw:
    if isinstance(theta0, GaussianLaw):
        if theta0.p != target.p:
            raise DimensionError(f"initial law has dimension {theta0.p}, target {target.p}")
        return theta0
    return GaussianLaw.dirac(target.check_point(theta0))


def _noise_terms(noise, p):
    if noise is None or isinstance(noise, ZeroNoise):
        return np.zeros(p), 0.0
    if isinstance(noise, GaussianNoise):
        if noise.p != p:
            raise DimensionError(f"noise model has dimension {noise.p}, target {p}")
        return noise.bias, noise.sigma
    raise TypeError(f"no closed-form law for noise model {type(noise).__name__}")


def lmc_pushforward(
    target: DiagonalGaussian,
    theta0,
    schedule,
    K: int,
    noise: NoiseModel | None = None,
    full: bool = False,
):
    """Exact law of the ``K``-th (noisy) LMC iterate on a diagonal quadratic.

    Per coordinate with curvature ``a`` and offset ``e = mean - mu``::

        e <- (1 - h a) e - h b,    v <- (1 - h a)^2 v + 2h + h^2 sigma^2

    where ``b`` and ``sigma`` are the bias and standard deviation of a
    :class:`GaussianNoise` (both zero without noise).

    Parameters
    ----------
    theta0 : array_like or GaussianLaw
        Starting point (Dirac) or starting Gaussian law.
    schedule : StepSchedule or float
        Step sizes; a float means a constant step.
    full : bool
        If true, return the list of laws at ``k = 0, ..., K``.
    """
    _require_quadratic(target)
    if K < 0:
        raise ValueError("K must be non-negative")
    if not isinstance(schedule, StepSchedule):
        schedule = StepSchedule.constant(schedule)
    a = target.curvatures
    mu = target.mean
    b, sigma = _noise_terms(noise, target.p)
    law = _start(target, theta0)
    e = law.mean - mu
    v = law.var.copy()
    path = [law]
    for k in range(K):
        h = schedule.step(k)
        r = 1.0 - h * a
        e = r * e - h * b
        v = r * r * v + 2.0 * h + h * h * sigma**2
        if full:
            path.append(GaussianLaw(mu + e, v))
    if full:
        return path
    return GaussianLaw(mu + e, v)


def lmco_pushforward(target: DiagonalGaussian, theta0, h: float, K: int, full: bool = False):
    """Exact law of the ``K``-th Ozaki iterate: the OU transition per coordinate.

    ``e <- exp(-h a) e``,  ``v <- exp(-2 h a) v + (1 - exp(-2 h a)) / a``.
    The variance is propagated as its deviation from ``1/a`` so that a
    stationary coordinate stays exactly stationary.
    """
    _require_quadratic(target)
    if K < 0:
        raise ValueError("K must be non-negative")
    if not h > 0:
        raise ValueError("step size must be positive")
    a = target.curvatures
    mu = target.mean
    law = _start(target, theta0)
    e = law.mean - mu
    decay = np.exp(-h * a)
    stationary = 1.0 / a
    dv = law.var - stationary
    path = [law]
    for _ in range(K):
        e = decay * e
        dv = decay * decay * dv
        if full:
            path.append(GaussianLaw(mu + e, stationary + dv))
    if full:
        return path
    return GaussianLaw(mu + e, stationary + dv)


def gaussian_w2(law_a: GaussianLaw, law_b: GaussianLaw) -> float:
    """W2 between Gaussians with diagonal covariances.

    ``sqrt(||mu_a - mu_b||^2 + sum_i (sqrt(va_i) - sqrt(vb_i))^2)``.
    """
    if law_a.p != law_b.p:
        raise DimensionError("laws have different dimensions")
    dm = law_a.mean - law_b.mean
    ds = np.sqrt(law_a.var) - np.sqrt(law_b.var)
    return float(np.sqrt(dm @ dm + ds @ ds))


def empirical_w2(X, Y) -> float:
    """Exact W2 between two equal-size empirical measures.

    Solves the assignment problem with squared Euclidean costs.  Samples are
    rows; 1-d inputs are treated as scalar samples.
    """
    X = np.asarray(X, dtype=float)
    Y = np.asarray(Y, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if Y.ndim == 1:
        Y = Y[:, None]
    if X.shape != Y.shape:
        raise DimensionError(f"sample sets differ in shape: {X.shape} vs {Y.shape}")
    n = X.shape[0]
    if n > MAX_EMPIRICAL_N:
        raise ValueError(f"at most {MAX_EMPIRICAL_N} samples per set, got {n}")
    if n == 0:
        raise ValueError("empty sample sets")
    cost = np.sum((X[:, None, :] - Y[None, :, :]) ** 2, axis=-1)
    rows, cols = linear_sum_assignment(cost)
    return float(np.sqrt(cost[rows, cols].mean()))


@dataclass(frozen=True)
class MomentReport:
    mean: np.ndarray
    var: np.ndarray
    grad_sq: float | None = None


def moment_report(samples, target: Target | None = None) -> MomentReport:
    """Sample mean, unbiased per-coordinate variance and, with a target, the
    average squared gradient norm."""
    X = np.asarray(samples, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    if X.shape[0] < 2:
        raise ValueError("need at least two samples")
    grad_sq = None
    if target is not None:
        G = target.grad_batch(X)
        grad_sq = float(np.mean(np.sum(G * G, axis=1)))
    return MomentReport(X.mean(axis=0), X.var(axis=0, ddof=1), grad_sq)
