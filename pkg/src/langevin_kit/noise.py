"""Inexact gradient oracles ``Y = grad f(theta) + zeta``.

A noise model declares a bias level ``delta`` and a standard deviation level
``sigma`` meant to satisfy, conditionally on the current iterate,

    E ||E(zeta | theta)||^2 <= delta^2 p,    E ||zeta - E(zeta | theta)||^2 <= sigma^2 p.

Draws take an explicit generator.  The samplers hand the noise model a stream
that is separate from the one producing the Langevin innovations, so the
innovation at step k+1 is independent of every earlier noise draw.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DimensionError

__all__ = [
    "NoiseModel",
    "ZeroNoise",
    "GaussianNoise",
    "StateDependentBias",
    "SubsampledGradient",
    "ConditionNReport",
    "certify_condition_n",
]


class NoiseModel:
    """Base class: ``draw(theta, rng)`` returns one realization of ``zeta``."""

    delta: float = 0.0
    sigma: float = 0.0
    p: int

    def _check(self, theta):
        theta = np.asarray(theta, dtype=float)
        if theta.shape != (self.p,):
            raise DimensionError(f"noise model expects dimension {self.p}, got {theta.shape}")
        return theta

    def draw(self, theta, rng: np.random.Generator) -> np.ndarray:
        raise NotImplementedError

    def draw_batch(self, thetas, rng: np.random.Generator) -> np.ndarray:
        """One draw per row of ``thetas``; subclasses may vectorise."""
        return np.stack([self.draw(x, rng) for x in np.asarray(thetas, dtype=float)])


class ZeroNoise(NoiseModel):
    """Exact gradients (``delta = sigma = 0``)."""

    def __init__(self, p: int):
        self.p = int(p)

    def draw(self, theta, rng):
        self._check(theta)
        return np.zeros(self.p)

    def draw_batch(self, thetas, rng):
        return np.zeros(np.shape(thetas))


class GaussianNoise(NoiseModel):
    """``zeta = b + sigma * N(0, I)`` with a fixed bias vector ``b``.

    The declared bias level is ``delta = ||b|| / sqrt(p)`` unless a larger one is
    passed explicitly.
    """

    def __init__(self, bias, sigma: float, delta: float | None = None):
        self.bias = np.atleast_1d(np.asarray(bias, dtype=float))
        self.p = self.bias.size
        if sigma < 0:
            raise ValueError("sigma must be non-negative")
        self.sigma = float(sigma)
        tight = float(np.linalg.norm(self.bias) / np.sqrt(self.p))
        if delta is None:
            delta = tight
        elif delta < tight * (1 - 1e-12):
            raise ValueError(f"declared delta {delta} is below ||b||/sqrt(p) = {tight}")
        self.delta = float(delta)

    @classmethod
    def uniform_bias(cls, p: int, delta: float, sigma: float):
        """Bias ``delta * (1, ..., 1)``, which has ``||b|| = delta sqrt(p)``."""
        return cls(np.full(p, float(delta)), sigma)

    def draw(self, theta, rng):
        self._check(theta)
        if self.sigma == 0.0:
            return self.bias.copy()
        return self.bias + self.sigma * rng.standard_normal(self.p)

    def draw_batch(self, thetas, rng):
        n = np.shape(thetas)[0]
        if self.sigma == 0.0:
            return np.tile(self.bias, (n, 1))
        return self.bias + self.sigma * rng.standard_normal((n, self.p))


class StateDependentBias(NoiseModel):
    """Deterministic bias ``delta * theta / ||theta||`` (zero at the origin) plus
    optional isotropic Gaussian noise of level ``sigma``."""

    def __init__(self, p: int, delta: float, sigma: float = 0.0):
        if delta < 0 or sigma < 0:
            raise ValueError("delta and sigma must be non-negative")
        self.p = int(p)
        self.delta = float(delta)
        self.sigma = float(sigma)

    def bias(self, theta) -> np.ndarray:
        theta = self._check(theta)
        nrm = np.linalg.norm(theta)
        if nrm == 0.0:
            return np.zeros(self.p)
        return self.delta * theta / nrm

    def draw(self, theta, rng):
        out = self.bias(theta)
        if self.sigma > 0:
            out = out + self.sigma * rng.standard_normal(self.p)
        return out


class SubsampledGradient(NoiseModel):
    """Minibatch gradient error for a finite-sum target ``f = (1/n) sum_i l_i``.

    ``zeta = (1/s) sum_j grad l_{N_j}(theta) - grad f(theta)`` with ``N_j`` drawn
    uniformly with replacement.  A batch size ``s >= n`` is treated as a full
    pass, giving ``zeta = 0``.

    The target must expose ``component_grads(theta) -> (n, p)`` and
    ``n_components``.  ``delta = 0``; ``sigma`` is the largest per-coordinate
    standard deviation found by exact enumeration over ``probe_points``.
    """

    def __init__(self, target, batch_size: int = 1, probe_points=None):
        if not hasattr(target, "component_grads"):
            raise TypeError(f"{type(target).__name__} has no finite-sum structure")
        if batch_size < 1:
            raise ValueError("batch size must be at least 1")
        self.target = target
        self.p = target.p
        self.n = int(target.n_components)
        self.batch_size = int(batch_size)
        self.delta = 0.0
        if probe_points is None:
            probe_points = [np.zeros(self.p)]
            if target.minimizer is not None:
                probe_points.append(target.minimizer)
        self.sigma = float(np.sqrt(max(self.variance(x) for x in probe_points) / self.p))

    @property
    def full_batch(self) -> bool:
        return self.batch_size >= self.n

    def population_variance(self, theta) -> float:
        """``(1/n) sum_i ||grad l_i(theta) - grad f(theta)||^2`` by enumeration."""
        g = self.target.component_grads(self._check(theta))
        return float(np.mean(np.sum((g - g.mean(axis=0)) ** 2, axis=1)))

    def variance(self, theta) -> float:
        """Exact ``E ||zeta||^2`` at ``theta`` for the configured batch size."""
        if self.full_batch:
            return 0.0
        return self.population_variance(theta) / self.batch_size

    def draw(self, theta, rng):
        theta = self._check(theta)
        if self.full_batch:
            return np.zeros(self.p)
        g = self.target.component_grads(theta)
        idx = rng.integers(0, self.n, size=self.batch_size)
        return g[idx].mean(axis=0) - g.mean(axis=0)


@dataclass(frozen=True)
class ConditionNReport:
    delta_hat: float
    sigma_hat: float
    delta_se: float
    sigma_se: float
    delta: float
    sigma: float

    @property
    def ok(self) -> bool:
        """Estimates within declared levels plus three standard errors."""
        return (
            self.delta_hat <= self.delta + 3 * self.delta_se
            and self.sigma_hat <= self.sigma + 3 * self.sigma_se
        )


def certify_condition_n(
    model: NoiseModel, target, probes, draws_per_point: int = 1000, rng=None
) -> ConditionNReport:
    """Monte-Carlo check of the bias and variance levels of ``model``.

    At each probe point the conditional mean of ``zeta`` is estimated by the
    sample mean of ``draws_per_point`` draws.  Returns the worst point's
    ``||mean|| / sqrt(p)`` and ``sqrt(mean ||zeta - mean||^2 / p)`` with standard
    errors.

    The levels are bounds on expectations over the chain's own law; probing
    fixed points is stricter for deterministic biases but only approximate
    for noise whose law depends on the state.
    """
    if draws_per_point < 100:
        raise ValueError("draws_per_point must be at least 100")
    rng = np.random.default_rng(rng)
    p = target.p
    n = draws_per_point
    best_d = (0.0, 0.0)
    best_s = (0.0, 0.0)
    for theta in probes:
        theta = target.check_point(theta)
        Z = np.stack([model.draw(theta, rng) for _ in range(n)])
        mean = Z.mean(axis=0)
        dev2 = np.sum((Z - mean) ** 2, axis=1) * n / (n - 1)
        d_hat = float(np.linalg.norm(mean) / np.sqrt(p))
        d_se = float(np.sqrt(dev2.mean() / n / p))
        s2 = float(dev2.mean() / p)
        s2_se = float(dev2.std(ddof=1) / np.sqrt(n) / p)
        s_hat = np.sqrt(s2)
        s_se = s2_se / (2 * s_hat) if s_hat > 0 else 0.0
        if d_hat >= best_d[0]:
            best_d = (d_hat, d_se)
        if s_hat >= best_s[0]:
            best_s = (float(s_hat), float(s_se))
    return ConditionNReport(
        delta_hat=best_d[0],
        sigma_hat=best_s[0],
        delta_se=best_d[1],
        sigma_se=best_s[1],
        delta=model.delta,
        sigma=model.sigma,
    )
