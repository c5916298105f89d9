"""Langevin Monte Carlo chains.

First order:  ``theta <- theta - h_{k+1} grad f(theta) + sqrt(2 h_{k+1}) xi``
with a constant step or the decaying schedule of :meth:`StepSchedule.theorem2`,
optionally with a noisy gradient (nLMC) or a randomly drawn mixture component
(MLMC).

Second order:  the Ozaki step (LMCO) uses the exact OU transition of the
linearised drift, and LMCO' replaces its matrix exponentials by their linear
approximation and draws its noise with two Hessian-vector products.

Randomness
----------
Each run derives independent streams from ``numpy.random.SeedSequence(seed)``:
child 0 drives the Langevin innovations, child 1 the gradient noise and child 2
the mixture component.  Gaussian draws come from ``Generator(PCG64)`` via
``standard_normal``, which is reproducible across platforms for a given numpy
version.  Identical ``(arguments, seed)`` give bitwise-identical traces.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .exceptions import DimensionError, HypothesisError, HypothesisWarning, MissingOracleError
from .linalg import lmco_matrices, lmco_prime_cov_factor_apply
from .model import MixtureTarget, ScaledTarget, Target
from .noise import NoiseModel

__all__ = [
    "StepSchedule",
    "ChainState",
    "ChainTrace",
    "compute_K1",
    "make_state",
    "lmc_step",
    "nlmc_step",
    "lmco_step",
    "lmco_prime_step",
    "lmc_run",
    "nlmc_run",
    "lmco_run",
    "lmco_prime_run",
    "mlmc_run",
    "tau_scaled_run",
    "lmc_ensemble",
    "mlmc_ensemble",
]

INNOVATION, NOISE, MIXING = 0, 1, 2


def compute_K1(m: float, M: float, p: int, W2_0: float) -> int:
    """Length of the constant-step warm-up of the decaying schedule.

    Smallest non-negative integer ``K1`` with
    ``K1 >= (ln(W2_0/sqrt(p)) + ln(m/M) + ln(M+m)/2) / ln(1 + 2m/(M-m))``.
    Returns 0 when the numerator is not positive.  When ``M == m`` the
    denominator is infinite and the value is taken as its limit ``M -> m+``,
    i.e. 1 for a positive numerator (one step of size ``1/m``).
    """
    if not (0 < m <= M) or p < 1 or W2_0 < 0:
        raise ValueError(f"invalid constants m={m!r}, M={M!r}, p={p!r}, W2_0={W2_0!r}")
    if W2_0 == 0:
        return 0
    terms = (math.log(W2_0 / math.sqrt(p)), math.log(m / M), 0.5 * math.log(M + m))
    num = math.fsum(terms)
    if num <= 1e-12 * max(1.0, *(abs(t) for t in terms)):
        return 0
    if M == m:
        return 1
    return max(1, math.ceil(num / math.log1p(2 * m / (M - m))))


@dataclass(frozen=True)
class StepSchedule:
    """Step-size rule ``k -> h_{k+1}`` (the step taken from iterate ``k``).

    Use :meth:`constant` or :meth:`theorem2`; the latter gives
    ``h_{k+1} = 2 / (M + m + (2/3) m (k - K1)_+)``.  ``K1 = inf`` keeps the
    step at ``2/(M+m)`` forever.
    """

    kind: str
    h: float | None = None
    m: float | None = None
    M: float | None = None
    K1: float | None = None

    def __post_init__(self):
        if self.kind == "constant":
            if self.h is None or not self.h >= 0:
                raise ValueError("constant schedule needs h >= 0")
        elif self.kind == "theorem2":
            if self.m is None or self.M is None or not (0 < self.m <= self.M):
                raise ValueError("theorem2 schedule needs 0 < m <= M")
            if self.K1 is None or self.K1 < 0:
                raise ValueError("theorem2 schedule needs K1 >= 0")
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")

    @classmethod
    def constant(cls, h: float) -> "StepSchedule":
        return cls("constant", h=float(h))

    @classmethod
    def theorem2(cls, m: float, M: float, K1: float) -> "StepSchedule":
        return cls("theorem2", m=float(m), M=float(M), K1=K1)

    @classmethod
    def theorem2_for(cls, target: Target, W2_0: float) -> "StepSchedule":
        """Decaying schedule with ``K1`` computed from the caller's bound on W2(nu_0, pi)."""
        return cls.theorem2(target.m, target.M, compute_K1(target.m, target.M, target.p, W2_0))

    def step(self, k: int) -> float:
        if self.kind == "constant":
            return self.h
        excess = max(k - self.K1, 0.0)
        return 2.0 / (self.M + self.m + (2.0 / 3.0) * self.m * excess)

    def steps(self, K: int) -> np.ndarray:
        """``h_1, ..., h_K``."""
        return np.array([self.step(k) for k in range(K)], dtype=float)

    @property
    def max_step(self) -> float:
        return self.h if self.kind == "constant" else 2.0 / (self.M + self.m)


@dataclass
class ChainState:
    """Current iterate of a single chain.  Not safe to share between threads."""

    theta: np.ndarray
    k: int
    rng: np.random.Generator
    noise_rng: np.random.Generator | None = None


@dataclass
class ChainTrace:
    """Append-only record of a run.

    ``steps[k-1]`` is the step size used to reach iterate ``k``.  Snapshots are
    kept for ``k`` divisible by ``stride`` and for the final iterate.
    """

    stride: int = 1
    steps: list = field(default_factory=list)
    ks: list = field(default_factory=list)
    thetas: list = field(default_factory=list)
    noise_norms: list = field(default_factory=list)

    def snapshot(self, k: int, theta: np.ndarray):
        if self.ks and self.ks[-1] == k:
            return
        self.ks.append(k)
        self.thetas.append(np.array(theta, copy=True))

    def step_size_at(self, k: int) -> float:
        return 0.0 if k == 0 else self.steps[k - 1]

    def to_csv(self, fh):
        """Write ``k, h_k, theta_0, ..., theta_{p-1}`` rows at 17 significant digits."""
        p = self.thetas[0].size if self.thetas else 0
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["k", "h_k"] + [f"theta_{i}" for i in range(p)])
        for k, theta in zip(self.ks, self.thetas):
            writer.writerow([k, _fmt(self.step_size_at(k))] + [_fmt(v) for v in theta])


def _fmt(x: float) -> str:
    return format(float(x), ".17g")


def _streams(seed, n: int = 2):
    return [np.random.Generator(np.random.PCG64(s)) for s in np.random.SeedSequence(seed).spawn(n)]


def make_state(target: Target, theta0, seed) -> ChainState:
    """Fresh chain at ``theta0`` with innovation and noise streams derived from ``seed``."""
    theta0 = target.check_point(theta0).copy()
    rng, noise_rng = _streams(seed, 2)
    return ChainState(theta0, 0, rng, noise_rng)


def _checked_grad(target, theta):
    g = target.grad(theta)
    if not np.all(np.isfinite(g)):
        raise FloatingPointError(f"non-finite gradient at iteration point {theta!r}")
    return g


def _xi(state, p, xi):
    if xi is None:
        return state.rng.standard_normal(p)
    xi = np.asarray(xi, dtype=float)
    if xi.shape != (p,):
        raise DimensionError(f"innovation must have shape ({p},)")
    return xi


def lmc_step(state: ChainState, target: Target, h: float, xi=None, grad=None) -> ChainState:
    """One Langevin step ``theta - h g + sqrt(2h) xi``.

    ``g`` defaults to the exact gradient; ``xi`` defaults to a fresh standard
    normal draw from the chain's innovation stream.
    """
    if h < 0:
        raise ValueError("step size must be non-negative")
    g = _checked_grad(target, state.theta) if grad is None else grad
    xi = _xi(state, target.p, xi)
    theta = state.theta - h * g + math.sqrt(2.0 * h) * xi
    return ChainState(theta, state.k + 1, state.rng, state.noise_rng)


def nlmc_step(state: ChainState, target: Target, h: float, noise: NoiseModel, xi=None):
    """Langevin step with the gradient replaced by ``grad f + zeta``.

    Returns ``(new_state, zeta)``.  ``zeta`` is drawn from the noise stream,
    before the innovation, which comes from the separate innovation stream.
    """
    zeta = np.asarray(noise.draw(state.theta, state.noise_rng), dtype=float)
    if zeta.shape != (target.p,):
        raise DimensionError(f"noise draw has shape {zeta.shape}, expected ({target.p},)")
    y = _checked_grad(target, state.theta) + zeta
    return lmc_step(state, target, h, xi=xi, grad=y), zeta


def _require_hessian(target):
    if not target.has_hessian:
        raise MissingOracleError(f"{type(target).__name__} has no Hessian oracle")


def lmco_step(state: ChainState, target: Target, h: float, xi=None) -> ChainState:
    """Ozaki step ``theta - M_k grad f(theta) + Sigma_k^{1/2} xi``."""
    g = _checked_grad(target, state.theta)
    Mk, _, Sk = lmco_matrices(target.hess(state.theta), h)
    xi = _xi(state, target.p, xi)
    return ChainState(state.theta - Mk @ g + Sk @ xi, state.k + 1, state.rng, state.noise_rng)


def lmco_prime_step(state: ChainState, target: Target, h: float, eta=None, eta_prime=None):
    """Square-root-free second-order step using Hessian-vector products only.

    ``theta - h (I - h H/2) g + sqrt(2h) [(I - h H/2) eta + (sqrt(3)/6) h H eta']``.
    """
    theta = state.theta
    g = _checked_grad(target, theta)

    def hv(v):
        return target.hvp(theta, v)

    eta = _xi(state, target.p, eta)
    eta_prime = _xi(state, target.p, eta_prime)
    drift = h * (g - 0.5 * h * hv(g))
    noise = lmco_prime_cov_factor_apply(hv, h, eta, eta_prime)
    return ChainState(theta - drift + math.sqrt(2.0 * h) * noise, state.k + 1, state.rng, state.noise_rng)


def _loop(state, K, stride, step_fn: Callable, step_size: Callable):
    if K < 0:
        raise ValueError("K must be non-negative")
    if stride < 1:
        raise ValueError("stride must be positive")
    trace = ChainTrace(stride=stride)
    trace.snapshot(0, state.theta)
    for k in range(K):
        h = step_size(k)
        state, zeta = step_fn(state, h)
        trace.steps.append(h)
        if zeta is not None:
            trace.noise_norms.append(float(np.linalg.norm(zeta)))
        if state.k % stride == 0:
            trace.snapshot(state.k, state.theta)
    trace.snapshot(state.k, state.theta)
    return state, trace


def _warn(msg):
    warnings.warn(msg, HypothesisWarning, stacklevel=3)


def _check_schedule(target, schedule):
    if schedule.kind == "constant":
        h = schedule.h
        if h >= 2.0 / target.M:
            raise HypothesisError(f"constant step h={h} must be below 2/M = {2.0 / target.M}")
        if h > 2.0 / (target.m + target.M):
            _warn(f"h={h} exceeds 2/(m+M); only the weaker contraction (Mh - 1) applies")


def lmc_run(target: Target, theta0, schedule: StepSchedule, K: int, seed, stride: int = 1):
    """Run ``K`` LMC steps with step sizes from ``schedule``.

    Raises :class:`HypothesisError` for a constant step ``h >= 2/M`` and warns
    when ``h > 2/(m+M)``.
    """
    _check_schedule(target, schedule)
    state = make_state(target, theta0, seed)
    return _loop(state, K, stride, lambda s, h: (lmc_step(s, target, h), None), schedule.step)


def nlmc_run(target: Target, theta0, h: float, K: int, noise: NoiseModel, seed, stride: int = 1):
    """Noisy-gradient LMC with constant step ``h`` (warns if ``h > 2/(m+M)``)."""
    if noise.p != target.p:
        raise DimensionError(f"noise model has dimension {noise.p}, target {target.p}")
    if h > 2.0 / (target.m + target.M):
        _warn(f"h={h} exceeds 2/(m+M); the noisy-gradient guarantee does not apply")
    state = make_state(target, theta0, seed)
    return _loop(state, K, stride, lambda s, hh: nlmc_step(s, target, hh, noise), lambda k: h)


def lmco_run(target: Target, theta0, h: float, K: int, seed, stride: int = 1):
    """Ozaki-discretised LMC (warns if ``h > m/M^2``)."""
    _require_hessian(target)
    if h > target.m / target.M**2:
        _warn(f"h={h} exceeds m/M^2; the second-order guarantee does not apply")
    state = make_state(target, theta0, seed)
    return _loop(state, K, stride, lambda s, hh: (lmco_step(s, target, hh), None), lambda k: h)


def lmco_prime_run(target: Target, theta0, h: float, K: int, seed, stride: int = 1):
    """Square-root-free second-order LMC (warns if ``h > 3m/(4M^2)``)."""
    _require_hessian(target)
    if h > 0.75 * target.m / target.M**2:
        _warn(f"h={h} exceeds 3m/(4M^2); the second-order guarantee does not apply")
    state = make_state(target, theta0, seed)
    return _loop(state, K, stride, lambda s, hh: (lmco_prime_step(s, target, hh), None), lambda k: h)


def mlmc_run(mixture: MixtureTarget, theta0, K: int, seed, W2_0: float, stride: int = 1):
    """Mixture LMC: draw ``eta ~ pi_0`` once, then run decaying-step LMC on ``f_eta``.

    ``W2_0`` is the caller's bound on ``W2(nu_0, pi)`` used for ``K1``.
    Returns ``(state, trace, eta)``.
    """
    mix_rng = _streams(seed, MIXING + 1)[MIXING]
    eta = mixture.sample_mixing(mix_rng)
    target = mixture.component(eta)
    cert = mixture.certificate
    schedule = StepSchedule.theorem2(cert.m, cert.M, compute_K1(cert.m, cert.M, cert.p, W2_0))
    state, trace = lmc_run(target, theta0, schedule, K, seed, stride)
    return state, trace, eta


def tau_scaled_run(target: Target, tau: float, mode: str, theta0, h: float | None = None, K: int = 1, seed=0):
    """Chain on the tempered potential ``f / tau``.

    ``mode="lmc"``: with ``h`` defaulting to ``1/M``, each step is
    ``theta - h grad f + sqrt(2 tau h) xi`` (LMC on ``f/tau`` with step
    ``tau h``).  At ``tau = 0`` this is gradient descent.

    ``mode="lmco"``: the Ozaki step on ``f/tau`` with step ``h``.  At ``tau = 0``
    this is Newton's method ``theta - hess^{-1} grad``.
    """
    if tau < 0:
        raise ValueError("tau must be non-negative")
    if mode not in ("lmc", "lmco"):
        raise ValueError(f"unknown mode {mode!r}")
    h = 1.0 / target.M if h is None else float(h)
    state = make_state(target, theta0, seed)
    if tau == 0:
        for _ in range(K):
            g = _checked_grad(target, state.theta)
            if mode == "lmc":
                theta = state.theta - h * g
            else:
                _require_hessian(target)
                theta = state.theta - np.linalg.solve(target.hess(state.theta), g)
            state = ChainState(theta, state.k + 1, state.rng, state.noise_rng)
        return state
    scaled = ScaledTarget(target, tau)
    for _ in range(K):
        if mode == "lmc":
            state = lmc_step(state, scaled, tau * h)
        else:
            state = lmco_step(state, scaled, h)
    return state


def lmc_ensemble(
    target: Target,
    theta0,
    schedule: StepSchedule,
    K: int,
    n_chains: int,
    seed,
    noise: NoiseModel | None = None,
) -> np.ndarray:
    """Final iterates of ``n_chains`` independent (n)LMC chains, shape ``(n, p)``.

    Chains are advanced together using ``target.grad_batch`` and
    ``noise.draw_batch``.
    """
    theta0 = target.check_point(theta0)
    rng, noise_rng = _streams(seed, 2)
    X = np.tile(theta0, (n_chains, 1))
    for k in range(K):
        h = schedule.step(k)
        g = target.grad_batch(X)
        if noise is not None:
            g = g + noise.draw_batch(X, noise_rng)
        X = X - h * g + math.sqrt(2.0 * h) * rng.standard_normal(X.shape)
    return X


def mlmc_ensemble(mixture: MixtureTarget, theta0, K: int, n_chains: int, seed, W2_0: float):
    """``n_chains`` independent mixture-LMC outputs.

    Chains sharing a component are advanced together, so ``eta`` must be
    hashable.  Returns ``(X, etas)``.
    """
    mix_rng, rng = _streams(seed, 2)
    etas = [mixture.sample_mixing(mix_rng) for _ in range(n_chains)]
    cert = mixture.certificate
    schedule = StepSchedule.theorem2(cert.m, cert.M, compute_K1(cert.m, cert.M, cert.p, W2_0))
    X = np.empty((n_chains, cert.p))
    groups: dict = {}
    for i, eta in enumerate(etas):
        groups.setdefault(eta, []).append(i)
    for eta, idx in sorted(groups.items(), key=lambda kv: repr(kv[0])):
        sub_seed = int(rng.integers(0, 2**63 - 1))
        X[idx] = lmc_ensemble(mixture.component(eta), theta0, schedule, K, len(idx), sub_seed)
    return X, etas
