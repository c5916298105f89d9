"""Closed-form Wasserstein-2 guarantees for the Langevin samplers.

Each ``bound_*`` function returns a :class:`BoundValue` carrying the number,
the guarantee it came from, the hypothesis flags and the individual terms.
Soft hypothesis violations only clear a flag; an error is raised where the
formula itself is undefined.

The private ``_*_formula`` helpers take the step size as a (possibly complex)
numpy array so the planner can vectorise over ``h`` and differentiate by
complex step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .exceptions import HypothesisError

__all__ = [
    "ALPHA",
    "BoundQuery",
    "BoundValue",
    "bound_thm1",
    "bound_thm2",
    "bound_thm3",
    "bound_thm4",
    "bound_thm5",
    "bound_propB",
    "bound_dm",
    "recursion_lemD",
    "recursion_lemE",
    "recursion_iterate",
    "recursion_lemI",
    "recursion_lemI_iterate",
    "one_step_recursion",
    "iterate_one_step",
]

# 7 sqrt(2) / 6, rounded up to 1.65 in the stated guarantees
ALPHA = 7.0 * math.sqrt(2.0) / 6.0

THM5_CONSTANTS = {
    "statement": {"lmco": 11.5, "lmco_prime": (1.3, 7.3)},
    "proof": {"lmco": 7.2, "lmco_prime": (1.23, 7.28)},
}


@dataclass(frozen=True)
class BoundQuery:
    """Inputs shared by the constant-step guarantees."""

    m: float
    M: float
    p: int
    h: float | None = None
    K: int = 0
    W2_0: float = 0.0
    delta: float = 0.0
    sigma: float = 0.0
    M2: float | None = None

    def __post_init__(self):
        if not (0 < self.m <= self.M):
            raise ValueError(f"need 0 < m <= M, got m={self.m!r}, M={self.M!r}")
        if self.p < 1:
            raise ValueError("p must be positive")
        if self.h is not None and not self.h > 0:
            raise ValueError("h must be positive")
        if self.K < 0 or int(self.K) != self.K:
            raise ValueError("K must be a non-negative integer")
        if min(self.W2_0, self.delta, self.sigma) < 0:
            raise ValueError("W2_0, delta and sigma must be non-negative")
        if self.M2 is not None and self.M2 < 0:
            raise ValueError("M2 must be non-negative")

    def _need_h(self) -> float:
        if self.h is None:
            raise ValueError("this bound needs a step size h")
        return self.h


@dataclass(frozen=True)
class BoundValue:
    value: float
    theorem: str
    hypotheses: dict = field(default_factory=dict)
    terms: dict = field(default_factory=dict)

    @property
    def valid(self) -> bool:
        """True when every hypothesis of the guarantee holds."""
        return all(self.hypotheses.values())

    def as_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "value": self.value,
            "valid": self.valid,
            "hypotheses": dict(self.hypotheses),
            "terms": dict(self.terms),
        }


def _contract(x, K):
    """``(1 - x)^K``, accurate for small ``x`` and large ``K``."""
    x = np.asarray(x)
    if K == 0:
        return np.ones_like(x)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        smooth = np.exp(K * np.log1p(-x))
        return np.where(np.real(x) < 1, smooth, (1 - x) ** K)


# --- formulas, vectorised over h -------------------------------------------


def _thm1_formula(h, K, m, M, p, W2_0, **_):
    return _contract(m * h, K) * W2_0 + 1.65 * (M / m) * np.sqrt(h * p)


def _thm3_formula(h, K, m, M, p, W2_0, delta=0.0, sigma=0.0, **_):
    out = _thm1_formula(h, K, m, M, p, W2_0) + delta * math.sqrt(p) / m
    if sigma > 0:
        out = out + sigma**2 * np.sqrt(h * p) / (1.65 * M + sigma * math.sqrt(m))
    return out


def _thm4_formula(h, K, m, M, p, W2_0, M2, delta=0.0, sigma=0.0, **_):
    out = (
        _contract(m * h, K) * W2_0
        + M2 * h * p / (2 * m)
        + 2.2 * M * h * np.sqrt(M * p) / m
        + delta * math.sqrt(p) / m
    )
    if sigma > 0:
        root = np.sqrt(h * p)
        out = out + 2 * sigma**2 * root / (M2 * root + 2 * sigma * math.sqrt(m))
    return out


def _thm5_formula(h, K, m, M, p, W2_0, M2, variant="lmco", constants="statement", **_):
    c = THM5_CONSTANTS[constants][variant]
    head = _contract(0.25 * m * h, K) * W2_0
    if variant == "lmco":
        return head + c * M2 * h * (p + 1) / m
    c_mid, c_last = c
    return head + c_mid * M**2 * h**2 * math.sqrt(M * p) / m + c_last * M2 * h * (p + 1) / m


def _dm_squared(h, K, m, M, p, W2_0, **_):
    return 2 * _contract(m * M * h / (m + M), K) * W2_0**2 + (M * h * p / m) * (m + M) * (
        h + (m + M) / (2 * m * M)
    ) * (2 + M**2 * h / m + M**2 * h**2 / 6)


def _dm_formula(h, K, m, M, p, W2_0, **_):
    return np.sqrt(_dm_squared(h, K, m, M, p, W2_0))


# --- public evaluators -----------------------------------------------------


def bound_thm1(q: BoundQuery) -> BoundValue:
    """Constant-step LMC guarantee, both step-size regimes.

    For ``h <= 2/(m+M)``: ``(1-mh)^K W2_0 + 1.65 (M/m) sqrt(hp)``.
    For ``2/(m+M) < h < 2/M``: ``(Mh-1)^K W2_0 + 1.65 Mh/(2-Mh) sqrt(hp)``.
    """
    m, M, p, K, W0 = q.m, q.M, q.p, q.K, q.W2_0
    h = q._need_h()
    if h >= 2.0 / M:
        raise HypothesisError(f"h={h} must be below 2/M = {2.0 / M}")
    if h <= 2.0 / (m + M):
        contraction = float(_contract(m * h, K)) * W0
        disc = 1.65 * (M / m) * math.sqrt(h * p)
        case = "a"
    else:
        contraction = (M * h - 1) ** K * W0
        disc = 1.65 * M * h / (2 - M * h) * math.sqrt(h * p)
        case = "b"
    return BoundValue(
        contraction + disc,
        "thm1",
        {"h<2/M": True},
        {"case": case, "contraction": contraction, "discretization": disc},
    )


def bound_thm2(m: float, M: float, p: int, k: int, K1: int) -> BoundValue:
    """Decaying-step LMC guarantee ``3.5 M sqrt(p) / (m sqrt(M + m + (2/3) m (k - K1)))``."""
    if not (0 < m <= M):
        raise ValueError("need 0 < m <= M")
    if k < K1:
        raise ValueError(f"the decaying-step guarantee holds for k >= K1 (k={k}, K1={K1})")
    value = 3.5 * M * math.sqrt(p) / (m * math.sqrt(M + m + (2.0 / 3.0) * m * (k - K1)))
    return BoundValue(value, "thm2", {"k>=K1": True}, {"k": k, "K1": K1})


def bound_thm3(q: BoundQuery) -> BoundValue:
    """Noisy-gradient LMC guarantee.

    Adds ``delta sqrt(p)/m + sigma^2 sqrt(hp) / (1.65 M + sigma sqrt(m))`` to
    the ``h <= 2/(m+M)`` constant-step bound.
    """
    m, M, p = q.m, q.M, q.p
    h = q._need_h()
    flags = {"h<=2/(m+M)": h <= 2.0 / (m + M)}
    contraction = float(_contract(m * h, q.K)) * q.W2_0
    disc = 1.65 * (M / m) * math.sqrt(h * p)
    bias = q.delta * math.sqrt(p) / m
    var = q.sigma**2 * math.sqrt(h * p) / (1.65 * M + q.sigma * math.sqrt(m)) if q.sigma > 0 else 0.0
    terms = {"contraction": contraction, "discretization": disc, "bias": bias, "variance": var}
    return BoundValue(contraction + disc + bias + var, "thm3", flags, terms)


def bound_thm4(q: BoundQuery) -> BoundValue:
    """Noisy-gradient LMC guarantee under a Lipschitz Hessian."""
    if q.M2 is None:
        raise ValueError("this bound needs the Hessian Lipschitz constant M2")
    m, M, p, M2 = q.m, q.M, q.p, q.M2
    h = q._need_h()
    flags = {"h<=2/(m+M)": h <= 2.0 / (m + M)}
    contraction = float(_contract(m * h, q.K)) * q.W2_0
    hess_term = M2 * h * p / (2 * m)
    disc = 2.2 * M * h * math.sqrt(M * p) / m
    bias = q.delta * math.sqrt(p) / m
    if q.sigma > 0:
        root = math.sqrt(h * p)
        var = 2 * q.sigma**2 * root / (M2 * root + 2 * q.sigma * math.sqrt(m))
    else:
        var = 0.0
    terms = {
        "contraction": contraction,
        "hessian": hess_term,
        "discretization": disc,
        "bias": bias,
        "variance": var,
    }
    return BoundValue(sum(terms.values()), "thm4", flags, terms)


def bound_thm5(q: BoundQuery, variant: str = "lmco", constants: str = "statement") -> BoundValue:
    """Second-order guarantees for the Ozaki step and its square-root-free variant.

    ``constants="proof"`` swaps in the sharper constants obtained at the end of
    the derivation (7.2 for LMCO; 1.23 and 7.28 for LMCO').
    """
    if variant not in ("lmco", "lmco_prime"):
        raise ValueError(f"unknown variant {variant!r}")
    if constants not in THM5_CONSTANTS:
        raise ValueError(f"constants must be one of {sorted(THM5_CONSTANTS)}")
    if q.M2 is None:
        raise ValueError("this bound needs the Hessian Lipschitz constant M2")
    m, M, p, M2 = q.m, q.M, q.p, q.M2
    h = q._need_h()
    limit = m / M**2 if variant == "lmco" else 0.75 * m / M**2
    flags = {f"h<={'m/M^2' if variant == 'lmco' else '3m/(4M^2)'}": h <= limit}
    value = float(_thm5_formula(h, q.K, m, M, p, q.W2_0, M2, variant, constants))
    terms = {"contraction": float(_contract(0.25 * m * h, q.K)) * q.W2_0, "constants": constants}
    return BoundValue(value, f"thm5_{variant}", flags, terms)


def bound_dm(q: BoundQuery) -> BoundValue:
    """Square root of the earlier constant-step guarantee used as a benchmark."""
    h = q._need_h()
    sq = float(_dm_squared(h, q.K, q.m, q.M, q.p, q.W2_0))
    return BoundValue(math.sqrt(sq), "dm", {"h>0": True}, {"squared": sq})


def bound_propB(m, M, M2, p, h, K, W_high) -> BoundValue:
    """Large-step LMCO guarantee ``(2m/M2) (w_K exp(v_K w_K^{-2^K}))^{2^K}``.

    ``w_K = M2 W_high / (2m) + exp(-mh)/2`` where ``W_high`` is the caller's
    value of ``W_{2^{K+1}}(nu_0, pi)``, and
    ``v_K = 2 M2 M^{3/2} sqrt(2p + 2^K) / m^3 + exp(-mh)``.
    Evaluated in log space; raises :class:`OverflowError` if the result still
    does not fit in a double.
    """
    if M2 is None or not M2 > 0:
        raise ValueError("this bound needs M2 > 0")
    if not (0 <= K <= 50) or int(K) != K:
        raise ValueError("K must be an integer in [0, 50]")
    n = 2**K
    w = M2 * W_high / (2 * m) + 0.5 * math.exp(-m * h)
    v = 2 * M2 * M**1.5 * math.sqrt(2 * p + n) / m**3 + math.exp(-m * h)
    log_w = math.log(w)
    log_inner = math.log(v) - n * log_w if v > 0 else -math.inf
    if log_inner > 709:
        raise OverflowError("bound overflows even in log space")
    log_value = math.log(2 * m / M2) + n * (log_w + math.exp(log_inner))
    if log_value > 709:
        raise OverflowError(f"bound is exp({log_value:.4g}), beyond double range")
    return BoundValue(
        math.exp(log_value),
        "propB",
        {"M2>0": True},
        {"w": w, "v": v, "log_value": log_value},
    )


# --- recursion utilities ---------------------------------------------------


def _check_A(A):
    if not (0 < A < 1):
        raise ValueError(f"A must lie in (0, 1), got {A!r}")


def _powers(base, k):
    return base ** np.asarray(k, dtype=float)


def recursion_lemD(A, B, C, x0, k):
    """``(1-A)^k x0 + C/A + B^2 / (C + sqrt(A) B)``; ``k`` may be an array."""
    _check_A(A)
    tail = B**2 / (C + math.sqrt(A) * B) if B > 0 else 0.0
    return _powers(1 - A, k) * x0 + C / A + tail


def _lemE_D(A, B, C):
    a2 = 2 * A - A * A
    E = ((1 - A) * C + math.sqrt(C * C + a2 * B * B)) / a2
    return math.sqrt(((1 - A) * E + C) ** 2 + B * B) - (1 - A) * E


def recursion_lemE(A, B, C, x0, k):
    """Sharp closed-form majorant ``(1-A)^k x0 + D/A`` of the recursion
    ``x_{k+1}^2 <= ((1-A) x_k + C)^2 + B^2``; ``k`` may be an array."""
    _check_A(A)
    if min(B, C, x0) < 0:
        raise ValueError("B, C and x0 must be non-negative")
    return _powers(1 - A, k) * x0 + _lemE_D(A, B, C) / A


def recursion_iterate(A, B, C, x0, k, full=False):
    """Iterate ``x_{k+1} = sqrt(((1-A) x_k + C)^2 + B^2)`` from ``x0``.

    Returns ``x_k``, or ``x_0..x_k`` when ``full`` is true.
    """
    _check_A(A)
    xs = np.empty(k + 1)
    xs[0] = x = x0
    for i in range(k):
        x = math.hypot((1 - A) * x + C, B)
        xs[i + 1] = x
    return xs if full else xs[-1]


def recursion_lemI(A, B, C, D, x0, k):
    """``(1-A+D)^k x0 + C/(A-D) + B / sqrt((A-D)(2-A-D))``; needs ``0 < D < A < 1``."""
    if not (0 < D < A < 1):
        raise ValueError("need 0 < D < A < 1")
    return _powers(1 - A + D, k) * x0 + C / (A - D) + B / math.sqrt((A - D) * (2 - A - D))


def recursion_lemI_iterate(A, B, C, D, x0, k, full=False):
    """Iterate ``x_{k+1} = sqrt((1-A)^2 x_k^2 + B^2) + C + D x_k``."""
    if not (0 < D < A < 1):
        raise ValueError("need 0 < D < A < 1")
    xs = np.empty(k + 1)
    xs[0] = x = x0
    for i in range(k):
        x = math.hypot((1 - A) * x, B) + C + D * x
        xs[i + 1] = x
    return xs if full else xs[-1]


def one_step_recursion(W_k, m, M, p, h, delta=0.0, sigma=0.0):
    """One application of the W2 recursion of a (noisy) LMC step.

    ``sqrt((rho W_k + alpha M sqrt(h^3 p) + h delta sqrt(p))^2 + sigma^2 h^2 p)``
    with ``rho = max(1 - mh, Mh - 1)`` and ``alpha = 7 sqrt(2)/6``.
    """
    if not (0 < h < 2.0 / M):
        raise ValueError("need 0 < h < 2/M")
    rho = max(1 - m * h, M * h - 1)
    inner = rho * W_k + ALPHA * M * math.sqrt(h**3 * p) + h * delta * math.sqrt(p)
    return math.hypot(inner, sigma * h * math.sqrt(p))


def iterate_one_step(W0, m, M, p, h, K, delta=0.0, sigma=0.0, full=False):
    """``K`` applications of :func:`one_step_recursion` starting at ``W0``."""
    ws = np.empty(K + 1)
    ws[0] = w = W0
    for i in range(K):
        w = one_step_recursion(w, m, M, p, h, delta, sigma)
        ws[i + 1] = w
    return ws if full else ws[-1]
