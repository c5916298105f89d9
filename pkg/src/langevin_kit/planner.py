"""Iteration budgets: the smallest ``K`` that brings a guarantee below ``eps``.

For the constant-step guarantees, ``min_iterations`` searches ``K`` by
doubling and then bisection; for each ``K`` the bound is minimised over the
admissible step sizes by bracketing on a log grid and bisecting the
derivative (computed by complex-step differentiation).  The decaying-step
guarantee is inverted in closed form.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import bounds as _b
from .exceptions import InfeasibleError
from .samplers import compute_K1

__all__ = [
    "BOUND_NAMES",
    "PlanResult",
    "min_iterations",
    "minimize_over_h",
    "admissible_step",
    "sufficient_pair",
    "Figure1Row",
    "figure1_table",
    "figure1_summary",
]

BOUND_NAMES = ("thm1", "thm2", "thm3", "thm4", "thm5_lmco", "thm5_lmco_prime", "dm")

_H_RTOL = 1e-10
_GRID = np.geomspace(1e-15, 1.0, 301)
_K_CAP = 2**62


@dataclass(frozen=True)
class PlanResult:
    """Iteration budget for one guarantee.

    ``h_star`` is the optimal constant step; for ``thm2`` it is the last step
    of the decaying schedule.  ``value`` is the guarantee at ``(h_star, K_eps)``.
    """

    K_eps: int
    h_star: float
    value: float
    bound: str
    epsilon: float
    extras: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        return asdict(self)


def admissible_step(bound: str, m: float, M: float) -> float:
    """Largest step size searched for ``bound``."""
    if bound == "thm5_lmco":
        return m / M**2
    if bound == "thm5_lmco_prime":
        return 0.75 * m / M**2
    if bound in ("thm1", "thm3", "thm4", "dm"):
        return 2.0 / (m + M)
    raise ValueError(f"no step-size search for bound {bound!r}")


def _formula(bound: str, params: dict):
    kw = dict(params)
    if bound in ("thm4", "thm5_lmco", "thm5_lmco_prime") and kw.get("M2") is None:
        raise ValueError(f"{bound} needs the Hessian Lipschitz constant M2")
    if bound == "thm1":
        f = _b._thm1_formula
    elif bound == "thm3":
        f = _b._thm3_formula
    elif bound == "thm4":
        f = _b._thm4_formula
    elif bound == "dm":
        f = _b._dm_formula
    elif bound.startswith("thm5_"):
        kw["variant"] = bound[len("thm5_"):]
        f = _b._thm5_formula
    else:
        raise ValueError(f"unknown bound {bound!r}")
    return lambda h, K: f(h, K, **kw)


def _floor(bound: str, params: dict) -> float:
    if bound in ("thm3", "thm4"):
        return params.get("delta", 0.0) * math.sqrt(params["p"]) / params["m"]
    return 0.0


def minimize_over_h(fn, hmax: float):
    """Minimise ``h -> fn(h)`` on ``(0, hmax]``.

    ``fn`` must accept complex arrays.  Returns ``(h, value)``.
    """
    hs = hmax * _GRID
    vals = np.real(fn(hs))
    vals = np.where(np.isfinite(vals), vals, np.inf)
    i = int(np.argmin(vals))

    def slope(h):
        t = 1e-30 * h
        return float(np.imag(fn(np.array([h + 1j * t])))[0] / t)

    if i == 0:
        return float(hs[0]), float(vals[0])
    if i == len(hs) - 1:
        if slope(hmax) <= 0:
            return hmax, float(vals[-1])
        lo, hi = hs[i - 1], hmax
    else:
        lo, hi = hs[i - 1], hs[i + 1]
    while hi - lo > _H_RTOL * hi:
        mid = 0.5 * (lo + hi)
        if slope(mid) < 0:
            lo = mid
        else:
            hi = mid
    cand = np.array([lo, hi])
    cv = np.real(fn(cand))
    j = int(np.argmin(cv))
    if cv[j] > vals[i]:
        return float(hs[i]), float(vals[i])
    return float(cand[j]), float(cv[j])


def _plan_thm2(eps, m, M, p, W2_0) -> PlanResult:
    K1 = compute_K1(m, M, p, W2_0)
    x = (3.5 * M * math.sqrt(p) / (m * eps)) ** 2 - (M + m)
    K = K1 + max(0, math.ceil(1.5 / m * x))

    def val(k):
        return _b.bound_thm2(m, M, p, k, K1).value

    # guard the ceiling against rounding in either direction
    while K > K1 and val(K - 1) <= eps:
        K -= 1
    while val(K) > eps:
        K += 1
    h_last = 2.0 / (M + m + (2.0 / 3.0) * m * max(K - 1 - K1, 0))
    return PlanResult(K, h_last, val(K), "thm2", eps, {"K1": K1})


def min_iterations(bound: str, eps: float, params: dict) -> PlanResult:
    """Smallest ``K`` for which the guarantee can be made ``<= eps``.

    Parameters
    ----------
    bound : str
        One of :data:`BOUND_NAMES`.
    eps : float
        Target precision in W2.
    params : dict
        ``m, M, p, W2_0`` and, where relevant, ``delta, sigma, M2`` and
        ``constants`` (``"statement"`` or ``"proof"``, second-order bounds only).

    Raises
    ------
    InfeasibleError
        If the floor of the guarantee is at least ``eps``, or no ``K`` below
        ``2**62`` reaches ``eps``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    if bound not in BOUND_NAMES:
        raise ValueError(f"unknown bound {bound!r}; expected one of {BOUND_NAMES}")
    params = dict(params)
    params.pop("h", None)
    params.pop("K", None)
    m, M, p = params["m"], params["M"], params["p"]
    if not (0 < m <= M):
        raise ValueError("need 0 < m <= M")
    W2_0 = params.get("W2_0", 0.0)
    if bound == "thm2":
        return _plan_thm2(eps, m, M, p, W2_0)
    if not bound.startswith("thm5_"):
        params.pop("constants", None)
    floor = _floor(bound, params)
    if floor >= eps:
        raise InfeasibleError(bound, floor, eps)
    fn = _formula(bound, params)
    hmax = admissible_step(bound, m, M)

    def best(K):
        return minimize_over_h(lambda h: fn(h, K), hmax)

    h, v = best(0)
    if v <= eps:
        return PlanResult(0, h, v, bound, eps)
    lo, hi = 0, 1
    while True:
        h, v = best(hi)
        if v <= eps:
            break
        lo, hi = hi, 2 * hi
        if hi > _K_CAP:
            raise InfeasibleError(bound, floor, eps)
    found = (h, v)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        hm, vm = best(mid)
        if vm <= eps:
            hi, found = mid, (hm, vm)
        else:
            lo = mid
    return PlanResult(hi, found[0], found[1], bound, eps)


def sufficient_pair(eps: float, m: float, M: float, p: int, W2_0: float):
    """Explicit ``(h, K)`` guaranteeing the constant-step bound is ``<= eps``.

    ``h = min(m^2 eps^2 / (11 M^2 p), 2/(m+M))`` keeps the discretisation term
    below ``eps/2`` and ``K = ceil(ln(2 W2_0 / eps) / (m h))`` shrinks the
    contraction term below ``eps/2``.
    """
    if not eps > 0:
        raise ValueError("eps must be positive")
    h = min(m**2 * eps**2 / (11 * M**2 * p), 2.0 / (m + M))
    if W2_0 <= 0:
        return h, 0
    K = max(0, math.ceil(math.log(2 * W2_0 / eps) / (m * h)))
    return h, K


@dataclass(frozen=True)
class Figure1Row:
    p: int
    epsilon: float
    K_thm1: int
    K_thm2: int
    K_dm: int

    @property
    def logK(self) -> dict:
        return {
            "thm1": math.log(self.K_thm1),
            "thm2": math.log(self.K_thm2),
            "dm": math.log(self.K_dm),
        }


def _figure1_row(args) -> Figure1Row:
    m, M, eps, p = args
    params = {"m": m, "M": M, "p": p, "W2_0": p + p / m}
    return Figure1Row(
        p,
        eps,
        min_iterations("thm1", eps, params).K_eps,
        min_iterations("thm2", eps, params).K_eps,
        min_iterations("dm", eps, params).K_eps,
    )


def figure1_table(m=10.0, M=20.0, eps_list=(0.001, 0.005, 0.02), p_grid=range(25, 1001, 25), workers=1):
    """Iteration budgets of the two new guarantees and the earlier benchmark.

    For every ``(eps, p)`` the initial distance is taken as ``W2_0 = p + p/m``.
    Rows are ordered by ``eps`` then ``p``.
    """
    eps_list = list(eps_list)
    p_grid = list(p_grid)
    if not eps_list or not p_grid:
        raise ValueError("grids must be non-empty")
    jobs = [(m, M, eps, p) for eps in eps_list for p in p_grid]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            return list(pool.map(_figure1_row, jobs, chunksize=8))
    return [_figure1_row(j) for j in jobs]


def figure1_summary(rows) -> dict:
    """Per-``eps`` averages of the iteration ratios and the ordering check.

    Both the mean of per-row ratios and the ratio of mean budgets are given.
    """
    out = {}
    for eps in sorted({r.epsilon for r in rows}):
        sel = [r for r in rows if r.epsilon == eps]
        k1 = np.array([r.K_thm1 for r in sel], dtype=float)
        k2 = np.array([r.K_thm2 for r in sel], dtype=float)
        kd = np.array([r.K_dm for r in sel], dtype=float)
        out[eps] = {
            "mean_ratio_dm_thm2": float(np.mean(kd / k2)),
            "mean_ratio_dm_thm1": float(np.mean(kd / k1)),
            "ratio_of_means_dm_thm2": float(kd.mean() / k2.mean()),
            "ratio_of_means_dm_thm1": float(kd.mean() / k1.mean()),
            "ordered": bool(np.all((k2 <= k1) & (k1 <= kd))),
            "n_rows": len(sel),
        }
    return out
