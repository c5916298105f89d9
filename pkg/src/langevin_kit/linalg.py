"""Functions of symmetric matrices used by the second-order samplers.

Every matrix function goes through one symmetric eigendecomposition, so the
drift, covariance and covariance square root of an Ozaki step are diagonal in
the same basis and commute exactly.
"""

from __future__ import annotations

from typing import Callable

import numpy as np

from .exceptions import DimensionError

__all__ = [
    "sym_func",
    "ozaki_drift_factor",
    "ozaki_cov_factor",
    "lmco_matrices",
    "lmco_prime_cov_factor_apply",
]

_SYM_RTOL = 1e-12
_SERIES_CUTOFF = 1e-4


def _check_symmetric(H) -> np.ndarray:
    H = np.asarray(H, dtype=float)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {H.shape}")
    scale = max(np.abs(H).max(initial=0.0), 1.0)
    if np.abs(H - H.T).max(initial=0.0) > _SYM_RTOL * scale:
        raise ValueError("matrix is not symmetric")
    return H


def _eigh(H):
    try:
        return np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - LAPACK failure
        raise ValueError(f"eigendecomposition failed: {exc}") from exc


def sym_func(H, phi: Callable[[np.ndarray], np.ndarray]) -> np.ndarray:
    """Apply ``phi`` to a symmetric matrix through ``H = U diag(lam) U^T``.

    ``phi`` must accept and return 1-d arrays of eigenvalues.
    """
    H = _check_symmetric(H)
    lam, U = _eigh(H)
    return (U * phi(lam)) @ U.T


def ozaki_drift_factor(lam, h: float) -> np.ndarray:
    """``(1 - exp(-h lam)) / lam`` evaluated without cancellation near 0."""
    lam = np.asarray(lam, dtype=float)
    x = h * lam
    small = np.abs(x) < _SERIES_CUTOFF
    out = np.empty_like(x)
    xs = x[small]
    out[small] = h * (1.0 - xs / 2.0 + xs * xs / 6.0 - xs**3 / 24.0)
    big = ~small
    out[big] = -np.expm1(-x[big]) / lam[big]
    return out


def ozaki_cov_factor(lam, h: float) -> np.ndarray:
    """``(1 - exp(-2 h lam)) / lam``."""
    return ozaki_drift_factor(lam, 2.0 * h)


def lmco_matrices(H, h: float, *, psd_tol: float = 1e-12):
    """Drift matrix, covariance and covariance root of one Ozaki step.

    Returns ``(Mk, Sigma, Sigma_sqrt)`` with
    ``Mk = (I - exp(-h H)) H^{-1}`` and ``Sigma = (I - exp(-2 h H)) H^{-1}``.
    The Hessian must be positive semi-definite (up to ``psd_tol`` relative).
    """
    if not h > 0:
        raise ValueError("step size must be positive")
    H = _check_symmetric(H)
    lam, U = _eigh(H)
    if lam.size and lam[0] < -psd_tol * max(abs(lam[-1]), 1.0):
        raise ValueError(f"Hessian is not positive semi-definite (min eigenvalue {lam[0]:.3g})")
    lam = np.maximum(lam, 0.0)
    drift = ozaki_drift_factor(lam, h)
    cov = ozaki_cov_factor(lam, h)
    Mk = (U * drift) @ U.T
    Sigma = (U * cov) @ U.T
    Sigma_sqrt = (U * np.sqrt(cov)) @ U.T
    return Mk, Sigma, Sigma_sqrt


def lmco_prime_cov_factor_apply(H, h: float, eta, eta_prime) -> np.ndarray:
    """Square-root-free draw with covariance ``I - h H + (h^2/3) H^2``.

    Returns ``(I - h H / 2) eta + (sqrt(3)/6) h H eta_prime``.  ``H`` is either a
    matrix or a callable computing Hessian-vector products; only two products
    are performed.
    """
    eta = np.asarray(eta, dtype=float)
    eta_prime = np.asarray(eta_prime, dtype=float)
    if eta.shape != eta_prime.shape or eta.ndim != 1:
        raise DimensionError("eta and eta_prime must be vectors of equal length")
    if callable(H):
        hv = H
    else:
        Hm = np.asarray(H, dtype=float)
        if Hm.shape != (eta.size, eta.size):
            raise DimensionError(f"matrix of shape {Hm.shape} vs vector of length {eta.size}")

        def hv(v):
            return Hm @ v

    return eta - 0.5 * h * hv(eta) + (np.sqrt(3.0) / 6.0) * h * hv(eta_prime)
