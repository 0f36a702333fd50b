"""Small dense linear-algebra helpers used by the covariance recursions."""

from __future__ import annotations

import math

import numpy as np

# Relative eigenvalue floor accepted as "positive semidefinite".
PSD_FLOOR_REL = 1e-9


def sym(M: np.ndarray) -> np.ndarray:
    """Symmetrize, suppressing floating-point drift."""
    return 0.5 * (M + M.T)


def inf_norm(M: np.ndarray) -> float:
    return float(np.max(np.abs(M))) if M.size else 0.0


def is_psd(M: np.ndarray, rel: float = PSD_FLOOR_REL) -> bool:
    """Eigenvalue test with floor ``-rel * max|M|``."""
    M = np.asarray(M, dtype=float)
    if M.size == 0:
        return True
    w = np.linalg.eigvalsh(sym(M))
    return bool(w.min() >= -rel * max(inf_norm(M), 1e-300))


def is_pd(M: np.ndarray) -> bool:
    try:
        np.linalg.cholesky(sym(np.asarray(M, dtype=float)))
        return True
    except np.linalg.LinAlgError:
        return False


def psd_sqrt(M: np.ndarray) -> np.ndarray:
    """Symmetric square root of a PSD matrix (negative eigenvalues clipped)."""
    w, V = np.linalg.eigh(sym(np.asarray(M, dtype=float)))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def cholesky_with_floor(M: np.ndarray, rel_pivot: float = 1e-12):
    """Cholesky factor of ``M``, or ``None`` when a pivot falls at or below
    ``rel_pivot`` times the largest diagonal entry (treated as singular)."""
    M = np.asarray(M, dtype=float)
    n = M.shape[0]
    floor = rel_pivot * max(float(np.max(np.diag(M))), 0.0)
    L = np.zeros_like(M)
    for j in range(n):
        pivot = M[j, j] - L[j, :j] @ L[j, :j]
        if not np.isfinite(pivot) or pivot <= floor:
            return None
        L[j, j] = math.sqrt(pivot)
        if j + 1 < n:
            L[j + 1:, j] = (M[j + 1:, j] - L[j + 1:, :j] @ L[j, :j]) / L[j, j]
    return L


def spectral_radius(A: np.ndarray) -> float:
    return float(np.max(np.abs(np.linalg.eigvals(np.asarray(A, dtype=float)))))


def log_conversion(log_base: float) -> float:
    """Divisor turning natural-log rates into the requested base."""
    if log_base == 2:
        return math.log(2.0)
    if log_base in (math.e, "e"):
        return 1.0
    return math.log(float(log_base))
