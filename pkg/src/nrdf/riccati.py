"""Steady-state filter covariances via the discrete algebraic Riccati equation.

``dare_solve`` iterates the one-step Riccati recursion to its fixed point,
which is the maximal stabilizing solution whenever ``(A, C)`` is detectable
and ``(A, Sigma_w^{1/2})`` is stabilizable. Both hypotheses are verified with
PBH rank tests before iterating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (NoConvergence, NotDetectable, NotStabilizable,
                     SingularInnovation, ValidationError)
from .kalman import INNOVATION_PIVOT_REL
from .linalg import cholesky_with_floor, inf_norm, psd_sqrt, sym
from .model import SystemModel

_UNIT_CIRCLE_TOL = 1e-9


@dataclass(frozen=True)
class SteadyState:
    """Limits of the filter covariances for a time-invariant model.

    ``Pi`` is the prior (one-step prediction) error covariance, ``Sigma`` the
    posterior, ``Sigma_bar = Pi - Sigma`` the covariance of the estimate
    increment, and ``d_min_infty = trace(Sigma)`` the distortion floor.
    """

    Pi: np.ndarray
    Sigma: np.ndarray
    Sigma_bar: np.ndarray
    d_min_infty: float

    @property
    def p(self) -> int:
        return self.Pi.shape[0]


def _eigenvalues_to_test(A) -> list:
    """Eigenvalues of A on or outside the unit circle, deduplicated (the PBH
    rank test depends only on the eigenvalue, not its multiplicity)."""
    lams = [lam for lam in np.linalg.eigvals(A)
            if abs(lam) >= 1.0 - _UNIT_CIRCLE_TOL]
    unique = []
    for lam in lams:
        if not any(abs(lam - u) <= 1e-9 * max(1.0, abs(u)) for u in unique):
            unique.append(lam)
    return unique


def check_detectable(A, C) -> bool:
    """PBH test: every eigenvalue of A on or outside the unit circle must be
    observable, i.e. rank([A - lambda I; C]) = p."""
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    p = A.shape[0]
    for lam in _eigenvalues_to_test(A):
        stacked = np.vstack([A - lam * np.eye(p), C.astype(complex)])
        if np.linalg.matrix_rank(stacked) < p:
            return False
    return True


def check_stabilizable(A, Sigma_w) -> bool:
    """PBH test on the pair ``(A, Sigma_w^{1/2})``: rank([A - lambda I,
    Sigma_w^{1/2}]) = p for every eigenvalue with |lambda| >= 1."""
    A = np.asarray(A, dtype=float)
    B = psd_sqrt(Sigma_w)
    p = A.shape[0]
    for lam in _eigenvalues_to_test(A):
        stacked = np.hstack([A - lam * np.eye(p), B.astype(complex)])
        if np.linalg.matrix_rank(stacked) < p:
            return False
    return True


def _riccati_step(P, A, C, Sw, Sn):
    S = sym(C @ P @ C.T + Sn)
    if cholesky_with_floor(S, INNOVATION_PIVOT_REL) is None:
        raise SingularInnovation("innovation covariance is singular at the current iterate")
    P_next = A @ (P - P @ C.T @ np.linalg.solve(S, C @ P)) @ A.T + Sw
    return sym(P_next)


def dare_solve(model: SystemModel, tol: float = 1e-10, max_iter: int = 10**6) -> SteadyState:
    """Fixed-point iteration of the Riccati recursion from ``Sigma_x0``.

    Stops when the sup norm of successive iterates drops to ``tol``. The
    steady posterior and increment covariances are derived from the converged
    prior through the one-step update formulas.
    """
    A, C = model.A, model.C
    Sw, Sn = model.Sigma_w, model.Sigma_n
    if not check_detectable(A, C):
        raise NotDetectable("(A, C) fails the PBH detectability test")
    if not check_stabilizable(A, Sw):
        raise NotStabilizable("(A, Sigma_w^1/2) fails the PBH stabilizability test")
    P = model.Sigma_x0.copy()
    for _ in range(max_iter):
        P_next = _riccati_step(P, A, C, Sw, Sn)
        if inf_norm(P_next - P) <= tol:
            P = P_next
            break
        P = P_next
    else:
        raise NoConvergence(f"Riccati iteration did not converge in {max_iter} steps")
    S = sym(C @ P @ C.T + Sn)
    Sigma = sym(P - P @ C.T @ np.linalg.solve(S, C @ P))
    Sigma_bar = sym(P - Sigma)
    return SteadyState(Pi=P, Sigma=Sigma, Sigma_bar=Sigma_bar,
                       d_min_infty=float(np.trace(Sigma)))


def dare_scalar_closed_form(model: SystemModel) -> SteadyState:
    """Closed-form steady state for scalar models.

    The prior variance is the positive root of ``c^2 Pi^2 + gamma Pi -
    sigma_w^2 sigma_n^2 = 0`` with ``gamma = (1 - alpha^2) sigma_n^2 - c^2
    sigma_w^2``; the posterior is the nonnegative root of ``alpha^2 c^2
    Sigma^2 + gamma_bar Sigma - sigma_w^2 sigma_n^2 = 0`` with ``gamma_bar =
    (1 - alpha^2) sigma_n^2 + c^2 sigma_w^2``.
    """
    if not model.is_scalar:
        raise ValidationError("model", "closed form requires p = m = 1")
    alpha = float(model.A[0, 0])
    c = float(model.C[0, 0])
    if c == 0.0:
        raise ValidationError("C", "closed form requires c != 0")
    sw = float(model.Sigma_w[0, 0])
    sn = float(model.Sigma_n[0, 0])
    gamma = (1.0 - alpha**2) * sn - c**2 * sw
    Pi = (np.sqrt(gamma**2 + 4.0 * c**2 * sw * sn) - gamma) / (2.0 * c**2)
    gamma_bar = (1.0 - alpha**2) * sn + c**2 * sw
    a2c2 = alpha**2 * c**2
    if a2c2 > 0.0:
        Sigma = (-gamma_bar + np.sqrt(gamma_bar**2 + 4.0 * a2c2 * sw * sn)) / (2.0 * a2c2)
    else:
        # alpha = 0 degenerates the quadratic to gamma_bar * Sigma = sw * sn.
        Sigma = sw * sn / gamma_bar
    Sigma_bar = c**2 * Pi**2 / (c**2 * Pi + sn)
    return SteadyState(Pi=np.array([[Pi]]), Sigma=np.array([[Sigma]]),
                       Sigma_bar=np.array([[Sigma_bar]]), d_min_infty=float(Sigma))
