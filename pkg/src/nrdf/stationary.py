"""Infinite-horizon rate-distortion solvers for time-invariant models.

When the state matrix and the steady increment covariance commute (scalar A,
symmetric A with scalar noise, or A equal to the noise), the log-det program
diagonalizes in a common eigenbasis and reverse waterfilling over eigenvalues
solves it exactly. Scalar models additionally admit a closed form, and a
uniform-allocation comparison bound is provided for benchmarking.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import (BracketFailure, BudgetInfeasible, NotDetectable,
                     NotStabilizable, SingularA, SingularPosterior,
                     StructureNotSatisfied, ValidationError)
from .linalg import inf_norm, is_psd, log_conversion, sym
from .model import SystemModel
from .riccati import SteadyState, check_detectable, check_stabilizable, dare_solve

_COMMUTE_REL_TOL = 1e-9
_MAX_BRACKET_EXPANSIONS = 200


class StructureTag(enum.Enum):
    SCALAR_A = "scalar-A"
    SYMMETRIC_A_SCALAR_NOISE = "symmetric-A-scalar-noise"
    A_EQUALS_NOISE = "A-equals-noise"
    NONE = "none"


@dataclass(frozen=True)
class StructuralClass:
    """Common eigenbasis and paired eigenvalues for commuting (A, Sigma_bar).

    ``mu_A2[i]`` and ``mu_Sigma_bar[i]`` belong to the same eigenvector
    (column i of ``common_basis``); pairing is by shared eigenvector, never
    by sort order.
    """

    tag: StructureTag
    common_basis: np.ndarray | None
    mu_A2: np.ndarray | None
    mu_Sigma_bar: np.ndarray | None


@dataclass(frozen=True)
class StationaryProblem:
    """Time-invariant instance: model, its steady state, and the budget D."""

    model: SystemModel
    steady: SteadyState
    D: float

    def __post_init__(self):
        if not check_detectable(self.model.A, self.model.C):
            raise NotDetectable("(A, C) fails the PBH detectability test")
        if not check_stabilizable(self.model.A, self.model.Sigma_w):
            raise NotStabilizable("(A, Sigma_w^1/2) fails the PBH stabilizability test")
        if not self.D > self.steady.d_min_infty:
            raise BudgetInfeasible(
                f"D = {self.D} must exceed the distortion floor {self.steady.d_min_infty}")

    @classmethod
    def from_model(cls, model: SystemModel, D: float, tol: float = 1e-10) -> "StationaryProblem":
        return cls(model=model, steady=dare_solve(model, tol=tol), D=float(D))

    @property
    def budget(self) -> float:
        return self.D - self.steady.d_min_infty


@dataclass(frozen=True)
class EigenWaterfill:
    """Eigenvalue allocation: multiplier, posterior/prior eigenvalues, rate.

    ``basis`` carries the common eigenvectors so the matrix-valued posterior
    can be reconstructed as ``basis @ diag(mu_post) @ basis.T``.
    """

    theta_star: float
    mu_post: np.ndarray
    mu_prior: np.ndarray
    rate: float
    basis: np.ndarray

    def sigma_xi(self) -> np.ndarray:
        return sym((self.basis * self.mu_post) @ self.basis.T)

    def pi_xi(self) -> np.ndarray:
        return sym((self.basis * self.mu_prior) @ self.basis.T)


@dataclass(frozen=True)
class StationaryTestChannelSpec:
    """Time-invariant posterior/prior covariance pair with its rate."""

    Sigma_xi: np.ndarray
    Pi_xi: np.ndarray
    rate: float

    def __post_init__(self):
        S = np.asarray(self.Sigma_xi, dtype=float)
        P = np.asarray(self.Pi_xi, dtype=float)
        scale = max(inf_norm(P), 1.0)
        if not is_psd(P - S, rel=1e-7):
            raise ValidationError("Sigma_xi", "must satisfy Sigma_xi <= Pi_xi")
        if np.linalg.eigvalsh(sym(S)).min() <= -1e-9 * scale:
            raise ValidationError("Sigma_xi", "must be positive semidefinite")
        object.__setattr__(self, "Sigma_xi", sym(S))
        object.__setattr__(self, "Pi_xi", sym(P))

    @classmethod
    def from_eigen(cls, wf: EigenWaterfill) -> "StationaryTestChannelSpec":
        return cls(Sigma_xi=wf.sigma_xi(), Pi_xi=wf.pi_xi(), rate=wf.rate)


def classify_structure(A, Sigma_bar, rel_tol: float = _COMMUTE_REL_TOL) -> StructuralClass:
    """Match (A, Sigma_bar) against the commuting special cases.

    Checked in order: (i) A a scalar multiple of the identity; (ii) A real
    symmetric with Sigma_bar a scalar matrix; (iii) A equal to Sigma_bar and
    positive definite. The eigenbasis is taken from the member with the
    nontrivial spectrum (the other one is scalar in every matched case).
    """
    A = np.asarray(A, dtype=float)
    Sb = np.asarray(Sigma_bar, dtype=float)
    if A.shape != Sb.shape or A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValidationError("A", "A and Sigma_bar must be square of equal size")
    p = A.shape[0]
    scale = max(inf_norm(A), inf_norm(Sb), 1.0)
    atol = rel_tol * scale

    def is_scalar_matrix(M):
        d = np.diag(M)
        return (inf_norm(M - np.diag(d)) <= atol
                and np.max(np.abs(d - d.mean())) <= atol)

    tag = StructureTag.NONE
    if is_scalar_matrix(A):
        tag = StructureTag.SCALAR_A
        alpha = float(np.diag(A).mean())
        w_sb, V = np.linalg.eigh(sym(Sb))
        mu_a2 = np.full(p, alpha * alpha)
        mu_sb = w_sb
    elif inf_norm(A - A.T) <= atol and is_scalar_matrix(Sb):
        tag = StructureTag.SYMMETRIC_A_SCALAR_NOISE
        w_a, V = np.linalg.eigh(sym(A))
        mu_a2 = w_a * w_a
        mu_sb = np.full(p, float(np.diag(Sb).mean()))
    elif inf_norm(A - Sb) <= atol and inf_norm(A - A.T) <= atol \
            and np.linalg.eigvalsh(sym(A)).min() > atol:
        tag = StructureTag.A_EQUALS_NOISE
        w_a, V = np.linalg.eigh(sym(A))
        mu_a2 = w_a * w_a
        mu_sb = w_a
    else:
        return StructuralClass(tag=StructureTag.NONE, common_basis=None,
                               mu_A2=None, mu_Sigma_bar=None)

    if inf_norm(A @ Sb - Sb @ A) > rel_tol * max(scale * scale, 1.0):
        return StructuralClass(tag=StructureTag.NONE, common_basis=None,
                               mu_A2=None, mu_Sigma_bar=None)
    return StructuralClass(tag=tag, common_basis=V, mu_A2=mu_a2, mu_Sigma_bar=mu_sb)


def _eigen_allocation(mu_a2, mu_sb, theta):
    """Clipped per-eigenvalue levels at a fixed multiplier.

    Stable directions (mu_A2 < 1) are capped at the fixed point
    ``mu_Sigma_bar / (1 - mu_A2)`` where posterior equals prior.
    """
    ups = 2.0 * mu_a2 / mu_sb
    # (sqrt(1 + ups/theta) - 1) / ups rewritten without cancellation;
    # the ups -> 0 limit lands on 1 / (2 theta) automatically
    star = 1.0 / (theta * (1.0 + np.sqrt(1.0 + ups / theta)))
    cap = np.where(mu_a2 < 1.0, mu_sb / np.maximum(1.0 - mu_a2, 1e-300), np.inf)
    return np.minimum(star, cap), cap


def reverse_waterfill_stationary(problem: StationaryProblem, eps: float = 1e-9,
                                 log_base: float = 2) -> EigenWaterfill:
    """Eigenvalue reverse waterfilling for structural instances.

    Requires ``classify_structure`` to match; otherwise raises
    StructureNotSatisfied (route those instances to the SDP oracle). Singular
    increment covariances are regularized by ``eps_reg = 1e-10 trace / p`` on
    the eigenvalues, following the continuity argument for the degenerate
    case. The multiplier is bisected until the bracket width drops below
    ``eps``, then polished until the total allocation matches the budget
    within ``eps`` on both sides.
    """
    structure = classify_structure(problem.model.A, problem.steady.Sigma_bar)
    if structure.tag is StructureTag.NONE:
        raise StructureNotSatisfied(
            "(A, Sigma_bar) do not commute in a supported pattern; use the SDP oracle")
    mu_a2 = structure.mu_A2.copy()
    mu_sb = structure.mu_Sigma_bar.copy()
    p = len(mu_a2)
    budget = problem.budget
    ln_div = log_conversion(log_base)

    if np.any(mu_sb <= 0.0):
        eps_reg = 1e-10 * max(float(np.sum(mu_sb)), 0.0) / p
        mu_sb = np.maximum(mu_sb, 0.0) + max(eps_reg, 1e-300)

    _, cap = _eigen_allocation(mu_a2, mu_sb, 1.0)
    if np.all(np.isfinite(cap)) and cap.sum() <= budget:
        mu_post = cap
        mu_prior = mu_a2 * mu_post + mu_sb
        return EigenWaterfill(theta_star=0.0, mu_post=mu_post, mu_prior=mu_prior,
                              rate=0.0, basis=structure.common_basis)

    theta_min, theta_max = 1e-12, p / (2.0 * budget)
    for _ in range(_MAX_BRACKET_EXPANSIONS):
        mu, _ = _eigen_allocation(mu_a2, mu_sb, theta_max)
        if mu.sum() < budget:
            break
        theta_max *= 2.0
    else:
        raise BracketFailure("upper multiplier bound never undershot the budget")
    for _ in range(_MAX_BRACKET_EXPANSIONS):
        mu, _ = _eigen_allocation(mu_a2, mu_sb, theta_min)
        if mu.sum() >= budget:
            break
        theta_min *= 0.5
    else:
        raise BracketFailure("lower multiplier bound never overshot the budget")

    theta = 0.5 * (theta_min + theta_max)
    while theta_max - theta_min >= eps:
        mu, _ = _eigen_allocation(mu_a2, mu_sb, theta)
        if mu.sum() - budget >= eps:
            theta_min = theta
        else:
            theta_max = theta
        theta = 0.5 * (theta_min + theta_max)

    # Polish toward the plain zero of the budget gap (the loop above stops
    # at the budget + eps boundary).
    mu_post, _ = _eigen_allocation(mu_a2, mu_sb, theta)
    if abs(mu_post.sum() - budget) > eps:
        lo, hi = theta_min, theta_max
        for _ in range(_MAX_BRACKET_EXPANSIONS):
            if _eigen_allocation(mu_a2, mu_sb, hi)[0].sum() <= budget:
                break
            hi *= 2.0
        for _ in range(400):
            theta = 0.5 * (lo + hi)
            mu_post, _ = _eigen_allocation(mu_a2, mu_sb, theta)
            gap = mu_post.sum() - budget
            if abs(gap) <= eps:
                break
            if gap > 0:
                lo = theta
            else:
                hi = theta
    mu_prior = mu_a2 * mu_post + mu_sb
    rate = float(np.maximum(0.5 * np.log(mu_prior / mu_post) / ln_div, 0.0).sum())
    return EigenWaterfill(theta_star=theta, mu_post=mu_post, mu_prior=mu_prior,
                          rate=rate, basis=structure.common_basis)


def scalar_closed_form(problem: StationaryProblem, log_base: float = 2) -> float:
    """Stationary rate for scalar models: ``log(alpha^2 + Sigma_bar / (D -
    Sigma)) / 2``, clamped at zero once the argument drops below one."""
    if problem.model.p != 1:
        raise ValidationError("model", "closed form requires p = 1")
    alpha = float(problem.model.A[0, 0])
    sigma = float(problem.steady.Sigma[0, 0])
    sigma_bar = float(problem.steady.Sigma_bar[0, 0])
    excess = problem.D - sigma
    if excess <= 0:
        raise BudgetInfeasible(f"D = {problem.D} must exceed {sigma}")
    arg = alpha * alpha + sigma_bar / excess
    return max(0.5 * math.log(arg) / log_conversion(log_base), 0.0)


def kh_bound(problem: StationaryProblem, log_base: float = 2) -> float:
    """Kostina-Hassibi-style closed form under uniform rate-distortion
    allocation: ``(p/2) log(abar^2 + |Sigma_bar|^{1/p} p / (D - trace
    Sigma))`` with ``abar = |det A|^{1/p}``. Coincides with the scalar closed
    form at p = 1; used as a comparison curve for the exact solvers."""
    A = problem.model.A
    p = problem.model.p
    det_a = float(np.linalg.det(A))
    if det_a == 0.0 or not np.isfinite(det_a):
        raise SingularA("A must be invertible")
    excess = problem.D - problem.steady.d_min_infty
    if excess <= 0:
        raise BudgetInfeasible(
            f"D = {problem.D} must exceed {problem.steady.d_min_infty}")
    abar2 = abs(det_a) ** (2.0 / p)
    det_sb = max(float(np.linalg.det(problem.steady.Sigma_bar)), 0.0)
    arg = abar2 + det_sb ** (1.0 / p) * p / excess
    return max(0.5 * p * math.log(arg) / log_conversion(log_base), 0.0)


def stationary_rate(spec: StationaryTestChannelSpec, log_base: float = 2) -> float:
    """Log-det rate ``log(det Pi_xi / det Sigma_xi) / 2`` of a stationary pair."""
    sign_s, logdet_s = np.linalg.slogdet(spec.Sigma_xi)
    if sign_s <= 0 or not np.isfinite(logdet_s):
        raise SingularPosterior("posterior covariance must be positive definite")
    sign_p, logdet_p = np.linalg.slogdet(spec.Pi_xi)
    if sign_p <= 0:
        raise SingularPosterior("prior covariance must be positive definite")
    return max(0.5 * (logdet_p - logdet_s) / log_conversion(log_base), 0.0)
