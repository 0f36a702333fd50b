"""Finite-horizon rate allocation for scalar time-varying sources.

The average-distortion problem is solved by dynamic reverse waterfilling: a
Lagrange multiplier ``theta`` sets a tentative per-stage level, each level is
clipped at that stage's prediction variance, and ``theta`` is bisected until
the average allocation meets the excess-distortion budget. The pointwise
(per-stage) problem has a closed form handled by ``pointwise_closed_form``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BracketFailure, BudgetInfeasible, InfeasibleStage, ValidationError
from .kalman import scalar_filter_variances
from .linalg import log_conversion
from .model import TimeVaryingSystemModel

_MAX_BRACKET_EXPANSIONS = 200


@dataclass(frozen=True)
class FiniteHorizonProblem:
    """Scalar finite-horizon instance: model, budget and filter statistics.

    ``sigma_upsilon[t]`` is the variance of the filter-estimate increment at
    stage ``t`` and drives the prediction recursion of the allocation;
    ``d_min`` is the average posterior variance (the distortion floor).
    """

    model: TimeVaryingSystemModel
    D: float
    d_min: float
    sigma_upsilon: np.ndarray

    def __post_init__(self):
        if not self.model.is_scalar:
            raise ValidationError("model", "finite-horizon allocation requires p = m = 1")
        ups = np.asarray(self.sigma_upsilon, dtype=float)
        if ups.shape != (self.model.horizon + 1,):
            raise ValidationError("sigma_upsilon", "must have one entry per stage")
        if np.any(ups < 0):
            raise ValidationError("sigma_upsilon", "must be nonnegative")
        if not math.isfinite(self.d_min):
            raise BudgetInfeasible("distortion floor is not finite")
        if not self.D > self.d_min:
            raise BudgetInfeasible(
                f"D = {self.D} must exceed the distortion floor {self.d_min}")
        object.__setattr__(self, "sigma_upsilon", ups)

    @classmethod
    def from_model(cls, model: TimeVaryingSystemModel, D: float) -> "FiniteHorizonProblem":
        _, post, ups = scalar_filter_variances(model)
        return cls(model=model, D=float(D), d_min=float(post.mean()), sigma_upsilon=ups)

    @property
    def budget(self) -> float:
        return self.D - self.d_min


@dataclass(frozen=True)
class WaterfillSolution:
    """Optimal allocation: multiplier, per-stage variances and rates."""

    theta_star: float
    post_var: np.ndarray
    prior_var: np.ndarray
    stage_rates: np.ndarray
    total_rate: float

    @property
    def normalized_rate(self) -> float:
        """Rate per source sample."""
        return self.total_rate / len(self.stage_rates)


def waterfill_stage(theta: float, beta: float = 0.0, terminal: bool = False) -> float:
    """Unclipped stage level at multiplier ``theta``.

    Non-terminal stages with coupling ``beta > 0`` get ``(sqrt(1 + beta /
    theta) - 1) / beta``; the terminal stage, and the ``beta -> 0`` limit,
    get ``1 / (2 theta)``. Strictly decreasing in ``theta``.
    """
    if theta <= 0:
        raise ValueError("theta must be positive")
    if beta < 0:
        raise ValueError("beta must be nonnegative")
    if terminal or beta == 0.0:
        return 1.0 / (2.0 * theta)
    # equivalent to (sqrt(1 + beta/theta) - 1) / beta without cancellation
    return 1.0 / (theta * (1.0 + math.sqrt(1.0 + beta / theta)))


def _allocate(problem: FiniteHorizonProblem, theta: float):
    """Clipped allocation for a fixed multiplier.

    Each stage takes ``min(unclipped level, prediction variance)``; the next
    prediction variance is ``alpha_t^2 post[t] + sigma_upsilon[t + 1]``.
    """
    n = problem.model.horizon
    a = problem.model.A[:, 0, 0]
    ups = problem.sigma_upsilon
    post = np.empty(n + 1)
    prior = np.empty(n + 1)
    prior[0] = ups[0]
    for t in range(n + 1):
        if t == n:
            level = 1.0 / (2.0 * theta)
        else:
            beta = 2.0 * a[t] * a[t] / ups[t + 1]
            level = waterfill_stage(theta, beta)
        post[t] = level if level < prior[t] else prior[t]
        if t < n:
            prior[t + 1] = a[t] * a[t] * post[t] + ups[t + 1]
    return post, prior


def _saturated_allocation(problem: FiniteHorizonProblem):
    """Every stage clipped at its prediction variance (zero-rate allocation).

    Returns None as soon as the running total exceeds the budget: entries are
    positive, so the mean is then guaranteed to overshoot (this also dodges
    overflow for unstable dynamics, where the clipped sequence diverges).
    """
    n = problem.model.horizon
    a = problem.model.A[:, 0, 0]
    ups = problem.sigma_upsilon
    cap_total = (n + 1) * problem.budget
    post = np.empty(n + 1)
    post[0] = ups[0]
    total = post[0]
    for t in range(n):
        if total > cap_total:
            return None
        post[t + 1] = a[t] * a[t] * post[t] + ups[t + 1]
        total += post[t + 1]
    return post if total <= cap_total else None


def reverse_waterfill_finite(problem: FiniteHorizonProblem, eps: float = 1e-9,
                             theta_min: float = 1e-12, theta_max: float | None = None,
                             log_base: float = 2) -> WaterfillSolution:
    """Bisect the multiplier until the average allocation meets the budget.

    The bracket is grown automatically: ``theta_max`` defaults to
    ``(n + 1) / (2 budget)`` and doubles until its allocation falls below the
    budget; ``theta_min`` halves until its allocation sits above. Bisection
    narrows the bracket below ``eps / (n + 1)``, then a polish phase keeps
    bisecting on the sign of the budget gap until the average allocation
    matches the budget within ``eps`` on both sides. When the budget exceeds
    even the fully clipped allocation the distortion constraint is slack and
    the zero-rate allocation is returned with ``theta_star = 0``.
    """
    if eps <= 0:
        raise ValidationError("eps", "must be positive")
    n = problem.model.horizon
    budget = problem.budget
    ln_div = log_conversion(log_base)

    saturated = _saturated_allocation(problem)
    if saturated is not None:
        rates = np.zeros(n + 1)
        return WaterfillSolution(theta_star=0.0, post_var=saturated,
                                 prior_var=saturated.copy(), stage_rates=rates,
                                 total_rate=0.0)

    if theta_max is None:
        theta_max = (n + 1) / (2.0 * budget)
    for _ in range(_MAX_BRACKET_EXPANSIONS):
        post, _ = _allocate(problem, theta_max)
        if post.mean() < budget:
            break
        theta_max *= 2.0
    else:
        raise BracketFailure("upper multiplier bound never undershot the budget")
    for _ in range(_MAX_BRACKET_EXPANSIONS):
        post, _ = _allocate(problem, theta_min)
        if post.mean() >= budget:
            break
        theta_min *= 0.5
    else:
        raise BracketFailure("lower multiplier bound never overshot the budget")

    theta = 0.5 * (theta_min + theta_max)
    while theta_max - theta_min >= eps / (n + 1):
        post, prior = _allocate(problem, theta)
        if post.mean() - budget >= eps:
            theta_min = theta
        else:
            theta_max = theta
        theta = 0.5 * (theta_min + theta_max)

    # Polish: the loop above stops at the budget + eps boundary; keep
    # bisecting on the plain gap sign so the constraint is met two-sided.
    post, prior = _allocate(problem, theta)
    if abs(post.mean() - budget) > eps:
        lo, hi = theta_min, theta_max
        for _ in range(_MAX_BRACKET_EXPANSIONS):
            if _allocate(problem, hi)[0].mean() <= budget:
                break
            hi *= 2.0
        for _ in range(400):
            theta = 0.5 * (lo + hi)
            post, prior = _allocate(problem, theta)
            gap = post.mean() - budget
            if abs(gap) <= eps:
                break
            if gap > 0:
                lo = theta
            else:
                hi = theta
    rates = np.maximum(0.5 * np.log(prior / post) / ln_div, 0.0)
    return WaterfillSolution(theta_star=theta, post_var=post, prior_var=prior,
                             stage_rates=rates, total_rate=float(rates.sum()))


def pointwise_closed_form(model: TimeVaryingSystemModel, D_t, d_min_t,
                          log_base: float = 2):
    """Per-stage rates under pointwise distortion targets.

    Stage ``t`` pays ``[log(prior_t / (D_t - d_min_t))]+ / 2`` where the
    prediction variance follows ``prior_t = alpha_{t-1}^2 (D_{t-1} -
    d_min_{t-1}) + sigma_upsilon_t`` from ``prior_0 = sigma_upsilon_0``.
    Returns ``(stage_rates, total_rate)``.
    """
    D_t = np.asarray(D_t, dtype=float)
    d_min_t = np.asarray(d_min_t, dtype=float)
    n = model.horizon
    if D_t.shape != (n + 1,) or d_min_t.shape != (n + 1,):
        raise ValidationError("D_t", "per-stage targets must cover the horizon")
    excess = D_t - d_min_t
    if np.any(excess <= 0):
        bad = np.nonzero(excess <= 0)[0]
        raise InfeasibleStage(f"D_t does not exceed the stage floor at t = {bad.tolist()}")
    _, _, ups = scalar_filter_variances(model)
    a = model.A[:, 0, 0]
    ln_div = log_conversion(log_base)
    prior = np.empty(n + 1)
    prior[0] = ups[0]
    for t in range(n):
        prior[t + 1] = a[t] * a[t] * excess[t] + ups[t + 1]
    rates = np.maximum(0.5 * np.log(prior / excess) / ln_div, 0.0)
    return rates, float(rates.sum())
