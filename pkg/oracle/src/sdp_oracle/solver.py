"""Log-det semidefinite programs for the causal rate-distortion problem.

Two equivalent liftings exist for both the stationary and the finite-horizon
problem. Variant 1 needs a full-rank state matrix and bounds a slack through
the square-root factor of the increment covariance; variant 2 needs a
positive-definite increment covariance and bounds the slack through a Schur
block in (Sigma_xi, A Sigma_xi). Objectives are affine in log-det terms; the
model-dependent constants are added after the solve.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import cvxpy as cp
import numpy as np

from .errors import Infeasible, SolverFailure, ValidationError
from .filtering import forward_increments, steady_increment
from .io import config_hash, distortion_grid, model_matrices

VARIANTS = ("stationary1", "stationary2", "finite1", "finite2")

LN2 = math.log(2.0)


def _preferred_solver():
    installed = cp.installed_solvers()
    return "CLARABEL" if "CLARABEL" in installed else "SCS"


def _psd_sqrt(M):
    w, V = np.linalg.eigh(0.5 * (M + M.T))
    return (V * np.sqrt(np.clip(w, 0.0, None))) @ V.T


def _min_eig(M) -> float:
    return float(np.linalg.eigvalsh(0.5 * (M + M.T)).min())


@dataclass
class SdpInstance:
    """One solvable instance: variant, filter statistics, budget."""

    variant: str
    A: np.ndarray                      # stationary state matrix, or None
    Sigma_bar: np.ndarray | None       # stationary increment covariance
    A_seq: list | None                 # per-stage state matrices (finite)
    Sigma_bar_seq: list | None         # per-stage increment covariances (finite)
    horizon: int | None
    D: float
    d_min: float
    p: int
    extra: dict = field(default_factory=dict)

    @property
    def budget(self) -> float:
        return self.D - self.d_min

    @classmethod
    def from_config(cls, raw: dict, variant: str, D: float) -> "SdpInstance":
        if variant not in VARIANTS:
            raise ValidationError(f"unknown variant {variant!r}")
        (A, C, Sw, Sn, Sx0), stages = model_matrices(raw)
        p = A.shape[0]
        if variant.startswith("stationary"):
            Sigma_bar, d_min = steady_increment(A, C, Sw, Sn)
            inst = cls(variant=variant, A=A, Sigma_bar=Sigma_bar, A_seq=None,
                       Sigma_bar_seq=None, horizon=None, D=D, d_min=d_min, p=p)
        else:
            if stages is not None:
                horizon = len(stages) - 1
                data = lambda t: (stages[t]["A"], stages[t]["C"],
                                  stages[t]["Sigma_w"], stages[t]["Sigma_n"])
                A_seq = [stages[t]["A"] for t in range(horizon + 1)]
            else:
                horizon = raw.get("horizon")
                if horizon is None:
                    raise ValidationError("finite variants need a horizon or stages")
                data = lambda t: (A, C, Sw, Sn)
                A_seq = [A] * (horizon + 1)
            bars, d_min = forward_increments(data, Sx0, horizon)
            inst = cls(variant=variant, A=None, Sigma_bar=None, A_seq=A_seq,
                       Sigma_bar_seq=bars, horizon=horizon, D=D, d_min=d_min, p=p)
        inst._check_hypotheses()
        if not inst.budget > 0:
            raise Infeasible(f"D = {D} does not exceed the floor {inst.d_min}")
        return inst

    def _check_hypotheses(self):
        if self.variant == "stationary1":
            if abs(np.linalg.det(self.A)) < 1e-12:
                raise Infeasible("variant stationary1 needs a full-rank state matrix")
        elif self.variant == "stationary2":
            if _min_eig(self.Sigma_bar) <= 0:
                raise Infeasible("variant stationary2 needs a positive-definite "
                                 "increment covariance")
        elif self.variant == "finite1":
            if any(abs(np.linalg.det(At)) < 1e-12 for At in self.A_seq):
                raise Infeasible("variant finite1 needs full-rank state matrices")
            if _min_eig(self.Sigma_bar_seq[0]) <= 0:
                raise Infeasible("initial reproduction prior is singular "
                                 "(observation map must have full column dimension)")
        elif self.variant == "finite2":
            if any(_min_eig(S) <= 0 for S in self.Sigma_bar_seq):
                raise Infeasible("variant finite2 needs positive-definite "
                                 "increment covariances at every stage")


# Accuracy target for the conic solve. The downstream matrix cross-check
# wants the posterior covariance itself accurate to ~1e-5, which needs the
# interior-point gap pushed well below the usual 1e-9 default; Clarabel
# handles 1e-11 on these problem sizes without losing the OPTIMAL status.
SOLVE_TOL = 1e-11


def _solve(prob: cp.Problem, solver: str | None):
    solver = solver or _preferred_solver()
    options = {}
    if solver == "CLARABEL":
        options = {"tol_gap_abs": SOLVE_TOL, "tol_gap_rel": SOLVE_TOL,
                   "tol_feas": SOLVE_TOL}
    elif solver == "SCS":
        options = {"eps": max(SOLVE_TOL, 1e-9), "max_iters": 200_000}
    try:
        prob.solve(solver=solver, **options)
    except cp.error.SolverError as exc:
        raise SolverFailure(str(exc))
    if prob.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
        raise Infeasible(f"SDP reported {prob.status}")
    if prob.status not in (cp.OPTIMAL, cp.OPTIMAL_INACCURATE):
        raise SolverFailure(f"SDP ended with status {prob.status}")
    return prob.status


def sdp_stationary(instance: SdpInstance, solver: str | None = None) -> dict:
    """One stationary rate-distortion point; returns a result row."""
    A, Sbar, p = instance.A, instance.Sigma_bar, instance.p
    t0 = time.perf_counter()
    Sxi = cp.Variable((p, p), PSD=True)
    Gamma = cp.Variable((p, p), PSD=True)
    Pxi = A @ Sxi @ A.T + Sbar
    constraints = [cp.trace(Sxi) <= instance.budget, Pxi - Sxi >> 0]
    if instance.variant == "stationary1":
        B = _psd_sqrt(Sbar)
        constraints.append(cp.bmat([[np.eye(p) - Gamma, B.T], [B, Pxi]]) >> 0)
        constant = math.log(abs(np.linalg.det(A)))
    else:
        constraints.append(cp.bmat([[Sxi - Gamma, Sxi @ A.T], [A @ Sxi, Pxi]]) >> 0)
        constant = 0.5 * np.linalg.slogdet(Sbar)[1]
    prob = cp.Problem(cp.Minimize(-0.5 * cp.log_det(Gamma)), constraints)
    status = _solve(prob, solver)
    rate_bits = (prob.value + constant) / LN2
    return {"D": instance.D, "d_min": instance.d_min,
            "rate_bits": max(float(rate_bits), 0.0),
            "Sigma_xi": np.asarray(Sxi.value).tolist(),
            "status": str(status),
            "wall_time_s": time.perf_counter() - t0}


def sdp_finite(instance: SdpInstance, solver: str | None = None) -> dict:
    """Total rate over a finite horizon; returns a result row with the full
    posterior covariance schedule."""
    p, n = instance.p, instance.horizon
    bars = instance.Sigma_bar_seq
    A_seq = instance.A_seq
    t0 = time.perf_counter()
    Sxi = [cp.Variable((p, p), PSD=True) for _ in range(n + 1)]
    constraints = [cp.sum([cp.trace(S) for S in Sxi]) <= (n + 1) * instance.budget,
                   np.asarray(bars[0]) - Sxi[0] >> 0]
    constant = 0.5 * np.linalg.slogdet(bars[0])[1]
    gammas = []
    for t in range(n):
        prior_next = A_seq[t] @ Sxi[t] @ A_seq[t].T + bars[t + 1]
        constraints.append(prior_next - Sxi[t + 1] >> 0)
        Gamma = cp.Variable((p, p), PSD=True)
        gammas.append(Gamma)
        if instance.variant == "finite1":
            B = _psd_sqrt(bars[t + 1])
            constraints.append(cp.bmat([[np.eye(p) - Gamma, B.T],
                                        [B, prior_next]]) >> 0)
            constant += math.log(abs(np.linalg.det(A_seq[t])))
        else:
            constraints.append(cp.bmat([[Sxi[t] - Gamma, Sxi[t] @ A_seq[t].T],
                                        [A_seq[t] @ Sxi[t], prior_next]]) >> 0)
            constant += 0.5 * np.linalg.slogdet(bars[t + 1])[1]
    objective = -0.5 * cp.log_det(Sxi[n])
    if gammas:
        objective = objective - 0.5 * cp.sum([cp.log_det(G) for G in gammas])
    prob = cp.Problem(cp.Minimize(objective), constraints)
    status = _solve(prob, solver)
    rate_bits = (prob.value + constant) / LN2
    return {"D": instance.D, "d_min": instance.d_min,
            "rate_bits": max(float(rate_bits), 0.0),
            "Sigma_xi": [np.asarray(S.value).tolist() for S in Sxi],
            "status": str(status),
            "wall_time_s": time.perf_counter() - t0}


def solve_config(raw: dict, variant: str, solver: str | None = None) -> dict:
    """All distortion points of a config file under one variant."""
    rows = []
    solve = sdp_stationary if variant.startswith("stationary") else sdp_finite
    for D in distortion_grid(raw):
        instance = SdpInstance.from_config(raw, variant, float(D))
        rows.append(solve(instance, solver=solver))
    return {"schema_version": 1, "config_hash": config_hash(raw),
            "variant": variant, "rows": rows}
