"""Forward Kalman filtering of the hidden state given noisy observations.

Only second-order statistics are propagated here; sample-path filtering for
simulation lives in :mod:`nrdf.channel`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SingularInnovation, ValidationError
from .linalg import cholesky_with_floor, sym
from .model import TimeVaryingSystemModel

INNOVATION_PIVOT_REL = 1e-12


@dataclass(frozen=True)
class KfStep:
    """Covariance bookkeeping for one filter stage.

    ``gain_innov_cov`` is ``gain @ innov_cov @ gain.T``, the covariance of the
    estimate increment; it equals ``prior_cov - posterior_cov`` exactly.
    """

    prior_cov: np.ndarray
    posterior_cov: np.ndarray
    gain: np.ndarray
    innov_cov: np.ndarray
    gain_innov_cov: np.ndarray


def kf_forward(model: TimeVaryingSystemModel) -> list[KfStep]:
    """Run the forward covariance recursion over the whole horizon.

    Starting from the prior ``Sigma_x0``, each stage computes the innovation
    covariance ``C P C' + Sigma_n``, the gain ``P C' S^-1``, the posterior
    ``P - P C' S^-1 C P`` and the next prior ``A P+ A' + Sigma_w``.

    Raises SingularInnovation when the innovation covariance fails a Cholesky
    factorization with a relative pivot floor of 1e-12.
    """
    steps: list[KfStep] = []
    prior = model.Sigma_x0.copy()
    n = model.horizon
    for t in range(n + 1):
        C = model.C[t]
        S = sym(C @ prior @ C.T + model.Sigma_n[t])
        if cholesky_with_floor(S, INNOVATION_PIVOT_REL) is None:
            raise SingularInnovation(f"innovation covariance is singular at stage {t}")
        gain = np.linalg.solve(S, (prior @ C.T).T).T
        gain_innov = sym(gain @ S @ gain.T)
        posterior = sym(prior - gain_innov)
        steps.append(KfStep(prior_cov=prior, posterior_cov=posterior, gain=gain,
                            innov_cov=S, gain_innov_cov=gain_innov))
        if t < n:
            A = model.A[t]
            prior = sym(A @ posterior @ A.T + model.Sigma_w[t])
    return steps


def d_min_finite(steps: list[KfStep]) -> float:
    """Average posterior trace over the horizon: the unavoidable distortion floor."""
    if not steps:
        raise ValueError("steps must be nonempty")
    return float(np.mean([np.trace(s.posterior_cov) for s in steps]))


def scalar_filter_variances(model: TimeVaryingSystemModel):
    """Fast scalar-path filter returning per-stage variances.

    Returns ``(prior, post, upsilon)`` arrays of length n + 1, where
    ``upsilon[t] = c_t^2 prior[t]^2 / (c_t^2 prior[t] + sigma_n_t^2)`` is the
    variance of the estimate increment (the scalar ``gain_innov_cov``).
    """
    if not model.is_scalar:
        raise ValidationError("model", "scalar fast path requires p = m = 1")
    n = model.horizon
    a = model.A[:, 0, 0]
    c = model.C[:, 0, 0]
    sw = model.Sigma_w[:, 0, 0]
    sn = model.Sigma_n[:, 0, 0]
    prior = np.empty(n + 1)
    post = np.empty(n + 1)
    ups = np.empty(n + 1)
    prior[0] = model.Sigma_x0[0, 0]
    for t in range(n + 1):
        s_innov = c[t] * c[t] * prior[t] + sn[t]
        if s_innov <= INNOVATION_PIVOT_REL * max(s_innov, prior[t], 1e-300):
            raise SingularInnovation(f"innovation variance vanishes at stage {t}")
        ups[t] = c[t] * c[t] * prior[t] * prior[t] / s_innov
        post[t] = prior[t] - ups[t]
        if t < n:
            prior[t + 1] = a[t] * a[t] * post[t] + sw[t]
    return prior, post, ups
