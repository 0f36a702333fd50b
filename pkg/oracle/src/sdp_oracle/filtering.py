"""Filter statistics feeding the SDPs, computed independently of the main
solver (scipy's Riccati solver for the stationary case, a plain forward
recursion for finite horizons)."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from .errors import ValidationError


def _sym(M):
    return 0.5 * (M + M.T)


def steady_increment(A, C, Sw, Sn):
    """Steady-state (Sigma_bar, d_min) of the forward filter.

    Sigma_bar is the covariance of the estimate increment, Pi - Sigma; d_min
    is trace(Sigma), the unavoidable estimation distortion.
    """
    Pi = scipy.linalg.solve_discrete_are(A.T, C.T, Sw, Sn)
    S = _sym(C @ Pi @ C.T + Sn)
    Sigma = _sym(Pi - Pi @ C.T @ np.linalg.solve(S, C @ Pi))
    Sigma_bar = _sym(Pi - Sigma)
    return Sigma_bar, float(np.trace(Sigma))


def forward_increments(stage_data, Sigma_x0, horizon: int):
    """Per-stage increment covariances and the distortion floor.

    ``stage_data(t)`` must yield ``(A_t, C_t, Sigma_w_t, Sigma_n_t)``.
    Returns (Sigma_bar list of length n+1, d_min); the first entry doubles
    as the initial prior of the reproduction recursion.
    """
    prior = np.asarray(Sigma_x0, dtype=float).copy()
    bars = []
    post_traces = []
    for t in range(horizon + 1):
        A, C, Sw, Sn = stage_data(t)
        S = _sym(C @ prior @ C.T + Sn)
        try:
            gain_innov = _sym(prior @ C.T @ np.linalg.solve(S, C @ prior))
        except np.linalg.LinAlgError:
            raise ValidationError(f"innovation covariance singular at stage {t}")
        post = _sym(prior - gain_innov)
        bars.append(gain_innov)
        post_traces.append(float(np.trace(post)))
        if t < horizon:
            prior = _sym(A @ post @ A.T + Sw)
    return bars, float(np.mean(post_traces))
