"""Optimal linear test-channel realization and its Monte-Carlo validation.

The reproduction follows ``y[t] = H_t xi[t] + (I - H_t) A y[t-1] + v[t]``
where ``xi`` is the filter estimate of the hidden state. The scalings are
determined by the solver's posterior/prior covariance pair:
``H_t = (prior - post) prior^-1`` and ``Sigma_v_t = post H_t'``.

``simulate`` checks achievability empirically. By default it runs in error
coordinates (prediction and reproduction errors), a path-exact linear change
of variables of the textbook recursion: for unstable state matrices the
state itself overflows over long horizons while the error processes stay
stationary. Stable models can also be simulated directly; both paths consume
the same noise stream and agree sample by sample for a given seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionMismatch, ScalingNotPSD, ZeroMatrix
from .linalg import inf_norm, log_conversion, psd_sqrt, spectral_radius, sym
from .model import TimeVaryingSystemModel

_GAIN_FREEZE_TOL = 1e-13


@dataclass(frozen=True)
class TestChannel:
    """Scaling sequence of the reproduction recursion.

    ``H``, ``Sigma_v`` and ``A`` are stacked with a leading time axis; a
    stationary channel has length one and ``stationary=True``.
    ``reduced_dim`` records the effective reproduction dimension after any
    rank reduction (equal to p when none was applied).
    """

    H: np.ndarray
    Sigma_v: np.ndarray
    A: np.ndarray
    reduced_dim: int
    stationary: bool = False

    @property
    def p(self) -> int:
        return self.H.shape[1]


@dataclass(frozen=True)
class SimulationReport:
    samples: int
    empirical_mse: float
    empirical_rate: float
    target_D: float
    target_rate: float
    mmse_cov: np.ndarray | None = None
    innovation_lag_corr: float | None = None


def build_test_channel(post, prior, A_seq, stationary: bool = False) -> TestChannel:
    """Scalings from a posterior/prior covariance sequence.

    ``H_t`` solves ``H_t prior_t = prior_t - post_t`` (a linear solve against
    the prior rather than an explicit inverse) and ``Sigma_v_t = post_t H_t'``
    symmetrized. Raises ScalingNotPSD when the pair violates the ordering
    ``0 <= post <= prior``.
    """
    post = np.asarray(post, dtype=float)
    prior = np.asarray(prior, dtype=float)
    A_seq = np.asarray(A_seq, dtype=float)
    if post.ndim == 2:
        post, prior, A_seq = post[None], prior[None], A_seq[None]
    if post.shape != prior.shape or A_seq.shape != post.shape:
        raise DimensionMismatch("post, prior and A sequences must share one shape")
    T, p, _ = post.shape
    H = np.empty_like(post)
    Sv = np.empty_like(post)
    for t in range(T):
        gap = sym(prior[t] - post[t])
        scale = max(inf_norm(prior[t]), 1.0)
        if np.linalg.eigvalsh(gap).min() < -1e-9 * scale:
            raise ScalingNotPSD(f"prior - post is indefinite at stage {t}")
        H[t] = np.linalg.solve(prior[t], gap).T
        Sv[t] = sym(post[t] @ H[t].T)
        if np.linalg.eigvalsh(Sv[t]).min() < -1e-9 * scale:
            raise ScalingNotPSD(f"noise covariance is indefinite at stage {t}")
    return TestChannel(H=H, Sigma_v=Sv, A=A_seq, reduced_dim=p,
                       stationary=stationary or T == 1)


def stationary_test_channel(Sigma_xi, Pi_xi, A) -> TestChannel:
    """Steady-state channel: ``H = I - Sigma_xi Pi_xi^-1``."""
    return build_test_channel(Sigma_xi, Pi_xi, A, stationary=True)


def reduce_rank(innov_cov, tol: float = 1e-10):
    """Support basis of a PSD matrix: eigenvectors with eigenvalue above
    ``tol`` times the largest one, plus the full-rank restriction.

    Returns ``(basis, reduced_cov)`` with ``basis`` of shape (p, l); raises
    ZeroMatrix when the numerical rank is zero.
    """
    M = sym(np.asarray(innov_cov, dtype=float))
    w, V = np.linalg.eigh(M)
    order = np.argsort(w)[::-1]
    w, V = w[order], V[:, order]
    w_max = w[0] if w.size else 0.0
    if w_max <= 0.0:
        raise ZeroMatrix("matrix has no positive eigenvalues")
    keep = w > tol * w_max
    basis = V[:, keep]
    reduced = sym(basis.T @ M @ basis)
    return basis, reduced


def reduced_rate(prior, post, tol: float = 1e-10, log_base: float = 2) -> float:
    """Log-det rate of a possibly rank-deficient pair, restricted to the
    prior's support (both matrices must share that support)."""
    basis, prior_r = reduce_rank(prior, tol=tol)
    post_r = sym(basis.T @ np.asarray(post, dtype=float) @ basis)
    sign_p, ld_p = np.linalg.slogdet(prior_r)
    sign_s, ld_s = np.linalg.slogdet(post_r)
    if sign_p <= 0 or sign_s <= 0:
        raise ZeroMatrix("restricted pair is not positive definite")
    return max(0.5 * (ld_p - ld_s) / log_conversion(log_base), 0.0)


def _gain_schedule(model, horizon: int):
    """Per-stage filter gains. Time-invariant schedules stop once the gain
    freezes; the last entry is then reused for the remaining stages."""
    tv = isinstance(model, TimeVaryingSystemModel)
    if tv and model.horizon + 1 < horizon:
        raise DimensionMismatch("simulation horizon exceeds the model horizon")
    gains = []
    prior = np.asarray(model.Sigma_x0, dtype=float).copy()
    prev = None
    for t in range(horizon):
        A = model.A[t] if tv else model.A
        C = model.C[t] if tv else model.C
        Sw = model.Sigma_w[t] if tv else model.Sigma_w
        Sn = model.Sigma_n[t] if tv else model.Sigma_n
        S = sym(C @ prior @ C.T + Sn)
        gain = np.linalg.solve(S, (prior @ C.T).T).T
        gains.append(gain)
        if not tv and prev is not None and inf_norm(gain - prev) <= _GAIN_FREEZE_TOL:
            break
        prev = gain
        post = sym(prior - gain @ S @ gain.T)
        prior = sym(A @ post @ A.T + Sw)
    return gains


def simulate(model, channel: TestChannel, horizon: int, trials: int = 1,
             seed: int = 0, target_D: float = math.nan,
             target_rate: float = math.nan, burn_in: int = 0,
             log_base: float = 2, direct: bool | None = None) -> SimulationReport:
    """Drive the test channel on sampled trajectories and report empirics.

    The empirical MSE is the sample mean of ``|x - y|^2``; the empirical rate
    is ``log(det P_hat / det S_hat) / 2`` from the sample second moments of
    the reproduction's prediction error (``xi - A y_prev``) and estimation
    error (``xi - y``). Deterministic given ``seed``; each trial owns an
    independent generator stream and results are merged by a pure reduction.

    ``direct=True`` forces the textbook state-space path (stable models only;
    additionally reports the innovation/previous-output sample correlation);
    ``direct=False`` forces error coordinates; ``None`` picks automatically.
    """
    p = channel.p
    tv = isinstance(model, TimeVaryingSystemModel)
    if model.p != p:
        raise DimensionMismatch("channel dimension does not match the model")
    if not channel.stationary and channel.H.shape[0] < horizon:
        raise DimensionMismatch("non-stationary channel is shorter than the horizon")
    rho = (max(spectral_radius(model.A[t]) for t in range(model.horizon + 1))
           if tv else spectral_radius(model.A))
    if direct is None:
        direct = rho < 0.999
    if direct and rho >= 1.0:
        raise ValueError("direct simulation requires a stable state matrix")
    if horizon <= burn_in:
        raise ValueError("horizon must exceed burn_in")
    m = model.m

    gains = _gain_schedule(model, horizon)
    L_x0 = psd_sqrt(model.Sigma_x0)
    if tv:
        L_n = [psd_sqrt(model.Sigma_n[t]) for t in range(horizon)]
        L_w = [psd_sqrt(model.Sigma_w[t]) for t in range(horizon)]
    else:
        L_n = psd_sqrt(model.Sigma_n)
        L_w = psd_sqrt(model.Sigma_w)
    if channel.stationary:
        L_v = psd_sqrt(channel.Sigma_v[0])
    else:
        L_v = [psd_sqrt(channel.Sigma_v[t]) for t in range(horizon)]

    kept = horizon - burn_in
    mse_acc = 0.0
    outer_u = np.zeros((p, p))
    outer_g = np.zeros((p, p))
    corr_num = corr_ii = corr_yy = 0.0
    streams = np.random.SeedSequence(seed).spawn(trials)
    scalar_path = p == 1 and m == 1

    for trial in range(trials):
        rng = np.random.default_rng(streams[trial])
        x0 = L_x0 @ rng.standard_normal(p)
        z_n = rng.standard_normal((horizon, m))
        z_v = rng.standard_normal((horizon, p))
        z_w = rng.standard_normal((horizon, p))
        if tv:
            noise_n = np.stack([L_n[t] @ z_n[t] for t in range(horizon)])
            noise_w = np.stack([L_w[t] @ z_w[t] for t in range(horizon)])
        else:
            noise_n = z_n @ L_n.T
            noise_w = z_w @ L_w.T
        if channel.stationary:
            noise_v = z_v @ L_v.T
        else:
            noise_v = np.stack([L_v[t] @ z_v[t] for t in range(horizon)])

        if scalar_path:
            a_seq = (model.A[:, 0, 0] if tv else None)
            c_seq = (model.C[:, 0, 0] if tv else None)
            a_const = None if tv else float(model.A[0, 0])
            c_const = None if tv else float(model.C[0, 0])
            k_seq = [float(k[0, 0]) for k in gains]
            h_const = float(channel.H[0, 0, 0]) if channel.stationary else None
            ach_const = float(channel.A[0, 0, 0]) if channel.stationary else None
            nn = noise_n[:, 0]
            nv = noise_v[:, 0]
            nw = noise_w[:, 0]
            e_pred = float(x0[0])
            g = 0.0
            x = float(x0[0])
            y_prev = 0.0
            su = sg = 0.0
            for t in range(horizon):
                a = a_const if a_const is not None else float(a_seq[t])
                c = c_const if c_const is not None else float(c_seq[t])
                k = k_seq[t] if t < len(k_seq) else k_seq[-1]
                h = h_const if h_const is not None else float(channel.H[t, 0, 0])
                ach = ach_const if ach_const is not None else float(channel.A[t, 0, 0])
                innov = c * e_pred + nn[t]
                e_post = e_pred - k * innov
                u = ach * g + k * innov
                g = (1.0 - h) * u - nv[t]
                if direct:
                    xi = x - e_post
                    y = h * xi + (1.0 - h) * ach * y_prev + nv[t]
                    err = x - y
                else:
                    err = e_post + g
                if t >= burn_in:
                    mse_acc += err * err
                    su += u * u
                    sg += g * g
                    if direct and t > burn_in:
                        i_xi = h * u + nv[t]
                        corr_num += i_xi * y_prev
                        corr_ii += i_xi * i_xi
                        corr_yy += y_prev * y_prev
                if direct:
                    x = a * x + nw[t]
                    y_prev = y
                e_pred = a * e_post + nw[t]
            outer_u[0, 0] += su
            outer_g[0, 0] += sg
        else:
            I_p = np.eye(p)
            e_pred = x0.copy()
            g = np.zeros(p)
            x = x0.copy()
            y_prev = np.zeros(p)
            for t in range(horizon):
                A = model.A[t] if tv else model.A
                C = model.C[t] if tv else model.C
                k = gains[t] if t < len(gains) else gains[-1]
                Ht = channel.H[0] if channel.stationary else channel.H[t]
                Ach = channel.A[0] if channel.stationary else channel.A[t]
                innov = C @ e_pred + noise_n[t]
                e_post = e_pred - k @ innov
                u = Ach @ g + k @ innov
                g = (I_p - Ht) @ u - noise_v[t]
                if direct:
                    xi = x - e_post
                    y = Ht @ xi + (I_p - Ht) @ (Ach @ y_prev) + noise_v[t]
                    err = x - y
                else:
                    err = e_post + g
                if t >= burn_in:
                    mse_acc += float(err @ err)
                    outer_u += np.outer(u, u)
                    outer_g += np.outer(g, g)
                    if direct and t > burn_in:
                        i_xi = Ht @ u + noise_v[t]
                        corr_num += float(i_xi @ y_prev)
                        corr_ii += float(i_xi @ i_xi)
                        corr_yy += float(y_prev @ y_prev)
                if direct:
                    x = A @ x + noise_w[t]
                    y_prev = y
                e_pred = A @ e_post + noise_w[t]

    samples = trials * kept
    mse = mse_acc / samples
    P_hat = outer_u / samples
    S_hat = outer_g / samples
    sign_p, ld_p = np.linalg.slogdet(P_hat)
    sign_s, ld_s = np.linalg.slogdet(S_hat)
    rate = (0.5 * (ld_p - ld_s) / log_conversion(log_base)
            if sign_p > 0 and sign_s > 0 else 0.0)
    lag_corr = None
    if direct and corr_ii > 0 and corr_yy > 0:
        lag_corr = corr_num / math.sqrt(corr_ii * corr_yy)
    return SimulationReport(samples=samples, empirical_mse=float(mse),
                            empirical_rate=float(rate), target_D=target_D,
                            target_rate=target_rate, mmse_cov=S_hat,
                            innovation_lag_corr=lag_corr)
