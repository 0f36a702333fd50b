"""State-space models for hidden Gauss-Markov sources observed through noise.

The hidden state evolves as ``x[t+1] = A_t x[t] + w[t]`` with ``w[t] ~ N(0,
Sigma_w_t)`` and is observed as ``z[t] = C_t x[t] + n[t]`` with ``n[t] ~ N(0,
Sigma_n_t)``; ``x[0] ~ N(0, Sigma_x0)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError
from .linalg import inf_norm, is_pd, is_psd, sym


def _as_matrix(value, name: str) -> np.ndarray:
    try:
        M = np.asarray(value, dtype=float)
    except (TypeError, ValueError) as exc:
        raise ValidationError(name, f"not a numeric matrix ({exc})")
    if M.ndim != 2:
        raise ValidationError(name, f"expected a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValidationError(name, "contains non-finite entries")
    return M


def _require_symmetric(M: np.ndarray, name: str) -> np.ndarray:
    if M.shape[0] != M.shape[1]:
        raise ValidationError(name, f"must be square, got shape {M.shape}")
    if inf_norm(M - M.T) > 1e-8 * max(inf_norm(M), 1.0):
        raise ValidationError(name, "must be symmetric")
    return sym(M)


@dataclass(frozen=True)
class SystemModel:
    """Time-invariant source model ``(A, C, Sigma_w, Sigma_n, Sigma_x0)``.

    Invariants enforced at construction: Sigma_w and Sigma_x0 strictly
    positive definite, Sigma_n positive semidefinite, consistent dimensions
    with m <= p, and C of full row rank (the observation map must not throw
    away whole state directions, otherwise the filter estimate is not a
    sufficient statistic of the observations).
    """

    A: np.ndarray
    C: np.ndarray
    Sigma_w: np.ndarray
    Sigma_n: np.ndarray
    Sigma_x0: np.ndarray

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        C = _as_matrix(self.C, "C")
        Sw = _require_symmetric(_as_matrix(self.Sigma_w, "Sigma_w"), "Sigma_w")
        Sn = _require_symmetric(_as_matrix(self.Sigma_n, "Sigma_n"), "Sigma_n")
        Sx0 = _require_symmetric(_as_matrix(self.Sigma_x0, "Sigma_x0"), "Sigma_x0")
        p = A.shape[0]
        if A.shape != (p, p):
            raise ValidationError("A", f"must be square, got shape {A.shape}")
        m = C.shape[0]
        if C.shape[1] != p:
            raise ValidationError("C", f"must have {p} columns, got shape {C.shape}")
        if m > p:
            raise ValidationError("C", f"must have at most {p} rows, got {m}")
        if Sw.shape != (p, p):
            raise ValidationError("Sigma_w", f"must be {p}x{p}, got {Sw.shape}")
        if Sn.shape != (m, m):
            raise ValidationError("Sigma_n", f"must be {m}x{m}, got {Sn.shape}")
        if Sx0.shape != (p, p):
            raise ValidationError("Sigma_x0", f"must be {p}x{p}, got {Sx0.shape}")
        if not is_pd(Sw):
            raise ValidationError("Sigma_w", "must be strictly positive definite")
        if not is_psd(Sn):
            raise ValidationError("Sigma_n", "must be positive semidefinite")
        if not is_pd(Sx0):
            raise ValidationError("Sigma_x0", "must be strictly positive definite")
        if np.linalg.matrix_rank(C) < m:
            raise ValidationError("C", "must have full row rank")
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "Sigma_w", Sw)
        object.__setattr__(self, "Sigma_n", Sn)
        object.__setattr__(self, "Sigma_x0", Sx0)

    @property
    def p(self) -> int:
        return self.A.shape[0]

    @property
    def m(self) -> int:
        return self.C.shape[0]

    @property
    def is_scalar(self) -> bool:
        return self.p == 1 and self.m == 1

    @classmethod
    def scalar(cls, alpha: float, c: float, sigma_w2: float, sigma_n2: float,
               sigma_x02: float = 1.0) -> "SystemModel":
        return cls(A=[[alpha]], C=[[c]], Sigma_w=[[sigma_w2]],
                   Sigma_n=[[sigma_n2]], Sigma_x0=[[sigma_x02]])


@dataclass(frozen=True)
class TimeVaryingSystemModel:
    """Per-stage model data over the horizon ``t = 0..n``.

    ``A``, ``C``, ``Sigma_w`` and ``Sigma_n`` are stacked with a leading time
    axis of length ``n + 1``; each stage must satisfy the ``SystemModel``
    invariants.
    """

    A: np.ndarray
    C: np.ndarray
    Sigma_w: np.ndarray
    Sigma_n: np.ndarray
    Sigma_x0: np.ndarray
    _stage_checked: bool = field(default=False, repr=False, compare=False)

    def __post_init__(self):
        A = np.asarray(self.A, dtype=float)
        C = np.asarray(self.C, dtype=float)
        Sw = np.asarray(self.Sigma_w, dtype=float)
        Sn = np.asarray(self.Sigma_n, dtype=float)
        Sx0 = _require_symmetric(_as_matrix(self.Sigma_x0, "Sigma_x0"), "Sigma_x0")
        for name, arr in (("A", A), ("C", C), ("Sigma_w", Sw), ("Sigma_n", Sn)):
            if arr.ndim != 3:
                raise ValidationError(name, f"expected stacked matrices, got shape {arr.shape}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(name, "contains non-finite entries")
        T = A.shape[0]
        if not (C.shape[0] == Sw.shape[0] == Sn.shape[0] == T):
            raise ValidationError("stages", "per-stage sequences must share one length")
        p = A.shape[1]
        m = C.shape[1]
        if A.shape[1:] != (p, p) or C.shape[2] != p or m > p:
            raise ValidationError("stages", "inconsistent state/observation dimensions")
        if Sw.shape[1:] != (p, p) or Sn.shape[1:] != (m, m) or Sx0.shape != (p, p):
            raise ValidationError("stages", "inconsistent covariance dimensions")
        if not self._stage_checked:
            for t in range(T):
                try:
                    SystemModel(A[t], C[t], Sw[t], Sn[t], Sx0)
                except ValidationError as exc:
                    raise ValidationError(f"stages[{t}].{exc.field}",
                                          str(exc).split(": ", 1)[-1])
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "C", C)
        object.__setattr__(self, "Sigma_w", Sw)
        object.__setattr__(self, "Sigma_n", Sn)
        object.__setattr__(self, "Sigma_x0", Sx0)
        object.__setattr__(self, "_stage_checked", True)

    @property
    def horizon(self) -> int:
        """Final stage index n; the model covers n + 1 stages."""
        return self.A.shape[0] - 1

    @property
    def p(self) -> int:
        return self.A.shape[1]

    @property
    def m(self) -> int:
        return self.C.shape[1]

    @property
    def is_scalar(self) -> bool:
        return self.p == 1 and self.m == 1

    @classmethod
    def from_time_invariant(cls, model: SystemModel, horizon: int) -> "TimeVaryingSystemModel":
        if horizon < 0:
            raise ValidationError("horizon", "must be nonnegative")
        T = horizon + 1
        return cls(A=np.broadcast_to(model.A, (T,) + model.A.shape).copy(),
                   C=np.broadcast_to(model.C, (T,) + model.C.shape).copy(),
                   Sigma_w=np.broadcast_to(model.Sigma_w, (T,) + model.Sigma_w.shape).copy(),
                   Sigma_n=np.broadcast_to(model.Sigma_n, (T,) + model.Sigma_n.shape).copy(),
                   Sigma_x0=model.Sigma_x0.copy(),
                   _stage_checked=True)

    @classmethod
    def scalar(cls, alpha, c, sigma_w2, sigma_n2, sigma_x02: float = 1.0) -> "TimeVaryingSystemModel":
        """Build a scalar time-varying model from per-stage coefficient sequences."""
        alpha = np.asarray(alpha, dtype=float)
        reshape = lambda v: np.asarray(v, dtype=float).reshape(-1, 1, 1)
        return cls(A=reshape(alpha), C=reshape(c), Sigma_w=reshape(sigma_w2),
                   Sigma_n=reshape(sigma_n2), Sigma_x0=[[float(sigma_x02)]])

    def stage(self, t: int) -> SystemModel:
        return SystemModel(self.A[t], self.C[t], self.Sigma_w[t], self.Sigma_n[t], self.Sigma_x0)
