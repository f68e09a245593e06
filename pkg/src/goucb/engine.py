"""Phase-II state: gradient covariance, regularized online estimator, confidence ball.

``Sigma_t = lam*I + sum_i g_i g_i^T`` is maintained together with its inverse
(Sherman-Morrison, refreshed from a Cholesky factorization every
``refresh_every`` updates) and its log-determinant (accumulated as
``sum log(1 + u_i^2)``).
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .errors import InputError, NumericalError, StateError

__all__ = [
    "CovarianceState",
    "ObservationRecord",
    "ConfidenceBall",
    "BetaSchedule",
    "GeometryConstants",
    "LemmaReport",
    "init_covariance",
    "rank_one_update",
    "refresh",
    "solve_w_hat",
    "beta",
    "mahalanobis_sq",
    "lemma_diagnostics",
    "log_det_bound",
    "UCBEngine",
]


@dataclass
class CovarianceState:
    sigma: np.ndarray
    sigma_inv: np.ndarray
    log_det: float
    lam: float
    t: int = 0
    refresh_every: int = 64
    u_sq: list = field(default_factory=list)

    @property
    def d_w(self) -> int:
        return self.sigma.shape[0]


@dataclass(frozen=True)
class ObservationRecord:
    x: np.ndarray
    y: float
    w: np.ndarray
    g: np.ndarray
    f: float


@dataclass(frozen=True)
class GeometryConstants:
    """Constants of the boundedness and loss-geometry assumptions.

    They only shape the confidence radius and the diagnostics.
    """

    C_g: float = 1.0
    C_h: float = 1.0
    F: float = 1.0
    mu: float = 1.0
    tau: float = 1.0
    gamma: float = 1.0
    zeta: float = 1.0

    def __post_init__(self):
        for name in ("C_g", "C_h", "F", "mu", "tau", "zeta"):
            if not getattr(self, name) > 0:
                raise InputError(f"{name} must be positive")
        if not 0 < self.gamma <= 2:
            raise InputError("gamma must lie in (0, 2]")


def _unit(*_args) -> float:
    return 1.0


LogFactor = Callable[[int, int, int, float, float, float], float]


def log_factor(t, n, d_w, C_g, lam, delta) -> float:
    """``log(1 + t C_g^2 / (d_w lam))``-shaped factor, floored at 1."""
    return max(1.0, math.log(1.0 + t * C_g**2 / (d_w * lam)) + math.log(2.0 / delta))


@dataclass(frozen=True)
class BetaSchedule:
    """``beta_t = c (d_w s^2 i' + d_w F^2 i / mu + d_w^3 F^4 t i'' i^2 / (mu^2 T))``.

    ``iota``, ``iota_p`` and ``iota_pp`` are called as
    ``fn(t, n, d_w, C_g, lam, delta)``; all default to the constant 1.
    """

    d_w: int
    T: int
    c: float = 1.0
    sigma: float = 0.1
    F: float = 1.0
    mu: float = 1.0
    n: int = 1
    C_g: float = 1.0
    lam: float = 1.0
    delta: float = 0.05
    iota: LogFactor = _unit
    iota_p: LogFactor = _unit
    iota_pp: LogFactor = _unit

    def __post_init__(self):
        if not self.c > 0:
            raise InputError("beta scale c must be > 0")
        if self.d_w < 1 or self.T < 1:
            raise InputError("d_w and T must be >= 1")
        if self.sigma < 0 or not self.F > 0 or not self.mu > 0:
            raise InputError("need sigma >= 0, F > 0, mu > 0")

    def __call__(self, t: int) -> float:
        return beta(self, t)


@dataclass
class ConfidenceBall:
    center: np.ndarray
    radius: float
    state: CovarianceState

    def __post_init__(self):
        if not self.radius > 0:
            raise InputError("ball radius must be > 0")

    def dist_sq(self, w) -> float:
        return mahalanobis_sq(self.state, w, self.center)

    def contains(self, w, slack: float = 0.0) -> bool:
        return self.dist_sq(w) <= self.radius + slack


def init_covariance(d_w: int, lam: float, refresh_every: int = 64) -> CovarianceState:
    if not lam > 0:
        raise InputError("lambda must be > 0")
    if d_w < 1:
        raise InputError("d_w must be >= 1")
    return CovarianceState(
        sigma=lam * np.eye(d_w),
        sigma_inv=np.eye(d_w) / lam,
        log_det=d_w * math.log(lam),
        lam=float(lam),
        refresh_every=refresh_every,
    )


def refresh(state: CovarianceState) -> None:
    """Re-invert ``sigma`` densely; fails loudly if it is not positive definite."""
    try:
        c = cho_factor(state.sigma, lower=True)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"covariance lost positive definiteness at t={state.t}") from exc
    state.sigma_inv = cho_solve(c, np.eye(state.d_w))
    state.sigma_inv = 0.5 * (state.sigma_inv + state.sigma_inv.T)


def rank_one_update(state: CovarianceState, g) -> float:
    """Absorb ``g g^T`` in place; return ``u^2 = g^T Sigma^{-1} g`` before the update."""
    g = np.asarray(g, dtype=float)
    if g.shape != (state.d_w,):
        raise InputError(f"gradient must have length {state.d_w}")
    if not np.all(np.isfinite(g)):
        raise InputError("gradient has non-finite entries")
    v = state.sigma_inv @ g
    u_sq = float(g @ v)
    state.sigma += np.outer(g, g)
    state.sigma_inv -= np.outer(v, v) / (1.0 + u_sq)
    state.log_det += math.log1p(u_sq)
    state.t += 1
    state.u_sq.append(u_sq)
    if state.refresh_every and state.t % state.refresh_every == 0:
        refresh(state)
    return u_sq


def mahalanobis_sq(state: CovarianceState, a, b) -> float:
    """``(a - b)^T Sigma (a - b)``."""
    d = np.asarray(a, dtype=float) - np.asarray(b, dtype=float)
    return max(float(d @ state.sigma @ d), 0.0)


def beta(schedule: BetaSchedule, t: int) -> float:
    if not 1 <= t <= schedule.T:
        raise InputError(f"round {t} outside 1..{schedule.T}")
    s = schedule
    args = (t, s.n, s.d_w, s.C_g, s.lam, s.delta)
    i, ip, ipp = s.iota(*args), s.iota_p(*args), s.iota_pp(*args)
    return s.c * (
        s.d_w * s.sigma**2 * ip
        + s.d_w * s.F**2 * i / s.mu
        + s.d_w**3 * s.F**4 * t * ipp * i**2 / (s.mu**2 * s.T)
    )


def _residual_sum(history, d_w):
    b = np.zeros(d_w)
    for rec in history:
        b += rec.g * (rec.g @ rec.w + rec.y - rec.f)
    return b


def solve_w_hat(history, state: CovarianceState, w0, b=None, recompute: bool = False) -> np.ndarray:
    """Closed-form minimizer of the regularized linearized least-squares objective.

    ``w_t = Sigma_t^{-1} (sum_i g_i (g_i^T w_i + y_i - f_i) + lam w0)``.
    ``b`` is a cached residual sum; ``recompute`` rebuilds it from ``history``
    and solves against a fresh factorization of ``sigma`` instead of using
    the maintained inverse.
    """
    if len(history) != state.t:
        raise StateError(f"history has {len(history)} records but covariance absorbed {state.t}")
    w0 = np.asarray(w0, dtype=float)
    if not history:
        return w0.copy()
    if recompute or b is None:
        b = _residual_sum(history, state.d_w)
    rhs = b + state.lam * w0
    if recompute:
        return cho_solve(cho_factor(state.sigma, lower=True), rhs)
    return state.sigma_inv @ rhs


def log_det_bound(d_w: int, t: int, C_g: float, lam: float) -> float:
    return d_w * math.log1p(t * C_g**2 / (d_w * lam))


@dataclass
class LemmaReport:
    t: int
    det_identity_gap: float
    maintained_gap: float
    log_det_ratio: float
    log_det_bound: float
    log_det_ok: bool
    sum_sq: float
    sum_sq_bound: float
    sum_sq_ok: bool
    C_g: float
    max_grad_norm: float
    c_g_stale: bool
    inverse_error: float


def lemma_diagnostics(state: CovarianceState, history, C_g: float | None = None) -> LemmaReport:
    """Check the determinant identity and the log-det / sum-of-squares bounds.

    ``det_identity_gap`` compares a dense ``slogdet(Sigma_t)`` with
    ``d_w log lam + sum log(1 + u_i^2)``; ``maintained_gap`` compares the
    running log-det with the same sum. ``C_g`` defaults to the largest
    observed gradient norm.
    """
    d_w, t, lam = state.d_w, state.t, state.lam
    if len(history) != t:
        raise StateError(f"history has {len(history)} records but covariance absorbed {t}")
    formula = d_w * math.log(lam) + float(np.sum(np.log1p(state.u_sq)))
    sign, dense = np.linalg.slogdet(state.sigma)
    if sign <= 0:
        raise NumericalError(f"covariance not positive definite at t={t}")
    scale = max(abs(dense), 1.0)
    gap = abs(dense - formula) / scale
    mgap = abs(state.log_det - formula) / max(abs(state.log_det), 1.0)

    if history:
        Gm = np.array([rec.g for rec in history])
        norms = np.linalg.norm(Gm, axis=1)
        max_norm = float(norms.max())
        sum_sq = float(np.einsum("ij,ij->", Gm @ np.linalg.inv(state.sigma), Gm))
    else:
        max_norm, sum_sq = 0.0, 0.0
    if C_g is None:
        C_g = max_norm
    ratio = dense - d_w * math.log(lam)
    bound = log_det_bound(d_w, t, C_g, lam) if C_g > 0 else 0.0
    inv_err = float(np.max(np.abs(state.sigma @ state.sigma_inv - np.eye(d_w))))
    tol = 1e-9 * max(1.0, bound)
    return LemmaReport(
        t=t,
        det_identity_gap=gap,
        maintained_gap=mgap,
        log_det_ratio=ratio,
        log_det_bound=bound,
        log_det_ok=ratio <= bound + tol,
        sum_sq=sum_sq,
        sum_sq_bound=2.0 * bound,
        sum_sq_ok=sum_sq <= 2.0 * bound + tol,
        C_g=C_g,
        max_grad_norm=max_norm,
        c_g_stale=max_norm > C_g * (1 + 1e-12),
        inverse_error=inv_err,
    )


class UCBEngine:
    """Mutable Phase-II state for one optimizer run.

    Call :meth:`ball` at the start of round ``t`` and :meth:`absorb` once the
    round's point has been observed.
    """

    def __init__(self, w0, lam: float, schedule: BetaSchedule, refresh_every: int = 64, clamp=None):
        self.w0 = np.asarray(w0, dtype=float).copy()
        self.state = init_covariance(self.w0.size, lam, refresh_every)
        self.schedule = schedule
        self.history: list[ObservationRecord] = []
        self._b = np.zeros(self.w0.size)
        self.clamp = clamp  # optional (lower, upper) box for w_hat

    @property
    def t(self) -> int:
        return self.state.t

    def w_hat(self, recompute: bool = False) -> np.ndarray:
        w = solve_w_hat(self.history, self.state, self.w0, b=self._b, recompute=recompute)
        if self.clamp is not None:
            w = np.clip(w, *self.clamp)
        return w

    def ball(self, round_index: int) -> ConfidenceBall:
        return ConfidenceBall(self.w_hat(), beta(self.schedule, round_index), self.state)

    def absorb(self, x, y: float, w, g, f: float) -> float:
        rec = ObservationRecord(np.asarray(x, float).copy(), float(y), np.asarray(w, float).copy(),
                                np.asarray(g, float).copy(), float(f))
        u_sq = rank_one_update(self.state, rec.g)
        self._b += rec.g * (rec.g @ rec.w + rec.y - rec.f)
        self.history.append(rec)
        return u_sq

    def diagnostics(self, C_g: float | None = None) -> LemmaReport:
        return lemma_diagnostics(self.state, self.history, C_g)
