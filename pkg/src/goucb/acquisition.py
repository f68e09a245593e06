"""Selecting the next query by joint maximization over the domain and Ball_t.

Two modes:

``linearized_ucb``
    maximize ``f_x(w_hat) + sqrt(beta) * ||grad f_x(w_hat)||_{Sigma^{-1}}`` over
    ``x``, which is the exact maximum over the ball of the first-order model
    of ``f_x(w)`` around the center.
``alternating``
    alternate an ascent step in ``x`` (``w`` fixed) with projected ascent in
    ``w`` over the ball (``x`` fixed).

The search over ``x`` is derivative-free from the objective's point of view:
finite-difference directions with projected, adaptively sized steps, and a
random coordinate move whenever a step fails.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .engine import ConfidenceBall
from .errors import InputError
from .model import ModelFamily

__all__ = [
    "AcquisitionConfig",
    "Selection",
    "ucb_value",
    "ucb_values",
    "project_to_ball",
    "select_point",
    "maximize_box",
]


@dataclass(frozen=True)
class AcquisitionConfig:
    mode: str = "linearized_ucb"
    outer_starts: int = 32
    outer_iters: int = 50
    inner_iters: int = 5
    x_step: float = 0.25  # initial step, as a fraction of the box width
    w_step_frac: float = 0.125  # inner step length is w_step_frac * sqrt(beta)
    fd_step: float = 1e-6

    def __post_init__(self):
        if self.mode not in ("linearized_ucb", "alternating"):
            raise InputError(f"unknown acquisition mode {self.mode!r}")
        if min(self.outer_starts, self.outer_iters, self.inner_iters) < 1:
            raise InputError("acquisition counts must be >= 1")
        if not (self.x_step > 0 and self.w_step_frac > 0 and self.fd_step > 0):
            raise InputError("acquisition step sizes must be > 0")


class Selection(NamedTuple):
    x: np.ndarray
    w: np.ndarray
    ucb: float


def ucb_values(model: ModelFamily, ball: ConfidenceBall, X) -> np.ndarray:
    f, G = model.values_and_grads(ball.center, X)
    quad = np.sum((G @ ball.state.sigma_inv) * G, axis=1)
    return f + np.sqrt(ball.radius * np.maximum(quad, 0.0))


def ucb_value(model: ModelFamily, ball: ConfidenceBall, x) -> float:
    return float(ucb_values(model, ball, np.asarray(x, dtype=float)[None, :])[0])


def project_to_ball(ball: ConfidenceBall, w) -> np.ndarray:
    """Radial projection onto ``{w : ||w - center||^2_Sigma <= radius}``."""
    w = np.asarray(w, dtype=float)
    q = ball.dist_sq(w)
    if q <= ball.radius:
        return w.copy()
    return ball.center + np.sqrt(ball.radius / q) * (w - ball.center)


def _optimistic_w(ball: ConfidenceBall, g) -> np.ndarray:
    # argmax of g.w over the ball
    v = ball.state.sigma_inv @ g
    norm = np.sqrt(max(float(g @ v), 0.0))
    if norm == 0.0:
        return ball.center.copy()
    return ball.center + np.sqrt(ball.radius) * v / norm


def maximize_box(fn: Callable[[np.ndarray], np.ndarray], lower, upper, starts, iters, rng,
                 x_step=0.25, fd_step=1e-6, min_step=1e-4):
    """Multistart projected ascent of a batched objective over a box.

    ``fn`` maps an (m, d) array to (m,) values. Each iteration proposes, per
    start, a step along the central-difference direction and a random
    single-coordinate move; the step is taken if it improves, else the random
    move if that improves. Step sizes double on success and halve on failure;
    the search stops early once every step is below ``min_step``.
    Returns ``(X_best, v_best, v_init)`` per start, with ``v_best >= v_init``.
    """
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    X = np.array(starts, dtype=float)
    m, d = X.shape
    width = upper - lower
    v = fn(X)
    v_init = v.copy()
    alpha = np.full(m, float(x_step))
    h = fd_step * np.maximum(width, 1e-12)
    eye = np.eye(d)
    free = width > 0
    rows = np.arange(m)
    for _ in range(iters):
        P = np.concatenate([X[:, None, :] + h * eye, X[:, None, :] - h * eye], axis=1).reshape(-1, d)
        vals = fn(P).reshape(m, 2, d)
        grad = (vals[:, 0, :] - vals[:, 1, :]) / (2 * h)
        grad[:, ~free] = 0.0
        gmax = np.max(np.abs(grad), axis=1)
        ok = gmax > 0
        direction = np.zeros_like(grad)
        direction[ok] = grad[ok] / gmax[ok, None]
        cand_g = np.clip(X + alpha[:, None] * width * direction, lower, upper)
        cand_r = X.copy()
        j = rng.integers(0, d, size=m)
        cand_r[rows, j] += rng.standard_normal(m) * np.maximum(alpha, 1e-3) * width[j]
        cand_r = np.clip(cand_r, lower, upper)
        vc = fn(np.vstack([cand_g, cand_r]))
        vg, vr = vc[:m], vc[m:]
        take_g = ok & (vg > v)
        take_r = ~take_g & (vr > v)
        X[take_g], v[take_g] = cand_g[take_g], vg[take_g]
        X[take_r], v[take_r] = cand_r[take_r], vr[take_r]
        won = take_g | take_r
        alpha = np.where(won, np.minimum(2 * alpha, 1.0), 0.5 * alpha)
        if np.all(alpha < min_step):
            break
    return X, v, v_init


def _first_argmax(v):
    # np.argmax already returns the first maximal index
    return int(np.argmax(v))


def select_point(model: ModelFamily, ball: ConfidenceBall, lower, upper, cfg: AcquisitionConfig = AcquisitionConfig(),
                 rng=None, extra_starts=None) -> Selection:
    """Approximate ``argmax_x max_{w in ball} f_x(w)``.

    Starts are ``cfg.outer_starts`` uniform points followed by
    ``extra_starts`` (if any), in that order; ties go to the first start.
    """
    rng = np.random.default_rng(rng)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    if lower.shape != (model.d_x,) or upper.shape != (model.d_x,):
        raise InputError("domain box does not match the model input dimension")
    starts = lower + (upper - lower) * rng.random((cfg.outer_starts, model.d_x))
    if extra_starts is not None and len(extra_starts):
        starts = np.vstack([starts, np.clip(np.atleast_2d(extra_starts), lower, upper)])
    if cfg.mode == "linearized_ucb":
        X, v, _ = maximize_box(lambda P: ucb_values(model, ball, P), lower, upper, starts,
                               cfg.outer_iters, rng, cfg.x_step, cfg.fd_step)
        k = _first_argmax(v)
        _, G = model.values_and_grads(ball.center, X[k][None, :])
        return Selection(X[k].copy(), _optimistic_w(ball, G[0]), float(v[k]))
    return _alternating(model, ball, lower, upper, cfg, rng, starts)


def _alternating(model, ball, lower, upper, cfg, rng, starts):
    step = cfg.w_step_frac * np.sqrt(ball.radius)
    best = None
    for s in range(starts.shape[0]):
        x = starts[s].copy()
        w = ball.center.copy()
        val = float(model.values(w, x[None, :])[0])
        alpha = cfg.x_step
        for _ in range(cfg.outer_iters):
            Xn, vn, _ = maximize_box(lambda P: model.values(w, P), lower, upper, x[None, :], 1, rng,
                                     alpha, cfg.fd_step)
            if vn[0] > val:
                x, val = Xn[0], float(vn[0])
            for _ in range(cfg.inner_iters):
                f, G = model.values_and_grads(w, x[None, :])
                v = ball.state.sigma_inv @ G[0]
                norm = np.sqrt(max(float(G[0] @ v), 0.0))
                if norm == 0.0:
                    break
                cand = project_to_ball(ball, w + step * v / norm)
                fc = float(model.values(cand, x[None, :])[0])
                if fc > val:
                    w, val = cand, fc
                else:
                    break
        if best is None or val > best.ucb:
            best = Selection(x.copy(), w.copy(), val)
    return best
