"""Fixed-hyperparameter Gaussian-process baselines (GP-UCB, GP-EI, GP-PI)."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, solve_triangular
from scipy.stats import norm

from .acquisition import maximize_box
from .errors import InputError, NumericalError
from .phase1 import Dataset

__all__ = ["GPConfig", "matern52", "GPPosterior", "gp_posterior", "acquisition_values", "gp_select"]


@dataclass(frozen=True)
class GPConfig:
    length_scale: float = 1.0
    signal_var: float = 1.0
    noise_var: float = 1e-3
    acquisition: str = "ucb"
    kappa: float = 2.0
    xi: float = 0.01
    candidate_count: int = 1000
    refine_starts: int = 5
    refine_iters: int = 20
    normalize_y: bool = False
    lower: np.ndarray | None = None  # box used to rescale inputs to the unit cube
    upper: np.ndarray | None = None

    def __post_init__(self):
        if not (self.length_scale > 0 and self.signal_var > 0 and self.noise_var > 0):
            raise InputError("length scale, signal variance and noise variance must be > 0")
        if self.kappa < 0:
            raise InputError("kappa must be >= 0")
        if self.acquisition not in ("ucb", "ei", "pi"):
            raise InputError(f"unknown acquisition {self.acquisition!r}")


def matern52(A, B, length_scale=1.0, signal_var=1.0):
    d = np.sqrt(np.maximum(np.sum((A[:, None, :] - B[None, :, :]) ** 2, axis=-1), 0.0)) / length_scale
    s5 = np.sqrt(5.0) * d
    return signal_var * (1.0 + s5 + 5.0 / 3.0 * d * d) * np.exp(-s5)


class GPPosterior:
    """Cholesky-factored posterior; reusable across many test points."""

    def __init__(self, data: Dataset, cfg: GPConfig):
        if len(data) == 0 or data.y is None:
            raise InputError("GP posterior needs a non-empty dataset with observations")
        self.cfg = cfg
        self.X = self._scale(data.X)
        y = data.y
        if cfg.normalize_y:
            self.y_mean = float(np.mean(y))
            sd = float(np.std(y))
            self.y_std = sd if sd > 0 else 1.0
        else:
            self.y_mean, self.y_std = 0.0, 1.0
        z = (y - self.y_mean) / self.y_std
        K = matern52(self.X, self.X, cfg.length_scale, cfg.signal_var) + cfg.noise_var * np.eye(len(z))
        try:
            self.L = cho_factor(K, lower=True)
        except np.linalg.LinAlgError as exc:
            raise NumericalError("GP kernel matrix is not positive definite; increase noise_var (jitter)") from exc
        self.alpha = cho_solve(self.L, z)

    def _scale(self, X):
        X = np.atleast_2d(np.asarray(X, dtype=float))
        if self.cfg.lower is None:
            return X
        lo, hi = np.asarray(self.cfg.lower, float), np.asarray(self.cfg.upper, float)
        return (X - lo) / np.where(hi > lo, hi - lo, 1.0)

    def predict(self, Xq):
        Xs = self._scale(Xq)
        Ks = matern52(Xs, self.X, self.cfg.length_scale, self.cfg.signal_var)
        mean = Ks @ self.alpha
        V = solve_triangular(self.L[0], Ks.T, lower=True)
        var = self.cfg.signal_var - np.sum(V * V, axis=0)
        if np.any(var < -1e-9 * self.cfg.signal_var):
            raise NumericalError("negative posterior variance; increase noise_var (jitter)")
        return self.y_mean + self.y_std * mean, self.y_std**2 * np.maximum(var, 0.0)


def gp_posterior(data: Dataset, cfg: GPConfig, x):
    """Posterior mean and variance at one point (or a batch of points)."""
    x = np.asarray(x, dtype=float)
    mean, var = GPPosterior(data, cfg).predict(np.atleast_2d(x))
    if x.ndim == 1:
        return float(mean[0]), float(var[0])
    return mean, var


def acquisition_values(post: GPPosterior, X, best_y: float):
    cfg = post.cfg
    mean, var = post.predict(X)
    sd = np.sqrt(var)
    if cfg.acquisition == "ucb":
        return mean + cfg.kappa * sd
    imp = mean - best_y - cfg.xi * post.y_std
    with np.errstate(divide="ignore", invalid="ignore"):
        z = np.where(sd > 0, imp / np.where(sd > 0, sd, 1.0), 0.0)
    if cfg.acquisition == "pi":
        return np.where(sd > 0, norm.cdf(z), 0.0)
    ei = np.where(sd > 0, imp * norm.cdf(z) + sd * norm.pdf(z), 0.0)
    return np.maximum(ei, 0.0)


def gp_select(data: Dataset, cfg: GPConfig, lower, upper, rng=None) -> np.ndarray:
    """Maximize the acquisition over uniform candidates, then refine the best ones locally."""
    rng = np.random.default_rng(rng)
    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    post = GPPosterior(data, cfg)
    best_y = float(np.max(data.y))
    cand = lower + (upper - lower) * rng.random((cfg.candidate_count, lower.size))
    vals = acquisition_values(post, cand, best_y)
    k = min(cfg.refine_starts, cfg.candidate_count)
    top = np.argsort(-vals, kind="stable")[:k]
    if cfg.refine_iters > 0 and k > 0:
        Xr, vr, _ = maximize_box(lambda P: acquisition_values(post, P, best_y), lower, upper, cand[top],
                                 cfg.refine_iters, rng)
        j = int(np.argmax(vr))
        if vr[j] > vals[top[0]]:
            return Xr[j]
    return cand[top[0]]
