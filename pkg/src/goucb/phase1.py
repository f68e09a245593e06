"""Uniform exploration and the non-linear least-squares regression oracle."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InputError, NumericalError
from .model import ModelFamily

__all__ = ["Phase1Config", "Dataset", "sample_uniform", "fit", "fit_restarts", "expected_loss"]


@dataclass(frozen=True)
class Phase1Config:
    n: int = 20
    gd_iters: int = 2000
    gd_step: float = 0.05
    decay_every: int = 500
    decay_factor: float = 0.5
    restarts: int = 3
    clamp_to_box: bool = False

    def __post_init__(self):
        if self.n < 1:
            raise InputError("n must be >= 1")
        if self.gd_iters < 1:
            raise InputError("gd_iters must be >= 1")
        if not self.gd_step > 0:
            raise InputError("gd_step must be > 0")
        if self.restarts < 1:
            raise InputError("restarts must be >= 1")

    def step_at(self, it: int) -> float:
        return self.gd_step * self.decay_factor ** (it // self.decay_every)


@dataclass
class Dataset:
    X: np.ndarray
    y: np.ndarray | None = None

    def __post_init__(self):
        self.X = np.atleast_2d(np.asarray(self.X, dtype=float))
        if self.y is not None:
            self.y = np.asarray(self.y, dtype=float).ravel()
            if self.y.shape[0] != self.X.shape[0]:
                raise InputError("X and y have different lengths")
            if not np.all(np.isfinite(self.y)):
                raise InputError("observations must be finite")

    def __len__(self):
        return self.X.shape[0]


def _box(lower, upper):
    lower = np.atleast_1d(np.asarray(lower, dtype=float))
    upper = np.atleast_1d(np.asarray(upper, dtype=float))
    if lower.shape != upper.shape or np.any(lower > upper):
        raise InputError("box needs matching shapes and lower <= upper")
    return lower, upper


def sample_uniform(lower, upper, n: int, rng=None) -> Dataset:
    """``n`` i.i.d. uniform points on the box ``[lower, upper]``."""
    if n < 1:
        raise InputError("n must be >= 1")
    lower, upper = _box(lower, upper)
    rng = np.random.default_rng(rng)
    X = lower + (upper - lower) * rng.random((n, lower.size))
    return Dataset(X)


def _descend(model, X, y, w, cfg, lo, hi):
    n = X.shape[0]
    for it in range(cfg.gd_iters):
        f, G = model.values_and_grads(w, X)
        r = f - y
        if not np.all(np.isfinite(r)):
            raise NumericalError(f"non-finite loss at gradient-descent iteration {it}", iteration=it)
        w = w - cfg.step_at(it) * (2.0 / n) * (G.T @ r)
        if cfg.clamp_to_box:
            np.clip(w, lo, hi, out=w)
    r = model.values(w, X) - y
    loss = float(np.mean(r * r))
    if not np.isfinite(loss) or not np.all(np.isfinite(w)):
        raise NumericalError(f"non-finite loss at gradient-descent iteration {cfg.gd_iters}", iteration=cfg.gd_iters)
    return w, loss


def fit_restarts(model: ModelFamily, data: Dataset, cfg: Phase1Config, rng=None):
    """Run every restart; return ``[(w, final_mse), ...]`` in restart order.

    Restart ``i`` draws its initial point from the ``i``-th child of the seed,
    so a larger restart count extends (never reshuffles) a smaller one.
    """
    if len(data) == 0 or data.y is None:
        raise InputError("fit needs a non-empty dataset with observations")
    X = model.check_X(data.X)
    y = data.y
    lo, hi = model.param_box()
    seq = rng.bit_generator.seed_seq if isinstance(rng, np.random.Generator) else np.random.SeedSequence(rng)
    out = []
    for child in seq.spawn(cfg.restarts):
        w0 = lo + (hi - lo) * np.random.default_rng(child).random(model.d_w)
        out.append(_descend(model, X, y, w0, cfg, lo, hi))
    return out


def fit(model: ModelFamily, data: Dataset, cfg: Phase1Config, rng=None) -> np.ndarray:
    """Approximate ``argmin_w sum_j (f_w(x_j) - y_j)^2`` by multistart gradient descent."""
    results = fit_restarts(model, data, cfg, rng)
    best = min(range(len(results)), key=lambda i: results[i][1])
    return results[best][0]


def expected_loss(model: ModelFamily, w, w_star, mc_samples: int = 10_000, rng=None, lower=None, upper=None) -> float:
    """Monte-Carlo estimate of ``E_{x~U}(f_x(w) - f_x(w_star))^2``."""
    if mc_samples < 1:
        raise InputError("mc_samples must be >= 1")
    w = model.check_w(w)
    w_star = model.check_w(w_star)
    if lower is None or upper is None:
        lower, upper = model.input_box()
    X = sample_uniform(lower, upper, mc_samples, rng).X
    diff = model.values(w, X) - model.values(w_star, X)
    return float(np.mean(diff * diff))
