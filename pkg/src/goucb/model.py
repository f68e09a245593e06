"""Differentiable parametric surrogate families f_w(x).

Every family exposes batched forward passes with exact gradients in the
parameters ``w``. The built-in family is a two-layer network
``linear2(sigmoid(linear1(x)))``; an affine family is provided for tests and
for cases where the closed-form estimator reduces to ridge regression.

Parameter layout of :class:`TwoLayerSigmoidNet` (same order as stacking a
``Linear(d_x, h)`` and a ``Linear(h, 1)`` module)::

    w = [W1 (h x d_x, row-major), b1 (h), w2 (h), b2 (1)]
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np
from scipy.special import expit

from .errors import InputError

__all__ = [
    "ModelEval",
    "ModelFamily",
    "TwoLayerSigmoidNet",
    "AffineModel",
    "evaluate",
    "gradient_norm_bound",
    "register_family",
    "make_family",
    "sigmoid",
]


def sigmoid(z):
    return expit(z)


class ModelEval(NamedTuple):
    value: float
    grad_w: np.ndarray


class ModelFamily:
    """Base class for surrogate families.

    Subclasses define ``d_x``, ``d_w``, ``values`` and ``values_and_grads``.
    ``w_lower``/``w_upper`` describe the parameter box and
    ``x_lower``/``x_upper`` the input box used for analytic bounds.
    """

    d_x: int
    d_w: int

    def values(self, w: np.ndarray, X: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    def values_and_grads(self, w: np.ndarray, X: np.ndarray):
        """Return ``(f, G)`` with ``f`` of shape (m,) and ``G`` of shape (m, d_w)."""
        raise NotImplementedError

    def gradient_norm_bound(self) -> float:
        raise NotImplementedError

    def output_bound(self) -> float:
        raise NotImplementedError

    # -- shared helpers --------------------------------------------------
    def param_box(self):
        lo = np.broadcast_to(np.asarray(self.w_lower, dtype=float), (self.d_w,))
        hi = np.broadcast_to(np.asarray(self.w_upper, dtype=float), (self.d_w,))
        return lo.copy(), hi.copy()

    def input_box(self):
        lo = np.broadcast_to(np.asarray(self.x_lower, dtype=float), (self.d_x,))
        hi = np.broadcast_to(np.asarray(self.x_upper, dtype=float), (self.d_x,))
        return lo.copy(), hi.copy()

    def check_w(self, w) -> np.ndarray:
        w = np.asarray(w, dtype=float)
        if w.shape != (self.d_w,):
            raise InputError(f"expected parameter vector of length {self.d_w}, got shape {w.shape}")
        return w

    def check_X(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        if X.ndim == 1:
            X = X[None, :]
        if X.ndim != 2 or X.shape[1] != self.d_x:
            raise InputError(f"expected points of dimension {self.d_x}, got shape {X.shape}")
        return X

    def _check_boxes(self):
        lo, hi = self.param_box()
        if np.any(lo >= hi):
            raise InputError("parameter box needs lower < upper in every coordinate")
        xlo, xhi = self.input_box()
        if np.any(xlo > xhi):
            raise InputError("input box needs lower <= upper in every coordinate")


@dataclass(frozen=True)
class TwoLayerSigmoidNet(ModelFamily):
    """``f_w(x) = w2 . sigmoid(W1 x + b1) + b2`` with hidden width ``hidden``."""

    d_x: int
    hidden: int = 5
    w_lower: float | np.ndarray = 0.0
    w_upper: float | np.ndarray = 1.0
    x_lower: float | np.ndarray = -5.0
    x_upper: float | np.ndarray = 5.0

    def __post_init__(self):
        if self.d_x < 1:
            raise InputError("d_x must be >= 1")
        if self.hidden < 1:
            raise InputError("hidden width must be >= 1")
        self._check_boxes()

    @property
    def d_w(self) -> int:
        return self.hidden * self.d_x + 2 * self.hidden + 1

    def unpack(self, w):
        h, d = self.hidden, self.d_x
        W1 = w[: h * d].reshape(h, d)
        b1 = w[h * d : h * d + h]
        w2 = w[h * d + h : h * d + 2 * h]
        b2 = w[-1]
        return W1, b1, w2, b2

    def pack(self, W1, b1, w2, b2) -> np.ndarray:
        return np.concatenate([np.ravel(W1), np.ravel(b1), np.ravel(w2), np.atleast_1d(b2)]).astype(float)

    def values(self, w, X):
        w = self.check_w(w)
        X = self.check_X(X)
        W1, b1, w2, b2 = self.unpack(w)
        return sigmoid(X @ W1.T + b1) @ w2 + b2

    def values_and_grads(self, w, X):
        w = self.check_w(w)
        X = self.check_X(X)
        W1, b1, w2, b2 = self.unpack(w)
        m, h, d = X.shape[0], self.hidden, self.d_x
        H = sigmoid(X @ W1.T + b1)  # (m, h)
        f = H @ w2 + b2
        dz = H * (1.0 - H) * w2  # df/dz, (m, h)
        G = np.empty((m, self.d_w))
        G[:, : h * d] = (dz[:, :, None] * X[:, None, :]).reshape(m, h * d)
        G[:, h * d : h * d + h] = dz
        G[:, h * d + h : h * d + 2 * h] = H
        G[:, -1] = 1.0
        return f, G

    def gradient_norm_bound(self) -> float:
        # |h_k| <= 1, |sigmoid'| <= 1/4, |w2_k| <= max|box|
        lo, hi = self.param_box()
        xlo, xhi = self.input_box()
        h, d = self.hidden, self.d_x
        w2max = np.maximum(np.abs(lo), np.abs(hi))[h * d + h : h * d + 2 * h]
        x_sq = float(np.sum(np.maximum(xlo**2, xhi**2)))
        bound_sq = h + 1.0 + float(np.sum((w2max / 4.0) ** 2)) * (x_sq + 1.0)
        return float(np.sqrt(bound_sq))

    def output_bound(self) -> float:
        lo, hi = self.param_box()
        h, d = self.hidden, self.d_x
        w2max = np.maximum(np.abs(lo), np.abs(hi))[h * d + h : h * d + 2 * h]
        return float(np.sum(w2max) + max(abs(lo[-1]), abs(hi[-1])))


@dataclass(frozen=True)
class AffineModel(ModelFamily):
    """``f_w(x) = w[:d_x] . x (+ w[-1] when bias)``; linear in ``w``."""

    d_x: int
    bias: bool = False
    w_lower: float | np.ndarray = 0.0
    w_upper: float | np.ndarray = 1.0
    x_lower: float | np.ndarray = -5.0
    x_upper: float | np.ndarray = 5.0

    def __post_init__(self):
        if self.d_x < 1:
            raise InputError("d_x must be >= 1")
        self._check_boxes()

    @property
    def d_w(self) -> int:
        return self.d_x + int(self.bias)

    def _features(self, X):
        if self.bias:
            return np.hstack([X, np.ones((X.shape[0], 1))])
        return X

    def values(self, w, X):
        w = self.check_w(w)
        return self._features(self.check_X(X)) @ w

    def values_and_grads(self, w, X):
        w = self.check_w(w)
        Phi = self._features(self.check_X(X))
        return Phi @ w, Phi.copy()

    def gradient_norm_bound(self) -> float:
        xlo, xhi = self.input_box()
        return float(np.sqrt(np.sum(np.maximum(xlo**2, xhi**2)) + float(self.bias)))

    def output_bound(self) -> float:
        lo, hi = self.param_box()
        wmax = np.maximum(np.abs(lo), np.abs(hi))
        xlo, xhi = self.input_box()
        xmax = np.maximum(np.abs(xlo), np.abs(xhi))
        if self.bias:
            return float(wmax[:-1] @ xmax + wmax[-1])
        return float(wmax @ xmax)


def evaluate(model: ModelFamily, w, x) -> ModelEval:
    """Value and exact parameter gradient of ``f_x(w)`` at a single point."""
    x = np.asarray(x, dtype=float)
    if x.shape != (model.d_x,):
        raise InputError(f"expected a point of dimension {model.d_x}, got shape {x.shape}")
    f, G = model.values_and_grads(w, x[None, :])
    return ModelEval(float(f[0]), G[0])


def gradient_norm_bound(model: ModelFamily) -> float:
    """Analytic C_g with ||grad_w f_x(w)|| <= C_g over both boxes."""
    return model.gradient_norm_bound()


_FAMILIES: dict[str, Callable[..., ModelFamily]] = {
    "two_layer_sigmoid": TwoLayerSigmoidNet,
    "affine": AffineModel,
}


def register_family(name: str, factory: Callable[..., ModelFamily]) -> None:
    _FAMILIES[name] = factory


def make_family(name: str, **kwargs) -> ModelFamily:
    try:
        factory = _FAMILIES[name]
    except KeyError:
        raise InputError(f"unknown model family {name!r}; known: {sorted(_FAMILIES)}") from None
    return factory(**kwargs)
