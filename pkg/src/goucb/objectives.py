"""Benchmark objectives (maximization form), noisy oracle and regret accounting."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError, InputError
from .model import TwoLayerSigmoidNet, sigmoid

__all__ = [
    "Objective",
    "NoisyOracle",
    "RegretTrace",
    "f1",
    "f2",
    "f3",
    "make_f1",
    "make_f2",
    "make_f3",
    "styblinski_tang_argmax",
    "get_objective",
    "register_objective",
    "select_output",
]

BOX = 5.0


@dataclass(frozen=True)
class Objective:
    name: str
    lower: np.ndarray
    upper: np.ndarray
    fn: Callable[[np.ndarray], float]
    f_star: float | None = None
    f_star_source: str = "unknown"
    w_star: np.ndarray | None = None  # set when the objective is realizable by the built-in net
    hidden: int = 5

    @property
    def d(self) -> int:
        return self.lower.size

    def check(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        if x.shape != self.lower.shape:
            raise InputError(f"{self.name} expects a point of shape {self.lower.shape}, got {x.shape}")
        if np.any(x < self.lower - 1e-12) or np.any(x > self.upper + 1e-12):
            raise InputError(f"point outside the domain box of {self.name}")
        return x

    def __call__(self, x) -> float:
        return float(self.fn(self.check(x)))


def _box(d):
    return np.full(d, -BOX), np.full(d, BOX)


def _f1_raw(x):
    return 5.0 * float(sigmoid(np.sum(x) + 1.0)) + 1.0


def _f2_raw(x):
    return -0.5 * float(np.sum(x**4 - 16.0 * x**2 + 5.0 * x))


def _f3_raw(x):
    return -10.0 * x.size + float(np.sum(10.0 * np.cos(2 * np.pi * x) - x**2))


def styblinski_tang_argmax() -> float:
    """Per-coordinate maximizer of ``-(x^4 - 16 x^2 + 5 x)/2`` on [-5, 5]."""
    roots = np.roots([4.0, 0.0, -32.0, 5.0])
    roots = roots[np.isreal(roots)].real
    roots = roots[(roots >= -BOX) & (roots <= BOX)]
    vals = -0.5 * (roots**4 - 16 * roots**2 + 5 * roots)
    return float(roots[np.argmax(vals)])


def make_f1(d: int = 10) -> Objective:
    """The built-in network with every weight and bias set to one."""
    lo, hi = _box(d)
    net = TwoLayerSigmoidNet(d_x=d, hidden=5)
    f_star = 5.0 * float(sigmoid(BOX * d + 1.0)) + 1.0
    return Objective("f1", lo, hi, _f1_raw, f_star, "analytic: increasing in sum(x), max at the +5 vertex",
                     w_star=np.ones(net.d_w), hidden=5)


def make_f2(d: int = 10) -> Objective:
    lo, hi = _box(d)
    xs = styblinski_tang_argmax()
    f_star = d * (-0.5 * (xs**4 - 16 * xs**2 + 5 * xs))
    return Objective("f2", lo, hi, _f2_raw, f_star, "analytic: separable quartic, cubic root of derivative")


def make_f3(d: int = 10) -> Objective:
    lo, hi = _box(d)
    return Objective("f3", lo, hi, _f3_raw, 0.0, "analytic: each summand <= 10 with equality at 0")


_F1, _F2, _F3 = make_f1(), make_f2(), make_f3()


def f1(x) -> float:
    return _F1(x)


def f2(x) -> float:
    return _F2(x)


def f3(x) -> float:
    return _F3(x)


_REGISTRY: dict[str, Callable[[int], Objective]] = {"f1": make_f1, "f2": make_f2, "f3": make_f3}


def register_objective(name: str, factory: Callable[[int], Objective]) -> None:
    _REGISTRY[name] = factory


def get_objective(name: str, d: int = 10) -> Objective:
    try:
        return _REGISTRY[name](d)
    except KeyError:
        raise ConfigError(f"unknown objective {name!r}; known: {sorted(_REGISTRY)}") from None


@dataclass
class NoisyOracle:
    """``y = f(x) + eta`` with Gaussian ``eta ~ N(0, sigma^2)``."""

    objective: Objective
    sigma: float = 0.1
    rng: np.random.Generator = field(default_factory=np.random.default_rng)

    def __post_init__(self):
        if self.sigma < 0:
            raise InputError("noise scale must be >= 0")
        self.rng = np.random.default_rng(self.rng)

    def observe(self, x) -> float:
        fx = self.objective(x)
        if self.sigma == 0:
            return fx
        return fx + self.sigma * float(self.rng.standard_normal())


@dataclass
class RegretTrace:
    f_star: float | None
    r: list = field(default_factory=list)
    R: list = field(default_factory=list)
    phase: list = field(default_factory=list)

    def record(self, fx: float, phase: str = "II") -> float:
        """Append the instantaneous regret of a noiseless value ``f(x_t)``."""
        if self.f_star is None:
            raise ConfigError("optimum value unknown for this objective; regret undefined")
        r = self.f_star - fx
        self.r.append(r)
        self.R.append((self.R[-1] if self.R else 0.0) + r)
        self.phase.append(phase)
        return r

    def __len__(self):
        return len(self.r)


def select_output(xs, ys):
    """Point with the largest observed value; earliest round on ties."""
    if len(ys) == 0:
        raise InputError("no observations to choose from")
    return xs[int(np.argmax(np.asarray(ys, dtype=float)))]
