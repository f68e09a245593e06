"""End-to-end runs, repetitions with Wald error bars, and CSV output."""
from __future__ import annotations

import dataclasses
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .acquisition import AcquisitionConfig, select_point
from .engine import BetaSchedule, UCBEngine, beta, log_factor, mahalanobis_sq
from .errors import ConfigError, InputError
from .gp import GPConfig, gp_select
from .model import TwoLayerSigmoidNet
from .objectives import NoisyOracle, RegretTrace, get_objective, select_output
from .phase1 import Dataset, Phase1Config, fit, sample_uniform

__all__ = [
    "METHODS",
    "RunConfig",
    "RunResult",
    "RunSummary",
    "run_one",
    "run_suite",
    "summarize",
    "calibrate_beta_scale",
    "tune_beta_scale",
    "resolve_beta_scale",
    "loglog_slope",
    "load_config",
    "write_suite_csv",
]

METHODS = ("go-ucb", "gp-ucb", "gp-ei", "gp-pi", "random")
WORKERS_ENV = "GOUCB_WORKERS"


@dataclass
class RunConfig:
    method: str = "go-ucb"
    objective: str = "f1"
    d: int = 10
    T: int = 400
    n: int | None = None  # defaults to floor(sqrt(T))
    c_lambda: float = 1.0
    beta_scale: float | str = 1.0  # a positive number, "auto" or "tune"
    sigma: float = 0.1
    seeds: tuple = (1, 2, 3, 4, 5)
    out: str = "results"
    # surrogate and geometry constants
    hidden: int = 5
    F: float = 1.0
    mu: float = 1.0
    C_h: float = 1.0
    log_factors: str = "unit"  # "unit" or "log"
    delta: float = 0.05
    clamp_w: bool = False
    # phase I
    gd_iters: int = 2000
    gd_step: float = 0.05
    restarts: int = 3
    clamp_to_box: bool = False
    # acquisition
    acq_mode: str = "linearized_ucb"
    outer_starts: int = 32
    outer_iters: int = 50
    inner_iters: int = 5
    # gp baselines
    gp_kappa: float = 2.0
    gp_length_scale: float = 1.0
    gp_noise_var: float = 1e-3
    gp_candidates: int = 1000
    # auto-calibration of beta_scale
    calib_seeds: tuple = (1001, 1002, 1003, 1004)
    calib_quantile: float = 0.95
    calib_margin: float = 1.5
    calib_rounds: int = 3
    # regret-based selection of beta_scale ("tune"), on the calibration seeds
    tune_grid: tuple = (1.0, 1e-2, 1e-4, 1e-6)
    diagnostics: bool = True

    def __post_init__(self):
        if self.method not in METHODS:
            raise ConfigError(f"unknown method {self.method!r}; choose from {METHODS}")
        if self.T < 1:
            raise ConfigError("T must be >= 1")
        if self.n is None:
            self.n = max(1, math.isqrt(self.T))
        if self.n < 0 or (self.n == 0 and self.method == "go-ucb"):
            raise ConfigError("n must be >= 1 for go-ucb and >= 0 for the baselines")
        self.seeds = tuple(int(s) for s in self.seeds)
        self.calib_seeds = tuple(int(s) for s in self.calib_seeds)
        self.tune_grid = tuple(float(c) for c in self.tune_grid)
        if not self.tune_grid or min(self.tune_grid) <= 0:
            raise ConfigError("tune_grid needs at least one positive scale")
        if not self.seeds:
            raise ConfigError("need at least one seed")
        if self.beta_scale not in ("auto", "tune"):
            self.beta_scale = float(self.beta_scale)
            if not self.beta_scale > 0:
                raise ConfigError("beta_scale must be > 0, 'auto' or 'tune'")
        if self.log_factors not in ("unit", "log"):
            raise ConfigError("log_factors must be 'unit' or 'log'")

    @property
    def lam(self) -> float:
        return self.c_lambda * math.sqrt(self.T)

    def replace(self, **kw) -> "RunConfig":
        return dataclasses.replace(self, **kw)


@dataclass
class RunResult:
    seed: int
    trace: RegretTrace
    xs: np.ndarray
    ys: np.ndarray
    x_hat: np.ndarray
    rows: list = field(default_factory=list)  # per-round phase-II diagnostics
    lemmas: object = None
    w0: np.ndarray | None = None
    beta_scale: float | None = None

    @property
    def feasible_fraction(self) -> float | None:
        flags = [r["feasible"] for r in self.rows if r["feasible"] is not None]
        return float(np.mean(flags)) if flags else None


@dataclass
class RunSummary:
    method: str
    objective: str
    seeds: tuple
    R: np.ndarray  # (k, rounds)
    mean_R: np.ndarray
    halfwidth: np.ndarray
    wall_time: float
    results: list = field(default_factory=list)

    @property
    def final_mean(self) -> float:
        return float(self.mean_R[-1])

    @property
    def final_halfwidth(self) -> float:
        return float(self.halfwidth[-1])


def _streams(seed):
    ss = np.random.SeedSequence(seed)
    return [np.random.default_rng(c) for c in ss.spawn(4)]


def build_schedule(cfg: RunConfig, d_w: int, C_g: float, beta_scale: float) -> BetaSchedule:
    kw = {}
    if cfg.log_factors == "log":
        kw = dict(iota=log_factor, iota_p=log_factor, iota_pp=log_factor)
    return BetaSchedule(d_w=d_w, T=cfg.T, c=beta_scale, sigma=cfg.sigma, F=cfg.F, mu=cfg.mu, n=cfg.n,
                        C_g=C_g, lam=cfg.lam, delta=cfg.delta, **kw)


def run_one(cfg: RunConfig, seed: int, beta_scale: float | None = None) -> RunResult:
    """One complete run of ``cfg.method`` under ``seed``."""
    obj = get_objective(cfg.objective, cfg.d)
    rng_x, rng_noise, rng_fit, rng_acq = _streams(seed)
    oracle = NoisyOracle(obj, cfg.sigma, rng_noise)
    trace = RegretTrace(obj.f_star)
    total = cfg.n + cfg.T

    # uniform initial design (phase I for GO-UCB, initial design for the baselines)
    n_init = total if cfg.method == "random" else cfg.n
    X0 = sample_uniform(obj.lower, obj.upper, n_init, rng_x).X if n_init else []
    xs, ys = [], []
    for x in X0:
        ys.append(oracle.observe(x))
        xs.append(x)
        trace.record(obj(x), "I")
    if cfg.method == "random":
        return RunResult(seed, trace, np.array(xs), np.array(ys), select_output(xs, ys))
    if cfg.method == "go-ucb":
        scale = cfg.beta_scale if beta_scale is None else beta_scale
        if isinstance(scale, str):
            raise ConfigError(f"beta_scale={scale!r} must be resolved with resolve_beta_scale before run_one")
        return _go_ucb(cfg, seed, obj, oracle, trace, xs, ys, rng_fit, rng_acq, float(scale))
    return _gp(cfg, seed, obj, oracle, trace, xs, ys, rng_acq)


def _gp(cfg, seed, obj, oracle, trace, xs, ys, rng):
    gcfg = GPConfig(length_scale=cfg.gp_length_scale, noise_var=cfg.gp_noise_var, acquisition=cfg.method[3:],
                    kappa=cfg.gp_kappa, candidate_count=cfg.gp_candidates, normalize_y=True,
                    lower=obj.lower, upper=obj.upper)
    for t in range(1, cfg.T + 1):
        try:
            if xs:
                x = gp_select(Dataset(np.array(xs), np.array(ys)), gcfg, obj.lower, obj.upper, rng)
            else:
                x = obj.lower + (obj.upper - obj.lower) * rng.random(obj.d)
        except Exception as exc:
            raise type(exc)(f"round {t}: {exc}") from exc
        xs.append(x)
        ys.append(oracle.observe(x))
        trace.record(obj(x), "II")
    return RunResult(seed, trace, np.array(xs), np.array(ys), select_output(xs, ys))


def _go_ucb(cfg, seed, obj, oracle, trace, xs, ys, rng_fit, rng_acq, beta_scale):
    model = TwoLayerSigmoidNet(d_x=cfg.d, hidden=cfg.hidden, x_lower=obj.lower, x_upper=obj.upper)
    p1 = Phase1Config(n=cfg.n, gd_iters=cfg.gd_iters, gd_step=cfg.gd_step, restarts=cfg.restarts,
                      clamp_to_box=cfg.clamp_to_box)
    w0 = fit(model, Dataset(np.array(xs), np.array(ys)), p1, rng_fit)
    C_g = model.gradient_norm_bound()
    schedule = build_schedule(cfg, model.d_w, C_g, beta_scale)
    engine = UCBEngine(w0, cfg.lam, schedule, clamp=model.param_box() if cfg.clamp_w else None)
    acq = AcquisitionConfig(mode=cfg.acq_mode, outer_starts=cfg.outer_starts, outer_iters=cfg.outer_iters,
                            inner_iters=cfg.inner_iters)
    w_star = obj.w_star if (obj.w_star is not None and obj.w_star.size == model.d_w
                            and obj.hidden == cfg.hidden) else None
    rows = []
    for t in range(1, cfg.T + 1):
        try:
            ball = engine.ball(t)
            best_x = select_output(xs, ys)
            sel = select_point(model, ball, obj.lower, obj.upper, acq, rng_acq, extra_starts=best_x[None, :])
            x = sel.x
            y = oracle.observe(x)
            xs.append(x)
            ys.append(y)
            r = trace.record(obj(x), "II")
            f_t, G = model.values_and_grads(ball.center, x[None, :])
            feasible = dist = None
            if w_star is not None:
                dist = mahalanobis_sq(engine.state, w_star, ball.center)
                feasible = bool(dist <= ball.radius)
            log_det = engine.state.log_det
            u_sq = engine.absorb(x, y, ball.center, G[0], f_t[0])
        except Exception as exc:
            if isinstance(exc, (InputError, ConfigError, ArithmeticError, RuntimeError)):
                raise type(exc)(f"round {t}: {exc}") from exc
            raise
        rows.append({
            "round": cfg.n + t,
            "t": t,
            "u2": u_sq,
            "beta": ball.radius,
            "log_det": log_det,
            "feasible": feasible,
            "dist_sq": dist,
            "regret": r,
            "regret_bound": 2 * math.sqrt(ball.radius * u_sq) + 2 * ball.radius * cfg.C_h / cfg.lam,
        })
    lemmas = engine.diagnostics() if cfg.diagnostics else None
    return RunResult(seed, trace, np.array(xs), np.array(ys), select_output(xs, ys), rows, lemmas, w0, beta_scale)


def calibrate_beta_scale(cfg: RunConfig, seeds=None, verbose: bool = False) -> float:
    """Pick the beta scale so that the true parameter sits inside Ball_t in most rounds.

    Needs a realizable objective (one with a known ``w_star``). Runs at the
    current scale, takes ``calib_quantile`` of the per-round ratio
    ``||w_t - w*||^2_{Sigma_t} / beta_t(c=1)`` times ``calib_margin`` as the
    new scale, and repeats ``calib_rounds`` times (the trajectory depends on
    the scale). Returns the largest scale seen, so the last fixed point is
    never less conservative than an earlier one.
    """
    obj = get_objective(cfg.objective, cfg.d)
    if obj.w_star is None:
        raise ConfigError(f"objective {cfg.objective!r} has no known parameter; cannot auto-calibrate beta")
    seeds = cfg.calib_seeds if seeds is None else seeds
    c = 1.0
    history = []
    base = cfg.replace(method="go-ucb")
    for _ in range(cfg.calib_rounds):
        ratios = []
        for s in seeds:
            res = run_one(base, s, beta_scale=c)
            ratios += [row["dist_sq"] / (row["beta"] / c) for row in res.rows]
        c_new = float(np.quantile(ratios, cfg.calib_quantile)) * cfg.calib_margin
        history.append(c_new)
        if verbose:
            print(f"calibration: scale {c:.6g} -> {c_new:.6g}")
        if abs(c_new - c) <= 0.1 * c:
            c = c_new
            break
        c = c_new
    return max(history)


def tune_beta_scale(cfg: RunConfig, seeds=None, grid=None, verbose: bool = False) -> float:
    """Grid scale with the lowest mean final cumulative regret on held-out seeds.

    Works for any objective with a known optimum. Ties go to the earlier grid
    entry. Uses ``calib_seeds`` by default, never the evaluation seeds.
    """
    seeds = cfg.calib_seeds if seeds is None else seeds
    grid = cfg.tune_grid if grid is None else tuple(grid)
    base = cfg.replace(method="go-ucb")
    best, best_R = None, math.inf
    for c in grid:
        R = float(np.mean([run_one(base, s, beta_scale=c).trace.R[-1] for s in seeds]))
        if verbose:
            print(f"tuning: scale {c:.6g} -> mean final R {R:.6g}")
        if R < best_R:
            best, best_R = c, R
    return best


def resolve_beta_scale(cfg: RunConfig, verbose: bool = False) -> float:
    """Numeric beta scale for ``cfg`` (runs calibration or tuning when asked)."""
    if cfg.beta_scale == "auto":
        return calibrate_beta_scale(cfg, verbose=verbose)
    if cfg.beta_scale == "tune":
        return tune_beta_scale(cfg, verbose=verbose)
    return float(cfg.beta_scale)


def summarize(cfg: RunConfig, results, wall_time: float = 0.0) -> RunSummary:
    R = np.array([res.trace.R for res in results], dtype=float)
    k = R.shape[0]
    mean = R.mean(axis=0)
    hw = 1.96 * R.std(axis=0, ddof=1) / math.sqrt(k) if k > 1 else np.zeros(R.shape[1])
    return RunSummary(cfg.method, cfg.objective, cfg.seeds, R, mean, hw, wall_time, list(results))


def _worker(args):
    cfg, seed, scale = args
    return run_one(cfg, seed, scale)


def worker_count() -> int:
    try:
        return max(1, int(os.environ.get(WORKERS_ENV, "1")))
    except ValueError:
        raise ConfigError(f"{WORKERS_ENV} must be an integer") from None


def run_suite(cfg: RunConfig, write: bool = True, beta_scale: float | None = None) -> RunSummary:
    """Run every seed, aggregate in seed order and (optionally) write CSVs."""
    start = time.perf_counter()
    if beta_scale is None and cfg.method == "go-ucb" and isinstance(cfg.beta_scale, str):
        beta_scale = resolve_beta_scale(cfg)
    jobs = [(cfg, s, beta_scale) for s in cfg.seeds]
    workers = min(worker_count(), len(jobs))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(_worker, jobs))
    else:
        results = [_worker(j) for j in jobs]
    summary = summarize(cfg, results, time.perf_counter() - start)
    if write:
        write_suite_csv(summary, cfg.out)
    return summary


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    return repr(float(v))


def write_suite_csv(summary: RunSummary, out) -> list[Path]:
    out = Path(out)
    out.mkdir(parents=True, exist_ok=True)
    stem = f"{summary.method}_{summary.objective}"
    paths = []
    p = out / f"{stem}.csv"
    header = ["round", "mean_R", "halfwidth"] + [f"R_seed{s}" for s in summary.seeds]
    lines = [",".join(header)]
    for i in range(summary.R.shape[1]):
        vals = [i + 1, summary.mean_R[i], summary.halfwidth[i]] + list(summary.R[:, i])
        lines.append(",".join(_fmt(v) for v in vals))
    p.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
    paths.append(p)

    for res in summary.results:
        if not res.rows:
            continue
        cols = ["round", "u2", "beta", "log_det", "feasible", "regret", "regret_bound"]
        lines = [",".join(cols)] + [",".join(_fmt(r[c]) for c in cols) for r in res.rows]
        q = out / f"{stem}_seed{res.seed}_diag.csv"
        q.write_text("\n".join(lines) + "\n", encoding="utf-8", newline="\n")
        paths.append(q)

    s = out / f"{stem}_summary.txt"
    s.write_text(summary_line(summary) + "\n", encoding="utf-8", newline="\n")
    paths.append(s)
    return paths


def summary_line(summary: RunSummary) -> str:
    return (f"method={summary.method} objective={summary.objective} seeds={len(summary.seeds)} "
            f"rounds={summary.R.shape[1]} final_mean_R={summary.final_mean!r} "
            f"final_halfwidth={summary.final_halfwidth!r}")


def loglog_slope(R, t_lo: int, t_hi: int, offset: int = 0) -> float:
    """Least-squares slope of ``log R_t`` on ``log t`` for ``t`` in ``[t_lo, t_hi]``.

    ``R`` is a cumulative-regret sequence whose entry ``offset + t - 1``
    belongs to round ``t``.
    """
    t = np.arange(t_lo, t_hi + 1)
    vals = np.asarray(R, dtype=float)[offset + t - 1]
    if np.any(vals <= 0):
        raise InputError("cumulative regret must be positive on the fitting window")
    return float(np.polyfit(np.log(t), np.log(vals), 1)[0])


# -- flat key=value configuration files ---------------------------------

def _coerce(name, raw, current):
    ftype = {f.name: f.type for f in dataclasses.fields(RunConfig)}[name]
    raw = raw.strip()
    if name == "beta_scale":
        return raw if raw in ("auto", "tune") else float(raw)
    if name == "tune_grid":
        return tuple(float(v) for v in raw.replace(" ", "").split(",") if v)
    if "tuple" in str(ftype):
        return tuple(int(v) for v in raw.replace(" ", "").split(",") if v)
    if "bool" in str(ftype):
        if raw.lower() in ("1", "true", "yes", "on"):
            return True
        if raw.lower() in ("0", "false", "no", "off"):
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    if "int" in str(ftype) and "float" not in str(ftype):
        return None if raw.lower() == "none" else int(raw)
    if "float" in str(ftype):
        return float(raw)
    return raw


def parse_kv(text: str) -> dict:
    """Parse ``key = value`` lines; ``#`` starts a comment; dashes in keys become underscores."""
    names = {f.name for f in dataclasses.fields(RunConfig)}
    out = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected key=value")
        key, val = line.split("=", 1)
        key = key.strip().replace("-", "_")
        if key not in names:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = val.strip()
    return out


def load_config(path=None, overrides: dict | None = None) -> RunConfig:
    raw = parse_kv(Path(path).read_text(encoding="utf-8")) if path else {}
    raw.update({k: v for k, v in (overrides or {}).items() if v is not None})
    kw = {k: (_coerce(k, v, None) if isinstance(v, str) else v) for k, v in raw.items()}
    return RunConfig(**kw)
