"""Regret curves for f1/f2/f3 in 10-d with GO-UCB and the GP baselines.

Writes one CSV per (method, objective) into --out, plus per-seed diagnostics
for GO-UCB. f1 is realizable by the surrogate; f2 and f3 are not.

    python3 scripts/run_simulations.py --out results/sim
    GOUCB_WORKERS=4 python3 scripts/run_simulations.py --objectives f1 --methods go-ucb,gp-ucb
"""
import argparse

from goucb.bench import RunConfig, resolve_beta_scale, run_suite, summary_line


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--objectives", default="f1,f2,f3")
    ap.add_argument("--methods", default="go-ucb,gp-ucb,gp-ei,gp-pi")
    ap.add_argument("--T", type=int, default=400)
    ap.add_argument("--n", type=int, default=20)
    ap.add_argument("--sigma", type=float, default=0.1)
    ap.add_argument("--seeds", default="1,2,3,4,5")
    ap.add_argument("--beta-scale", default="tune", help="number, 'auto' (f1 only) or 'tune'")
    ap.add_argument("--tune-seeds", default="1001,1002")
    ap.add_argument("--out", default="results/sim")
    args = ap.parse_args()

    seeds = tuple(int(s) for s in args.seeds.split(","))
    tune_seeds = tuple(int(s) for s in args.tune_seeds.split(","))
    scale = args.beta_scale if args.beta_scale in ("auto", "tune") else float(args.beta_scale)
    for obj in args.objectives.split(","):
        for method in args.methods.split(","):
            cfg = RunConfig(method=method, objective=obj, d=10, T=args.T, n=args.n, sigma=args.sigma, seeds=seeds,
                            beta_scale=scale, out=args.out, clamp_to_box=True, calib_seeds=tune_seeds)
            c = resolve_beta_scale(cfg, verbose=True) if method == "go-ucb" else None
            summary = run_suite(cfg, beta_scale=c)
            extra = f" beta_scale={c!r}" if c is not None else ""
            print(summary_line(summary) + extra + f" time={summary.wall_time:.0f}s", flush=True)


if __name__ == "__main__":
    main()
