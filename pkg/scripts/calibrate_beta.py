"""Feasibility calibration of the beta scale on the realizable 2-d task.

Prints the calibrated scale, then the fraction of rounds in which the true
parameter lies inside Ball_t on fresh seeds, and the log-log regret slope.

    python3 scripts/calibrate_beta.py --T 200 --seeds 1-20
"""
import argparse

import numpy as np

from goucb.bench import RunConfig, calibrate_beta_scale, loglog_slope, run_suite


def parse_seeds(text):
    if "-" in text:
        a, b = text.split("-")
        return tuple(range(int(a), int(b) + 1))
    return tuple(int(s) for s in text.split(","))


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--T", type=int, default=200)
    ap.add_argument("--seeds", default="1-20")
    ap.add_argument("--calib-seeds", default="1001-1008")
    ap.add_argument("--quantile", type=float, default=0.97)
    ap.add_argument("--margin", type=float, default=1.5)
    args = ap.parse_args()

    cfg = RunConfig(method="go-ucb", objective="f1", d=2, T=args.T, sigma=0.1, clamp_to_box=True,
                    seeds=parse_seeds(args.seeds), calib_seeds=parse_seeds(args.calib_seeds),
                    calib_quantile=args.quantile, calib_margin=args.margin)
    c = calibrate_beta_scale(cfg, verbose=True)
    summary = run_suite(cfg, write=False, beta_scale=c)
    feas = np.mean([row["feasible"] for res in summary.results for row in res.rows])
    print(f"scale {c:.6g}: feasible in {100 * feas:.2f}% of rounds over {len(cfg.seeds)} seeds")
    if args.T >= 400:
        slopes = [loglog_slope(res.trace.R, 100, args.T, offset=cfg.n) for res in summary.results]
        print(f"log-log slope on [100, {args.T}]: median {np.median(slopes):.3f}")


if __name__ == "__main__":
    main()
