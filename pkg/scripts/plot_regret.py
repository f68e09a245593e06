"""Plot mean cumulative regret with Wald error bands from the suite CSVs.

    python3 scripts/plot_regret.py results/sim --objective f1 --phase2-from 21 -o f1.png

Needs matplotlib (``pip install .[plot]``).
"""
import argparse
import csv
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402


def read(path):
    """Rounds and the (seeds, rounds) matrix of per-seed cumulative regret."""
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.DictReader(fh)
        rows = list(reader)
        seed_cols = [k for k in reader.fieldnames if k.startswith("R_seed")]
    t = np.array([float(r["round"]) for r in rows])
    R = np.array([[float(r[k]) for r in rows] for k in seed_cols])
    return t, R


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("results")
    ap.add_argument("--objective", default="f1")
    ap.add_argument("--phase2-from", type=int, default=1,
                    help="first round to plot; regret is re-zeroed there (21 for n=20)")
    ap.add_argument("-o", "--output", default=None)
    args = ap.parse_args()

    fig, ax = plt.subplots(figsize=(5, 3.5))
    for path in sorted(Path(args.results).glob(f"*_{args.objective}.csv")):
        method = path.stem[: -len(args.objective) - 1]
        t, R = read(path)
        keep = t >= args.phase2_from
        if args.phase2_from > 1:
            R = R - R[:, [np.argmax(keep) - 1]]
        R = R[:, keep]
        mean = R.mean(axis=0)
        hw = 1.96 * R.std(axis=0, ddof=1) / np.sqrt(R.shape[0]) if R.shape[0] > 1 else np.zeros_like(mean)
        x = t[keep] - args.phase2_from + 1
        ax.plot(x, mean, label=method)
        ax.fill_between(x, mean - hw, mean + hw, alpha=0.2)
    ax.set_xlabel("round")
    ax.set_ylabel("cumulative regret")
    ax.set_title(args.objective)
    ax.legend()
    fig.tight_layout()
    fig.savefig(args.output or f"{args.objective}_regret.png", dpi=150)


if __name__ == "__main__":
    main()
