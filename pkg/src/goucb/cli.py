"""Command line entry point: ``goucb run --method go-ucb --objective f1 ...``.

Every :class:`RunConfig` field is available as ``--field-name``; values given
on the command line override those read from ``--config``.
"""
from __future__ import annotations

import argparse
import dataclasses
import sys

from .bench import RunConfig, load_config, resolve_beta_scale, run_suite, summary_line, worker_count
from .errors import ConfigError, InputError, NumericalError, StateError

# short spellings used in the documented command line
_ALIASES = {"T": ["--T"], "n": ["--n"], "d": ["--d"], "F": ["--F"], "C_h": ["--C-h", "--c-h"]}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="goucb", description="GO-UCB and baseline benchmark runner")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one method on one objective over a list of seeds")
    run.add_argument("--config", help="flat key=value file; command-line flags take precedence")
    run.add_argument("--quiet", action="store_true", help="only print the summary line")
    for f in dataclasses.fields(RunConfig):
        names = _ALIASES.get(f.name, ["--" + f.name.replace("_", "-")])
        run.add_argument(*names, dest=f.name, default=None, metavar=f.name.upper())
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {f.name: getattr(args, f.name) for f in dataclasses.fields(RunConfig)}
    try:
        cfg = load_config(args.config, overrides)
        scale = None
        if cfg.method == "go-ucb":
            scale = resolve_beta_scale(cfg, verbose=not args.quiet)
            if not args.quiet and isinstance(cfg.beta_scale, str):
                print(f"beta_scale ({cfg.beta_scale}) = {scale!r}")
        if not args.quiet:
            print(f"running {cfg.method} on {cfg.objective} (d={cfg.d}, n={cfg.n}, T={cfg.T}) "
                  f"seeds={','.join(map(str, cfg.seeds))} workers={worker_count()}")
        summary = run_suite(cfg, write=True, beta_scale=scale)
    except (ConfigError, InputError, NumericalError, StateError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    print(summary_line(summary))
    if not args.quiet:
        print(f"wrote results to {cfg.out} in {summary.wall_time:.1f}s")
    return 0


if __name__ == "__main__":
    sys.exit(main())
