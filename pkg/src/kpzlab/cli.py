"""Command line entry point: ``kpzlab run <config.toml> [--out DIR] [--seed N]``.

One config file per experiment; the only overrides are the output directory
and the seed, so a report plus its echoed config replays exactly.  The
worker count for trajectory fan-out comes from the environment variable
KPZLAB_WORKERS (default: sequential).
"""
from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .config import ParseError, ValidationError, parse_config
from .runner import run_experiment, write_report


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(prog="kpzlab")
    sub = parser.add_subparsers(dest="command", required=True)
    run_p = sub.add_parser("run", help="run one experiment config")
    run_p.add_argument("config", type=Path)
    run_p.add_argument("--out", type=Path, default=None,
                       help="output directory (overrides [output].dir)")
    run_p.add_argument("--seed", type=int, default=None,
                       help="seed override")
    args = parser.parse_args(argv)

    if args.command == "run":
        try:
            text = args.config.read_text()
        except OSError as exc:
            print(f"error: cannot read {args.config}: {exc}", file=sys.stderr)
            return 2
        try:
            cfg = parse_config(text, source=str(args.config))
        except (ParseError, ValidationError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        out_dir = args.out if args.out is not None else Path(cfg.out_dir)
        try:
            bundle = run_experiment(cfg, config_text=text)
        except Exception as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 1
        paths = write_report(bundle, out_dir)
        for p in paths:
            print(p)
        return 0
    return 2


if __name__ == "__main__":
    raise SystemExit(main())
