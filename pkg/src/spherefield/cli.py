"""Command-line front end.

    spherefield <command> [--config PATH] [--seed N ...] [--out DIR]
                          [--ell-max N] [--tol X] [--no-figures]

Commands: simulate | covariance | smallball | sln-check | chung | covering |
volume | lemmas.  Configuration is a flat key = value file; flags override
config values.  SPHEREFIELD_WORKERS sets the worker count (default 1);
results do not depend on it.
"""

from __future__ import annotations

import argparse
import sys

from .errors import ValidationError
from .manifest import COMMANDS, EXIT_VALIDATION, build_manifest, parse_config, run


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spherefield",
        description="Numerical laboratory for time-dependent spherical Gaussian fields",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="flat key = value config file")
    parser.add_argument(
        "--seed", type=int, action="append", dest="seeds",
        help="master seed; repeatable for multi-seed runs",
    )
    parser.add_argument("--out", default="out", help="output directory")
    parser.add_argument("--ell-max", type=int, dest="ell_max", help="truncation override")
    parser.add_argument("--tol", type=float, help="truncation tail tolerance")
    parser.add_argument(
        "--no-figures", action="store_true", help="skip PNG rendering on the report path"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = make_parser().parse_args(argv)
    try:
        config = parse_config(args.config) if args.config else {}
        manifest = build_manifest(
            args.command,
            config=config,
            seeds=args.seeds,
            output_dir=args.out,
            ell_max=args.ell_max,
            tol=args.tol,
            figures=False if args.no_figures else None,
        )
    except (ValidationError, ValueError) as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"cannot read config: {exc}", file=sys.stderr)
        return 4
    return run(manifest)


if __name__ == "__main__":
    sys.exit(main())
