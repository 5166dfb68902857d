"""Command-line entry point.

    bdl <experiment> [--config FILE] [--out DIR] [--jobs N] [--seed S]
                     [--potential SPEC] [--lambda MIN:MAX:COUNT]
                     [--box RE0,RE1,IM0,IM1]

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 I/O failure.
"""

from __future__ import annotations

import argparse
import sys

from .config import (
    ConfigError,
    EXPERIMENTS,
    config_from_table,
    load_config,
    parse_box_spec,
    parse_lambda_spec,
)
from .experiments import run
from .potentials import PotentialError


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="bdl",
        description=(
            "Batch experiments on model weighted-kernel asymptotics: "
            "dual exponential integrals, Legendre limits, zero scans, "
            "kernel decay fits, and weighted divergence bounds."
        ),
    )
    ap.add_argument("experiment", choices=EXPERIMENTS, help="experiment to run")
    ap.add_argument("--config", help="TOML-style config file with one [experiment] table")
    ap.add_argument("--out", help="output directory (default: config value or '.')")
    ap.add_argument("--jobs", type=int, help="worker threads for row evaluation")
    ap.add_argument("--seed", type=int, help="base seed for the Philox streams")
    ap.add_argument("--potential", help="potential spec, e.g. quartic:1,0.25")
    ap.add_argument("--lambda", dest="lambda_spec", metavar="MIN:MAX:COUNT",
                    help="lambda grid override")
    ap.add_argument("--box", help="complex box override re0,re1,im0,im1")
    ap.add_argument("--svg", action="store_true", help="also emit SVG plots")
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.config:
            cfg = load_config(args.config, args.experiment)
        else:
            cfg = config_from_table({"experiment": args.experiment})
        overrides = {}
        if args.out is not None:
            overrides["out"] = args.out
        if args.jobs is not None:
            overrides["jobs"] = args.jobs
        if args.seed is not None:
            overrides["seed"] = args.seed
        if args.potential is not None:
            overrides["potential"] = args.potential
        if args.svg:
            overrides["svg"] = True
        table = {k: (list(v) if isinstance(v, tuple) else v)
                 for k, v in vars(cfg).items()}
        table.update(overrides)
        if args.lambda_spec is not None:
            lo, hi, n = parse_lambda_spec(args.lambda_spec)
            table["lambda_min"], table["lambda_max"], table["lambda_count"] = lo, hi, n
        if args.box is not None:
            table["box"] = parse_box_spec(args.box)
        table = {k: (tuple(v) if isinstance(v, list) else v) for k, v in table.items()}
        cfg = config_from_table(table)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    try:
        manifest = run(cfg)
    except (ConfigError, PotentialError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return 4

    for failure in manifest.failures:
        print(f"failure: {failure}", file=sys.stderr)
    for name, count in sorted(manifest.row_counts.items()):
        print(f"{name}: {count} rows")
    return 0 if manifest.ok else 3


if __name__ == "__main__":
    sys.exit(main())
