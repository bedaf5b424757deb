"""Command-line front end.

    adaptive-sampling run MANIFEST [--out DIR] [--jobs N] [--seed BASE] [--no-plots]
    adaptive-sampling plot LOGDIR [--out DIR] [--heatmaps]
    adaptive-sampling summarize LOGDIR [--out DIR]
    adaptive-sampling field --preview [--source X Y] [--seed N] [--out FILE]
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace

from .engine import trial_field
from .experiment import OutputError, plot_dir, run_experiment, summarize_dir
from .field import FieldParams, write_field_csv
from .grid import GridSpec
from .manifest import ManifestError, parse_manifest

EXIT_OK, EXIT_FAILED_RUNS, EXIT_USAGE = 0, 1, 2


def _build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="adaptive-sampling",
                                description="Adaptive sampling simulator for Wi-Fi signal mapping.")
    p.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="run every expansion of a manifest")
    r.add_argument("manifest")
    r.add_argument("--out", help="output directory (default: manifest output.dir or ./results)")
    r.add_argument("--jobs", type=int, help="worker processes (default: manifest output.jobs or 1)")
    r.add_argument("--seed", type=int, help="base seed; trial k uses BASE + k")
    r.add_argument("--no-plots", action="store_true", help="skip SVG charts")
    r.add_argument("--heatmaps", action="store_true", help="also write truth/mean/variance maps")

    pl = sub.add_parser("plot", help="draw SVG charts from a results directory")
    pl.add_argument("logdir")
    pl.add_argument("--out", help="default: LOGDIR/plots")
    pl.add_argument("--heatmaps", action="store_true")

    s = sub.add_parser("summarize", help="rebuild summary tables from a results directory")
    s.add_argument("logdir")
    s.add_argument("--out", help="default: LOGDIR/summary")

    f = sub.add_parser("field", help="ground-truth field utilities")
    f.add_argument("--preview", action="store_true", help="write the ground-truth field as CSV")
    f.add_argument("--source", type=float, nargs=2, metavar=("X", "Y"), default=(4.0, 7.0))
    f.add_argument("--seed", type=int, default=0, help="trial seed whose field to show")
    f.add_argument("--path-loss-exponent", type=float, default=FieldParams.path_loss_exponent)
    f.add_argument("--shadowing-variance", type=float, default=FieldParams.shadowing_variance)
    f.add_argument("--log-base", choices=("natural", "base-10"), default=FieldParams.log_base)
    f.add_argument("--out", help="CSV path (default: stdout)")
    return p


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return _dispatch(args)
    except (ManifestError, OutputError, FileNotFoundError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE


def _dispatch(args) -> int:
    if args.command == "run":
        m = parse_manifest(args.manifest)
        if args.seed is not None:
            if args.seed < 0:
                raise ValueError("--seed must be non-negative")
            m = replace(m, seed=args.seed)
        if args.jobs is not None and args.jobs < 1:
            raise ValueError("--jobs must be >= 1")
        return run_experiment(m, out=args.out, jobs=args.jobs,
                              plots=False if args.no_plots else None,
                              heatmaps=True if args.heatmaps else None)
    if args.command == "plot":
        for p in plot_dir(args.logdir, args.out, heatmaps=args.heatmaps):
            print(p)
        return EXIT_OK
    if args.command == "summarize":
        for p in summarize_dir(args.logdir, args.out):
            print(p)
        return EXIT_OK
    if args.command == "field":
        if not args.preview:
            raise ValueError("nothing to do; pass --preview")
        params = FieldParams(path_loss_exponent=args.path_loss_exponent,
                             shadowing_variance=args.shadowing_variance,
                             source=tuple(args.source), log_base=args.log_base)
        grid = GridSpec()
        if not grid.contains(params.source):
            raise ValueError(f"source {params.source} lies outside the grid")
        truth = trial_field(grid, params, args.seed)
        write_field_csv(truth, args.out or sys.stdout)
        return EXIT_OK
    raise AssertionError(args.command)


if __name__ == "__main__":
    sys.exit(main())
