"""Command line entry point: ``ringswarm run|sweep|flatten|report``."""
import argparse
import dataclasses
import json
import logging
import os
import sys

from .core import SwarmParams
from .engine import SimConfig, SimulationError, run, write_metrics, write_trajectory
from .field import STRATEGIES
from .sweep import (SweepConfigError, average_over_lr, flatten_best_cr, load_spec,
                    read_records, run_sweep, scaling_table, write_table)

EXIT_OK, EXIT_CONFIG, EXIT_ABORT = 0, 1, 2


def _add_run(sub):
    p = sub.add_parser("run", help="run a single simulation")
    defaults = SwarmParams()
    for f in dataclasses.fields(SwarmParams):
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name,
                       type=int if f.name == "N" else float,
                       default=getattr(defaults, f.name))
    p.add_argument("--strategy", choices=STRATEGIES, default="none")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--t-total", type=float, default=12000.0)
    p.add_argument("--t-measure", type=float, default=2000.0)
    p.add_argument("--dt-cap", type=float, default=0.015)
    p.add_argument("--record-stride", type=int, default=10)
    p.add_argument("--snapshot-times", type=float, nargs="*", default=[])
    p.add_argument("--no-collisions", action="store_true",
                   help="disable collision detection and respawning")
    p.add_argument("--metrics-out", help="CSV of sampled fatness/tangentness")
    p.add_argument("--summary-out", help="JSON summary (lambda, collisions, diagnostics)")
    p.add_argument("--trajectory-out", help="CSV of state snapshots")


def cmd_run(args):
    try:
        params = SwarmParams(**{f.name: getattr(args, f.name)
                                for f in dataclasses.fields(SwarmParams)})
        config = SimConfig(params=params, strategy=args.strategy, seed=args.seed,
                           t_total=args.t_total, t_measure=args.t_measure,
                           dt_cap=args.dt_cap, record_stride=args.record_stride,
                           snapshot_times=tuple(args.snapshot_times),
                           collisions=not args.no_collisions)
    except ValueError as exc:
        print(f"invalid config: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        series = run(config)
    except SimulationError as exc:
        print(f"simulation aborted: {exc}", file=sys.stderr)
        return EXIT_ABORT
    if args.metrics_out:
        write_metrics(series, args.metrics_out)
    if args.summary_out:
        with open(args.summary_out, "w") as fh:
            json.dump(series.summary(), fh, indent=2, sort_keys=True)
            fh.write("\n")
    if args.trajectory_out:
        write_trajectory(series, args.trajectory_out)
    print(json.dumps(series.summary(), sort_keys=True))
    return EXIT_OK


def cmd_sweep(args):
    try:
        spec = load_spec(args.spec)
    except (OSError, SweepConfigError) as exc:
        print(f"invalid sweep spec: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    os.makedirs(args.out, exist_ok=True)
    result = run_sweep(spec, workers=args.workers, resume=args.resume,
                       checkpoint=os.path.join(args.out, "checkpoint.jsonl"))
    result.write(args.out)
    return EXIT_OK


def _records_path(path):
    return os.path.join(path, "records.csv") if os.path.isdir(path) else path


def cmd_flatten(args):
    records = read_records(_records_path(args.records))
    write_table(flatten_best_cr(records), args.out,
                ["N", "r", "l_r", "best_lambda", "best_c_r"])
    return EXIT_OK


def cmd_report(args):
    records = read_records(_records_path(args.records))
    os.makedirs(args.out, exist_ok=True)
    flat = flatten_best_cr(records)
    write_table(flat, os.path.join(args.out, "best_cr.csv"),
                ["N", "r", "l_r", "best_lambda", "best_c_r"])
    write_table(average_over_lr(flat), os.path.join(args.out, "lambda_vs_r.csv"),
                ["N", "r", "mean_lambda", "count"])
    if len({rec["N"] for rec in records}) > 1:
        write_table(scaling_table(records), os.path.join(args.out, "lambda_vs_n_cr.csv"),
                    ["N", "c_r", "mean_lambda", "n"])
    return EXIT_OK


def main(argv=None):
    parser = argparse.ArgumentParser(prog="ringswarm", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    _add_run(sub)
    p = sub.add_parser("sweep", help="run a parameter sweep from a YAML spec")
    p.add_argument("spec")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--resume", action="store_true")
    p = sub.add_parser("flatten", help="best lambda over c_r per (r, l_r)")
    p.add_argument("records", help="records.csv or a sweep output directory")
    p.add_argument("--out", required=True)
    p = sub.add_parser("report", help="write the summary tables for a sweep")
    p.add_argument("records", help="records.csv or a sweep output directory")
    p.add_argument("--out", required=True, help="output directory")
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING)
    return {"run": cmd_run, "sweep": cmd_sweep, "flatten": cmd_flatten,
            "report": cmd_report}[args.command](args)


if __name__ == "__main__":
    sys.exit(main())
