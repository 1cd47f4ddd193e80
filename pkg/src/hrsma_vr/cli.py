"""Command-line entry points: ``python -m hrsma_vr <verb> ...``.

Verbs
-----
train               train and evaluate at a single operating point
sweep               the same over a sweep axis, plus plot data
eval                re-evaluate saved run directories from their checkpoints
compare-clustering  clustering on/off pairs on the same seeds
emit-plots          aggregate a metrics CSV into per-metric plot-data CSVs
gen-traces          write synthetic CPU and behaviour traces as CSV

Experiment flags mirror :class:`~hrsma_vr.harness.ExperimentConfig`; a
JSON config given with ``--config`` is loaded first and flags override it.
"""

from __future__ import annotations

import argparse
import dataclasses
import json
import logging
import sys
from pathlib import Path

import numpy as np

from .clustering import generate_synthetic_behaviour, save_behaviour_csv
from .config import SystemConfig
from .harness import (
    CPU_SWEEP_HZ,
    POWER_SWEEP_DB,
    QUALITY_SWEEP,
    SWEEP_AXES,
    ExperimentConfig,
    RunError,
    compare_clustering,
    emit_plot_data,
    evaluate_checkpoint,
    read_metrics_csv,
    run_experiment,
    write_metrics_csv,
)
from .ppo import PPOConfig
from .traces import generate_cpu_trace, save_cpu_trace

DEFAULT_SWEEPS = {"power_db": POWER_SWEEP_DB, "quality": QUALITY_SWEEP, "cpu_hz": CPU_SWEEP_HZ}
_SKIP_SYSTEM = {"gains", "phases", "fov_deg", "full_frame_deg", "scheme"}


def _flag(name):
    return "--" + name.replace("_", "-")


def _add_dataclass_flags(parser, cls, prefix, skip=()):
    """One flag per scalar field; defaults stay unset so configs can win."""
    group = parser.add_argument_group(cls.__name__)
    for f in dataclasses.fields(cls):
        if f.name in skip:
            continue
        default = f.default if f.default is not dataclasses.MISSING else None
        dest = f"{prefix}{f.name}"
        if isinstance(default, bool):
            group.add_argument(_flag(f.name), dest=dest, default=None,
                               action=argparse.BooleanOptionalAction)
        elif isinstance(default, (int, float)):
            group.add_argument(_flag(f.name), dest=dest, default=None, type=type(default),
                               metavar=type(default).__name__.upper())
        elif isinstance(default, str) or default is None:
            group.add_argument(_flag(f.name), dest=dest, default=None, metavar="STR")


def _add_experiment_flags(p):
    p.add_argument("--config", type=Path, help="JSON experiment config to start from")
    p.add_argument("--out", type=Path, required=True, help="results directory")
    p.add_argument("--algorithms", nargs="+", metavar="ALG")
    p.add_argument("--schemes", nargs="+", metavar="SCHEME")
    p.add_argument("--sweep-axis", choices=SWEEP_AXES)
    p.add_argument("--sweep-values", nargs="+", metavar="V")
    p.add_argument("--seeds", nargs="+", type=int)
    p.add_argument("--train-steps", type=int)
    p.add_argument("--eval-steps", type=int)
    p.add_argument("--upa-triple", nargs=3, type=float, metavar=("COMMON", "GROUP", "CPU"))
    p.add_argument("--upa-calibration-states", type=int)
    p.add_argument("--audit-fraction", type=float)
    p.add_argument("--resume", action="store_true", help="reuse finished runs in --out")
    _add_dataclass_flags(p, SystemConfig, "sys_", skip=_SKIP_SYSTEM)
    _add_dataclass_flags(p, PPOConfig, "ppo_", skip={"hidden", "total_steps"})
    p.add_argument("--hidden", nargs="+", type=int, dest="ppo_hidden")


def build_experiment(args, sweep_default: bool = False) -> ExperimentConfig:
    exp = ExperimentConfig.load(args.config) if args.config else ExperimentConfig()
    sys_changes = {k[4:]: v for k, v in vars(args).items()
                   if k.startswith("sys_") and v is not None}
    ppo_changes = {k[4:]: v for k, v in vars(args).items()
                   if k.startswith("ppo_") and v is not None}
    if "hidden" in ppo_changes:
        ppo_changes["hidden"] = tuple(ppo_changes["hidden"])
    changes = {}
    if sys_changes:
        changes["system"] = exp.system.replace(**sys_changes)
    if ppo_changes:
        changes["ppo"] = dataclasses.replace(exp.ppo, **ppo_changes)
    for key in ("algorithms", "schemes", "seeds", "upa_triple"):
        if getattr(args, key) is not None:
            changes[key] = tuple(getattr(args, key))
    for key in ("train_steps", "eval_steps", "upa_calibration_states", "audit_fraction"):
        if getattr(args, key) is not None:
            changes[key] = getattr(args, key)
    axis = args.sweep_axis or exp.sweep_axis
    if args.sweep_axis is not None:
        changes["sweep_axis"] = axis
    if args.sweep_values is not None:
        changes["sweep_values"] = tuple(args.sweep_values)
    elif sweep_default and (args.sweep_axis is not None or not args.config):
        changes["sweep_values"] = DEFAULT_SWEEPS[axis]
    elif args.sweep_axis is not None or axis in sys_changes:
        # single operating point taken from the (possibly overridden) system
        changes["sweep_values"] = None
    return exp.replace(**changes) if changes else exp


def _print_rows(rows, stream=None):
    stream = stream or sys.stdout
    for r in rows:
        stream.write(f"{r.algorithm}-{r.scheme} clustering={r.clustering} "
                     f"{r.sweep_axis}={r.sweep_value} seed={r.seed}: "
                     f"reward={r.mean_reward:.6g} max_latency={r.mean_max_latency:.6g}s "
                     f"sum_rate={r.mean_sum_rate:.6g}\n")


def cmd_train(args):
    exp = build_experiment(args)
    rows = run_experiment(exp, args.out, resume=args.resume)
    _print_rows(rows)


def cmd_sweep(args):
    exp = build_experiment(args, sweep_default=True)
    rows = run_experiment(exp, args.out, resume=args.resume)
    emit_plot_data(rows, exp.sweep_axis, args.out / "plots")
    _print_rows(rows)


def cmd_compare(args):
    exp = build_experiment(args, sweep_default=True)
    pairs = compare_clustering(exp, args.out, resume=args.resume)
    rows = [r for p in pairs for r in p]
    emit_plot_data(rows, exp.sweep_axis, args.out / "plots")
    _print_rows(rows)


def cmd_eval(args):
    rows = [evaluate_checkpoint(d) for d in args.run_dirs]
    if args.out:
        write_metrics_csv(args.out, rows)
    _print_rows(rows)


def cmd_emit(args):
    rows = read_metrics_csv(args.metrics)
    axis = args.axis or (rows[0].sweep_axis if rows else "power_db")
    for path in emit_plot_data(rows, axis, args.out):
        print(path)


def cmd_gen_traces(args):
    args.out.mkdir(parents=True, exist_ok=True)
    root = np.random.SeedSequence(args.seed)
    cpu_ss, beh_ss = root.spawn(2)
    cpu = generate_cpu_trace(args.quality, args.steps, args.groups, seed=cpu_ss,
                             noise_std=args.cpu_noise_std)
    beh = generate_synthetic_behaviour(args.users, args.steps, args.attractors, seed=beh_ss)
    save_cpu_trace(args.out / "cpu_trace.csv", cpu)
    save_behaviour_csv(args.out / "behaviour.csv", beh)
    print(args.out / "cpu_trace.csv")
    print(args.out / "behaviour.csv")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hrsma-vr", description=__doc__.split("\n")[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="verb", required=True)

    for verb, fn, text in (("train", cmd_train, "train and evaluate"),
                           ("sweep", cmd_sweep, "sweep one axis"),
                           ("compare-clustering", cmd_compare, "clustering on/off pairs")):
        p = sub.add_parser(verb, help=text)
        _add_experiment_flags(p)
        p.add_argument("--dump-config", action="store_true",
                       help="print the resolved config as JSON and exit")
        p.set_defaults(func=fn)

    p = sub.add_parser("eval", help="re-evaluate saved runs")
    p.add_argument("run_dirs", nargs="+", type=Path)
    p.add_argument("--out", type=Path, help="write the rows to this CSV")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("emit-plots", help="aggregate metrics into plot data")
    p.add_argument("metrics", type=Path)
    p.add_argument("--axis", choices=SWEEP_AXES)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(func=cmd_emit)

    p = sub.add_parser("gen-traces", help="write synthetic traces")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--quality", default="720p")
    p.add_argument("--steps", type=int, default=104)
    p.add_argument("--users", type=int, default=6)
    p.add_argument("--groups", type=int, default=3)
    p.add_argument("--attractors", type=int, default=3)
    p.add_argument("--cpu-noise-std", type=float, default=0.05)
    p.add_argument("--seed", type=int, default=0)
    p.set_defaults(func=cmd_gen_traces)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if getattr(args, "dump_config", False):
            sweep = args.verb != "train"
            json.dump(build_experiment(args, sweep).to_dict(), sys.stdout, indent=2,
                      sort_keys=True)
            sys.stdout.write("\n")
            return 0
        args.func(args)
    except (ValueError, OSError, RunError, KeyError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    sys.exit(main())
