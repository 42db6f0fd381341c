"""Command-line interface.

Verbs:
  run       full pipeline: abstract, solve, refine, validate, report
  sweep     certified-vs-empirical sweep over the sample-count list
  preset    write a built-in benchmark configuration to a file
  export    build and export the explicit-state iMDP files only
  validate  re-validate a previously computed solution table
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import numpy as np

from . import abstraction as ab
from . import controller as ct
from . import robust_mdp as rm
from .harness import ConfigError, ExperimentConfig, derived_seed, preset, \
    run_pipeline, run_sweep, export_model, _write_json


def _load_config(args) -> ExperimentConfig:
    cfg = ExperimentConfig.load(args.config)
    if args.seed is not None:
        cfg.seed = int(args.seed)
    return cfg


def _cmd_run(args) -> int:
    cfg = _load_config(args)
    summary = run_pipeline(cfg, args.out)
    print(f"certified={summary['certified']!r} empirical={summary['empirical']!r} "
          f"verdict={summary['verdict']} -> {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    cfg = _load_config(args)
    rows = run_sweep(cfg, args.out, workers=args.workers)
    print(f"{len(rows)} sweep rows -> {Path(args.out) / 'sweep.csv'}")
    return 0


def _cmd_preset(args) -> int:
    options = {}
    if args.noise is not None:
        options["noise"] = args.noise
    if args.turbulence is not None:
        options["turbulence"] = args.turbulence
    cfg = preset(args.name, **options)
    cfg.save(args.emit)
    print(f"preset {args.name} -> {args.emit}")
    return 0


def _cmd_export(args) -> int:
    cfg = _load_config(args)
    size = export_model(cfg, args.out)
    print(f"exported iMDP ({size['states']} states, {size['transitions']} "
          f"transitions) -> {args.out}")
    return 0


def _read_solution_csv(path) -> rm.RobustSolution:
    steps, states, values, actions = [], [], [], []
    with open(path, "r", encoding="utf-8", newline="") as f:
        reader = csv.DictReader(f)
        for row in reader:
            steps.append(int(row["step"]))
            states.append(int(row["state"]))
            values.append(float(row["value"]))
            actions.append(-1 if row["action"] == "" else int(row["action"]))
    K = max(steps)
    S = max(states) + 1
    vals = np.zeros((K + 1, S))
    pol = np.full((K, S), -1, dtype=np.int64)
    for k, s, v, a in zip(steps, states, values, actions):
        vals[k, s] = v
        if k < K:
            pol[k, s] = a
    return rm.RobustSolution(values=vals, policy=pol, horizon=K, confidence=None)


def _cmd_validate(args) -> int:
    cfg = _load_config(args)
    sol = _read_solution_csv(args.solution)
    sysL = cfg.build_system()
    part = cfg.build_partition()
    actions = ab.enabled_actions(sysL, part, ab.default_actions(part))
    ctrl = ct.refine(sol, part, actions, sysL)
    report = ct.validate(sysL, ctrl, cfg.x0, cfg.horizon, cfg.mc_runs,
                         seed=derived_seed(cfg.seed, 1))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(out / "validation.json", report.to_dict())
    print(f"empirical={report.empirical!r} certified={report.certified!r} "
          f"verdict={'pass' if report.verdict else 'fail'}")
    return 0


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="imdpsynth",
        description="Certified reach-avoid controller synthesis via "
                    "interval-MDP abstractions",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, needs_config=True):
        if needs_config:
            p.add_argument("--config", required=True, help="experiment config (JSON)")
        p.add_argument("--seed", type=int, default=None, help="override config seed")
        p.add_argument("--workers", type=int, default=1, help="parallel sweep cells")
        p.add_argument("--out", default="out", help="output directory")

    p_run = sub.add_parser("run", help="single end-to-end pipeline")
    common(p_run)
    p_run.set_defaults(func=_cmd_run)

    p_sweep = sub.add_parser("sweep", help="iMDP-vs-MDP sample-count sweep")
    common(p_sweep)
    p_sweep.set_defaults(func=_cmd_sweep)

    p_preset = sub.add_parser("preset", help="emit a built-in configuration")
    p_preset.add_argument("name", help="preset name")
    p_preset.add_argument("--emit", required=True, help="path to write the config to")
    p_preset.add_argument("--noise", choices=["gaussian", "triangular"], default=None)
    p_preset.add_argument("--turbulence", choices=["low", "high"], default=None)
    p_preset.set_defaults(func=_cmd_preset)

    p_export = sub.add_parser("export", help="export explicit-state iMDP files")
    common(p_export)
    p_export.set_defaults(func=_cmd_export)

    p_val = sub.add_parser("validate", help="re-validate an existing solution")
    common(p_val)
    p_val.add_argument("--solution", required=True, help="solution.csv from a run")
    p_val.set_defaults(func=_cmd_validate)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except (ab.AbstractionVacuousError, rm.InfeasibleIntervalError,
            rm.ModelFormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
