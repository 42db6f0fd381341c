"""Experiment harness: configuration, pipeline, sweeps, presets.

A single JSON configuration file describes the system, the partition with
its goal/critical boxes, abstraction parameters (sample count or sweep
list, confidence budget, seed), the reach-avoid objective and the
validation protocol. ``run_pipeline`` executes the full chain

    abstract -> solve robustly -> refine -> validate -> report

and writes explicit-state model files, a values/policy table, simulated
traces, a validation report and a machine-readable summary. All outputs
are reproducible functions of (config, seed); wall-clock timings go to a
separate file so the deterministic artifacts stay byte-identical across
reruns.

``run_sweep`` repeats the pipeline over the sample-count list, building
the interval MDP and the naive point-probability MDP from the *same*
counts per cell, and appends one CSV row per (N, repetition, model) with
certified and empirical probabilities, stage timings and model size.
"""

from __future__ import annotations

import csv
import json
import multiprocessing
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

import numpy as np

from . import abstraction as ab
from . import controller as ct
from . import dynamics as dyn
from . import partition as pt
from . import robust_mdp as rm

SWEEP_COLUMNS = [
    "n_samples", "repetition", "model", "certified", "empirical", "stderr",
    "verdict", "n_states", "n_choices", "n_transitions",
    "t_abstract", "t_build", "t_solve", "t_validate",
]


class ConfigError(ValueError):
    """Configuration problem, annotated with the offending field path."""

    def __init__(self, path: str, message: str):
        self.path = path
        super().__init__(f"{path}: {message}")


def derived_seed(master: int, *key: int) -> int:
    """Deterministic child seed keyed by a tuple of stream indices."""
    ss = np.random.SeedSequence(master, spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


def _noise_from_spec(spec: dict, path: str) -> dyn.NoiseModel:
    if not isinstance(spec, dict) or "kind" not in spec:
        raise ConfigError(path, "noise spec must be an object with a 'kind'")
    kind = spec["kind"]
    try:
        if kind == "gaussian":
            return dyn.GaussianNoise(np.asarray(spec["mean"], dtype=float),
                                     np.asarray(spec["cov"], dtype=float))
        if kind == "uniform_box":
            return dyn.UniformBoxNoise(np.asarray(spec["lo"], dtype=float),
                                       np.asarray(spec["hi"], dtype=float))
        if kind == "triangular_product":
            return dyn.TriangularNoise(np.asarray(spec["lo"], dtype=float),
                                       np.asarray(spec["mode"], dtype=float),
                                       np.asarray(spec["hi"], dtype=float))
        if kind == "mixture":
            comps = spec.get("components", [])
            if not comps:
                raise ConfigError(f"{path}.components", "mixture needs components")
            weights = [c.get("weight") for c in comps]
            if any(w is None for w in weights):
                raise ConfigError(f"{path}.components", "each component needs a weight")
            models = tuple(
                _noise_from_spec({k: v for k, v in c.items() if k != "weight"},
                                 f"{path}.components[{i}]")
                for i, c in enumerate(comps)
            )
            return dyn.MixtureNoise(np.asarray(weights, dtype=float), models)
    except KeyError as exc:
        raise ConfigError(path, f"missing noise field {exc}") from None
    except ValueError as exc:
        raise ConfigError(path, str(exc)) from None
    raise ConfigError(f"{path}.kind", f"unknown noise kind {kind!r}")


def _noise_to_spec(noise: dyn.NoiseModel) -> dict:
    if isinstance(noise, dyn.GaussianNoise):
        return {"kind": "gaussian", "mean": noise.mean.tolist(),
                "cov": noise.cov.tolist()}
    if isinstance(noise, dyn.UniformBoxNoise):
        return {"kind": "uniform_box", "lo": noise.lo.tolist(),
                "hi": noise.hi.tolist()}
    if isinstance(noise, dyn.TriangularNoise):
        return {"kind": "triangular_product", "lo": noise.lo.tolist(),
                "mode": noise.mode.tolist(), "hi": noise.hi.tolist()}
    if isinstance(noise, dyn.MixtureNoise):
        return {"kind": "mixture", "components": [
            {"weight": float(w), **_noise_to_spec(c)}
            for w, c in zip(noise.weights, noise.components)
        ]}
    raise TypeError(f"cannot serialize noise model {type(noise).__name__}")


def _boxes_from_spec(raw, path: str, n: int):
    boxes = []
    for i, b in enumerate(raw):
        try:
            lo = np.asarray(b[0], dtype=float).reshape(-1)
            hi = np.asarray(b[1], dtype=float).reshape(-1)
        except (TypeError, ValueError, IndexError):
            raise ConfigError(f"{path}[{i}]", "box must be a [lo, hi] pair") from None
        if lo.size != n or hi.size != n:
            raise ConfigError(f"{path}[{i}]", f"box dimension must be {n}")
        if np.any(lo > hi):
            raise ConfigError(f"{path}[{i}]", "box needs lo <= hi componentwise")
        boxes.append((lo, hi))
    return boxes


@dataclass
class ExperimentConfig:
    """Validated experiment description (see module docstring)."""

    system: dyn.LinearSystem          # base, unlifted
    lift_steps: int
    part_lo: np.ndarray
    part_hi: np.ndarray
    part_counts: np.ndarray
    goal_boxes: list
    critical_boxes: list
    samples: list                     # strictly increasing sample counts
    beta: float
    seed: int
    horizon: int
    x0: np.ndarray
    mc_runs: int
    repetitions: int
    n_traces: int = 10

    @staticmethod
    def from_dict(raw: dict) -> "ExperimentConfig":
        def need(d, key, path):
            if key not in d:
                raise ConfigError(f"{path}.{key}" if path else key, "missing field")
            return d[key]

        sys_d = need(raw, "system", "")
        try:
            system = dyn.LinearSystem(
                A=np.asarray(need(sys_d, "A", "system"), dtype=float),
                B=np.asarray(need(sys_d, "B", "system"), dtype=float),
                q=np.asarray(need(sys_d, "q", "system"), dtype=float),
                u_lo=np.asarray(need(sys_d, "u_lo", "system"), dtype=float),
                u_hi=np.asarray(need(sys_d, "u_hi", "system"), dtype=float),
                noise=_noise_from_spec(need(sys_d, "noise", "system"), "system.noise"),
            )
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError("system", str(exc)) from None
        lift_steps = int(sys_d.get("lift_steps", 1))
        if lift_steps < 1:
            raise ConfigError("system.lift_steps", "must be >= 1")

        part_d = need(raw, "partition", "")
        lo = np.asarray(need(part_d, "lo", "partition"), dtype=float)
        hi = np.asarray(need(part_d, "hi", "partition"), dtype=float)
        counts = np.asarray(need(part_d, "counts", "partition"), dtype=np.int64)
        n = system.n
        for name, arr in (("lo", lo), ("hi", hi), ("counts", counts)):
            if arr.size != n:
                raise ConfigError(f"partition.{name}", f"length must equal state dimension {n}")
        if np.any(lo >= hi):
            raise ConfigError("partition.lo", "need lo < hi componentwise")
        if np.any(counts < 1):
            raise ConfigError("partition.counts", "cell counts must be positive")
        goal_boxes = _boxes_from_spec(part_d.get("goal_boxes", []),
                                      "partition.goal_boxes", n)
        critical_boxes = _boxes_from_spec(part_d.get("critical_boxes", []),
                                          "partition.critical_boxes", n)
        if not goal_boxes:
            raise ConfigError("partition.goal_boxes", "at least one goal box required")
        for i, (glo, ghi) in enumerate(goal_boxes):
            for j, (clo, chi) in enumerate(critical_boxes):
                if np.all(np.maximum(glo, clo) < np.minimum(ghi, chi)):
                    raise ConfigError(
                        f"partition.goal_boxes[{i}]",
                        f"interior-overlaps partition.critical_boxes[{j}]",
                    )

        abs_d = need(raw, "abstraction", "")
        raw_samples = need(abs_d, "samples", "abstraction")
        samples = [int(s) for s in (raw_samples if isinstance(raw_samples, list)
                                    else [raw_samples])]
        if any(s < 1 for s in samples):
            raise ConfigError("abstraction.samples", "sample counts must be >= 1")
        if any(b >= c for b, c in zip(samples, samples[1:])):
            raise ConfigError("abstraction.samples", "sweep list must be strictly increasing")
        beta = float(need(abs_d, "beta", "abstraction"))
        if not 0.0 < beta < 1.0:
            raise ConfigError("abstraction.beta", "must lie in (0, 1)")
        seed = int(need(abs_d, "seed", "abstraction"))

        obj_d = need(raw, "objective", "")
        horizon = int(need(obj_d, "horizon", "objective"))
        if horizon < 1:
            raise ConfigError("objective.horizon", "must be >= 1")
        x0 = np.asarray(need(obj_d, "x0", "objective"), dtype=float).reshape(-1)
        if x0.size != n:
            raise ConfigError("objective.x0", f"length must equal state dimension {n}")
        if np.any(x0 < lo) or np.any(x0 > hi):
            raise ConfigError("objective.x0", "initial state lies outside the domain")

        val_d = raw.get("validation", {})
        mc_runs = int(val_d.get("runs", 10_000))
        if mc_runs < 1:
            raise ConfigError("validation.runs", "must be >= 1")
        repetitions = int(val_d.get("repetitions", 1))
        if repetitions < 1:
            raise ConfigError("validation.repetitions", "must be >= 1")
        n_traces = int(val_d.get("traces", 10))
        if n_traces < 0:
            raise ConfigError("validation.traces", "must be >= 0")

        return ExperimentConfig(
            system=system, lift_steps=lift_steps,
            part_lo=lo, part_hi=hi, part_counts=counts,
            goal_boxes=goal_boxes, critical_boxes=critical_boxes,
            samples=samples, beta=beta, seed=seed,
            horizon=horizon, x0=x0,
            mc_runs=mc_runs, repetitions=repetitions, n_traces=n_traces,
        )

    def to_dict(self) -> dict:
        return {
            "system": {
                "A": self.system.A.tolist(),
                "B": self.system.B.tolist(),
                "q": self.system.q.tolist(),
                "u_lo": self.system.u_lo.tolist(),
                "u_hi": self.system.u_hi.tolist(),
                "noise": _noise_to_spec(self.system.noise),
                "lift_steps": self.lift_steps,
            },
            "partition": {
                "lo": self.part_lo.tolist(),
                "hi": self.part_hi.tolist(),
                "counts": [int(c) for c in self.part_counts],
                "goal_boxes": [[lo.tolist(), hi.tolist()] for lo, hi in self.goal_boxes],
                "critical_boxes": [[lo.tolist(), hi.tolist()]
                                   for lo, hi in self.critical_boxes],
            },
            "abstraction": {
                "samples": list(self.samples) if len(self.samples) > 1 else self.samples[0],
                "beta": self.beta,
                "seed": self.seed,
            },
            "objective": {"horizon": self.horizon, "x0": self.x0.tolist()},
            "validation": {"runs": self.mc_runs, "repetitions": self.repetitions,
                           "traces": self.n_traces},
        }

    @staticmethod
    def load(path) -> "ExperimentConfig":
        with open(path, "r", encoding="utf-8") as f:
            try:
                raw = json.load(f)
            except json.JSONDecodeError as exc:
                raise ConfigError(str(path), f"not valid JSON: {exc}") from None
        return ExperimentConfig.from_dict(raw)

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as f:
            json.dump(self.to_dict(), f, indent=2, sort_keys=True)
            f.write("\n")

    # -- derived build products -------------------------------------------

    def build_system(self) -> dyn.LinearSystem:
        return dyn.lift(self.system, self.lift_steps)

    def build_partition(self) -> pt.Partition:
        base = pt.Partition(lo=self.part_lo, hi=self.part_hi, counts=self.part_counts)
        return pt.label_regions(base, self.goal_boxes, self.critical_boxes)


# ---------------------------------------------------------------------------
# Pipeline
# ---------------------------------------------------------------------------


def _write_json(path, obj) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as f:
        json.dump(obj, f, indent=2, sort_keys=True)
        f.write("\n")


def _csv_writer(f):
    return csv.writer(f, lineterminator="\n")


def _write_solution_csv(path, imdp: rm.IntervalMDP, sol: rm.RobustSolution) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = _csv_writer(f)
        w.writerow(["step", "state", "label", "value", "action"])
        for k in range(sol.horizon + 1):
            for s in range(imdp.n_states):
                action = "" if k == sol.horizon else str(int(sol.policy[k, s]))
                w.writerow([k, s, imdp.state_label(s), repr(float(sol.values[k, s])),
                            action])


def _write_traces_csv(path, traces, n: int, p: int) -> None:
    with open(path, "w", encoding="utf-8", newline="") as f:
        w = _csv_writer(f)
        w.writerow(["run", "step", "outcome"]
                   + [f"x{d}" for d in range(n)] + [f"u{d}" for d in range(p)])
        for run, trace in enumerate(traces):
            T = trace.states.shape[0]
            for k in range(T):
                xs = [repr(float(v)) for v in trace.states[k]]
                us = ([repr(float(v)) for v in trace.inputs[k]]
                      if k < T - 1 else [""] * p)
                label = trace.outcome if k == T - 1 else ""
                w.writerow([run, k, label] + xs + us)


def run_pipeline(config: ExperimentConfig, out_dir, seed: Optional[int] = None) -> dict:
    """Full single-N pipeline; returns the summary dict it also writes.

    With a sweep list configured, the largest sample count is used.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    master = config.seed if seed is None else int(seed)
    n_samples = config.samples[-1]
    timings: dict = {}

    t0 = time.perf_counter()
    sysL = config.build_system()
    part = config.build_partition()
    actions = ab.enabled_actions(sysL, part, ab.default_actions(part))
    acfg = ab.AbstractionConfig(n_samples=n_samples, beta=config.beta,
                                seed=derived_seed(master, 0),
                                lift_steps=config.lift_steps)
    samples = ab.sample_noise_set(sysL.noise, acfg.n_samples, acfg.seed)
    counts = ab.compute_transition_counts(part, actions, samples)
    imdp = ab.assemble_imdp(part, actions, counts, samples, config.beta)
    timings["abstraction"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    sol = rm.robust_value_iteration(imdp, config.horizon)
    timings["solve"] = time.perf_counter() - t0

    ctrl = ct.refine(sol, part, actions, sysL)

    t0 = time.perf_counter()
    report = ct.validate(sysL, ctrl, config.x0, config.horizon, config.mc_runs,
                         seed=derived_seed(master, 1))
    timings["validate"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    goal_pred, unsafe_pred = ct.region_predicates(part)
    traces = [
        dyn.simulate(sysL, ctrl, config.x0, config.horizon, goal_pred, unsafe_pred,
                     np.random.default_rng(derived_seed(master, 2, i)))
        for i in range(config.n_traces)
    ]
    timings["traces"] = time.perf_counter() - t0

    rm.export_explicit(imdp, out / "imdp.sta", out / "imdp.tra")
    _write_solution_csv(out / "solution.csv", imdp, sol)
    _write_traces_csv(out / "traces.csv", traces, sysL.n, sysL.p)
    _write_json(out / "validation.json", report.to_dict())

    summary = {
        "config": config.to_dict(),
        "seed": master,
        "n_samples_used": n_samples,
        "model": {
            "states": imdp.n_states,
            "choices": imdp.num_choices,
            "transitions": imdp.num_transitions,
        },
        "certified": report.certified,
        "empirical": report.empirical,
        "verdict": "pass" if report.verdict else "fail",
        "outputs": ["imdp.sta", "imdp.tra", "solution.csv", "traces.csv",
                    "validation.json", "summary.json"],
    }
    _write_json(out / "summary.json", summary)
    _write_json(out / "timings.json", {k: round(v, 6) for k, v in timings.items()})
    return summary


def export_model(config: ExperimentConfig, out_dir, seed: Optional[int] = None) -> dict:
    """Build and export the explicit-state iMDP files only."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    master = config.seed if seed is None else int(seed)
    sysL = config.build_system()
    part = config.build_partition()
    actions = ab.enabled_actions(sysL, part, ab.default_actions(part))
    acfg = ab.AbstractionConfig(n_samples=config.samples[-1], beta=config.beta,
                                seed=derived_seed(master, 0),
                                lift_steps=config.lift_steps)
    imdp = ab.build_imdp(sysL, part, actions, acfg)
    rm.export_explicit(imdp, out / "imdp.sta", out / "imdp.tra")
    return {"states": imdp.n_states, "choices": imdp.num_choices,
            "transitions": imdp.num_transitions}


# ---------------------------------------------------------------------------
# Sweep (the certified-vs-empirical comparison protocol)
# ---------------------------------------------------------------------------


def _sweep_cell(config: ExperimentConfig, n_idx: int, rep: int) -> list:
    """Rows for one (N, repetition) cell: iMDP and point MDP on shared counts."""
    n_samples = config.samples[n_idx]
    sysL = config.build_system()
    part = config.build_partition()

    t0 = time.perf_counter()
    actions = ab.enabled_actions(sysL, part, ab.default_actions(part))
    abs_seed = derived_seed(config.seed, 10, n_idx, rep)
    samples = ab.sample_noise_set(sysL.noise, n_samples, abs_seed)
    counts = ab.compute_transition_counts(part, actions, samples)
    t_abstract = time.perf_counter() - t0

    rows = []
    for model in ("imdp", "mdp"):
        t0 = time.perf_counter()
        if model == "imdp":
            mdp = ab.assemble_imdp(part, actions, counts, samples, config.beta)
        else:
            mdp = ab.assemble_pointmdp(part, actions, counts)
        t_build = time.perf_counter() - t0

        t0 = time.perf_counter()
        if model == "imdp":
            sol = rm.robust_value_iteration(mdp, config.horizon)
        else:
            sol = rm.nominal_value_iteration(mdp, config.horizon)
        t_solve = time.perf_counter() - t0

        ctrl = ct.refine(sol, part, actions, sysL)
        t0 = time.perf_counter()
        report = ct.validate(sysL, ctrl, config.x0, config.horizon, config.mc_runs,
                             seed=derived_seed(config.seed, 11, n_idx, rep))
        t_validate = time.perf_counter() - t0

        rows.append({
            "n_samples": n_samples,
            "repetition": rep,
            "model": model,
            "certified": report.certified,
            "empirical": report.empirical,
            "stderr": report.stderr,
            "verdict": "pass" if report.verdict else "fail",
            "n_states": mdp.n_states,
            "n_choices": mdp.num_choices,
            "n_transitions": mdp.num_transitions,
            "t_abstract": round(t_abstract, 6),
            "t_build": round(t_build, 6),
            "t_solve": round(t_solve, 6),
            "t_validate": round(t_validate, 6),
        })
    return rows


def run_sweep(config: ExperimentConfig, out_dir, seed: Optional[int] = None,
              workers: int = 1) -> list:
    """Certified-vs-empirical sweep over the sample-count list.

    Emits ``sweep.csv`` with one row per (N, repetition, model); cells may
    run in parallel, results are merged in deterministic order.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if seed is not None:
        config = ExperimentConfig.from_dict(config.to_dict())
        config.seed = int(seed)
    cells = [(i, r) for i in range(len(config.samples))
             for r in range(config.repetitions)]
    if workers > 1:
        # spawned children: fork is unsafe once the OpenMP runtime is live
        ctx = multiprocessing.get_context("spawn")
        with ProcessPoolExecutor(max_workers=workers, mp_context=ctx) as pool:
            futures = [pool.submit(_sweep_cell, config, i, r) for i, r in cells]
            results = [f.result() for f in futures]
    else:
        results = [_sweep_cell(config, i, r) for i, r in cells]
    rows = [row for cell_rows in results for row in cell_rows]
    with open(out / "sweep.csv", "w", encoding="utf-8", newline="") as f:
        w = _csv_writer(f)
        w.writerow(SWEEP_COLUMNS)
        for row in rows:
            w.writerow([row[c] if not isinstance(row[c], float) else repr(row[c])
                        for c in SWEEP_COLUMNS])
    return rows


# ---------------------------------------------------------------------------
# Presets
# ---------------------------------------------------------------------------


def _double_integrator_2d(noise: str = "gaussian") -> dict:
    if noise == "gaussian":
        noise_spec = {"kind": "gaussian", "mean": [0.0, 0.0],
                      "cov": [[0.25, 0.0], [0.0, 0.25]]}
    elif noise == "triangular":
        noise_spec = {"kind": "triangular_product",
                      "lo": [-0.75, -0.75], "mode": [0.0, 0.0], "hi": [0.75, 0.75]}
    else:
        raise ValueError(f"unknown 2D noise variant {noise!r}")
    return {
        "system": {
            "A": [[1.0, 1.0], [0.0, 1.0]],
            "B": [[0.5], [1.0]],
            "q": [0.0, 0.0],
            "u_lo": [-4.0],
            "u_hi": [4.0],
            "noise": noise_spec,
            "lift_steps": 2,
        },
        "partition": {
            "lo": [-10.0, -5.0],
            "hi": [10.0, 5.0],
            "counts": [20, 10],
            "goal_boxes": [[[4.0, -2.0], [8.0, 2.0]]],
            "critical_boxes": [[[-3.0, -5.0], [-1.0, 1.0]]],
        },
        "abstraction": {"samples": [50, 200, 800, 3200], "beta": 0.01, "seed": 7},
        "objective": {"horizon": 8, "x0": [-6.5, 0.0]},
        "validation": {"runs": 10_000, "repetitions": 20, "traces": 10},
    }


def _uav_6d(turbulence: str = "low") -> dict:
    if turbulence == "low":
        sigma = 0.25
    elif turbulence == "high":
        sigma = 0.75  # 3x the low-turbulence level
    else:
        raise ValueError(f"unknown turbulence level {turbulence!r}")
    # three decoupled position/velocity double-integrator axes
    A = np.kron(np.eye(3), np.array([[1.0, 1.0], [0.0, 1.0]]))
    B = np.kron(np.eye(3), np.array([[0.5], [1.0]]))
    pos = ([-15.0, 9.0], 8)
    vel = ([-2.25, 2.25], 2)
    lo = [pos[0][0], vel[0][0]] * 3
    hi = [pos[0][1], vel[0][1]] * 3
    counts = [pos[1], vel[1]] * 3
    goal = [[-3.0, -2.25] * 3, [3.0, 2.25] * 3]
    wall = [
        [-9.0, -2.25, -15.0, -2.25, -15.0, -2.25],
        [-6.0, 2.25, -3.0, 2.25, 9.0, 2.25],
    ]
    return {
        "system": {
            "A": A.tolist(),
            "B": B.tolist(),
            "q": [0.0] * 6,
            "u_lo": [-6.0] * 3,
            "u_hi": [6.0] * 3,
            "noise": {"kind": "gaussian", "mean": [0.0] * 6,
                      "cov": (sigma ** 2 * np.eye(6)).tolist()},
            "lift_steps": 2,
        },
        "partition": {
            "lo": lo,
            "hi": hi,
            "counts": counts,
            "goal_boxes": [goal],
            "critical_boxes": [wall],
        },
        "abstraction": {"samples": 400, "beta": 0.01, "seed": 7},
        "objective": {"horizon": 10, "x0": [-14.0, 0.0, 6.0, 0.0, -6.0, 0.0]},
        "validation": {"runs": 1000, "repetitions": 1, "traces": 5},
    }


PRESETS = {
    "double-integrator-2d": _double_integrator_2d,
    "uav-6d": _uav_6d,
}


def preset(name: str, **options) -> ExperimentConfig:
    """Built-in benchmark configuration by name.

    ``double-integrator-2d`` accepts noise="gaussian"|"triangular";
    ``uav-6d`` accepts turbulence="low"|"high". The UAV scene geometry is
    a documented placeholder for scalability exercises.
    """
    try:
        factory = PRESETS[name]
    except KeyError:
        raise ValueError(
            f"unknown preset {name!r}; available: {sorted(PRESETS)}"
        ) from None
    return ExperimentConfig.from_dict(factory(**options))
