"""Benchmark the numba kernels against their pure-numpy fallbacks.

The two hot loops are the robust Bellman backup (per-action greedy inner
minimization over CSR interval rows) and the batched closed-loop rollout
used by Monte Carlo validation. Run:

    python3 benchmarks/bench_backends.py [--actions 4096] [--runs 10000]

The compiled path is what `IMDPSYNTH_BACKEND=numba` (the default) uses;
`IMDPSYNTH_BACKEND=numpy` selects the fallback measured here.
"""

import argparse
import time

import numpy as np

from imdpsynth import _kernels
from imdpsynth import abstraction as ab
from imdpsynth import controller as ct
from imdpsynth import harness as hz
from imdpsynth import robust_mdp as rm


def timeit(fn, repeat):
    best = np.inf
    for _ in range(repeat):
        t0 = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - t0)
    return best


def bench_bellman(n_actions, row_len, n_states, repeat):
    rng = np.random.default_rng(0)
    succ = np.concatenate([rng.choice(n_states, size=row_len, replace=False)
                           for _ in range(n_actions)]).astype(np.int64)
    p = rng.dirichlet(np.ones(row_len), size=n_actions)
    low = np.clip(p - 0.05, 0, 1).ravel()
    high = np.clip(p + 0.05, 0, 1).ravel()
    indptr = np.arange(n_actions + 1, dtype=np.int64) * row_len
    values = rng.uniform(size=n_states)
    out = np.zeros(n_actions)

    _kernels.bellman_action_values(indptr, succ, low, high, values, out)  # warm up
    t_fast = timeit(lambda: _kernels.bellman_action_values(
        indptr, succ, low, high, values, out), repeat)
    t_ref = timeit(lambda: _kernels._bellman_action_values_py(
        indptr, succ, low, high, values, out), repeat)
    return t_fast, t_ref


def bench_rollout(runs, horizon, repeat):
    cfg = hz.preset("double-integrator-2d")
    sysL = cfg.build_system()
    part = cfg.build_partition()
    actions = ab.enabled_actions(sysL, part, ab.default_actions(part))
    acfg = ab.AbstractionConfig(n_samples=200, beta=cfg.beta, seed=cfg.seed)
    imdp = ab.build_imdp(sysL, part, actions, acfg)
    sol = rm.robust_value_iteration(imdp, horizon)
    ctrl = ct.refine(sol, part, actions, sysL)

    rng = np.random.default_rng(1)
    noise = np.ascontiguousarray(
        sysL.noise.sample(rng, runs * horizon).reshape(runs, horizon, sysL.n))
    x0 = np.asarray(cfg.x0)
    args = (x0, ctrl.policy[:horizon], ctrl.targets, np.asarray(sysL.A),
            np.asarray(sysL.B), np.asarray(ctrl.B_pinv), np.asarray(sysL.q),
            np.asarray(sysL.u_lo), np.asarray(sysL.u_hi), 1e-9,
            part.lo, part.hi, np.asarray(part.widths), part.counts,
            np.asarray(part.strides), part.labels, noise)
    outcome = np.zeros(runs, dtype=np.int64)
    steps = np.zeros(runs, dtype=np.int64)

    _kernels.rollout_outcomes(*args, outcome, steps)  # warm up
    t_fast = timeit(lambda: _kernels.rollout_outcomes(*args, outcome, steps), repeat)
    t_ref = timeit(lambda: _kernels._rollout_py(*args, outcome, steps), repeat)
    return t_fast, t_ref


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--actions", type=int, default=4096)
    parser.add_argument("--row", type=int, default=64)
    parser.add_argument("--states", type=int, default=4099)
    parser.add_argument("--runs", type=int, default=10_000)
    parser.add_argument("--horizon", type=int, default=16)
    parser.add_argument("--repeat", type=int, default=5)
    args = parser.parse_args()

    print(f"selected backend: {_kernels.BACKEND}")
    if _kernels.BACKEND != "numba":
        print("numba backend unavailable/disabled; timing the numpy path only")

    t_fast, t_ref = bench_bellman(args.actions, args.row, args.states, args.repeat)
    print(f"bellman backup  ({args.actions} actions x {args.row} successors): "
          f"{_kernels.BACKEND} {t_fast * 1e3:8.2f} ms | numpy ref {t_ref * 1e3:8.2f} ms"
          f" | speedup {t_ref / t_fast:5.1f}x")

    t_fast, t_ref = bench_rollout(args.runs, args.horizon, args.repeat)
    print(f"rollout         ({args.runs} runs x {args.horizon} steps):      "
          f"{_kernels.BACKEND} {t_fast * 1e3:8.2f} ms | numpy ref {t_ref * 1e3:8.2f} ms"
          f" | speedup {t_ref / t_fast:5.1f}x")


if __name__ == "__main__":
    main()
