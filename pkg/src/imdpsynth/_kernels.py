"""Hot numeric kernels with a numba backend and a pure-numpy fallback.

The backend is picked once at import time from the environment variable
``IMDPSYNTH_BACKEND``:

* ``numba`` (default when numba imports cleanly): kernels are compiled
  with ``@njit``.
* ``numpy``: pure-numpy/Python reference implementations.

Both backends implement the same contracts; ``benchmarks/bench_backends.py``
compares their throughput. The numpy paths are also the readable reference
for what the compiled loops do.

Kernels here operate on flat arrays only (CSR layouts, label vectors,
pre-drawn noise) so the numba versions need no object-mode fallbacks.
"""

from __future__ import annotations

import math
import os

import numpy as np

_requested = os.environ.get("IMDPSYNTH_BACKEND", "").strip().lower()

if _requested not in ("", "numba", "numpy"):
    raise RuntimeError(
        f"IMDPSYNTH_BACKEND must be 'numba' or 'numpy', got {_requested!r}"
    )

if _requested == "numpy":
    _use_numba = False
else:
    try:
        import numba

        # probe omp before tbb: outdated tbb builds warn and get disabled
        numba.config.THREADING_LAYER_PRIORITY = ["omp", "tbb", "workqueue"]
        _use_numba = True
    except ImportError:
        if _requested == "numba":
            raise
        _use_numba = False

BACKEND = "numba" if _use_numba else "numpy"


# ---------------------------------------------------------------------------
# Robust Bellman backup over CSR action rows.
#
# Row a holds the interval distribution of abstract action a:
#   successors succ[indptr[a]:indptr[a+1]] with bounds low/high.
# The backup value is the adversarial inner problem
#   min { sum_i p_i v_i : low <= p <= high, sum p = 1 }
# solved exactly by the greedy order statistic: give every successor its
# lower bound, then push the remaining mass onto the lowest-valued
# successors up to their upper bounds.
# ---------------------------------------------------------------------------


def _bellman_action_values_py(indptr, succ, low, high, values, out):
    n_actions = indptr.shape[0] - 1
    for a in range(n_actions):
        s, e = indptr[a], indptr[a + 1]
        v = values[succ[s:e]]
        order = np.argsort(v, kind="stable")
        rem = 1.0 - low[s:e].sum()
        acc = float(low[s:e] @ v)
        for j in order:
            if rem <= 0.0:
                break
            take = high[s + j] - low[s + j]
            if take > rem:
                take = rem
            acc += take * v[j]
            rem -= take
        out[a] = acc
    return out


def _bellman_action_values_nb(indptr, succ, low, high, values, out):
    n_actions = indptr.shape[0] - 1
    for a in numba.prange(n_actions):
        s, e = indptr[a], indptr[a + 1]
        m = e - s
        v = np.empty(m, dtype=np.float64)
        for j in range(m):
            v[j] = values[succ[s + j]]
        order = np.argsort(v, kind="mergesort")
        rem = 1.0
        acc = 0.0
        for j in range(m):
            acc += low[s + j] * v[j]
            rem -= low[s + j]
        for oj in range(m):
            if rem <= 0.0:
                break
            j = order[oj]
            take = high[s + j] - low[s + j]
            if take > rem:
                take = rem
            acc += take * v[j]
            rem -= take
        out[a] = acc
    return out


# ---------------------------------------------------------------------------
# Batched closed-loop rollout.
#
# All runs start at x0 and follow the time-varying piecewise-affine law
#   u = B_pinv (target[policy[k, region]] - A x - q)
# with pre-drawn noise. Outcome codes: 0 timeout, 1 reached goal, 2 hit
# critical / left the domain. label[r] is 0 normal, 1 goal, 2 critical.
# ---------------------------------------------------------------------------

_TIMEOUT, _GOAL, _CRITICAL = 0, 1, 2


def _locate_py(x, lo, hi, widths, counts, strides):
    flat = 0
    for d in range(x.shape[0]):
        if x[d] < lo[d] or x[d] > hi[d]:
            return -1
        i = int(math.floor((x[d] - lo[d]) / widths[d]))
        if i >= counts[d]:
            i = counts[d] - 1
        flat += i * strides[d]
    return flat


def _rollout_py(
    x0, policy, targets, A, B, B_pinv, q, u_lo, u_hi, u_tol,
    lo, hi, widths, counts, strides, label, noise, outcome, outcome_step,
):
    n_runs, horizon = noise.shape[0], noise.shape[1]
    for r in range(n_runs):
        x = x0.copy()
        code, step = _TIMEOUT, horizon
        for k in range(horizon + 1):
            rid = _locate_py(x, lo, hi, widths, counts, strides)
            if rid < 0 or label[rid] == 2:
                code, step = _CRITICAL, k
                break
            if label[rid] == 1:
                code, step = _GOAL, k
                break
            if k == horizon:
                break
            a = policy[k, rid]
            if a < 0:
                code, step = _TIMEOUT, k
                break
            u = B_pinv @ (targets[a] - A @ x - q)
            if np.any(u < u_lo - u_tol) or np.any(u > u_hi + u_tol):
                code, step = _TIMEOUT, k
                break
            x = A @ x + B @ u + q + noise[r, k]
        outcome[r] = code
        outcome_step[r] = step
    return outcome


def _rollout_nb(
    x0, policy, targets, A, B, B_pinv, q, u_lo, u_hi, u_tol,
    lo, hi, widths, counts, strides, label, noise, outcome, outcome_step,
):
    n_runs, horizon, n = noise.shape
    p = B_pinv.shape[0]
    for r in numba.prange(n_runs):
        x = x0.copy()
        xn = np.empty(n, dtype=np.float64)
        u = np.empty(p, dtype=np.float64)
        code = _TIMEOUT
        step = horizon
        for k in range(horizon + 1):
            rid = 0
            for d in range(n):
                if x[d] < lo[d] or x[d] > hi[d]:
                    rid = -1
                    break
                i = int(math.floor((x[d] - lo[d]) / widths[d]))
                if i >= counts[d]:
                    i = counts[d] - 1
                rid += i * strides[d]
            if rid < 0 or label[rid] == 2:
                code = _CRITICAL
                step = k
                break
            if label[rid] == 1:
                code = _GOAL
                step = k
                break
            if k == horizon:
                break
            a = policy[k, rid]
            if a < 0:
                code = _TIMEOUT
                step = k
                break
            # u = B_pinv (target - A x - q), written as explicit loops
            feasible = True
            for d in range(n):
                acc = 0.0
                for e in range(n):
                    acc += A[d, e] * x[e]
                xn[d] = targets[a, d] - acc - q[d]
            for i in range(p):
                acc = 0.0
                for d in range(n):
                    acc += B_pinv[i, d] * xn[d]
                u[i] = acc
                if u[i] < u_lo[i] - u_tol or u[i] > u_hi[i] + u_tol:
                    feasible = False
            if not feasible:
                code = _TIMEOUT
                step = k
                break
            for d in range(n):
                acc = 0.0
                for e in range(n):
                    acc += A[d, e] * x[e]
                for i in range(p):
                    acc += B[d, i] * u[i]
                xn[d] = acc + q[d] + noise[r, k, d]
            for d in range(n):
                x[d] = xn[d]
        outcome[r] = code
        outcome_step[r] = step
    return outcome


if _use_numba:
    bellman_action_values = numba.njit(parallel=True, cache=True)(
        _bellman_action_values_nb
    )
    rollout_outcomes = numba.njit(parallel=True, cache=True)(_rollout_nb)
else:
    bellman_action_values = _bellman_action_values_py
    rollout_outcomes = _rollout_py
