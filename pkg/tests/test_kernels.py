"""Backend parity: the compiled kernels agree with the numpy references."""

import numpy as np

from imdpsynth import _kernels
from imdpsynth._kernels import (
    _bellman_action_values_py,
    _rollout_py,
    bellman_action_values,
    rollout_outcomes,
)
from imdpsynth import abstraction as ab
from imdpsynth import controller as ct
from imdpsynth import dynamics as dyn
from imdpsynth import partition as pt
from imdpsynth import robust_mdp as rm


def random_csr(rng, n_actions=50, n_states=30, max_row=8):
    lens, succ, low, high = [], [], [], []
    for _ in range(n_actions):
        m = int(rng.integers(1, max_row + 1))
        lens.append(m)
        succ.append(rng.choice(n_states, size=m, replace=False))
        p = rng.dirichlet(np.ones(m))
        low.append(np.clip(p - rng.uniform(0, 0.2, m), 0, 1))
        high.append(np.clip(p + rng.uniform(0, 0.2, m), 0, 1))
    indptr = np.zeros(n_actions + 1, dtype=np.int64)
    np.cumsum(lens, out=indptr[1:])
    return (indptr, np.concatenate(succ).astype(np.int64),
            np.concatenate(low), np.concatenate(high))


def test_backend_selection_is_reported():
    assert _kernels.BACKEND in ("numba", "numpy")


def test_bellman_matches_numpy_reference():
    rng = np.random.default_rng(0)
    for _ in range(5):
        indptr, succ, low, high = random_csr(rng)
        values = rng.uniform(size=30)
        a = np.zeros(len(indptr) - 1)
        b = np.zeros(len(indptr) - 1)
        bellman_action_values(indptr, succ, low, high, values, a)
        _bellman_action_values_py(indptr, succ, low, high, values, b)
        np.testing.assert_allclose(a, b, atol=1e-12)


def test_bellman_matches_inner_min():
    rng = np.random.default_rng(1)
    indptr, succ, low, high = random_csr(rng, n_actions=20)
    values = rng.uniform(size=30)
    out = np.zeros(20)
    bellman_action_values(indptr, succ, low, high, values, out)
    for a in range(20):
        s, e = indptr[a], indptr[a + 1]
        expect, _ = rm.inner_min(values[succ[s:e]], low[s:e], high[s:e])
        assert abs(out[a] - expect) <= 1e-12


def _rollout_setup():
    noise_model = dyn.UniformBoxNoise([-0.3, -0.3], [0.3, 0.3])
    sys_ = dyn.LinearSystem(A=np.eye(2), B=np.eye(2), q=np.zeros(2),
                            u_lo=[-10, -10], u_hi=[10, 10], noise=noise_model)
    part = pt.label_regions(
        pt.Partition(lo=[0.0, 0.0], hi=[4.0, 4.0], counts=[4, 4]),
        [([3.0, 3.0], [4.0, 4.0])], [([1.0, 1.0], [2.0, 2.0])])
    actions = ab.enabled_actions(sys_, part, ab.default_actions(part))
    cfg = ab.AbstractionConfig(n_samples=80, beta=0.05, seed=3)
    imdp = ab.build_imdp(sys_, part, actions, cfg)
    sol = rm.robust_value_iteration(imdp, 6)
    ctrl = ct.refine(sol, part, actions, sys_)
    return sys_, part, ctrl


def test_rollout_backends_agree_on_seeded_noise():
    sys_, part, ctrl = _rollout_setup()
    runs, horizon = 300, 6
    rng = np.random.default_rng(42)
    noise = np.ascontiguousarray(
        sys_.noise.sample(rng, runs * horizon).reshape(runs, horizon, 2))
    x0 = np.array([0.5, 0.5])
    args = (x0, ctrl.policy[:horizon], ctrl.targets, np.asarray(sys_.A),
            np.asarray(sys_.B), np.asarray(ctrl.B_pinv), np.asarray(sys_.q),
            np.asarray(sys_.u_lo), np.asarray(sys_.u_hi), 1e-9,
            part.lo, part.hi, np.asarray(part.widths), part.counts,
            np.asarray(part.strides), part.labels, noise)
    out_a = np.zeros(runs, dtype=np.int64)
    step_a = np.zeros(runs, dtype=np.int64)
    out_b = np.zeros(runs, dtype=np.int64)
    step_b = np.zeros(runs, dtype=np.int64)
    rollout_outcomes(*args, out_a, step_a)
    _rollout_py(*args, out_b, step_b)
    np.testing.assert_array_equal(out_a, out_b)
    np.testing.assert_array_equal(step_a, step_b)
