"""Abstraction: actions, enablement, counting, PAC intervals, iMDP build."""

import math

import numpy as np
import pytest
from scipy.special import betainc

from imdpsynth import abstraction as ab
from imdpsynth import dynamics as dyn
from imdpsynth import partition as pt


def zero_noise(n):
    return dyn.GaussianNoise(np.zeros(n), np.zeros((n, n)))


def identity_system(n=2, bound=10.0, noise=None):
    return dyn.LinearSystem(A=np.eye(n), B=np.eye(n), q=np.zeros(n),
                            u_lo=-bound * np.ones(n), u_hi=bound * np.ones(n),
                            noise=noise or zero_noise(n))


def lifted_double_integrator(noise=None, bound=1.0):
    base = dyn.LinearSystem(A=[[1.0, 1.0], [0.0, 1.0]], B=[[0.5], [1.0]],
                            q=np.zeros(2), u_lo=[-bound], u_hi=[bound],
                            noise=noise or zero_noise(2))
    return dyn.lift(base, 2)


class TestDefaultActions:
    def test_two_by_two_targets(self):
        part = pt.Partition(lo=[0.0, 0.0], hi=[2.0, 2.0], counts=[2, 2])
        actions = ab.default_actions(part)
        targets = {tuple(a.target) for a in actions}
        assert targets == {(0.5, 0.5), (0.5, 1.5), (1.5, 0.5), (1.5, 1.5)}

    def test_single_cell_targets_domain_center(self):
        part = pt.Partition(lo=[-1.0, 0.0], hi=[3.0, 4.0], counts=[1, 1])
        (action,) = ab.default_actions(part)
        np.testing.assert_allclose(action.target, [1.0, 2.0])

    def test_target_locates_back_to_own_region(self):
        part = pt.Partition(lo=[-2.0, 0.5], hi=[1.0, 2.0], counts=[5, 3])
        for j, action in enumerate(ab.default_actions(part)):
            assert pt.region_of(part, action.target) == j


class TestEnabledActions:
    def test_generous_input_enables_everything_unlabeled(self):
        # max steering magnitude on [0,2]^2 with identity dynamics is 2 < 10
        part = pt.Partition(lo=[0.0, 0.0], hi=[2.0, 2.0], counts=[2, 2])
        sys_ = identity_system(bound=10.0)
        actions = ab.enabled_actions(sys_, part, ab.default_actions(part))
        for a in actions:
            assert set(a.enabled_in) == set(range(4))

    def test_tight_input_disables_own_region_at_far_vertex(self):
        # steering from vertex (0,0) to target (0.5,0.5) needs u=(0.5,0.5)
        part = pt.Partition(lo=[0.0, 0.0], hi=[2.0, 2.0], counts=[2, 2])
        sys_ = identity_system(bound=0.4)
        actions = ab.enabled_actions(sys_, part, ab.default_actions(part))
        assert 0 not in actions[0].enabled_in

    def test_labeled_regions_enable_nothing(self):
        part = pt.label_regions(
            pt.Partition(lo=[0.0, 0.0], hi=[2.0, 2.0], counts=[2, 2]),
            goal_boxes=[([0.0, 0.0], [1.0, 1.0])],
            critical_boxes=[([1.0, 1.0], [2.0, 2.0])])
        sys_ = identity_system(bound=10.0)
        actions = ab.enabled_actions(sys_, part, ab.default_actions(part))
        goal_id = pt.region_id(part, (0, 0))
        crit_id = pt.region_id(part, (1, 1))
        for a in actions:
            assert goal_id not in a.enabled_in
            assert crit_id not in a.enabled_in

    def test_rank_deficient_system_directed_to_lift(self):
        base = dyn.LinearSystem(A=[[1.0, 1.0], [0.0, 1.0]], B=[[0.5], [1.0]],
                                q=np.zeros(2), u_lo=[-1.0], u_hi=[1.0],
                                noise=zero_noise(2))
        part = pt.Partition(lo=[-2.0, -1.0], hi=[2.0, 1.0], counts=[4, 2])
        with pytest.raises(dyn.RankDeficiencyError, match="lift"):
            ab.enabled_actions(base, part, ab.default_actions(part))

    @pytest.mark.parametrize("bound", [1.0, 2.0, 3.0])
    def test_rejection_sampling_oracle_on_lifted_double_integrator(self, bound):
        # vertex certificate vs dense feasibility sampling: whenever any
        # sampled point in a cell is infeasible, the cell must be disabled;
        # whenever the cell is enabled, every sampled point is feasible
        # (bound=1 makes every cell infeasible: agreement must still hold)
        sys_ = lifted_double_integrator(bound=bound)
        part = pt.Partition(lo=[-2.0, -1.0], hi=[2.0, 1.0], counts=[4, 2])
        actions = ab.enabled_actions(sys_, part, ab.default_actions(part))
        rng = np.random.default_rng(12)
        some_enabled = False
        for act in actions:
            for rid in range(part.num_regions):
                lo, hi = pt.region_box(part, rid)
                pts = rng.uniform(lo, hi, size=(10_000, 2))
                u = (act.target - pts @ sys_.A.T - sys_.q) @ sys_.B_pinv.T
                all_ok = bool(np.all((u >= sys_.u_lo - 1e-9)
                                     & (u <= sys_.u_hi + 1e-9)))
                if rid in act.enabled_in:
                    assert all_ok, (act.id, rid)
                    some_enabled = True
                elif not all_ok:
                    assert rid not in act.enabled_in
        assert some_enabled or bound == 1.0

    def test_vertex_certificate_no_false_enables(self):
        # random interior points of enabled cells always steer feasibly
        sys_ = lifted_double_integrator(bound=3.0)
        part = pt.Partition(lo=[-2.0, -1.0], hi=[2.0, 1.0], counts=[4, 2])
        actions = ab.enabled_actions(sys_, part, ab.default_actions(part))
        rng = np.random.default_rng(1)
        checked = 0
        for act in actions:
            for rid in act.enabled_in:
                lo, hi = pt.region_box(part, int(rid))
                pts = rng.uniform(lo, hi, size=(50, 2))
                u = (act.target - pts @ sys_.A.T - sys_.q) @ sys_.B_pinv.T
                assert np.all((u >= sys_.u_lo - 1e-9) & (u <= sys_.u_hi + 1e-9))
                checked += len(pts)
        assert checked >= 1000


class TestSampleNoiseSet:
    def test_single_draw(self):
        s = ab.sample_noise_set(zero_noise(2), 1, seed=0)
        assert s.shape == (1, 2)

    def test_zero_samples_forbidden(self):
        with pytest.raises(ValueError):
            ab.sample_noise_set(zero_noise(2), 0, seed=0)
        with pytest.raises(ValueError):
            ab.AbstractionConfig(n_samples=0, beta=0.1, seed=0)

    def test_same_seed_identical(self):
        noise = dyn.UniformBoxNoise([-1.0, -2.0], [1.0, 2.0])
        a = ab.sample_noise_set(noise, 64, seed=5)
        b = ab.sample_noise_set(noise, 64, seed=5)
        np.testing.assert_array_equal(a, b)

    def test_kolmogorov_smirnov_uniform_marginals(self):
        # KS statistic per marginal below the 1% critical value 1.63/sqrt(N)
        noise = dyn.UniformBoxNoise([-1.0, 0.0], [1.0, 4.0])
        n = 10_000
        s = ab.sample_noise_set(noise, n, seed=9)
        for d, (lo, hi) in enumerate([(-1.0, 1.0), (0.0, 4.0)]):
            x = np.sort((s[:, d] - lo) / (hi - lo))
            ecdf_hi = np.arange(1, n + 1) / n
            ecdf_lo = np.arange(0, n) / n
            ks = max(np.max(np.abs(ecdf_hi - x)), np.max(np.abs(x - ecdf_lo)))
            assert ks < 1.6276 / math.sqrt(n)


class TestCountSuccessors:
    def test_zero_noise_all_in_target_cell(self):
        part = pt.Partition(lo=[0.0, 0.0], hi=[4.0, 4.0], counts=[4, 4])
        action = ab.AbstractAction(0, np.array([1.5, 2.5]), np.zeros(0, np.int64))
        samples = np.zeros((100, 2))
        tc = ab.count_successors(part, action, samples)
        assert tc.buckets.tolist() == [pt.region_of(part, [1.5, 2.5])]
        assert tc.counts.tolist() == [100]

    def test_target_outside_domain_all_outside(self):
        part = pt.Partition(lo=[0.0, 0.0], hi=[4.0, 4.0], counts=[4, 4])
        action = ab.AbstractAction(0, np.array([9.0, 9.0]), np.zeros(0, np.int64))
        samples = ab.sample_noise_set(
            dyn.UniformBoxNoise([-0.01, -0.01], [0.01, 0.01]), 50, seed=1)
        tc = ab.count_successors(part, action, samples)
        assert tc.buckets.tolist() == [pt.OUTSIDE]
        assert tc.counts.tolist() == [50]

    def test_boundary_straddling_split_against_independent_recount(self):
        # uniform noise one cell wide centered on a cell boundary splits
        # roughly half/half; exact counts from a naive per-point locator
        part = pt.Partition(lo=[0.0], hi=[4.0], counts=[4])
        target = np.array([2.0])  # on the boundary between cells 1 and 2
        action = ab.AbstractAction(0, target, np.zeros(0, np.int64))
        noise = dyn.UniformBoxNoise([-0.5], [0.5])
        samples = ab.sample_noise_set(noise, 1000, seed=3)
        tc = ab.count_successors(part, action, samples)

        def naive_locate(x):
            # independent point-location: scan cells, half-open convention
            for rid in range(4):
                lo = rid * 1.0
                hi = lo + 1.0
                if (lo <= x < hi) or (rid == 3 and x == 4.0):
                    return rid
            return pt.OUTSIDE

        expect = {}
        for x in (target + samples)[:, 0]:
            rid = naive_locate(float(x))
            expect[rid] = expect.get(rid, 0) + 1
        got = dict(zip(tc.buckets.tolist(), tc.counts.tolist()))
        assert got == expect
        assert set(got) == {1, 2}
        assert abs(got[1] - got[2]) < 150  # ~ N/2 : N/2

    def test_counts_sum_to_sample_count(self):
        part = pt.Partition(lo=[0.0], hi=[1.0], counts=[3])
        action = ab.AbstractAction(0, np.array([0.5]), np.zeros(0, np.int64))
        samples = ab.sample_noise_set(dyn.GaussianNoise([0.0], [[1.0]]), 500, seed=2)
        tc = ab.count_successors(part, action, samples)
        assert tc.counts.sum() == 500


class TestIntervalFromCounts:
    def test_boundary_cases(self):
        full = ab.interval_from_counts(10, 10, 0.05)
        assert full.high == 1.0 and 0.0 < full.low < 1.0
        none = ab.interval_from_counts(0, 10, 0.05)
        assert none.low == 0.0 and 0.0 < none.high < 1.0

    def test_k_zero_closed_form(self):
        # high = 1 - (beta/2)^(1/N)
        iv = ab.interval_from_counts(0, 10, 0.1)
        assert iv.high == pytest.approx(1.0 - 0.05 ** 0.1, abs=1e-12)
        assert iv.high == pytest.approx(0.2589, abs=5e-5)

    def test_k_full_closed_form(self):
        iv = ab.interval_from_counts(10, 10, 0.1)
        assert iv.low == pytest.approx(0.05 ** 0.1, abs=1e-12)

    def test_against_beta_inversion_oracle(self):
        # bisection on the regularized incomplete beta, built independently
        def ppf(q, a, b):
            lo, hi = 0.0, 1.0
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                if betainc(a, b, mid) < q:
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        iv = ab.interval_from_counts(10, 100, 0.01)
        assert iv.low == pytest.approx(ppf(0.005, 10, 91), abs=1e-9)
        assert iv.high == pytest.approx(ppf(0.995, 11, 90), abs=1e-9)
        # golden values recorded from the oracle
        assert iv.low == pytest.approx(0.03819565320508156, abs=1e-9)
        assert iv.high == pytest.approx(0.20195352078134404, abs=1e-9)

    def test_coverage_guarantee_monte_carlo(self):
        # P(p in interval) >= 1 - beta_per for a known Bernoulli p
        rng = np.random.default_rng(8)
        p_true, n, beta_per = 0.3, 60, 0.2
        misses = 0
        trials = 400
        for _ in range(trials):
            k = rng.binomial(n, p_true)
            iv = ab.interval_from_counts(int(k), n, beta_per)
            misses += not (iv.low <= p_true <= iv.high)
        assert misses / trials <= beta_per + 3 * math.sqrt(beta_per / trials)

    def test_domain_errors(self):
        with pytest.raises(ValueError):
            ab.interval_from_counts(-1, 10, 0.1)
        with pytest.raises(ValueError):
            ab.interval_from_counts(11, 10, 0.1)
        with pytest.raises(ValueError):
            ab.interval_from_counts(5, 10, 0.0)
        with pytest.raises(ValueError):
            ab.interval_from_counts(5, 10, 1.0)

    def test_interval_type_invariants(self):
        with pytest.raises(ValueError):
            ab.ProbabilityInterval(0.5, 0.4)
        with pytest.raises(ValueError):
            ab.ProbabilityInterval(-0.1, 0.4)


class TestBuildImdp:
    def _setup(self, noise=None, counts=(4, 4), n_samples=100, seed=3, beta=0.05,
               goal=None, critical=None):
        sys_ = identity_system(bound=10.0, noise=noise or zero_noise(2))
        part = pt.Partition(lo=[0.0, 0.0], hi=[4.0, 4.0], counts=list(counts))
        part = pt.label_regions(part, goal or [([3.0, 3.0], [4.0, 4.0])],
                                critical or [])
        actions = ab.enabled_actions(sys_, part, ab.default_actions(part))
        cfg = ab.AbstractionConfig(n_samples=n_samples, beta=beta, seed=seed)
        return sys_, part, actions, cfg

    def test_zero_noise_single_region_successor(self):
        sys_, part, actions, cfg = self._setup()
        imdp = ab.build_imdp(sys_, part, actions, cfg)
        unsafe = imdp.unsafe_state
        for a in range(imdp.num_actions):
            if not len(actions[a].enabled_in):
                continue
            succ = imdp.row_succ[a].tolist()
            region_succ = [s for s in succ if s < imdp.n_regions or s == imdp.goal_state]
            assert len(region_succ) == 1
            i = succ.index(region_succ[0])
            # single observed successor: [low(N, N), 1]
            expect_low = ab.interval_from_counts(
                cfg.n_samples, cfg.n_samples,
                cfg.beta / (imdp.num_actions * (part.num_regions - 1 + 3))).low
            assert imdp.row_low[a][i] == pytest.approx(expect_low, abs=1e-12)
            assert imdp.row_high[a][i] == 1.0
            # the only other permitted successor is the pruning residual
            assert set(succ) - {region_succ[0]} <= {unsafe}

    def test_zero_noise_pointmdp_degenerate_one(self):
        sys_, part, actions, cfg = self._setup()
        mdp = ab.build_pointmdp(sys_, part, actions, cfg)
        for a in range(mdp.num_actions):
            if not len(actions[a].enabled_in):
                continue
            assert len(mdp.row_succ[a]) == 1
            assert mdp.row_low[a][0] == 1.0 and mdp.row_high[a][0] == 1.0

    def test_goal_relabeling_to_sink(self):
        # 1D domain [0,3], 3 cells, middle cell is goal: targeting its
        # center transitions to GOAL, not to region 1
        sys_ = dyn.LinearSystem(A=np.eye(1), B=np.eye(1), q=np.zeros(1),
                                u_lo=[-10.0], u_hi=[10.0], noise=zero_noise(1))
        part = pt.label_regions(pt.Partition(lo=[0.0], hi=[3.0], counts=[3]),
                                [([1.0], [2.0])], [])
        actions = ab.enabled_actions(sys_, part, ab.default_actions(part))
        cfg = ab.AbstractionConfig(n_samples=50, beta=0.1, seed=0)
        imdp = ab.build_imdp(sys_, part, actions, cfg)
        succ = imdp.row_succ[1]  # action targeting the goal center
        assert imdp.goal_state in succ
        assert 1 not in succ

    def test_interval_sums_admit_distribution_exhaustively(self):
        noise = dyn.UniformBoxNoise([-0.8, -0.8], [0.8, 0.8])
        sys_, part, actions, cfg = self._setup(noise=noise, n_samples=800, seed=7)
        imdp = ab.build_imdp(sys_, part, actions, cfg)
        for a in range(imdp.num_actions):
            assert imdp.row_low[a].sum() <= 1.0 + 1e-12
            assert imdp.row_high[a].sum() >= 1.0 - 1e-12
            assert np.all(imdp.row_low[a] <= imdp.row_high[a])

    def test_positive_count_implies_positive_high(self):
        noise = dyn.UniformBoxNoise([-0.8, -0.8], [0.8, 0.8])
        sys_, part, actions, cfg = self._setup(noise=noise, n_samples=200)
        samples = ab.sample_noise_set(sys_.noise, cfg.n_samples, cfg.seed)
        counts = ab.compute_transition_counts(part, actions, samples)
        imdp = ab.assemble_imdp(part, actions, counts, samples, cfg.beta)
        smap = ab._state_map(part)
        for a in range(imdp.num_actions):
            merged = ab._merged_counts(part, counts[a], smap)
            for s, hi in zip(imdp.row_succ[a], imdp.row_high[a]):
                if merged[s] > 0:
                    assert hi > 0.0

    def test_point_mdp_nesting_low_le_freq_le_high(self):
        noise = dyn.GaussianNoise(np.zeros(2), 0.3 * np.eye(2))
        sys_, part, actions, cfg = self._setup(noise=noise, n_samples=400)
        samples = ab.sample_noise_set(sys_.noise, cfg.n_samples, cfg.seed)
        counts = ab.compute_transition_counts(part, actions, samples)
        imdp = ab.assemble_imdp(part, actions, counts, samples, cfg.beta)
        point = ab.assemble_pointmdp(part, actions, counts)
        for a in range(imdp.num_actions):
            iv = {int(s): (lo, hi) for s, lo, hi in
                  zip(imdp.row_succ[a], imdp.row_low[a], imdp.row_high[a])}
            for s, p in zip(point.row_succ[a], point.row_low[a]):
                lo, hi = iv[int(s)]
                assert lo <= p <= hi

    def test_single_distribution_shared_across_states(self):
        # intervals of action j are identical wherever j is enabled: the
        # exported rows per (state, action) coincide
        noise = dyn.UniformBoxNoise([-0.5, -0.5], [0.5, 0.5])
        sys_, part, actions, cfg = self._setup(noise=noise)
        imdp = ab.build_imdp(sys_, part, actions, cfg)
        rows_by_action = {}
        for s in range(imdp.n_states):
            for a in imdp.enabled[s]:
                row = (imdp.row_succ[a].tobytes(), imdp.row_low[a].tobytes(),
                       imdp.row_high[a].tobytes())
                rows_by_action.setdefault(int(a), set()).add(row)
        assert all(len(v) == 1 for v in rows_by_action.values())

    def test_vacuous_abstraction_raises(self):
        sys_, part, actions, cfg = self._setup()
        tiny = dyn.LinearSystem(A=sys_.A, B=sys_.B, q=sys_.q,
                                u_lo=[-1e-6, -1e-6], u_hi=[1e-6, 1e-6],
                                noise=sys_.noise)
        actions_tiny = ab.enabled_actions(tiny, part, ab.default_actions(part))
        with pytest.raises(ab.AbstractionVacuousError):
            ab.build_imdp(tiny, part, actions_tiny, cfg)

    def test_out_of_domain_mass_goes_to_out_sink(self):
        # action near the domain edge with wide noise sends mass OUT
        noise = dyn.UniformBoxNoise([-2.0, -2.0], [2.0, 2.0])
        sys_, part, actions, cfg = self._setup(noise=noise, n_samples=300)
        imdp = ab.build_imdp(sys_, part, actions, cfg)
        corner_action = 0  # targets (0.5, 0.5); noise spills outside
        assert imdp.out_state in imdp.row_succ[corner_action]

    def test_interval_strategy_is_swappable(self):
        calls = []

        def wilson_like(k, n, beta_per):
            calls.append((k, n))
            p = k / n
            slack = 0.5 * math.sqrt(1.0 / n)
            return ab.ProbabilityInterval(max(0.0, p - slack), min(1.0, p + slack))

        noise = dyn.UniformBoxNoise([-0.5, -0.5], [0.5, 0.5])
        sys_, part, actions, cfg = self._setup(noise=noise)
        imdp = ab.build_imdp(sys_, part, actions, cfg, interval_fn=wilson_like)
        assert calls
        imdp.validate()
