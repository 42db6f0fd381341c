"""Finite interval-MDP abstraction of a linear stochastic system.

Abstract actions are target points (one per cell by default). An action is
*enabled* in a cell iff the exact-steering input is admissible from every
corner of the cell: the input law is affine in the state and U is convex,
so feasibility at all 2^n vertices implies feasibility on the whole cell,
i.e. the cell lies inside the target's backward reachable set.

Choosing an enabled action from anywhere yields the successor d + eta, a
single distribution independent of the source state. Transition
probabilities are therefore estimated once per action from one shared set
of N noise samples, and turned into Clopper-Pearson (exact binomial)
intervals. The per-interval significance is the overall budget beta split
by a union bound across all estimated intervals, so all intervals hold
simultaneously with confidence at least 1 - beta.

Zero-count buckets far from the observed samples (cell disjoint from the
sample support box inflated by 10%) are dropped, and their combined mass
is conservatively re-routed to the UNSAFE sink as one residual interval
[0, high(0)] per action; nearby zero-count buckets keep [0, high(0)].
"""

from __future__ import annotations

from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Callable, Optional, Sequence

import numpy as np
from scipy.stats import beta as _beta_dist

from .dynamics import STEER_TOL, LinearSystem, NoiseModel, RankDeficiencyError
from .partition import (
    OUTSIDE,
    Partition,
    grid_vertices,
    region_centers,
    region_of_many,
)
from .robust_mdp import IntervalMDP

SUPPORT_INFLATION = 1.1  # sample support box inflation for zero-count pruning


class AbstractionVacuousError(RuntimeError):
    """No action is enabled anywhere; the abstraction cannot plan."""


@dataclass(frozen=True)
class AbstractAction:
    """A target point with the set of regions it may be chosen from."""

    id: int
    target: np.ndarray
    enabled_in: np.ndarray  # sorted region ids; empty until enabled_actions

    def __post_init__(self):
        t = np.asarray(self.target, dtype=float).reshape(-1)
        t.flags.writeable = False
        object.__setattr__(self, "target", t)
        e = np.asarray(self.enabled_in, dtype=np.int64).reshape(-1)
        e.flags.writeable = False
        object.__setattr__(self, "enabled_in", e)


@dataclass(frozen=True)
class ProbabilityInterval:
    low: float
    high: float

    def __post_init__(self):
        if not 0.0 <= self.low <= self.high <= 1.0:
            raise ValueError(f"invalid interval [{self.low}, {self.high}]")


@dataclass(frozen=True)
class AbstractionConfig:
    n_samples: int
    beta: float
    seed: int
    lift_steps: int = 1

    def __post_init__(self):
        if self.n_samples < 1:
            raise ValueError("n_samples must be >= 1")
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if self.lift_steps < 1:
            raise ValueError("lift_steps must be >= 1")


@dataclass(frozen=True)
class TransitionCounts:
    """Successor sample counts of one action over raw buckets.

    Buckets are region ids plus OUTSIDE (-1) for samples leaving the
    domain; counts sum to n_samples exactly.
    """

    action_id: int
    buckets: np.ndarray
    counts: np.ndarray
    n_samples: int

    def __post_init__(self):
        if int(self.counts.sum()) != self.n_samples:
            raise ValueError("bucket counts must sum to the sample count")


def default_actions(part: Partition) -> list:
    """One action per region, targeting the region center."""
    centers = region_centers(part)
    empty = np.zeros(0, dtype=np.int64)
    return [AbstractAction(id=j, target=c, enabled_in=empty)
            for j, c in enumerate(centers)]


def enabled_actions(sys: LinearSystem, part: Partition, actions: Sequence) -> list:
    """Fill each action's enabled set via the backward vertex certificate.

    Region r enables action j iff the steering input B_pinv (d_j - A v - q)
    is admissible at every vertex v of r. Goal and critical regions enable
    nothing (they are absorbing under the reach-avoid semantics).
    """
    if not sys.has_full_row_rank():
        raise RankDeficiencyError(
            "B lacks full row rank; exact steering needs rank n. "
            "Group time steps with dynamics.lift() first."
        )
    V, vshape = grid_vertices(part)
    PA = sys.B_pinv @ sys.A
    G = V @ PA.T                     # (num grid vertices, p)
    Pq = sys.B_pinv @ sys.q
    lo = sys.u_lo - STEER_TOL
    hi = sys.u_hi + STEER_TOL
    selectable = part.labels == 0    # goal/critical regions stay action-free
    out = []
    for act in actions:
        c = sys.B_pinv @ act.target - Pq
        u = c - G
        feas = np.all((u >= lo) & (u <= hi), axis=1).reshape(vshape)
        for d in range(part.n):      # erode: a cell needs all 2^n corners
            lower = [slice(None)] * part.n
            upper = [slice(None)] * part.n
            lower[d] = slice(0, -1)
            upper[d] = slice(1, None)
            feas = feas[tuple(lower)] & feas[tuple(upper)]
        ids = np.flatnonzero(feas.ravel(order="C") & selectable)
        out.append(replace(act, enabled_in=ids.astype(np.int64)))
    return out


def sample_noise_set(noise: NoiseModel, n_samples: int, seed: int) -> np.ndarray:
    """N i.i.d. noise draws, deterministic in the seed, shared by all actions."""
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    return noise.sample(rng, n_samples)


def count_successors(part: Partition, action: AbstractAction,
                     samples: np.ndarray) -> TransitionCounts:
    """Histogram of region_of(d + eta_i) over the shared sample set."""
    ids = region_of_many(part, action.target + samples)
    buckets, counts = np.unique(ids, return_counts=True)
    return TransitionCounts(action_id=action.id, buckets=buckets,
                            counts=counts, n_samples=samples.shape[0])


# ---------------------------------------------------------------------------
# PAC intervals (Clopper-Pearson)
# ---------------------------------------------------------------------------


@lru_cache(maxsize=None)
def _cp_cached(k: int, n: int, beta_per: float):
    low = 0.0 if k == 0 else float(_beta_dist.ppf(beta_per / 2, k, n - k + 1))
    high = 1.0 if k == n else float(_beta_dist.ppf(1 - beta_per / 2, k + 1, n - k))
    return min(max(low, 0.0), 1.0), min(max(high, 0.0), 1.0)


def interval_from_counts(k: int, n: int, beta_per: float) -> ProbabilityInterval:
    """Two-sided Clopper-Pearson interval at significance beta_per.

    Exact binomial coverage: P(p in [low, high]) >= 1 - beta_per for the
    true Bernoulli parameter p. low = BetaInv(beta_per/2; k, n-k+1) (0 at
    k=0), high = BetaInv(1-beta_per/2; k+1, n-k) (1 at k=n).
    """
    if not isinstance(k, (int, np.integer)) or not isinstance(n, (int, np.integer)):
        raise TypeError("k and n must be integers")
    if not 0 <= k <= n or n < 1:
        raise ValueError(f"need 0 <= k <= n with n >= 1, got k={k}, n={n}")
    if not 0.0 < beta_per < 1.0:
        raise ValueError("beta_per must lie in (0, 1)")
    low, high = _cp_cached(int(k), int(n), float(beta_per))
    return ProbabilityInterval(low=low, high=high)


def _cp_bounds(ks: np.ndarray, n: int, beta_per: float,
               interval_fn: Optional[Callable] = None):
    """Vectorized interval endpoints for an array of counts."""
    fn = interval_fn or interval_from_counts
    uniq = np.unique(ks)
    lut_low = {}
    lut_high = {}
    for k in uniq:
        iv = fn(int(k), int(n), float(beta_per))
        lut_low[int(k)] = iv.low
        lut_high[int(k)] = iv.high
    low = np.array([lut_low[int(k)] for k in ks])
    high = np.array([lut_high[int(k)] for k in ks])
    return low, high


# ---------------------------------------------------------------------------
# iMDP assembly
# ---------------------------------------------------------------------------


def _state_map(part: Partition) -> np.ndarray:
    """Raw bucket id -> iMDP state. Trailing slot serves OUTSIDE (-1)."""
    R = part.num_regions
    m = np.concatenate([np.arange(R, dtype=np.int64), [R + 2]])  # OUT sink
    if part.goal_regions:
        m[sorted(part.goal_regions)] = R
    if part.critical_regions:
        m[sorted(part.critical_regions)] = R + 1
    return m


def _support_states(part: Partition, succ_points: np.ndarray,
                    state_map: np.ndarray) -> np.ndarray:
    """States geometrically reachable per the inflated sample support box."""
    R = part.num_regions
    smin = succ_points.min(axis=0)
    smax = succ_points.max(axis=0)
    center = 0.5 * (smin + smax)
    half = 0.5 * (smax - smin) * SUPPORT_INFLATION
    blo, bhi = center - half, center + half
    support = np.zeros(R + 3, dtype=bool)
    # per-dimension index ranges of cells with closed-box overlap
    mask = np.ones((), dtype=bool)
    for d in range(part.n):
        edges = part.lo[d] + np.arange(part.counts[d] + 1) * part.widths[d]
        edges[-1] = part.hi[d]
        ok = (edges[:-1] <= bhi[d]) & (edges[1:] >= blo[d])
        shape = [1] * part.n
        shape[d] = part.counts[d]
        mask = mask & ok.reshape(shape)
    cells = np.flatnonzero(np.asarray(mask).ravel(order="C"))
    support[state_map[cells]] = True
    if np.any(blo < part.lo) or np.any(bhi > part.hi):
        support[R + 2] = True  # OUT
    return support


def compute_transition_counts(part: Partition, actions: Sequence,
                              samples: np.ndarray) -> list:
    return [count_successors(part, act, samples) for act in actions]


def _merged_counts(part: Partition, tc: TransitionCounts,
                   state_map: np.ndarray) -> np.ndarray:
    S = part.num_regions + 3
    merged = np.zeros(S, dtype=np.int64)
    np.add.at(merged, state_map[tc.buckets], tc.counts)
    return merged


def assemble_imdp(
    part: Partition,
    actions: Sequence,
    counts: Sequence,
    samples: np.ndarray,
    beta: float,
    interval_fn: Optional[Callable] = None,
) -> IntervalMDP:
    """Interval MDP from per-action counts and the shared sample set.

    The per-interval significance is beta / I with
    I = num_actions * (unlabeled regions + 3), the number of estimated
    intervals, so a union bound gives overall confidence >= 1 - beta.
    """
    R = part.num_regions
    S = R + 3
    n = int(samples.shape[0])
    if not any(len(a.enabled_in) for a in actions):
        raise AbstractionVacuousError(
            "no action is enabled in any region; refine the partition or "
            "enlarge the input set, then rebuild the abstraction"
        )
    n_unlabeled = R - len(part.goal_regions) - len(part.critical_regions)
    beta_per = beta / (len(actions) * (n_unlabeled + 3))
    smap = _state_map(part)
    high0 = interval_from_counts(0, n, beta_per).high if interval_fn is None \
        else interval_fn(0, n, beta_per).high

    enabled: list = [[] for _ in range(S)]
    row_succ, row_low, row_high = [], [], []
    for pos, (act, tc) in enumerate(zip(actions, counts)):
        if act.id != pos:
            raise ValueError(f"action ids must be positional, got {act.id} at {pos}")
        merged = _merged_counts(part, tc, smap)
        support = _support_states(part, act.target + samples, smap)
        keep = (merged > 0) | support
        pruned_any = bool(np.any(~keep))
        succ = np.flatnonzero(keep).astype(np.int64)
        low, high = _cp_bounds(merged[succ], n, beta_per, interval_fn)
        if pruned_any:
            # mass of all dropped buckets combined is a single zero-count
            # event, re-routed to UNSAFE
            unsafe = R + 1
            ins = int(np.searchsorted(succ, unsafe))
            if ins < len(succ) and succ[ins] == unsafe:
                high[ins] = min(1.0, high[ins] + high0)
            else:
                succ = np.insert(succ, ins, unsafe)
                low = np.insert(low, ins, 0.0)
                high = np.insert(high, ins, high0)
        row_succ.append(succ)
        row_low.append(low)
        row_high.append(high)
        for r in act.enabled_in:
            enabled[r].append(act.id)
    imdp = IntervalMDP(
        n_regions=R,
        enabled=[np.array(e, dtype=np.int64) for e in enabled],
        row_succ=row_succ,
        row_low=row_low,
        row_high=row_high,
        confidence=1.0 - beta,
    )
    imdp.validate()
    return imdp


def assemble_pointmdp(part: Partition, actions: Sequence,
                      counts: Sequence) -> IntervalMDP:
    """Naive frequentist MDP: same counts, degenerate intervals [k/N, k/N]."""
    R = part.num_regions
    S = R + 3
    smap = _state_map(part)
    enabled: list = [[] for _ in range(S)]
    row_succ, row_low, row_high = [], [], []
    for pos, (act, tc) in enumerate(zip(actions, counts)):
        if act.id != pos:
            raise ValueError(f"action ids must be positional, got {act.id} at {pos}")
        merged = _merged_counts(part, tc, smap)
        succ = np.flatnonzero(merged > 0).astype(np.int64)
        p = merged[succ] / tc.n_samples
        row_succ.append(succ)
        row_low.append(p)
        row_high.append(p.copy())
        for r in act.enabled_in:
            enabled[r].append(act.id)
    mdp = IntervalMDP(
        n_regions=R,
        enabled=[np.array(e, dtype=np.int64) for e in enabled],
        row_succ=row_succ,
        row_low=row_low,
        row_high=row_high,
        confidence=None,
    )
    mdp.validate()
    return mdp


def build_imdp(sys: LinearSystem, part: Partition, actions: Sequence,
               config: AbstractionConfig,
               interval_fn: Optional[Callable] = None) -> IntervalMDP:
    """Sample noise, count successors, and assemble the interval MDP."""
    samples = sample_noise_set(sys.noise, config.n_samples, config.seed)
    counts = compute_transition_counts(part, actions, samples)
    return assemble_imdp(part, actions, counts, samples, config.beta, interval_fn)


def build_pointmdp(sys: LinearSystem, part: Partition, actions: Sequence,
                   config: AbstractionConfig) -> IntervalMDP:
    """Point-probability MDP from the same sampling scheme as build_imdp."""
    samples = sample_noise_set(sys.noise, config.n_samples, config.seed)
    counts = compute_transition_counts(part, actions, samples)
    if not any(len(a.enabled_in) for a in actions):
        raise AbstractionVacuousError(
            "no action is enabled in any region; refine the partition or "
            "enlarge the input set, then rebuild the abstraction"
        )
    return assemble_pointmdp(part, actions, counts)
