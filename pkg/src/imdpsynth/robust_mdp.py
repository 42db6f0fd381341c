"""Interval MDPs and robust dynamic programming for reach-avoid.

States are grid regions plus three absorbing states appended at the end:
GOAL (success, value 1), UNSAFE and OUT (failure, value 0). Transition
probabilities are intervals; a policy must be robust against every
distribution inside them. The solver runs backward recursion where each
backup lets an adversary re-pick worst-case probabilities within the
intervals (the standard robust-DP semantics for interval models, which for
finite horizons coincides with a static adversary and yields the
lower-bound certificate).

Transition rows are stored once per *action*: an abstract action's
successor distribution does not depend on the state it is taken from, so
every state sharing an action shares its row. Generic models simply use
one action id per (state, action) pair.

Value/policy indexing is backward: ``values[k]`` is the optimal worst-case
probability of reaching GOAL within the remaining ``K - k`` steps, so
``values[k] >= values[k+1]`` elementwise.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels

INTERVAL_TOL = 1e-12  # feasibility slack on sum(low) <= 1 <= sum(high)


class InfeasibleIntervalError(ValueError):
    """Interval bounds admit no probability distribution."""


class ModelFormatError(ValueError):
    """Malformed explicit-state model file."""


@dataclass(eq=False)
class IntervalMDP:
    """Sparse interval MDP with shared per-action transition rows.

    ``enabled[s]`` lists the action ids available in state s (sorted
    ascending); ``row_succ[a]``/``row_low[a]``/``row_high[a]`` give action
    a's successor states and interval endpoints. The last three states are
    the absorbing GOAL/UNSAFE/OUT states and have no actions.
    """

    n_regions: int
    enabled: list
    row_succ: list
    row_low: list
    row_high: list
    confidence: Optional[float] = None

    def __post_init__(self):
        self.enabled = [np.sort(np.asarray(e, dtype=np.int64)) for e in self.enabled]
        self.row_succ = [np.asarray(s, dtype=np.int64) for s in self.row_succ]
        self.row_low = [np.asarray(l, dtype=float) for l in self.row_low]
        self.row_high = [np.asarray(h, dtype=float) for h in self.row_high]
        if len(self.enabled) != self.n_states:
            raise ValueError("enabled must have one entry per state")

    @property
    def n_states(self) -> int:
        return self.n_regions + 3

    @property
    def goal_state(self) -> int:
        return self.n_regions

    @property
    def unsafe_state(self) -> int:
        return self.n_regions + 1

    @property
    def out_state(self) -> int:
        return self.n_regions + 2

    @property
    def num_actions(self) -> int:
        return len(self.row_succ)

    @property
    def num_choices(self) -> int:
        return int(sum(len(e) for e in self.enabled))

    @property
    def num_transitions(self) -> int:
        """Transition triples counted per (state, action, successor)."""
        row_len = np.array([len(s) for s in self.row_succ], dtype=np.int64)
        return int(sum(row_len[e].sum() for e in self.enabled if len(e)))

    def state_label(self, s: int) -> str:
        if s < self.n_regions:
            return f"region:{s}"
        return ("goal", "unsafe", "out")[s - self.n_regions]

    def validate(self) -> None:
        first_state: dict = {}
        for s, e in enumerate(self.enabled):
            for a in e:
                first_state.setdefault(int(a), s)
        for s in (self.goal_state, self.unsafe_state, self.out_state):
            if len(self.enabled[s]):
                raise ValueError(f"absorbing state {s} must have no actions")
        for a, s in sorted(first_state.items()):
            succ, low, high = self.row_succ[a], self.row_low[a], self.row_high[a]
            where = f"action {a} (enabled in state {s})"
            if not (len(succ) == len(low) == len(high)) or len(succ) == 0:
                raise ValueError(f"{where}: malformed or empty row")
            if len(np.unique(succ)) != len(succ):
                raise ValueError(f"{where}: duplicate successors")
            if succ.min() < 0 or succ.max() >= self.n_states:
                raise ValueError(f"{where}: successor out of range")
            if np.any(low < -INTERVAL_TOL) or np.any(high > 1 + INTERVAL_TOL):
                raise ValueError(f"{where}: interval endpoints outside [0, 1]")
            if np.any(low > high + INTERVAL_TOL):
                raise ValueError(f"{where}: low > high")
            if low.sum() > 1 + INTERVAL_TOL or high.sum() < 1 - INTERVAL_TOL:
                raise InfeasibleIntervalError(
                    f"{where}: sum(low)={low.sum():.17g}, "
                    f"sum(high)={high.sum():.17g} admit no distribution"
                )

    def csr(self):
        """Concatenated rows: (indptr, succ, low, high) over all action ids."""
        lens = np.array([len(s) for s in self.row_succ], dtype=np.int64)
        indptr = np.zeros(self.num_actions + 1, dtype=np.int64)
        np.cumsum(lens, out=indptr[1:])
        if self.num_actions == 0:
            empty = np.zeros(0)
            return indptr, empty.astype(np.int64), empty, empty
        succ = np.concatenate(self.row_succ)
        low = np.concatenate(self.row_low)
        high = np.concatenate(self.row_high)
        return indptr, succ, low, high


def structurally_equal(a: IntervalMDP, b: IntervalMDP) -> bool:
    """Same states, same enabled sets, bit-equal rows of all used actions.

    Actions enabled in no state carry no transitions in the explicit
    format, so they are not part of the comparable structure.
    """
    if a.n_regions != b.n_regions:
        return False
    if any(not np.array_equal(x, y) for x, y in zip(a.enabled, b.enabled)):
        return False
    used = sorted({int(i) for e in a.enabled for i in e})
    for xs, ys in ((a.row_succ, b.row_succ), (a.row_low, b.row_low),
                   (a.row_high, b.row_high)):
        if any(not np.array_equal(xs[i], ys[i]) for i in used):
            return False
    return True


# ---------------------------------------------------------------------------
# Inner adversarial problem
# ---------------------------------------------------------------------------


def inner_min(values, low, high):
    """Worst-case expectation over distributions inside the intervals.

    Solves min { p . v : low <= p <= high, sum p = 1 } exactly by the
    greedy order statistic and returns (optimal value, optimizing
    distribution). Ties in the value order are broken by successor index
    ascending. O(m log m).
    """
    values = np.asarray(values, dtype=float)
    low = np.asarray(low, dtype=float)
    high = np.asarray(high, dtype=float)
    s_low, s_high = low.sum(), high.sum()
    if s_low > 1 + INTERVAL_TOL or s_high < 1 - INTERVAL_TOL:
        raise InfeasibleIntervalError(
            f"sum(low)={s_low:.17g}, sum(high)={s_high:.17g} admit no distribution"
        )
    p = low.copy()
    rem = 1.0 - s_low
    for j in np.argsort(values, kind="stable"):
        if rem <= 0.0:
            break
        take = min(high[j] - low[j], rem)
        p[j] += take
        rem -= take
    return float(p @ values), p


# ---------------------------------------------------------------------------
# Value iteration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class RobustSolution:
    """Time-indexed lower-bound values and time-varying policy.

    ``values[k][s]`` is the certified probability of reaching GOAL within
    the remaining K - k steps from state s; ``policy[k][s]`` the action to
    take then (-1 where none is defined).
    """

    values: np.ndarray   # (K+1, S)
    policy: np.ndarray   # (K, S), int, -1 = undefined
    horizon: int
    confidence: Optional[float]


@dataclass(frozen=True)
class StationarySolution:
    """Fixed point of the infinite-horizon robust recursion."""

    values: np.ndarray
    policy: np.ndarray
    iterations: int
    converged: bool
    confidence: Optional[float]


def _backup_states(imdp: IntervalMDP):
    """States that actually need a backup, with their enabled actions."""
    return [(s, imdp.enabled[s]) for s in range(imdp.n_regions) if len(imdp.enabled[s])]


def robust_value_iteration(imdp: IntervalMDP, horizon: int) -> RobustSolution:
    """Finite-horizon robust reach-avoid maximization.

    Backward recursion from terminal values (1 at GOAL, 0 elsewhere);
    deadlock states keep value 0. Action ties break toward the lowest id.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    try:
        imdp.validate()
    except InfeasibleIntervalError as exc:
        raise InfeasibleIntervalError(f"{exc} (detected before step {horizon - 1})")
    S, K = imdp.n_states, horizon
    indptr, succ, low, high = imdp.csr()
    q = np.zeros(imdp.num_actions)
    values = np.zeros((K + 1, S))
    policy = np.full((K, S), -1, dtype=np.int64)
    values[K, imdp.goal_state] = 1.0
    todo = _backup_states(imdp)
    for k in range(K - 1, -1, -1):
        _kernels.bellman_action_values(indptr, succ, low, high, values[k + 1], q)
        for s, acts in todo:
            vals = q[acts]
            i = int(np.argmax(vals))  # first max = lowest action id
            values[k, s] = vals[i]
            policy[k, s] = acts[i]
        values[k, imdp.goal_state] = 1.0
    return RobustSolution(values=values, policy=policy, horizon=K,
                          confidence=imdp.confidence)


def nominal_value_iteration(imdp: IntervalMDP, horizon: int) -> RobustSolution:
    """Same recursion with point probabilities (low == high rows).

    The inner problem degenerates to a dot product; rows are taken at
    their lower endpoints.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    imdp.validate()
    S, K = imdp.n_states, horizon
    indptr, succ, low, _high = imdp.csr()
    values = np.zeros((K + 1, S))
    policy = np.full((K, S), -1, dtype=np.int64)
    values[K, imdp.goal_state] = 1.0
    todo = _backup_states(imdp)
    row_of = np.repeat(np.arange(imdp.num_actions), np.diff(indptr))
    for k in range(K - 1, -1, -1):
        q = np.bincount(row_of, weights=low * values[k + 1][succ],
                        minlength=imdp.num_actions)
        for s, acts in todo:
            vals = q[acts]
            i = int(np.argmax(vals))
            values[k, s] = vals[i]
            policy[k, s] = acts[i]
        values[k, imdp.goal_state] = 1.0
    return RobustSolution(values=values, policy=policy, horizon=K,
                          confidence=imdp.confidence)


def optimistic_value_iteration(imdp: IntervalMDP, horizon: int) -> RobustSolution:
    """Best-case (upper-bound) values, for diagnostics only.

    Same recursion with the inner problem maximized instead of minimized;
    the gap to the robust values shows how much the interval widths cost.
    Not a certificate.
    """
    if horizon < 1:
        raise ValueError("horizon must be >= 1")
    imdp.validate()
    S, K = imdp.n_states, horizon
    indptr, succ, low, high = imdp.csr()
    q = np.zeros(imdp.num_actions)
    values = np.zeros((K + 1, S))
    policy = np.full((K, S), -1, dtype=np.int64)
    values[K, imdp.goal_state] = 1.0
    todo = _backup_states(imdp)
    for k in range(K - 1, -1, -1):
        # max_p p.v = -min_p p.(-v)
        _kernels.bellman_action_values(indptr, succ, low, high, -values[k + 1], q)
        np.negative(q, out=q)
        for s, acts in todo:
            vals = q[acts]
            i = int(np.argmax(vals))
            values[k, s] = vals[i]
            policy[k, s] = acts[i]
        values[k, imdp.goal_state] = 1.0
    return RobustSolution(values=values, policy=policy, horizon=K,
                          confidence=imdp.confidence)


def robust_value_iteration_infinite(
    imdp: IntervalMDP, tol: float = 1e-6, max_iter: int = 100_000
) -> StationarySolution:
    """Iterate the robust backup to a fixed point (secondary mode)."""
    imdp.validate()
    S = imdp.n_states
    indptr, succ, low, high = imdp.csr()
    q = np.zeros(imdp.num_actions)
    V = np.zeros(S)
    V[imdp.goal_state] = 1.0
    policy = np.full(S, -1, dtype=np.int64)
    todo = _backup_states(imdp)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        V_new = np.zeros(S)
        V_new[imdp.goal_state] = 1.0
        _kernels.bellman_action_values(indptr, succ, low, high, V, q)
        for s, acts in todo:
            vals = q[acts]
            i = int(np.argmax(vals))
            V_new[s] = vals[i]
            policy[s] = acts[i]
        delta = float(np.max(np.abs(V_new - V)))
        V = V_new
        if delta <= tol:
            converged = True
            break
    return StationarySolution(values=V, policy=policy, iterations=it,
                              converged=converged, confidence=imdp.confidence)


# ---------------------------------------------------------------------------
# Explicit-state text format
# ---------------------------------------------------------------------------
#
# States file: one line per state, "<index> <label>" with label in
# {region:<id>, goal, unsafe, out}. Transitions file: one line per
# (state, action, successor), "<state> <action> <successor> [<low>,<high>]"
# with shortest-roundtrip decimal floats. Absorbing states appear only in
# the states file. UTF-8, LF line endings, fields space-separated.


def export_explicit(imdp: IntervalMDP, states_path, transitions_path) -> None:
    with open(states_path, "w", encoding="utf-8", newline="\n") as f:
        for s in range(imdp.n_states):
            f.write(f"{s} {imdp.state_label(s)}\n")
    with open(transitions_path, "w", encoding="utf-8", newline="\n") as f:
        for s in range(imdp.n_states):
            for a in imdp.enabled[s]:
                succ = imdp.row_succ[a]
                low = imdp.row_low[a]
                high = imdp.row_high[a]
                for t, lo, hi in zip(succ, low, high):
                    f.write(f"{s} {a} {t} [{float(lo)!r},{float(hi)!r}]\n")


def _parse_interval(tok: str, path, ln: int):
    if not (tok.startswith("[") and tok.endswith("]")) or "," not in tok:
        raise ModelFormatError(f"{path}:{ln}: malformed interval {tok!r}")
    try:
        lo_s, hi_s = tok[1:-1].split(",")
        return float(lo_s), float(hi_s)
    except ValueError as exc:
        raise ModelFormatError(f"{path}:{ln}: malformed interval {tok!r}") from exc


def import_explicit(states_path, transitions_path) -> IntervalMDP:
    """Exact inverse of export_explicit."""
    labels = []
    with open(states_path, "r", encoding="utf-8") as f:
        for ln, line in enumerate(f, 1):
            parts = line.split()
            if len(parts) != 2:
                raise ModelFormatError(f"{states_path}:{ln}: expected 'index label'")
            try:
                idx = int(parts[0])
            except ValueError as exc:
                raise ModelFormatError(f"{states_path}:{ln}: bad index") from exc
            if idx != len(labels):
                raise ModelFormatError(f"{states_path}:{ln}: indices must be consecutive")
            labels.append(parts[1])
    if len(labels) < 3 or labels[-3:] != ["goal", "unsafe", "out"]:
        raise ModelFormatError(f"{states_path}: must end with goal/unsafe/out states")
    n_regions = len(labels) - 3
    for r, lab in enumerate(labels[:n_regions]):
        if lab != f"region:{r}":
            raise ModelFormatError(f"{states_path}:{r + 1}: expected label region:{r}")

    enabled: list = [[] for _ in range(len(labels))]
    rows: dict = {}
    with open(transitions_path, "r", encoding="utf-8") as f:
        cur_state = cur_action = None
        cur_rows: list = []

        def flush(ln):
            if cur_state is None:
                return
            succ = np.array([t for t, _, _ in cur_rows], dtype=np.int64)
            low = np.array([l for _, l, _ in cur_rows])
            high = np.array([h for _, _, h in cur_rows])
            if cur_action in rows:
                r_succ, r_low, r_high = rows[cur_action]
                if not (np.array_equal(succ, r_succ) and np.array_equal(low, r_low)
                        and np.array_equal(high, r_high)):
                    raise ModelFormatError(
                        f"{transitions_path}:{ln}: action {cur_action} has "
                        "inconsistent rows across states"
                    )
            else:
                rows[cur_action] = (succ, low, high)
            enabled[cur_state].append(cur_action)

        for ln, line in enumerate(f, 1):
            parts = line.split()
            if len(parts) != 4:
                raise ModelFormatError(
                    f"{transitions_path}:{ln}: expected 'state action successor [low,high]'"
                )
            try:
                s, a, t = int(parts[0]), int(parts[1]), int(parts[2])
            except ValueError as exc:
                raise ModelFormatError(f"{transitions_path}:{ln}: bad indices") from exc
            lo, hi = _parse_interval(parts[3], transitions_path, ln)
            if s >= len(labels) or t >= len(labels) or s < 0 or t < 0:
                raise ModelFormatError(f"{transitions_path}:{ln}: state index out of range")
            if (s, a) != (cur_state, cur_action):
                flush(ln)
                cur_state, cur_action, cur_rows = s, a, []
            cur_rows.append((t, lo, hi))
        flush(None)

    num_actions = max(rows) + 1 if rows else 0
    empty = (np.zeros(0, dtype=np.int64), np.zeros(0), np.zeros(0))
    row_succ = [rows.get(a, empty)[0] for a in range(num_actions)]
    row_low = [rows.get(a, empty)[1] for a in range(num_actions)]
    row_high = [rows.get(a, empty)[2] for a in range(num_actions)]
    return IntervalMDP(
        n_regions=n_regions,
        enabled=[np.array(sorted(set(e)), dtype=np.int64) for e in enabled],
        row_succ=row_succ,
        row_low=row_low,
        row_high=row_high,
    )
