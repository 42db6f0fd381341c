"""Piecewise-affine feedback controllers refined from iMDP policies.

Within one region and time step the control law is the exact-steering map

    c(x, k) = B_pinv (d[a] - A x - q),    a = policy[k, region_of(x)]

toward the chosen action's target, so the refined controller is piecewise
linear and, on enabled regions, feasible by the vertex certificate. The
region is re-located every step (closed loop). Queries outside the domain,
in labeled regions, past the horizon, or where the policy is undefined
return None; simulation treats those as conservative failures/timeouts.

Validation replays the closed loop M times from a fixed initial state
with pre-drawn noise (one derived PRNG stream, batched rollout kernel) and
compares the empirical success rate against the certified lower bound.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import _kernels
from .dynamics import STEER_TOL, LinearSystem
from .partition import OUTSIDE, Partition, region_of
from .robust_mdp import RobustSolution
from .abstraction import interval_from_counts


class ProvenanceMismatchError(ValueError):
    """Solution, partition, actions and system do not belong together."""


def state_for_region(part: Partition, rid: int) -> int:
    """iMDP state index for a located region (labels map to sinks)."""
    R = part.num_regions
    if rid == OUTSIDE:
        return R + 2
    if rid in part.goal_regions:
        return R
    if rid in part.critical_regions:
        return R + 1
    return rid


def region_predicates(part: Partition):
    """(goal, unsafe) predicates for dynamics.simulate.

    unsafe covers critical cells and exit from the modeled domain.
    """
    def goal(x) -> bool:
        return region_of(part, x) in part.goal_regions

    def unsafe(x) -> bool:
        rid = region_of(part, x)
        return rid == OUTSIDE or rid in part.critical_regions

    return goal, unsafe


@dataclass(frozen=True)
class FeedbackController:
    """Time-varying piecewise-affine feedback law with its certificate."""

    partition: Partition
    targets: np.ndarray          # (num actions, n)
    policy: np.ndarray           # (K, num states), -1 where undefined
    A: np.ndarray
    B: np.ndarray
    B_pinv: np.ndarray
    q: np.ndarray
    u_lo: np.ndarray
    u_hi: np.ndarray
    horizon: int
    certified_values: np.ndarray  # values at k=0, per state
    confidence: Optional[float]

    def action_id(self, x, k: int) -> int:
        """Chosen abstract action id, or -1 when the law is undefined."""
        if not 0 <= k < self.horizon:
            return -1
        rid = region_of(self.partition, x)
        if rid == OUTSIDE or self.partition.labels[rid] != 0:
            return -1
        return int(self.policy[k, rid])

    def __call__(self, x, k: int) -> Optional[np.ndarray]:
        a = self.action_id(x, k)
        if a < 0:
            return None
        x = np.asarray(x, dtype=float).reshape(-1)
        return self.B_pinv @ (self.targets[a] - self.A @ x - self.q)

    def certificate(self, x0) -> float:
        """Certified lower bound on reach-avoid success from x0."""
        rid = region_of(self.partition, np.asarray(x0, dtype=float).reshape(-1))
        return float(self.certified_values[state_for_region(self.partition, rid)])


def refine(solution: RobustSolution, part: Partition, actions,
           sys: LinearSystem) -> FeedbackController:
    """Turn an iMDP policy into the concrete feedback controller."""
    S = part.num_regions + 3
    if solution.values.shape[1] != S or solution.policy.shape != (solution.horizon, S):
        raise ProvenanceMismatchError(
            f"solution built for {solution.values.shape[1]} states, "
            f"partition has {S}"
        )
    if sys.n != part.n:
        raise ProvenanceMismatchError(
            f"system dimension {sys.n} != partition dimension {part.n}"
        )
    targets = np.stack([a.target for a in actions])
    if targets.shape[1] != sys.n:
        raise ProvenanceMismatchError("action targets do not match state dimension")
    if solution.policy.max() >= len(actions):
        raise ProvenanceMismatchError("policy refers to unknown action ids")
    return FeedbackController(
        partition=part,
        targets=targets,
        policy=np.ascontiguousarray(solution.policy, dtype=np.int64),
        A=sys.A, B=sys.B, B_pinv=np.asarray(sys.B_pinv), q=sys.q,
        u_lo=sys.u_lo, u_hi=sys.u_hi,
        horizon=solution.horizon,
        certified_values=solution.values[0].copy(),
        confidence=solution.confidence,
    )


@dataclass(frozen=True)
class ValidationReport:
    """Monte Carlo check of the certificate from one initial state."""

    runs: int
    successes: int
    empirical: float
    stderr: float
    ci_low: float            # two-sided 95% Clopper-Pearson on empirical
    ci_high: float
    certified: float
    confidence: Optional[float]
    verdict: bool            # empirical + 2 stderr >= certified
    n_critical: int
    n_timeout: int

    def to_dict(self) -> dict:
        return {
            "runs": self.runs,
            "successes": self.successes,
            "empirical": self.empirical,
            "stderr": self.stderr,
            "ci95_low": self.ci_low,
            "ci95_high": self.ci_high,
            "certified": self.certified,
            "confidence": self.confidence,
            "verdict": "pass" if self.verdict else "fail",
            "n_critical": self.n_critical,
            "n_timeout": self.n_timeout,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)


def rollout_many(sys: LinearSystem, ctrl: FeedbackController, x0,
                 horizon: int, runs: int, seed: int):
    """Outcome codes (0 timeout, 1 goal, 2 critical) for `runs` rollouts.

    Noise for all runs and steps is pre-drawn from one generator derived
    from the seed, so results are reproducible and independent of any
    execution order inside the kernel.
    """
    part = ctrl.partition
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(0,)))
    noise = np.ascontiguousarray(
        sys.noise.sample(rng, runs * horizon).reshape(runs, horizon, sys.n)
    )
    outcome = np.zeros(runs, dtype=np.int64)
    outcome_step = np.zeros(runs, dtype=np.int64)
    policy = ctrl.policy
    if policy.shape[0] < horizon:  # beyond the solved horizon: undefined
        pad = np.full((horizon - policy.shape[0], policy.shape[1]), -1, dtype=np.int64)
        policy = np.vstack([policy, pad])
    _kernels.rollout_outcomes(
        x0, policy[:horizon], ctrl.targets,
        np.asarray(sys.A), np.asarray(sys.B), np.asarray(ctrl.B_pinv),
        np.asarray(sys.q), np.asarray(sys.u_lo), np.asarray(sys.u_hi), STEER_TOL,
        part.lo, part.hi, np.asarray(part.widths), part.counts,
        np.asarray(part.strides), part.labels, noise, outcome, outcome_step,
    )
    return outcome, outcome_step


def validate(sys: LinearSystem, ctrl: FeedbackController, x0,
             horizon: int, runs: int, seed: int) -> ValidationReport:
    """Monte Carlo validation of the reach-avoid certificate.

    Success means reaching a goal region within the horizon without
    entering a critical region or leaving the domain. The verdict passes
    when the empirical rate plus two binomial standard errors is at least
    the certified bound.
    """
    if runs < 1:
        raise ValueError("runs must be >= 1")
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if region_of(ctrl.partition, x0) == OUTSIDE:
        raise ValueError(f"initial state {x0} lies outside the domain")
    outcome, _steps = rollout_many(sys, ctrl, x0, horizon, runs, seed)
    successes = int(np.sum(outcome == 1))
    p_hat = successes / runs
    stderr = float(np.sqrt(p_hat * (1.0 - p_hat) / runs))
    ci = interval_from_counts(successes, runs, 0.05)
    certified = ctrl.certificate(x0)
    return ValidationReport(
        runs=runs,
        successes=successes,
        empirical=p_hat,
        stderr=stderr,
        ci_low=ci.low,
        ci_high=ci.high,
        certified=certified,
        confidence=ctrl.confidence,
        verdict=bool(p_hat + 2.0 * stderr >= certified - 1e-12),
        n_critical=int(np.sum(outcome == 2)),
        n_timeout=int(np.sum(outcome == 0)),
    )
