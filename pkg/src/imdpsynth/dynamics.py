"""Discrete-time linear stochastic dynamics.

The plant model is

    x_{k+1} = A x_k + B u_k + q + eta_k,      u_k in U = [u_lo, u_hi]

with i.i.d. additive noise eta_k drawn from a :class:`NoiseModel`. Noise
models expose *samples only* (no densities, no moments), so nothing built
on top of them can accidentally exploit distribution knowledge.

Besides stepping and simulation, this module provides the exact-steering
input law ``u* = B_pinv (d - A x - q)`` that drives the noiseless system
onto a target point in one step, and time-lifting, which groups ``s``
consecutive steps so the lifted input matrix gains full row rank.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Callable, Optional

import numpy as np

STEER_TOL = 1e-9  # absolute tolerance on exact-steering residuals and U checks


class InputBoundsError(ValueError):
    """Control input violates the admissible box U beyond tolerance."""


class RankDeficiencyError(ValueError):
    """B lacks full row rank, so exact one-step steering is impossible."""


def rng_stream(master_seed: int, stream_index: int) -> np.random.Generator:
    """Independent child generator for stream ``stream_index``.

    Child streams are derived by keyed hashing of the master seed
    (SeedSequence spawn keys), so concurrent consumers never share state.
    """
    ss = np.random.SeedSequence(master_seed, spawn_key=(stream_index,))
    return np.random.default_rng(ss)


def _as_matrix(M, name: str) -> np.ndarray:
    M = np.asarray(M, dtype=float)
    if M.ndim != 2:
        raise ValueError(f"{name} must be a 2-D matrix, got shape {M.shape}")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains non-finite entries")
    return M


def _as_vector(v, name: str) -> np.ndarray:
    v = np.asarray(v, dtype=float).reshape(-1)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{name} contains non-finite entries")
    return v


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


# ---------------------------------------------------------------------------
# Noise models
# ---------------------------------------------------------------------------


class NoiseModel:
    """Seedable sampler for the additive process noise.

    Subclasses implement :meth:`sample`; given the same generator state the
    draw sequence is reproducible. The interface is intentionally
    samples-only.
    """

    dim: int

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> np.ndarray:
        """One draw of shape ``(dim,)``, or ``(size, dim)`` when size is given."""
        raise NotImplementedError


@dataclass(frozen=True)
class GaussianNoise(NoiseModel):
    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = _as_vector(self.mean, "mean")
        cov = _as_matrix(self.cov, "cov")
        if cov.shape != (mean.size, mean.size):
            raise ValueError("cov shape does not match mean")
        if not np.allclose(cov, cov.T, atol=1e-12):
            raise ValueError("cov must be symmetric")
        w = np.linalg.eigvalsh(cov)
        if w.min() < -1e-10 * max(1.0, w.max()):
            raise ValueError("cov must be positive semidefinite")
        object.__setattr__(self, "mean", _readonly(mean))
        object.__setattr__(self, "cov", _readonly(cov))

    @property
    def dim(self) -> int:
        return self.mean.size

    @cached_property
    def _factor(self) -> np.ndarray:
        # PSD-safe factor F with F F^T = cov (eigh handles singular cov,
        # e.g. the degenerate zero-noise case).
        w, V = np.linalg.eigh(self.cov)
        return V * np.sqrt(np.clip(w, 0.0, None))

    def sample(self, rng, size=None):
        z = rng.standard_normal((self.dim,) if size is None else (size, self.dim))
        return self.mean + z @ self._factor.T


@dataclass(frozen=True)
class UniformBoxNoise(NoiseModel):
    lo: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lo, "lo")
        hi = _as_vector(self.hi, "hi")
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError("need lo <= hi componentwise")
        object.__setattr__(self, "lo", _readonly(lo))
        object.__setattr__(self, "hi", _readonly(hi))

    @property
    def dim(self) -> int:
        return self.lo.size

    def sample(self, rng, size=None):
        shape = (self.dim,) if size is None else (size, self.dim)
        return rng.uniform(self.lo, self.hi, size=shape)


@dataclass(frozen=True)
class TriangularNoise(NoiseModel):
    """Product of independent per-dimension triangular distributions."""

    lo: np.ndarray
    mode: np.ndarray
    hi: np.ndarray

    def __post_init__(self):
        lo = _as_vector(self.lo, "lo")
        mode = _as_vector(self.mode, "mode")
        hi = _as_vector(self.hi, "hi")
        if not (lo.shape == mode.shape == hi.shape):
            raise ValueError("lo/mode/hi shapes differ")
        if np.any(lo > mode) or np.any(mode > hi):
            raise ValueError("need lo <= mode <= hi componentwise")
        object.__setattr__(self, "lo", _readonly(lo))
        object.__setattr__(self, "mode", _readonly(mode))
        object.__setattr__(self, "hi", _readonly(hi))

    @property
    def dim(self) -> int:
        return self.lo.size

    def sample(self, rng, size=None):
        shape = (self.dim,) if size is None else (size, self.dim)
        out = np.empty(shape)
        degenerate = self.hi - self.lo <= 0.0
        for d in range(self.dim):
            if degenerate[d]:
                out[..., d] = self.lo[d]
            else:
                out[..., d] = rng.triangular(
                    self.lo[d], self.mode[d], self.hi[d], size=shape[:-1] or None
                )
        return out


@dataclass(frozen=True)
class MixtureNoise(NoiseModel):
    weights: np.ndarray
    components: tuple

    def __post_init__(self):
        w = _as_vector(self.weights, "weights")
        comps = tuple(self.components)
        if len(comps) != w.size or w.size == 0:
            raise ValueError("weights and components must align and be nonempty")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
            raise ValueError("weights must be nonnegative and sum to 1 within 1e-12")
        dims = {c.dim for c in comps}
        if len(dims) != 1:
            raise ValueError("mixture components must share one dimension")
        object.__setattr__(self, "weights", _readonly(w))
        object.__setattr__(self, "components", comps)

    @property
    def dim(self) -> int:
        return self.components[0].dim

    def sample(self, rng, size=None):
        n = 1 if size is None else size
        picks = rng.choice(len(self.components), size=n, p=self.weights)
        out = np.empty((n, self.dim))
        for c, comp in enumerate(self.components):
            mask = picks == c
            cnt = int(mask.sum())
            if cnt:
                out[mask] = comp.sample(rng, cnt)
        return out[0] if size is None else out


@dataclass(frozen=True)
class LiftedNoise(NoiseModel):
    """Noise of the s-step lifted system: sum_i A^(s-1-i) eta_i."""

    base: NoiseModel
    A: np.ndarray
    steps: int

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        if self.steps < 1:
            raise ValueError("steps must be >= 1")
        object.__setattr__(self, "A", _readonly(A))

    @property
    def dim(self) -> int:
        return self.base.dim

    @cached_property
    def _powers(self) -> np.ndarray:
        # powers[i] = A^(steps-1-i)
        out = np.empty((self.steps, self.dim, self.dim))
        out[self.steps - 1] = np.eye(self.dim)
        for i in range(self.steps - 2, -1, -1):
            out[i] = out[i + 1] @ self.A
        return out

    def sample(self, rng, size=None):
        n = 1 if size is None else size
        draws = self.base.sample(rng, n * self.steps).reshape(n, self.steps, self.dim)
        out = np.zeros((n, self.dim))
        for i in range(self.steps):
            out += draws[:, i, :] @ self._powers[i].T
        return out[0] if size is None else out


# ---------------------------------------------------------------------------
# System
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class LinearSystem:
    """x_{k+1} = A x_k + B u_k + q + eta_k with box-constrained input."""

    A: np.ndarray
    B: np.ndarray
    q: np.ndarray
    u_lo: np.ndarray
    u_hi: np.ndarray
    noise: NoiseModel

    def __post_init__(self):
        A = _as_matrix(self.A, "A")
        B = _as_matrix(self.B, "B")
        q = _as_vector(self.q, "q")
        u_lo = _as_vector(self.u_lo, "u_lo")
        u_hi = _as_vector(self.u_hi, "u_hi")
        n = A.shape[0]
        if A.shape != (n, n):
            raise ValueError("A must be square")
        if B.shape[0] != n:
            raise ValueError("B row count must match state dimension")
        if q.size != n:
            raise ValueError("q length must match state dimension")
        p = B.shape[1]
        if u_lo.size != p or u_hi.size != p:
            raise ValueError("input bounds must match input dimension")
        if np.any(u_lo > u_hi):
            raise ValueError("need u_lo <= u_hi componentwise")
        if self.noise.dim != n:
            raise ValueError("noise dimension must match state dimension")
        for name, arr in (("A", A), ("B", B), ("q", q), ("u_lo", u_lo), ("u_hi", u_hi)):
            object.__setattr__(self, name, _readonly(arr))

    @property
    def n(self) -> int:
        return self.A.shape[0]

    @property
    def p(self) -> int:
        return self.B.shape[1]

    @cached_property
    def B_pinv(self) -> np.ndarray:
        return _readonly(np.linalg.pinv(self.B))

    def has_full_row_rank(self, tol: float = STEER_TOL) -> bool:
        return bool(np.max(np.abs(self.B @ self.B_pinv - np.eye(self.n))) <= tol)

    def input_feasible(self, u: np.ndarray, tol: float = STEER_TOL) -> bool:
        u = np.asarray(u, dtype=float).reshape(-1)
        return bool(np.all(u >= self.u_lo - tol) and np.all(u <= self.u_hi + tol))


@dataclass(frozen=True)
class Trace:
    """Closed-loop simulation record.

    ``outcome`` is one of ``reached_goal``, ``hit_critical``, ``timeout``;
    ``step`` is the time index at which the outcome was decided.
    """

    states: np.ndarray   # (T+1, n)
    inputs: np.ndarray   # (T, p)
    outcome: str
    step: int

    def __post_init__(self):
        if self.states.shape[0] != self.inputs.shape[0] + 1:
            raise ValueError("need len(states) == len(inputs) + 1")
        if self.outcome not in ("reached_goal", "hit_critical", "timeout"):
            raise ValueError(f"unknown outcome {self.outcome!r}")

    @property
    def success(self) -> bool:
        return self.outcome == "reached_goal"


def step(sys: LinearSystem, x, u, rng: np.random.Generator) -> np.ndarray:
    """One noisy step of the plant. Raises if u leaves U beyond tolerance."""
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if not sys.input_feasible(u):
        raise InputBoundsError(f"input {u} outside [{sys.u_lo}, {sys.u_hi}]")
    return sys.A @ x + sys.B @ u + sys.q + sys.noise.sample(rng)


def step_deterministic(sys: LinearSystem, x, u) -> np.ndarray:
    """Noise-free mean dynamics (eta = 0)."""
    x = np.asarray(x, dtype=float).reshape(-1)
    u = np.asarray(u, dtype=float).reshape(-1)
    if not sys.input_feasible(u):
        raise InputBoundsError(f"input {u} outside [{sys.u_lo}, {sys.u_hi}]")
    return sys.A @ x + sys.B @ u + sys.q


def input_for_target(sys: LinearSystem, x, d) -> np.ndarray:
    """Minimum-norm input steering the noiseless system from x onto d.

    Uses the Moore-Penrose pseudoinverse, so among all exact solutions the
    least-norm one is returned. Feasibility w.r.t. U is NOT checked here.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    d = np.asarray(d, dtype=float).reshape(-1)
    u = sys.B_pinv @ (d - sys.A @ x - sys.q)
    residual = np.max(np.abs(sys.A @ x + sys.B @ u + sys.q - d))
    if residual > STEER_TOL:
        raise RankDeficiencyError(
            f"target unreachable in one step (residual {residual:.3e}); "
            "B lacks full row rank -- consider lift()"
        )
    return u


def lift(sys: LinearSystem, steps: int) -> LinearSystem:
    """Group ``steps`` consecutive time steps into one macro step.

    The lifted system has A_bar = A^s, B_bar = [A^(s-1)B | ... | AB | B],
    q_bar = sum_i A^i q, the s-fold product input box, and noise
    sum_i A^(s-1-i) eta_i. Lifting with steps=1 returns the system itself.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    if steps == 1:
        return sys
    n, p = sys.n, sys.p
    A_pows = [np.eye(n)]
    for _ in range(steps):
        A_pows.append(A_pows[-1] @ sys.A)
    A_bar = A_pows[steps]
    B_bar = np.hstack([A_pows[steps - 1 - i] @ sys.B for i in range(steps)])
    q_bar = sum(A_pows[i] @ sys.q for i in range(steps))
    return LinearSystem(
        A=A_bar,
        B=B_bar,
        q=q_bar,
        u_lo=np.tile(sys.u_lo, steps),
        u_hi=np.tile(sys.u_hi, steps),
        noise=LiftedNoise(sys.noise, sys.A, steps),
    )


def simulate(
    sys: LinearSystem,
    controller: Callable[[np.ndarray, int], Optional[np.ndarray]],
    x0,
    horizon: int,
    goal: Callable[[np.ndarray], bool],
    unsafe: Callable[[np.ndarray], bool],
    rng: np.random.Generator,
) -> Trace:
    """Closed-loop rollout until goal, unsafe set, or the horizon.

    The controller maps (state, time) to an input or None; None and
    infeasible inputs terminate the trace as a timeout (conservative).
    ``unsafe`` should cover both critical regions and exit from the
    modeled domain.
    """
    x = np.asarray(x0, dtype=float).reshape(-1)
    states = [x]
    inputs: list[np.ndarray] = []

    def _finish(outcome: str, step_idx: int) -> Trace:
        return Trace(
            states=np.asarray(states),
            inputs=np.asarray(inputs).reshape(len(inputs), sys.p),
            outcome=outcome,
            step=step_idx,
        )

    for k in range(horizon + 1):
        if goal(x):
            return _finish("reached_goal", k)
        if unsafe(x):
            return _finish("hit_critical", k)
        if k == horizon:
            return _finish("timeout", k)
        u = controller(x, k)
        if u is None:
            return _finish("timeout", k)
        u = np.asarray(u, dtype=float).reshape(-1)
        if not sys.input_feasible(u):
            return _finish("timeout", k)
        x = step(sys, x, u, rng)
        inputs.append(u)
        states.append(x)
    raise AssertionError("unreachable")
