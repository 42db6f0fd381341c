"""Axis-aligned grid partition of a bounded state-space domain.

Cells are half-open ``[l, u)`` in every dimension except the topmost cell
per dimension, which is closed, so point location is a total, deterministic
function on the domain. Region ids are flat indices in row-major order
(first dimension slowest). Points outside the domain map to ``OUTSIDE``.

Goal/critical labels are attached per cell from user-supplied boxes. The
default modes err on the sound side: goal cells must be *contained* in a
goal box (under-approximate the good set) while critical cells merely need
*interior overlap* with a critical box (over-approximate the bad set);
cells matching both are labeled critical.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace
from functools import cached_property

import numpy as np

OUTSIDE = -1


@dataclass(frozen=True)
class Partition:
    lo: np.ndarray
    hi: np.ndarray
    counts: np.ndarray
    goal_regions: frozenset = frozenset()
    critical_regions: frozenset = frozenset()

    def __post_init__(self):
        lo = np.asarray(self.lo, dtype=float).reshape(-1)
        hi = np.asarray(self.hi, dtype=float).reshape(-1)
        counts = np.asarray(self.counts, dtype=np.int64).reshape(-1)
        if lo.shape != hi.shape or lo.shape != counts.shape:
            raise ValueError("lo, hi and counts must have matching lengths")
        if not (np.all(np.isfinite(lo)) and np.all(np.isfinite(hi))):
            raise ValueError("domain bounds must be finite")
        if np.any(lo >= hi):
            raise ValueError("need lo < hi componentwise")
        if np.any(counts < 1):
            raise ValueError("cell counts must be positive")
        for a in (lo, hi, counts):
            a.flags.writeable = False
        object.__setattr__(self, "lo", lo)
        object.__setattr__(self, "hi", hi)
        object.__setattr__(self, "counts", counts)
        goal = frozenset(int(r) for r in self.goal_regions)
        crit = frozenset(int(r) for r in self.critical_regions)
        nr = int(np.prod(counts))
        for r in goal | crit:
            if not 0 <= r < nr:
                raise ValueError(f"label region id {r} out of range")
        if goal & crit:
            raise ValueError("goal and critical labels must be disjoint")
        object.__setattr__(self, "goal_regions", goal)
        object.__setattr__(self, "critical_regions", crit)

    @property
    def n(self) -> int:
        return self.lo.size

    @property
    def num_regions(self) -> int:
        return int(np.prod(self.counts))

    @cached_property
    def widths(self) -> np.ndarray:
        w = (self.hi - self.lo) / self.counts
        w.flags.writeable = False
        return w

    @cached_property
    def strides(self) -> np.ndarray:
        # row-major: first dimension slowest
        s = np.ones(self.n, dtype=np.int64)
        for d in range(self.n - 2, -1, -1):
            s[d] = s[d + 1] * self.counts[d + 1]
        s.flags.writeable = False
        return s

    @cached_property
    def labels(self) -> np.ndarray:
        """Per-region label codes: 0 plain, 1 goal, 2 critical."""
        lab = np.zeros(self.num_regions, dtype=np.int8)
        if self.goal_regions:
            lab[sorted(self.goal_regions)] = 1
        if self.critical_regions:
            lab[sorted(self.critical_regions)] = 2
        lab.flags.writeable = False
        return lab


def region_id(part: Partition, idx) -> int:
    """Flat region id from per-dimension indices."""
    return int(np.ravel_multi_index(tuple(int(i) for i in idx), tuple(part.counts)))


def region_index(part: Partition, rid: int) -> tuple:
    """Per-dimension indices from a flat region id."""
    if not 0 <= rid < part.num_regions:
        raise ValueError(f"region id {rid} out of range")
    return tuple(int(i) for i in np.unravel_index(rid, tuple(part.counts)))


def region_of(part: Partition, x) -> int:
    """Region id containing x, or OUTSIDE. Total on the closed domain."""
    x = np.asarray(x, dtype=float).reshape(-1)
    if np.any(x < part.lo) or np.any(x > part.hi):
        return OUTSIDE
    idx = np.floor((x - part.lo) / part.widths).astype(np.int64)
    np.minimum(idx, part.counts - 1, out=idx)  # closed top cells
    return int(idx @ part.strides)


def region_of_many(part: Partition, points: np.ndarray) -> np.ndarray:
    """Vectorized region_of: (M, n) points to (M,) ids with OUTSIDE = -1."""
    points = np.asarray(points, dtype=float)
    idx = np.floor((points - part.lo) / part.widths).astype(np.int64)
    np.minimum(idx, part.counts - 1, out=idx)
    ids = idx @ part.strides
    inside = np.all(points >= part.lo, axis=1) & np.all(points <= part.hi, axis=1)
    ids[~inside] = OUTSIDE
    return ids


def _cell_edges(part: Partition, d: int) -> np.ndarray:
    """Cell edges in dimension d; the top edge is exactly hi[d]."""
    edges = part.lo[d] + np.arange(part.counts[d] + 1) * part.widths[d]
    edges[-1] = part.hi[d]
    return edges


def region_box(part: Partition, rid: int):
    """Bounding box (lo, hi) of a cell; top cells snap to the domain edge."""
    idx = np.asarray(region_index(part, rid), dtype=np.int64)
    lo = part.lo + idx * part.widths
    hi = part.lo + (idx + 1) * part.widths
    top = idx == part.counts - 1
    hi[top] = part.hi[top]
    return lo, hi


def region_center(part: Partition, rid: int) -> np.ndarray:
    lo, hi = region_box(part, rid)
    return 0.5 * (lo + hi)


def region_centers(part: Partition) -> np.ndarray:
    """Centers of all cells, row-major, shape (num_regions, n)."""
    axes = [0.5 * (_cell_edges(part, d)[:-1] + _cell_edges(part, d)[1:]) for d in range(part.n)]
    grids = np.meshgrid(*axes, indexing="ij")
    return np.stack([g.ravel() for g in grids], axis=1)


def region_vertices(part: Partition, rid: int) -> np.ndarray:
    """All 2^n corners, in lexicographic order of the corner bitmask."""
    lo, hi = region_box(part, rid)
    return np.array(list(itertools.product(*zip(lo, hi))))


def grid_vertices(part: Partition):
    """All distinct cell corners of the grid.

    Returns (V, vshape) where V has shape (prod(counts+1), n) and row-major
    flat order over vshape = counts + 1. Shared corners let the enabled-
    action vertex test run once per grid point instead of 2^n times per
    cell.
    """
    axes = [_cell_edges(part, d) for d in range(part.n)]
    grids = np.meshgrid(*axes, indexing="ij")
    V = np.stack([g.ravel() for g in grids], axis=1)
    return V, tuple(int(c) + 1 for c in part.counts)


def _boxes_array(boxes) -> list:
    out = []
    for b in boxes:
        lo = np.asarray(b[0], dtype=float).reshape(-1)
        hi = np.asarray(b[1], dtype=float).reshape(-1)
        if lo.shape != hi.shape or np.any(lo > hi):
            raise ValueError(f"malformed box ({b[0]}, {b[1]})")
        out.append((lo, hi))
    return out


def _match_mask(part: Partition, boxes, mode: str) -> np.ndarray:
    """Boolean per-region mask of cells related to any box under mode."""
    if mode not in ("contained", "intersecting"):
        raise ValueError(f"unknown labeling mode {mode!r}")
    mask = np.zeros(tuple(part.counts), dtype=bool)
    for blo, bhi in _boxes_array(boxes):
        if blo.size != part.n:
            raise ValueError("box dimension does not match partition")
        m = np.ones((), dtype=bool)
        for d in range(part.n):
            edges = _cell_edges(part, d)
            cell_lo, cell_hi = edges[:-1], edges[1:]
            if mode == "contained":
                ok = (cell_lo >= blo[d]) & (cell_hi <= bhi[d])
            else:  # interior intersection: zero-measure contact does not count
                ok = np.maximum(cell_lo, blo[d]) < np.minimum(cell_hi, bhi[d])
            shape = [1] * part.n
            shape[d] = part.counts[d]
            m = m & ok.reshape(shape)
        mask |= m
    return mask.reshape(tuple(part.counts))


def label_regions(
    part: Partition,
    goal_boxes,
    critical_boxes,
    goal_mode: str = "contained",
    critical_mode: str = "intersecting",
) -> Partition:
    """Partition with goal/critical labels derived from boxes.

    A cell matching both label sets is labeled critical only
    (safety-conservative).
    """
    goal_mask = _match_mask(part, goal_boxes, goal_mode)
    crit_mask = _match_mask(part, critical_boxes, critical_mode)
    goal_mask &= ~crit_mask
    goal = frozenset(int(r) for r in np.flatnonzero(goal_mask.ravel(order="C")))
    crit = frozenset(int(r) for r in np.flatnonzero(crit_mask.ravel(order="C")))
    return replace(part, goal_regions=goal, critical_regions=crit)
