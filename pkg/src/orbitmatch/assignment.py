"""Minimum-cost perfect matchings between two equal-size point sets.

``solve_exact`` delegates to scipy's shortest-augmenting-path solver.
``brute_force`` and ``solve_subset_dp`` are independent exhaustive
oracles for small sizes. ``solve_line``, ``solve_circle`` and
``solve_ultrametric`` are exact O(L log L)-ish fast paths for the three metric
geometries of the zoo; ``solve_greedy`` is a flagged heuristic with a certified
suboptimality bound.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.optimize import linear_sum_assignment

from .spaces import ONE, circle_gap, shift_gap, word_key

TOL = 1e-12
BRUTE_MAX = 9
DP_MAX = 16

SOLVER_TAGS = ("exact", "brute", "dp", "line", "circle", "ultrametric", "greedy")


@dataclass(frozen=True, eq=False)
class Matching:
    """A permutation ``perm`` (x-side index i goes to y-side index perm[i]) and its cost."""

    perm: np.ndarray
    total_cost: float
    solver_tag: str
    gap_bound: float = 0.0

    @property
    def size(self) -> int:
        return len(self.perm)

    @property
    def average_cost(self) -> float:
        return self.total_cost / len(self.perm)

    @property
    def heuristic(self) -> bool:
        return self.gap_bound > 0.0


def as_cost_matrix(c) -> np.ndarray:
    """Validate and return a square float64 matrix with finite, nonnegative entries."""
    c = np.asarray(c, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1] or c.shape[0] < 1:
        raise ValueError(f"cost matrix must be square and nonempty, got shape {c.shape}")
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix has non-finite entries")
    if np.any(c < 0):
        raise ValueError("cost matrix has negative entries")
    return c


def matrix_total(c: np.ndarray, perm) -> float:
    perm = np.asarray(perm)
    return float(c[np.arange(len(perm)), perm].sum())


def is_permutation(perm) -> bool:
    perm = np.asarray(perm)
    return perm.ndim == 1 and np.array_equal(np.sort(perm), np.arange(len(perm)))


# ---------------------------------------------------------------------------
# general matrices


def solve_exact(c) -> Matching:
    """Minimum-cost perfect matching via scipy's shortest augmenting path solver, O(L^3)."""
    c = as_cost_matrix(c)
    _, perm = linear_sum_assignment(c)
    perm = perm.astype(np.int64)
    return Matching(perm, matrix_total(c, perm), "exact")


@lru_cache(maxsize=BRUTE_MAX + 1)
def _all_perms(n: int) -> np.ndarray:
    return np.array(list(itertools.permutations(range(n))), dtype=np.int8).reshape(-1, n)


def brute_force(c) -> Matching:
    """Exhaustive minimum over all L! permutations; returns the lexicographically first optimum."""
    c = as_cost_matrix(c)
    n = c.shape[0]
    if n > BRUTE_MAX:
        raise ValueError(f"brute force is limited to L <= {BRUTE_MAX}, got {n}")
    perms = _all_perms(n)
    totals = c[np.arange(n), perms].sum(axis=1)
    best = totals.min()
    # first index within tolerance of the optimum = lexicographically smallest optimal perm
    k = int(np.flatnonzero(totals <= best + TOL)[0])
    perm = perms[k].astype(np.int64)
    return Matching(perm, matrix_total(c, perm), "brute")


def solve_subset_dp(c) -> Matching:
    """Exact minimum by dynamic programming over subsets of columns, O(2^L L).

    An exhaustive method independent of the Hungarian duals, usable up to L = 16.
    """
    c = as_cost_matrix(c)
    n = c.shape[0]
    if n > DP_MAX:
        raise ValueError(f"subset DP is limited to L <= {DP_MAX}, got {n}")
    size = 1 << n
    masks = np.arange(size)
    popcount = np.zeros(size, dtype=np.int64)
    for j in range(n):
        popcount += (masks >> j) & 1
    best = np.full(size, np.inf)
    choice = np.full(size, -1, dtype=np.int64)
    best[0] = 0.0
    # row i = popcount(mask) - 1 is matched to one of the columns in mask
    for k in range(1, n + 1):
        layer = masks[popcount == k]
        row = k - 1
        for j in range(n):
            bit = 1 << j
            has = layer[(layer & bit) != 0]
            cand = best[has ^ bit] + c[row, j]
            upd = cand < best[has]
            best[has[upd]] = cand[upd]
            choice[has[upd]] = j
    perm = np.empty(n, dtype=np.int64)
    mask = size - 1
    for row in range(n - 1, -1, -1):
        j = choice[mask]
        perm[row] = j
        mask ^= 1 << j
    return Matching(perm, matrix_total(c, perm), "dp")


def solve_greedy(c, max_passes: int = 20) -> Matching:
    """Row-wise greedy assignment improved by pairwise swaps.

    ``gap_bound`` is ``total - lower`` where ``lower`` is the larger of the
    row-minimum and column-minimum sums, so it always dominates the true gap.
    """
    c = as_cost_matrix(c)
    n = c.shape[0]
    perm = np.empty(n, dtype=np.int64)
    taken = np.zeros(n, dtype=bool)
    for i in range(n):
        row = np.where(taken, np.inf, c[i])
        j = int(np.argmin(row))
        perm[i] = j
        taken[j] = True
    idx = np.arange(n)
    for _ in range(max_passes):
        improved = False
        for i in range(n):
            cur = c[idx, perm]
            # swapping columns of rows i and k
            delta = c[i, perm] + c[idx, perm[i]] - cur[i] - cur
            k = int(np.argmin(delta))
            if delta[k] < -TOL:
                perm[i], perm[k] = perm[k], perm[i]
                improved = True
        if not improved:
            break
    total = matrix_total(c, perm)
    lower = max(float(c.min(axis=1).sum()), float(c.min(axis=0).sum()))
    gap = total - lower
    return Matching(perm, total, "greedy", gap if gap > TOL else 0.0)


# ---------------------------------------------------------------------------
# metric fast paths


def _equal_lengths(xs, ys):
    if len(xs) != len(ys):
        raise ValueError(f"point sets differ in size: {len(xs)} vs {len(ys)}")
    if len(xs) == 0:
        raise ValueError("point sets are empty")


def _rank_match(ox: np.ndarray, oy: np.ndarray, offset: int = 0) -> np.ndarray:
    n = len(ox)
    perm = np.empty(n, dtype=np.int64)
    perm[ox] = oy[(np.arange(n) + offset) % n]
    return perm


def solve_line(xs, ys) -> Matching:
    """Match sorted ranks; optimal for |s - t| on the real line."""
    x = np.asarray(xs, dtype=np.float64)
    y = np.asarray(ys, dtype=np.float64)
    _equal_lengths(x, y)
    perm = _rank_match(np.argsort(x, kind="stable"), np.argsort(y, kind="stable"))
    return Matching(perm, float(np.abs(x - y[perm]).sum()), "line")


def _cyclic_offset(x_sorted: np.ndarray, y_sorted: np.ndarray) -> int:
    """Integer minimiser k of the integral over the circle of |A(t) - B(t) + k|.

    A and B count x and y points in [0, t]; any weighted median of A - B
    (weights = lengths of the arcs on which it is constant) works.
    """
    pts = np.concatenate([x_sorted, y_sorted])
    sign = np.concatenate([np.ones(len(x_sorted), np.int64), -np.ones(len(y_sorted), np.int64)])
    order = np.argsort(pts, kind="stable")
    pts = pts[order]
    level = np.cumsum(sign[order])  # A - B on [pts[r], pts[r + 1])
    width = np.empty(len(pts))
    width[:-1] = np.diff(pts).astype(np.float64)
    # final arc wraps to pts[0]; A - B is 0 there
    width[-1] = float((int(pts[0]) - int(pts[-1])) % ONE)
    lv_order = np.argsort(level, kind="stable")
    cum = np.cumsum(width[lv_order])
    r = int(np.searchsorted(cum, cum[-1] / 2.0))
    return -int(level[lv_order[min(r, len(cum) - 1)]])


def solve_circle(xs, ys) -> Matching:
    """Exact matching for the circle metric on 64-bit fractions.

    Some optimal matching pairs sorted ranks up to a cyclic offset; the offset is
    a weighted median of the counting-function difference. Neighbouring offsets
    are also evaluated and the cheapest is kept.
    """
    x = np.asarray(xs, dtype=np.uint64)
    y = np.asarray(ys, dtype=np.uint64)
    _equal_lengths(x, y)
    n = len(x)
    ox = np.argsort(x, kind="stable")
    oy = np.argsort(y, kind="stable")
    k = _cyclic_offset(x[ox], y[oy])
    best = None
    for off in sorted({(k + d) % n for d in (-1, 0, 1)}):
        perm = _rank_match(ox, oy, off)
        total = float(circle_gap(x, y[perm]).sum())
        if best is None or total < best[1] - TOL:
            best = (perm, total)
    return Matching(best[0], best[1], "circle")


def _keys(points) -> np.ndarray:
    if isinstance(points, np.ndarray) and points.dtype == np.uint64:
        return points
    return np.array([word_key(w) for w in points], dtype=np.uint64)


def _bit_length(v: np.ndarray) -> np.ndarray:
    # 32-bit halves convert to float64 exactly, so frexp gives exact exponents
    hi = np.frexp((v >> np.uint64(32)).astype(np.float64))[1]
    lo = np.frexp((v & np.uint64(0xFFFFFFFF)).astype(np.float64))[1]
    return np.where(hi > 0, hi + 32, lo)


def _deepest_shared_prefix(a: np.ndarray, b: np.ndarray) -> int:
    sb = np.sort(b)
    i = np.searchsorted(sb, a)
    # the longest common prefix with any key of b is attained at a sorted neighbour
    nxt = sb[np.minimum(i, len(sb) - 1)]
    prv = sb[np.maximum(i - 1, 0)]
    return int(64 - min(_bit_length(a ^ nxt).min(), _bit_length(a ^ prv).min()))


def solve_ultrametric(xs, ys) -> Matching:
    """Exact matching for the shift metric by bottom-up greedy matching in the prefix trie.

    Inputs are Words or their 64-symbol ``uint64`` keys. At depth p (from 64
    down to 0) unmatched points sharing a length-p prefix are paired off as far
    as possible; leftovers move up to depth p - 1. Pairs formed at depth p < 64
    disagree exactly at symbol p.
    """
    x = _keys(xs)
    y = _keys(ys)
    _equal_lengths(x, y)
    n = len(x)
    perm = np.full(n, -1, dtype=np.int64)
    rx = np.arange(n)
    ry = np.arange(n)
    while len(rx):
        # levels where no remaining pair shares a prefix are skipped outright
        depth = _deepest_shared_prefix(x[rx], y[ry])
        if depth == 0:
            px = np.zeros(len(rx), dtype=np.uint64)
            py = np.zeros(len(ry), dtype=np.uint64)
        else:
            sh = np.uint64(64 - depth)
            px = x[rx] >> sh
            py = y[ry] >> sh
        sx = np.argsort(px, kind="stable")
        sy = np.argsort(py, kind="stable")
        px = px[sx]
        py = py[sy]
        rank = np.arange(len(px)) - np.searchsorted(px, px, "left")
        lo = np.searchsorted(py, px, "left")
        hi = np.searchsorted(py, px, "right")
        pos = lo + rank
        ok = pos < hi
        mx = rx[sx[ok]]
        my = ry[sy[pos[ok]]]
        perm[mx] = my
        keep_x = np.ones(len(rx), dtype=bool)
        keep_x[sx[ok]] = False
        keep_y = np.ones(len(ry), dtype=bool)
        keep_y[sy[pos[ok]]] = False
        rx = rx[keep_x]
        ry = ry[keep_y]
    return Matching(perm, float(shift_gap(x, y[perm]).sum()), "ultrametric")
