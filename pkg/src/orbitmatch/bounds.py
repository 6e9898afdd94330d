"""Constructive certificates: small-diameter partitions, visit-frequency bounds,
the partition upper bound on the sliding-window matching cost, and the
replication law for assignment problems.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .assignment import BRUTE_MAX, brute_force, solve_subset_dp
from .banach import EmpiricalMeasure, WindowSchedule, _window_means
from .orbitcost import ORBITS
from .spaces import ONE, FullShift, Point, Rotation, SystemSpec, point_coords, pairwise_distances

log = logging.getLogger(__name__)


# ---------------------------------------------------------------------------
# cells


@dataclass(frozen=True)
class Arc:
    """Half-open arc [start, start + width) of the circle, both in 2^-64 units."""

    start: int
    width: int

    def __post_init__(self):
        if not 0 < self.width <= ONE or not 0 <= self.start < ONE:
            raise ValueError(f"bad arc start={self.start} width={self.width}")

    @property
    def diameter(self) -> float:
        return min(self.width / ONE, 0.5)

    def contains(self, coords: np.ndarray) -> np.ndarray:
        if self.width == ONE:
            return np.ones(len(coords), dtype=bool)
        return (coords - np.uint64(self.start)) < np.uint64(self.width)

    def disjoint(self, other: "Arc") -> bool:
        # the offset of other's start from self's start, both ways round
        d1 = (other.start - self.start) % ONE
        d2 = (self.start - other.start) % ONE
        return d1 >= self.width and d2 >= other.width

    def describe(self) -> str:
        return f"arc[{self.start / ONE:.6g},{(self.start + self.width) / ONE:.6g})"


@dataclass(frozen=True)
class Cylinder:
    prefix: str

    def __post_init__(self):
        if len(self.prefix) > 64 or set(self.prefix) - {"0", "1"}:
            raise ValueError(f"bad cylinder prefix {self.prefix!r}")

    @property
    def diameter(self) -> float:
        return 2.0 ** -len(self.prefix)

    def contains(self, keys: np.ndarray) -> np.ndarray:
        if not self.prefix:
            return np.ones(len(keys), dtype=bool)
        return (keys >> np.uint64(64 - len(self.prefix))) == np.uint64(int(self.prefix, 2))

    def disjoint(self, other: "Cylinder") -> bool:
        a, b = self.prefix, other.prefix
        return not (a.startswith(b) or b.startswith(a))

    def describe(self) -> str:
        return f"[{self.prefix}]"


@dataclass(frozen=True)
class ProductCell:
    left: object
    right: object

    @property
    def diameter(self) -> float:
        return self.left.diameter + self.right.diameter

    def contains(self, coords) -> np.ndarray:
        return self.left.contains(coords[0]) & self.right.contains(coords[1])

    def disjoint(self, other: "ProductCell") -> bool:
        return self.left.disjoint(other.left) or self.right.disjoint(other.right)

    def describe(self) -> str:
        return f"{self.left.describe()}x{self.right.describe()}"


@dataclass(frozen=True)
class Complement:
    """Everything outside ``cell``; its diameter is taken to be the space diameter."""

    cell: object
    diameter: float

    def contains(self, coords) -> np.ndarray:
        return ~self.cell.contains(coords)

    def describe(self) -> str:
        return f"not {self.cell.describe()}"


def _cell_matches(system: SystemSpec, cell) -> bool:
    if isinstance(cell, Complement):
        return _cell_matches(system, cell.cell)
    if isinstance(system, Rotation):
        return isinstance(cell, Arc)
    if isinstance(system, FullShift):
        return isinstance(cell, Cylinder)
    return (isinstance(cell, ProductCell) and _cell_matches(system.left, cell.left)
            and _cell_matches(system.right, cell.right))


# ---------------------------------------------------------------------------
# partitions


@dataclass(frozen=True)
class Partition:
    cells: tuple
    eps: float
    covered_mass: float

    def pairwise_disjoint(self) -> bool:
        cells = self.cells
        return all(cells[i].disjoint(cells[j]) for i in range(len(cells)) for j in range(i))


def _arcs(count: int) -> list:
    edges = [k * ONE // count for k in range(count + 1)]
    return [Arc(a, b - a) for a, b in zip(edges, edges[1:])]


def _cells(system: SystemSpec, atoms, eps: float) -> list:
    if isinstance(system, Rotation):
        return _arcs(math.ceil(1 / eps))
    if isinstance(system, FullShift):
        depth = max(1, math.ceil(math.log2(1 / eps)))
        if depth > 64:
            raise ValueError("eps is below the 64-symbol resolution of the shift metric")
        prefixes = np.unique(atoms >> np.uint64(64 - depth))
        return [Cylinder(format(int(p), f"0{depth}b")) for p in prefixes]
    left = _cells(system.left, atoms[0], eps / 2)
    right = _cells(system.right, atoms[1], eps / 2)
    cells = [ProductCell(a, b) for a in left for b in right]
    return [c for c in cells if c.contains(atoms).any()]


def build_partition(mu: EmpiricalMeasure, eps: float) -> Partition:
    """Disjoint cells of diameter <= eps carrying all of ``mu``'s atoms.

    Rotation: ceil(1/eps) equal arcs. FullShift: the depth-ceil(log2(1/eps))
    cylinders that contain an atom. Product: products of factor cells built
    at eps/2, restricted to occupied ones.
    """
    system = mu.system
    if not 0 < eps < system.diameter:
        raise ValueError(f"eps must lie in (0, {system.diameter}), got {eps}")
    cells = _cells(system, mu.atoms, eps)
    inside = np.zeros(mu.size, dtype=bool)
    for c in cells:
        inside |= c.contains(mu.atoms)
    return Partition(tuple(cells), eps, float(inside.mean()))


# ---------------------------------------------------------------------------
# visit frequencies and the partition bound


@dataclass(frozen=True)
class FrequencyBound:
    cell: object
    a: float
    lengths: tuple = ()


def visit_frequency_bound(system: SystemSpec, x: Point, cell, schedule: WindowSchedule | None = None,
                          windows=None) -> FrequencyBound:
    """Smallest visit frequency of ``cell`` over sampled windows.

    By default the windows are all sampled starts at the two largest schedule
    lengths; an explicit list of ``Window`` objects may be given instead.
    """
    if not _cell_matches(system, cell):
        raise TypeError(f"cell {cell!r} does not belong to {system.describe()}")
    schedule = schedule or WindowSchedule()
    if windows is None:
        coords = ORBITS.coords(system, x, 0, schedule.horizon)
        hits = cell.contains(coords).astype(np.float64)
        lengths = schedule.lengths[-2:]
        a = min(float(_window_means(hits, schedule.starts(L), L).min()) for L in lengths)
        return FrequencyBound(cell, a, tuple(lengths))
    freqs = []
    for w in windows:
        hits = cell.contains(ORBITS.coords(system, x, w.m, w.length))
        freqs.append(float(hits.mean()))
    return FrequencyBound(cell, min(freqs), tuple(sorted({w.length for w in windows})))


@dataclass(frozen=True)
class CertifiedBound:
    bound: float
    eps: float
    diameter: float
    weights: tuple  # per-cell a_s
    clamped: bool
    cells: tuple = field(default=(), repr=False)

    @property
    def mass(self) -> float:
        return min(1.0, sum(self.weights))

    def as_dict(self) -> dict:
        return {"bound": self.bound, "eps": self.eps, "M": self.diameter,
                "sum_a": sum(self.weights), "clamped": self.clamped,
                "cells": [{"cell": c.describe(), "a": a} for c, a in zip(self.cells, self.weights)]}


def certified_upper_bound(partition: Partition, bounds_x, bounds_y, M: float) -> CertifiedBound:
    """eps * sum(a) + M * (1 - sum(a)), with a_s the smaller of the two points' bounds per cell."""
    cells = partition.cells
    if len(bounds_x) != len(cells) or len(bounds_y) != len(cells):
        raise ValueError("need one frequency bound per cell for each point")
    for c, bx, by in zip(cells, bounds_x, bounds_y):
        if bx.cell != c or by.cell != c:
            raise ValueError("frequency bounds are not aligned with the partition cells")
        if c.diameter > partition.eps + 1e-15:
            raise ValueError(f"cell {c.describe()} has diameter {c.diameter} > eps = {partition.eps}")
    weights = tuple(min(bx.a, by.a) for bx, by in zip(bounds_x, bounds_y))
    total = sum(weights)
    clamped = total > 1.0
    if clamped:
        log.warning("visit-frequency bounds sum to %.6g > 1; clamping", total)
        total = 1.0
    bound = partition.eps * total + M * (1.0 - total)
    return CertifiedBound(bound, partition.eps, M, weights, clamped, cells)


def certify_pair(system: SystemSpec, x: Point, y: Point, eps: float,
                 schedule: WindowSchedule | None = None) -> CertifiedBound:
    """Partition from x's orbit over the horizon, frequencies for both points, then the bound."""
    from .banach import empirical_measure
    from .orbitcost import Window

    schedule = schedule or WindowSchedule()
    mu = empirical_measure(system, x, Window(0, schedule.horizon))
    part = build_partition(mu, eps)
    bx = [visit_frequency_bound(system, x, c, schedule) for c in part.cells]
    by = [visit_frequency_bound(system, y, c, schedule) for c in part.cells]
    return certified_upper_bound(part, bx, by, system.diameter)


# ---------------------------------------------------------------------------
# replication law


@dataclass(frozen=True)
class ReplicationReport:
    n: int
    copies: int
    base_total: float
    replicated_total: float
    ok: bool

    def __bool__(self):
        return self.ok


def _exhaustive(c: np.ndarray) -> float:
    if c.shape[0] <= BRUTE_MAX:
        return brute_force(c).total_cost
    return solve_subset_dp(c).total_cost


def replication_law_check(system: SystemSpec, xs, ys, copies: int, tol: float = 1e-9) -> ReplicationReport:
    """Check that repeating every point ``copies`` times multiplies the optimal total exactly.

    Both sides are solved exhaustively: permutation enumeration where it
    fits, otherwise dynamic programming over column subsets.
    """
    xs, ys = list(xs), list(ys)
    n = len(xs)
    if len(ys) != n:
        raise ValueError("point sequences differ in length")
    if not 2 <= n <= 5 or not 2 <= copies <= 3:
        raise ValueError(f"replication check needs 2 <= n <= 5 and 2 <= copies <= 3, got n={n}, l={copies}")
    base = pairwise_distances(system, point_coords(system, xs), point_coords(system, ys))
    rep = pairwise_distances(system, point_coords(system, xs * copies), point_coords(system, ys * copies))
    b = _exhaustive(base)
    r = _exhaustive(rep)
    return ReplicationReport(n, copies, b, r, abs(r - copies * b) <= tol)
