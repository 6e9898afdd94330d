"""Windowed orbit-matching cost and exact finite-window axiom checks.

For a window [m, n) the cost is

    c(x, y; m, n) = min over permutations s of [m, n) of (1/(n-m)) sum_k d(T^k x, T^s(k) y)

computed on cached orbit coordinates with the solver chosen by the policy.
"""
from __future__ import annotations

import threading
from dataclasses import dataclass, field

import numpy as np

from . import assignment
from .assignment import Matching
from .spaces import (GUARD, FullShift, Point, Product, Rotation, SystemSpec, coords_len,
                     coords_slice, iterate, orbit_coords, pairwise_distances)

EXACT_MAX = 512
POLICIES = ("auto", "exact", "fast")
TOL = 1e-9


@dataclass(frozen=True)
class Window:
    m: int
    n: int

    def __post_init__(self):
        if self.m < 0 or self.n <= self.m:
            raise ValueError(f"invalid window [{self.m}, {self.n})")

    @property
    def length(self) -> int:
        return self.n - self.m

    @classmethod
    def of(cls, m: int, length: int) -> "Window":
        return cls(m, m + length)


@dataclass(frozen=True, eq=False)
class WindowCost:
    window: Window
    cost: float
    matching: Matching = field(repr=False)

    @property
    def solver_tag(self) -> str:
        return self.matching.solver_tag

    @property
    def gap_bound(self) -> float:
        return self.matching.gap_bound


class OrbitCache:
    """Orbit coordinates keyed by (system, base point), grown by doubling.

    Reads of an already-materialised prefix take no lock; population is
    serialised.
    """

    def __init__(self, max_entries: int = 256):
        self._data: dict = {}
        self._lock = threading.Lock()
        self.max_entries = max_entries

    def coords(self, system: SystemSpec, base: Point, m: int, length: int):
        key = (system, base)
        need = m + length
        got = self._data.get(key)
        if got is None or coords_len(got) < need:
            with self._lock:
                got = self._data.get(key)
                if got is None or coords_len(got) < need:
                    have = 0 if got is None else coords_len(got)
                    size = max(need, 2 * have, 1024)
                    got = orbit_coords(system, base, 0, _clip(system, base, size, need))
                    if len(self._data) >= self.max_entries:
                        self._data.pop(next(iter(self._data)))
                    self._data[key] = got
        return coords_slice(got, m, m + length)

    def clear(self):
        with self._lock:
            self._data.clear()


def _clip(system: SystemSpec, base: Point, size: int, need: int) -> int:
    """Largest materialisable length in [need, size]; shift words are bounded by capacity."""
    if isinstance(system, FullShift):
        return max(need, min(size, len(base.symbols) - GUARD))
    if isinstance(system, Product):
        return min(_clip(system.left, base.left, size, need), _clip(system.right, base.right, size, need))
    return size


ORBITS = OrbitCache()


def fast_path(system: SystemSpec) -> str | None:
    if isinstance(system, Rotation):
        return "circle"
    if isinstance(system, FullShift):
        return "ultrametric"
    return None


def solve_coords(system: SystemSpec, a, b, policy: str = "auto") -> Matching:
    """Minimum matching between two coordinate arrays of the same system.

    ``auto``: metric fast path if the system has one, Hungarian up to
    ``EXACT_MAX`` points, flagged greedy beyond. ``exact``: Hungarian always.
    ``fast``: fast path if available, else greedy.
    """
    if policy not in POLICIES:
        raise ValueError(f"unknown solver policy {policy!r}; expected one of {POLICIES}")
    size = coords_len(a)
    route = fast_path(system) if policy != "exact" else None
    if route == "circle":
        return assignment.solve_circle(a, b)
    if route == "ultrametric":
        return assignment.solve_ultrametric(a, b)
    c = pairwise_distances(system, a, b)
    if policy == "exact" or (policy == "auto" and size <= EXACT_MAX):
        return assignment.solve_exact(c)
    return assignment.solve_greedy(c)


def window_cost(system: SystemSpec, x: Point, y: Point, w: Window, policy: str = "auto",
                cache: OrbitCache | None = None) -> WindowCost:
    cache = ORBITS if cache is None else cache
    a = cache.coords(system, x, w.m, w.length)
    b = cache.coords(system, y, w.m, w.length)
    match = solve_coords(system, a, b, policy)
    return WindowCost(w, match.total_cost / w.length, match)


def window_matrix(system: SystemSpec, x: Point, y: Point, w: Window,
                  cache: OrbitCache | None = None) -> np.ndarray:
    """The L x L cost matrix d(T^(m+i) x, T^(m+j) y) of a window."""
    cache = ORBITS if cache is None else cache
    return pairwise_distances(system, cache.coords(system, x, w.m, w.length),
                              cache.coords(system, y, w.m, w.length))


# ---------------------------------------------------------------------------
# finite-window axiom checks


@dataclass(frozen=True)
class CheckReport:
    name: str
    ok: bool
    values: dict

    def __bool__(self):
        return self.ok


def check_symmetry(system, x, y, w: Window, policy="auto", tol=TOL) -> CheckReport:
    xy = window_cost(system, x, y, w, policy).cost
    yx = window_cost(system, y, x, w, policy).cost
    return CheckReport("symmetry", abs(xy - yx) <= tol, {"xy": xy, "yx": yx})


def check_triangle(system, x, y, z, w: Window, policy="auto", tol=TOL) -> CheckReport:
    xz = window_cost(system, x, z, w, policy).cost
    xy = window_cost(system, x, y, w, policy).cost
    yz = window_cost(system, y, z, w, policy).cost
    return CheckReport("triangle", xz <= xy + yz + tol, {"xz": xz, "xy": xy, "yz": yz})


def check_shift_drift(system, x, y, r: int, s: int, schedule, policy="auto",
                      tol=TOL) -> CheckReport:
    """Compare per-length estimates for (T^r x, T^s y) and (x, y).

    Moving r + s orbit points changes any window total by at most M (r + s),
    so at length L every sup/inf/tail statistic may drift by at most
    M (r + s) / L. The limit equality itself is only visible as a trend.
    """
    from .banach import estimate_bf

    if r < 0 or s < 0:
        raise ValueError("shifts must be nonnegative")
    base = estimate_bf(system, x, y, schedule, policy)
    moved = estimate_bf(system, iterate(system, x, r), iterate(system, y, s), schedule, policy)
    rows = []
    ok = True
    for b, t in zip(base.per_length, moved.per_length):
        bound = system.diameter * (r + s) / b.L + 2 * tol
        gap = max(abs(b.sup_cost - t.sup_cost), abs(b.inf_cost - t.inf_cost),
                  abs(b.tail_sup - t.tail_sup), abs(b.tail_inf - t.tail_inf))
        ok &= gap <= bound
        rows.append({"L": b.L, "gap": gap, "bound": bound})
    return CheckReport("shift_drift", bool(ok), {"r": r, "s": s, "rows": rows})
