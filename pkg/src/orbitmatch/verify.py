"""Internal property suite behind ``orbitmatch verify``.

Each suite is seeded and returns a ``SuiteResult``; a correct build passes
all of them in a few seconds.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .assignment import (brute_force, solve_circle, solve_exact, solve_greedy, solve_line,
                         solve_ultrametric)
from .banach import IndexSet, WindowSchedule, densities, estimate_bf
from .bounds import replication_law_check
from .orbitcost import Window, check_symmetry, check_triangle, window_cost
from .spaces import (Circle, FullShift, Product, ProductPoint, Rotation, circle_gap, random_point,
                     random_word, shift_gap, word_keys)

TOL = 1e-9


@dataclass(frozen=True)
class SuiteResult:
    name: str
    ok: bool
    cases: int
    failures: int
    seconds: float
    detail: str = ""

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _zoo(capacity: int = 256):
    golden = Rotation.golden()
    shift = FullShift(capacity)
    return [golden, Rotation.from_value("1/7"), shift, Product(golden, shift)]


def brute_vs_exact(rng, instances: int = 60, size: int = 6) -> tuple:
    bad = 0
    for _ in range(instances):
        c = rng.random((size, size))
        bad += abs(solve_exact(c).total_cost - brute_force(c).total_cost) > TOL
    return instances, bad, ""


def fast_vs_exact(rng, instances: int = 10, sizes=(2, 3, 5, 8, 16, 31, 64)) -> tuple:
    bad = cases = 0
    for L in sizes:
        for _ in range(instances):
            a, b = rng.random(L), rng.random(L)
            bad += abs(solve_line(a, b).total_cost
                       - solve_exact(np.abs(a[:, None] - b[None, :])).total_cost) > TOL
            fa = rng.integers(0, 2 ** 64, L, dtype=np.uint64)
            fb = rng.integers(0, 2 ** 64, L, dtype=np.uint64)
            bad += abs(solve_circle(fa, fb).total_cost
                       - solve_exact(circle_gap(fa[:, None], fb[None, :])).total_cost) > TOL
            ka = word_keys(rng.integers(0, 2, L + 64, dtype=np.uint8), 0, L)
            kb = word_keys(rng.integers(0, 2, L + 64, dtype=np.uint8), 0, L)
            bad += abs(solve_ultrametric(ka, kb).total_cost
                       - solve_exact(shift_gap(ka[:, None], kb[None, :])).total_cost) > TOL
            cases += 3
    return cases, bad, ""


def greedy_bound(rng, instances: int = 30, size: int = 12) -> tuple:
    bad = 0
    for _ in range(instances):
        c = rng.random((size, size))
        g, e = solve_greedy(c), solve_exact(c).total_cost
        bad += g.total_cost < e - 1e-12 or g.total_cost - e > g.gap_bound + 1e-12
    return instances, bad, ""


def axioms(rng, triples: int = 10, lengths=(8, 64)) -> tuple:
    bad = cases = 0
    failed = []
    for system in _zoo():
        for L in lengths:
            for _ in range(triples):
                x, y, z = (random_point(system, rng) for _ in range(3))
                m = int(rng.integers(0, 64))
                w = Window.of(m, L)
                checks = [check_symmetry(system, x, y, w).ok,
                          check_triangle(system, x, y, z, w).ok,
                          window_cost(system, x, x, w).cost == 0.0]
                cases += len(checks)
                if not all(checks):
                    bad += checks.count(False)
                    failed.append(f"{system.describe()} L={L}")
    return cases, bad, "; ".join(sorted(set(failed)))


def replication(rng, instances: int = 20) -> tuple:
    bad = 0
    zoo = _zoo()
    for i in range(instances):
        system = zoo[i % len(zoo)]
        n = int(rng.integers(2, 5))
        copies = int(rng.integers(2, 4))
        xs = [random_point(system, rng) for _ in range(n)]
        ys = [random_point(system, rng) for _ in range(n)]
        bad += not replication_law_check(system, xs, ys, copies).ok
    return instances, bad, ""


def density_sandwich(rng, instances: int = 200, horizon: int = 256) -> tuple:
    bad = 0
    for _ in range(instances):
        p = rng.random()
        d = densities(IndexSet(rng.random(horizon) < p))
        bad += not (d.lower <= d.upper <= d.upper_banach)
    return instances, bad, ""


def tail_monotone(rng, pairs: int = 2) -> tuple:
    bad = 0
    schedule = WindowSchedule.dyadic(4, 128, 512)
    golden = Rotation.golden()
    shift = FullShift.for_horizon(512)
    cases = [(golden, Circle.from_value("0"), Circle.from_value("1/3"))]
    for _ in range(pairs):
        cases.append((shift, random_word(shift.capacity, rng), random_word(shift.capacity, rng)))
        a = random_point(golden, rng)
        cases.append((Product(golden, shift),
                      ProductPoint(a, random_word(shift.capacity, rng)),
                      ProductPoint(random_point(golden, rng), random_word(shift.capacity, rng))))
    for system, x, y in cases:
        rows = estimate_bf(system, x, y, schedule).per_length
        sup = [r.tail_sup for r in rows]
        inf = [r.tail_inf for r in rows]
        ok = (all(b <= a for a, b in zip(sup, sup[1:])) and all(b >= a for a, b in zip(inf, inf[1:]))
              and all(r.tail_inf <= r.tail_sup for r in rows))
        bad += not ok
    return len(cases), bad, ""


SUITES = {
    "brute_force_vs_exact": brute_vs_exact,
    "fast_path_vs_exact": fast_vs_exact,
    "greedy_upper_bound": greedy_bound,
    "pseudometric_axioms": axioms,
    "replication_law": replication,
    "density_sandwich": density_sandwich,
    "tail_envelope_monotone": tail_monotone,
}


def run_suites(seed: int = 0, names=None) -> list:
    out = []
    for i, (name, fn) in enumerate(SUITES.items()):
        if names and name not in names:
            continue
        rng = np.random.default_rng([seed, i])
        t = time.perf_counter()
        cases, bad, detail = fn(rng)
        out.append(SuiteResult(name, bad == 0, cases, bad, time.perf_counter() - t, detail))
    return out
