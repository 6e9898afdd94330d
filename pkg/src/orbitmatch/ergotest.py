"""Probes that confront finite-horizon estimates with limit statements.

Each probe gathers numeric evidence and hands it to a pure decision rule, so a
stored ``Verdict`` can always be re-derived from its own evidence and
thresholds. Statuses are ``consistent``, ``inconsistent`` or ``inconclusive``;
nothing here proves anything about infinite limits.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .banach import (WindowSchedule, empirical_measure, estimate_bf, measure_match_distance,
                     time_average, uniform_time_average, uniformly_generic_score)
from .orbitcost import Window
from .spaces import (ONE, Circle, FullShift, Point, ProductPoint, Rotation, SystemSpec, Word,
                     distance, random_point)

TAU0 = 0.02
BAND = 5.0

CONSISTENT = "consistent"
INCONSISTENT = "inconsistent"
INCONCLUSIVE = "inconclusive"


def default_thresholds(**overrides) -> dict:
    out = {"tau0": TAU0, "band": BAND, "generic_tol": TAU0}
    out.update(overrides)
    return out


@dataclass(frozen=True)
class Verdict:
    claim: str
    status: str
    evidence: dict = field(repr=False)
    thresholds: dict

    def reevaluate(self) -> str:
        return DECIDERS[self.claim](self.evidence, self.thresholds)

    def as_dict(self) -> dict:
        return {"claim": self.claim, "status": self.status, "thresholds": self.thresholds,
                "evidence": self.evidence}


def _verdict(claim, evidence, thresholds) -> Verdict:
    return Verdict(claim, DECIDERS[claim](evidence, thresholds), evidence, thresholds)


def sample_points(system: SystemSpec, count: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    return [random_point(system, rng) for _ in range(count)]


# ---------------------------------------------------------------------------
# decision rules


def decide_unique_ergodicity(ev, th) -> str:
    pairs = ev["pairs"]
    if all(p["upper"] <= th["tau0"] for p in pairs):
        return CONSISTENT
    if any(p["lower"] >= th["band"] * th["tau0"] for p in pairs):
        return INCONSISTENT
    return INCONCLUSIVE


def decide_measure_agreement(ev, th) -> str:
    tau = th["tau0"]
    checks = []
    if ev["upper"] <= tau:
        checks.append(ev["dist_max"] <= 2 * tau)
    if ev["generic_x"] and ev["generic_y"] and ev["dist_max"] <= tau:
        checks.append(ev["upper"] <= 2 * tau)
    if ev["lower"] <= tau:
        checks.append(ev["dist_min"] <= 2 * tau)
    return CONSISTENT if all(checks) else INCONSISTENT


def decide_gap(ev, th) -> str:
    if not ev["pairs"]:
        return INCONCLUSIVE
    ok = all(p["gap"] <= 2 * th["tau0"] for p in ev["pairs"])
    return CONSISTENT if ok else INCONSISTENT


def decide_modulus(ev, th) -> str:
    worst = [r["worst"] for r in ev["rows"]]
    if all(w <= th["tau0"] for w in worst):
        return CONSISTENT
    if worst and worst[-1] >= th["band"] * th["tau0"]:
        return INCONSISTENT
    return INCONCLUSIVE


def decide_average_continuity(ev, th) -> str:
    tau = th["tau0"]
    rows = ev["rows"]
    cesaro = ev.get("cesaro_gaps") or []
    if any(g > tau for g in cesaro) or (rows and rows[-1]["worst_diff"] >= th["band"] * tau):
        return INCONSISTENT
    diffs = [r["worst_diff"] for r in rows]
    shrinking = all(b <= a + tau for a, b in zip(diffs, diffs[1:]))
    if diffs and shrinking and diffs[-1] <= 2 * th["generic_tol"]:
        return CONSISTENT
    return INCONCLUSIVE


def decide_physical(ev, th) -> str:
    if ev["screened"] < 2:
        return INCONCLUSIVE
    return CONSISTENT if ev["fraction"] > 0 else INCONCLUSIVE


DECIDERS = {
    "unique_ergodicity": decide_unique_ergodicity,
    "measure_agreement": decide_measure_agreement,
    "bf_gap": decide_gap,
    "equicontinuity_modulus": decide_modulus,
    "average_continuity": decide_average_continuity,
    "physical_measure": decide_physical,
}


# ---------------------------------------------------------------------------
# probes


def _pair_rows(system, points, schedule, policy, index=None):
    index = index or list(range(len(points)))
    rows = []
    for i, j in combinations(range(len(points)), 2):
        est = estimate_bf(system, points[i], points[j], schedule, policy)
        rows.append({"x": index[i], "y": index[j], "upper": est.upper_estimate,
                     "lower": est.lower_estimate, "gap": est.gap, "heuristic": est.heuristic})
    return rows


def unique_ergodicity_probe(system: SystemSpec, points, schedule: WindowSchedule | None = None,
                            thresholds: dict | None = None, policy: str = "auto") -> Verdict:
    """All pairwise upper estimates near zero <-> one invariant measure."""
    points = list(points)
    if len(points) < 2:
        raise ValueError("need at least two sample points")
    schedule = schedule or WindowSchedule()
    th = thresholds or default_thresholds()
    ev = {"pairs": _pair_rows(system, points, schedule, policy),
          "horizon": schedule.horizon, "L_max": schedule.lengths[-1]}
    return _verdict("unique_ergodicity", ev, th)


def measure_agreement_probe(system: SystemSpec, x: Point, y: Point, schedule: WindowSchedule | None = None,
                            thresholds: dict | None = None, policy: str = "auto") -> Verdict:
    """Small BF implies matching empirical measures, and conversely for uniformly generic points.

    Measure distances compare x's and y's windows of the longest length at
    the first, middle and last sampled starts, in all nine combinations.
    """
    schedule = schedule or WindowSchedule()
    th = thresholds or default_thresholds()
    est = estimate_bf(system, x, y, schedule, policy)
    L = schedule.lengths[-1]
    starts = schedule.starts(L)
    picks = sorted({starts[0], starts[len(starts) // 2], starts[-1]})
    dists = []
    for mx in picks:
        mu = empirical_measure(system, x, Window.of(mx, L))
        for my in picks:
            dists.append(measure_match_distance(mu, empirical_measure(system, y, Window.of(my, L)), policy))
    gx = uniformly_generic_score(system, x, schedule).score
    gy = uniformly_generic_score(system, y, schedule).score
    ev = {"upper": est.upper_estimate, "lower": est.lower_estimate,
          "dist_max": max(dists), "dist_min": min(dists), "starts": picks, "L": L,
          "score_x": gx, "score_y": gy,
          "generic_x": gx <= th["generic_tol"], "generic_y": gy <= th["generic_tol"],
          "horizon": schedule.horizon}
    return _verdict("measure_agreement", ev, th)


def gap_probe(system: SystemSpec, points, schedule: WindowSchedule | None = None,
              thresholds: dict | None = None, policy: str = "auto") -> Verdict:
    """upper - lower stays small for pairs of uniformly generic points."""
    points = list(points)
    schedule = schedule or WindowSchedule()
    th = thresholds or default_thresholds()
    scores = [uniformly_generic_score(system, p, schedule).score for p in points]
    keep = [i for i, s in enumerate(scores) if s <= th["generic_tol"]]
    ev = {"scores": scores, "excluded": [i for i in range(len(points)) if i not in keep],
          "pairs": _pair_rows(system, [points[i] for i in keep], schedule, policy, keep),
          "horizon": schedule.horizon, "L_max": schedule.lengths[-1]}
    return _verdict("bf_gap", ev, th)


def physical_measure_probe(system: SystemSpec, sample, schedule: WindowSchedule | None = None,
                           thresholds: dict | None = None, policy: str = "auto") -> Verdict:
    """Fraction of screened sample pairs with upper estimate <= tau0.

    A positive fraction is the sample proxy for a positive-measure set of
    pairs sharing one generated measure. The proxy is a convention of this
    package, not a faithful finite test.
    """
    sample = list(sample)
    schedule = schedule or WindowSchedule()
    th = thresholds or default_thresholds()
    scores = [uniformly_generic_score(system, p, schedule).score for p in sample]
    keep = [i for i, s in enumerate(scores) if s <= th["generic_tol"]]
    pairs = _pair_rows(system, [sample[i] for i in keep], schedule, policy, keep) if len(keep) >= 2 else []
    close = sum(p["upper"] <= th["tau0"] for p in pairs)
    ev = {"scores": scores, "screened": len(keep), "pairs": pairs,
          "fraction": close / len(pairs) if pairs else 0.0,
          "proxy": "sample fraction of pairs with upper <= tau0 among uniformly generic points",
          "horizon": schedule.horizon}
    return _verdict("physical_measure", ev, th)


# ---------------------------------------------------------------------------
# neighbourhoods


def _word_neighbors(anchor: Word, delta: float, rng, n_random: int) -> list:
    cap = len(anchor.symbols)
    sym = anchor.symbols
    out = []
    for d in (delta / 2, delta / 4):
        j = max(0, math.ceil(math.log2(1 / d))) if d < 1 else 0
        if j >= min(cap, 64):
            continue
        head = sym[:j]
        flipped = bytes([1 - sym[j]])
        out.append(Word(head + flipped + sym[j + 1:]))
        out.append(Word(head + bytes(1 - b for b in sym[j:])))
        out.append(Word((head + b"\x01" * cap)[:cap]))
        out.append(Word((head + b"\x00" * cap)[:cap]))
    # random tails after a prefix long enough that d < delta
    j = max(0, math.floor(math.log2(1 / delta)) + 1) if delta <= 1 else 0
    j = min(j, cap)
    for _ in range(n_random):
        tail = rng.integers(0, 2, size=cap - j, dtype=np.uint8).tobytes()
        out.append(Word(sym[:j] + tail))
    return out


def neighbors(system: SystemSpec, anchor: Point, delta: float, rng: np.random.Generator,
              n_random: int = 2) -> list:
    """Points y with d(anchor, y) < delta.

    Deterministic offsets at distances delta/2 and delta/4 in each coordinate
    direction, plus ``n_random`` seeded random neighbours.
    """
    if isinstance(system, Rotation):
        out = []
        for d in (delta / 2, delta / 4):
            step = min(int(d * ONE), ONE // 2)
            out += [Circle((anchor.frac + step) % ONE), Circle((anchor.frac - step) % ONE)]
        span = min(int(delta * ONE), ONE // 2)
        for _ in range(n_random):
            u = int(rng.integers(0, ONE, dtype=np.uint64))
            off = u % (2 * span) - span if span > 0 else 0
            out.append(Circle((anchor.frac + off) % ONE))
    elif isinstance(system, FullShift):
        out = _word_neighbors(anchor, delta, rng, n_random)
    else:
        out = [ProductPoint(p, anchor.right) for p in neighbors(system.left, anchor.left, delta, rng, 0)]
        out += [ProductPoint(anchor.left, q) for q in neighbors(system.right, anchor.right, delta, rng, 0)]
        for _ in range(n_random):
            p = neighbors(system.left, anchor.left, delta / 2, rng, 1)[-1]
            q = neighbors(system.right, anchor.right, delta / 2, rng, 1)[-1]
            out.append(ProductPoint(p, q))
    return [y for y in out if distance(system, anchor, y) < delta]


@dataclass(frozen=True)
class ModulusRow:
    delta: float
    worst: float
    pairs: int


@dataclass(frozen=True)
class ModulusTable:
    rows: tuple
    seed: int
    horizon: int

    def verdict(self, thresholds: dict | None = None) -> Verdict:
        th = thresholds or default_thresholds()
        ev = {"rows": [r.__dict__ for r in self.rows], "seed": self.seed, "horizon": self.horizon}
        return _verdict("equicontinuity_modulus", ev, th)


def _check_ladder(deltas):
    deltas = [float(d) for d in deltas]
    if not deltas or any(b >= a for a, b in zip(deltas, deltas[1:])) or min(deltas) <= 0:
        raise ValueError(f"delta ladder must be positive and strictly decreasing: {deltas}")
    return deltas


def equicontinuity_modulus(system: SystemSpec, anchors, deltas, schedule: WindowSchedule | None = None,
                           seed: int = 0, n_random: int = 2, policy: str = "auto") -> ModulusTable:
    """Worst upper estimate over sampled pairs at distance < delta, per delta."""
    deltas = _check_ladder(deltas)
    schedule = schedule or WindowSchedule()
    rng = np.random.default_rng(seed)
    rows = []
    for delta in deltas:
        worst, count = 0.0, 0
        for a in anchors:
            for y in neighbors(system, a, delta, rng, n_random):
                worst = max(worst, estimate_bf(system, a, y, schedule, policy).upper_estimate)
                count += 1
        rows.append(ModulusRow(delta, worst, count))
    return ModulusTable(tuple(rows), seed, schedule.horizon)


def average_continuity_probe(system: SystemSpec, f: str, anchors, deltas,
                             schedule: WindowSchedule | None = None, seed: int = 0,
                             thresholds: dict | None = None, check_cesaro: bool = False,
                             n_random: int = 2) -> Verdict:
    """Uniform time averages of ``f`` at anchors versus nearby points, per delta.

    With ``check_cesaro`` (meant for systems the unique-ergodicity probe calls
    consistent) the Cesaro average over [0, L_max) must also agree with the
    uniform average at every anchor.
    """
    deltas = _check_ladder(deltas)
    schedule = schedule or WindowSchedule()
    th = thresholds or default_thresholds()
    rng = np.random.default_rng(seed)
    cache: dict = {}

    def fb(p):
        if p not in cache:
            cache[p] = uniform_time_average(system, p, f, schedule).estimate
        return cache[p]

    rows = []
    for delta in deltas:
        worst, count = 0.0, 0
        for a in anchors:
            for y in neighbors(system, a, delta, rng, n_random):
                worst = max(worst, abs(fb(a) - fb(y)))
                count += 1
        rows.append({"delta": delta, "worst_diff": worst, "pairs": count})
    ev = {"observable": f, "rows": rows, "anchor_values": [fb(a) for a in anchors],
          "seed": seed, "horizon": schedule.horizon}
    if check_cesaro:
        n = schedule.lengths[-1]
        ev["cesaro_gaps"] = [abs(time_average(system, a, f, n) - fb(a)) for a in anchors]
    return _verdict("average_continuity", ev, th)
