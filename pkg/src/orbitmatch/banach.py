"""Finite-horizon estimators for the limit quantities.

A limit as the window length n - m grows is replaced by a tail envelope over a
geometric ladder of window lengths, each evaluated at up to 33 evenly strided
start positions. Everything here is exact counting or exact matching on the
sampled windows; only the passage to the limit is a proxy.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .observables import observable, observable_basis
from .orbitcost import ORBITS, Window, solve_coords, window_cost
from .spaces import Point, SystemSpec, coords_len

DEFAULT_LENGTHS = tuple(2 ** k for k in range(3, 13))
DEFAULT_HORIZON = 16384
START_SLOTS = 32
GENERIC_TOL = 0.02


@dataclass(frozen=True)
class WindowSchedule:
    lengths: tuple = DEFAULT_LENGTHS
    horizon: int = DEFAULT_HORIZON

    def __post_init__(self):
        lengths = tuple(int(L) for L in self.lengths)
        object.__setattr__(self, "lengths", lengths)
        if len(lengths) < 2:
            raise ValueError("a schedule needs at least two window lengths")
        if any(b <= a for a, b in zip(lengths, lengths[1:])) or lengths[0] < 1:
            raise ValueError(f"window lengths must be positive and strictly increasing: {lengths}")
        if lengths[-1] > self.horizon:
            raise ValueError(f"largest length {lengths[-1]} exceeds horizon {self.horizon}")

    @classmethod
    def dyadic(cls, min_length: int = 8, max_length: int = 4096, horizon: int = DEFAULT_HORIZON):
        lengths = []
        L = min_length
        while L <= max_length:
            lengths.append(L)
            L *= 2
        return cls(tuple(lengths), horizon)

    def stride(self, L: int) -> int:
        return max(1, (self.horizon - L) // START_SLOTS)

    def starts(self, L: int) -> list:
        return list(range(0, self.horizon - L + 1, self.stride(L)))

    def windows(self, L: int) -> list:
        return [Window.of(m, L) for m in self.starts(L)]

    def as_dict(self) -> dict:
        return {"lengths": list(self.lengths), "horizon": self.horizon,
                "start_rule": f"m in range(0, H-L+1, max(1, (H-L)//{START_SLOTS}))"}


@dataclass(frozen=True)
class LengthRow:
    L: int
    sup_cost: float
    inf_cost: float
    count: int
    tail_sup: float
    tail_inf: float
    solver_tag: str
    gap_bound: float


@dataclass(frozen=True)
class LimitEstimate:
    per_length: tuple
    converged: bool
    heuristic: bool = False

    @property
    def upper_estimate(self) -> float:
        return self.per_length[-1].tail_sup

    @property
    def lower_estimate(self) -> float:
        return self.per_length[-1].tail_inf

    @property
    def gap(self) -> float:
        return self.upper_estimate - self.lower_estimate

    def row(self, L: int) -> LengthRow:
        for r in self.per_length:
            if r.L == L:
                return r
        raise KeyError(L)


def _envelope(groups: list) -> LimitEstimate:
    """Build per-length rows and tail envelopes from [(L, [WindowCost, ...]), ...]."""
    sups = [max(w.cost for w in ws) for _, ws in groups]
    infs = [min(w.cost for w in ws) for _, ws in groups]
    tail_sup = list(np.maximum.accumulate(sups[::-1])[::-1])
    tail_inf = list(np.minimum.accumulate(infs[::-1])[::-1])
    rows = []
    heuristic = False
    for i, (L, ws) in enumerate(groups):
        tags = sorted({w.solver_tag for w in ws})
        gap = max(w.gap_bound for w in ws)
        heuristic |= gap > 0
        rows.append(LengthRow(L, float(sups[i]), float(infs[i]), len(ws), float(tail_sup[i]),
                              float(tail_inf[i]), tags[0] if len(tags) == 1 else "+".join(tags),
                              float(gap)))
    return LimitEstimate(tuple(rows), _converged(tail_sup), heuristic)


def _converged(tail_sup: list, rel: float = 0.1) -> bool:
    last = tail_sup[-3:]
    for a, b in zip(last, last[1:]):
        scale = max(abs(a), abs(b))
        if scale > 1e-12 and abs(a - b) / scale >= rel:
            return False
    return True


def _evaluate(system, x, y, windows, policy, threads):
    def one(w):
        return window_cost(system, x, y, w, policy)
    if threads and threads > 1:
        with ThreadPoolExecutor(threads) as pool:
            return list(pool.map(one, windows))
    return [one(w) for w in windows]


def estimate_bf(system: SystemSpec, x: Point, y: Point, schedule: WindowSchedule | None = None,
                policy: str = "auto", threads: int = 1) -> LimitEstimate:
    """Sliding-window estimate: upper ~ limsup, lower ~ liminf as n - m grows."""
    schedule = schedule or WindowSchedule()
    groups = [(L, _evaluate(system, x, y, schedule.windows(L), policy, threads))
              for L in schedule.lengths]
    return _envelope(groups)


def estimate_f(system: SystemSpec, x: Point, y: Point, max_n: int | None = None,
               schedule: WindowSchedule | None = None, policy: str = "auto") -> LimitEstimate:
    """Initial-window estimate over [0, n) for n on the length ladder (up to ``max_n``)."""
    schedule = schedule or WindowSchedule()
    max_n = schedule.lengths[-1] if max_n is None else max_n
    if max_n > schedule.horizon:
        raise ValueError(f"max_n {max_n} exceeds horizon {schedule.horizon}")
    lengths = [L for L in schedule.lengths if L <= max_n]
    if not lengths:
        raise ValueError("no schedule length is <= max_n")
    groups = [(n, [window_cost(system, x, y, Window(0, n), policy)]) for n in lengths]
    return _envelope(groups)


# ---------------------------------------------------------------------------
# time averages


def _window_means(values: np.ndarray, starts, L: int) -> np.ndarray:
    # centring keeps prefix sums small, so a constant observable has spread exactly 0
    values = np.asarray(values, dtype=np.float64)
    centre = values[0]
    csum = np.concatenate([[0.0], np.cumsum(values - centre)])
    starts = np.asarray(starts)
    return centre + (csum[starts + L] - csum[starts]) / L


@dataclass(frozen=True)
class AverageRow:
    L: int
    mean: float
    low: float
    high: float
    count: int

    @property
    def spread(self) -> float:
        return self.high - self.low


@dataclass(frozen=True)
class UniformAverage:
    observable: str
    per_length: tuple

    @property
    def estimate(self) -> float:
        return self.per_length[-1].mean

    @property
    def spread(self) -> float:
        return self.per_length[-1].spread


def uniform_time_average(system: SystemSpec, x: Point, f: str,
                         schedule: WindowSchedule | None = None) -> UniformAverage:
    """Window averages of ``f`` along the orbit at every sampled (m, L)."""
    schedule = schedule or WindowSchedule()
    values = observable(system, f)(ORBITS.coords(system, x, 0, schedule.horizon))
    rows = []
    for L in schedule.lengths:
        means = _window_means(values, schedule.starts(L), L)
        rows.append(AverageRow(L, float(means.mean()), float(means.min()), float(means.max()),
                               len(means)))
    return UniformAverage(f, tuple(rows))


def time_average(system: SystemSpec, x: Point, f: str, n: int) -> float:
    """Cesaro average of ``f`` over [0, n)."""
    if n < 1:
        raise ValueError("n must be positive")
    values = observable(system, f)(ORBITS.coords(system, x, 0, n))
    return float(values.mean())


@dataclass(frozen=True)
class GenericScore:
    spreads: dict
    horizon: int
    L: int

    @property
    def score(self) -> float:
        return max(self.spreads.values())

    def generic(self, tol: float = GENERIC_TOL) -> bool:
        return self.score <= tol


def uniformly_generic_score(system: SystemSpec, x: Point,
                            schedule: WindowSchedule | None = None) -> GenericScore:
    """Largest window-average spread over the observable basis at the longest length."""
    schedule = schedule or WindowSchedule()
    spreads = {f: uniform_time_average(system, x, f, schedule).spread
               for f in observable_basis(system)}
    return GenericScore(spreads, schedule.horizon, schedule.lengths[-1])


# ---------------------------------------------------------------------------
# empirical measures


@dataclass(frozen=True, eq=False)
class EmpiricalMeasure:
    system: SystemSpec
    window: Window
    atoms: object = field(repr=False)  # orbit coordinates, one atom per time step

    @property
    def size(self) -> int:
        return coords_len(self.atoms)

    @property
    def weight(self) -> float:
        return 1.0 / self.size

    def support(self) -> list:
        """Distinct atoms with their masses, as (coordinate key, weight) pairs."""
        if isinstance(self.atoms, tuple):
            keys = list(zip(*(a.tolist() for a in self.atoms)))
        else:
            keys = self.atoms.tolist()
        tally: dict = {}
        for k in keys:
            tally[k] = tally.get(k, 0) + 1
        return sorted((k, c / self.size) for k, c in tally.items())


def empirical_measure(system: SystemSpec, x: Point, w: Window) -> EmpiricalMeasure:
    return EmpiricalMeasure(system, w, ORBITS.coords(system, x, w.m, w.length))


def measure_match_distance(mu1: EmpiricalMeasure, mu2: EmpiricalMeasure, policy: str = "auto") -> float:
    """Optimal-matching distance between two uniform atom multisets of equal size."""
    if mu1.size != mu2.size:
        raise ValueError(f"measures have {mu1.size} and {mu2.size} atoms; need equal counts")
    if mu1.system != mu2.system:
        raise ValueError("measures live on different systems")
    return solve_coords(mu1.system, mu1.atoms, mu2.atoms, policy).total_cost / mu1.size


# ---------------------------------------------------------------------------
# densities of integer sets


class IndexSet:
    """A subset of [0, H) as a boolean bitmap."""

    def __init__(self, bits):
        self.bits = np.asarray(bits, dtype=bool).copy()
        self.bits.setflags(write=False)
        if self.bits.ndim != 1:
            raise ValueError("an index set is a 1-d bitmap")

    @property
    def horizon(self) -> int:
        return len(self.bits)

    def __contains__(self, k: int) -> bool:
        if not 0 <= k < self.horizon:
            raise IndexError(f"{k} is outside [0, {self.horizon})")
        return bool(self.bits[k])

    def complement(self) -> "IndexSet":
        return IndexSet(~self.bits)

    @classmethod
    def from_members(cls, members, horizon: int) -> "IndexSet":
        bits = np.zeros(horizon, dtype=bool)
        members = np.asarray(list(members), dtype=np.int64)
        if len(members) and (members.min() < 0 or members.max() >= horizon):
            raise IndexError("members outside [0, horizon)")
        bits[members] = True
        return cls(bits)

    @classmethod
    def evens(cls, horizon: int) -> "IndexSet":
        return cls(np.arange(horizon) % 2 == 0)

    @classmethod
    def dyadic_blocks(cls, horizon: int, base: int = 4) -> "IndexSet":
        """Union over k of [base^k, 2 base^k)."""
        bits = np.zeros(horizon, dtype=bool)
        k = 0
        while base ** k < horizon:
            bits[base ** k:min(2 * base ** k, horizon)] = True
            k += 1
        return cls(bits)


@dataclass(frozen=True)
class Densities:
    upper: float
    lower: float
    upper_banach: float
    horizon: int
    initial_cutoff: int
    banach_cutoff: int


def densities(F: IndexSet) -> Densities:
    """Upper, lower and upper Banach density at horizon H by exact prefix-sum counting.

    Upper/lower: extremes of #(F & [0, n)) / n over n in [H/2, H].
    Upper Banach: max over the initial windows above and all windows whose
    length lies on the dyadic ladder from sqrt(H) to H.
    """
    H = F.horizon
    if H < 64:
        raise ValueError("densities need a horizon of at least 64")
    csum = np.concatenate([[0], np.cumsum(F.bits, dtype=np.int64)])
    n0 = H // 2
    ns = np.arange(n0, H + 1)
    ratios = csum[ns] / ns
    upper = float(ratios.max())
    lower = float(ratios.min())
    cut = math.isqrt(H - 1) + 1  # ceil(sqrt(H))
    L = 1 << (cut - 1).bit_length()
    banach = upper
    while L <= H:
        counts = csum[L:] - csum[:-L]
        banach = max(banach, float(counts.max()) / L)
        L *= 2
    return Densities(upper, lower, banach, H, n0, cut)
