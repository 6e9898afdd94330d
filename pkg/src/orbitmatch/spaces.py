"""The system zoo: circle rotations, the one-sided full shift, products.

Points are exact. Circle coordinates are 64-bit fixed-point fractions so that
rotation orbits carry no rounding error; shift points are explicit finite
symbol words with a guard tail of ``GUARD`` symbols past the last position an
orbit can reach.

Besides the per-point API (``step``, ``distance``) every system has a vectorised
*coordinate* representation used by the solvers:

* Rotation  -> ``uint64`` array of fractions.
* FullShift -> ``uint64`` array of 64-symbol prefix keys (symbol 0 in bit 63).
* Product   -> tuple ``(left_coords, right_coords)``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Union

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

ONE = 1 << 64
MASK = ONE - 1
GUARD = 64
MAX_HORIZON = 1 << 32


class CapacityError(ValueError):
    """A shift word ran out of symbols (or an orbit overran its horizon)."""


class SpaceMismatchError(TypeError):
    """A point does not belong to the system it was used with."""


# ---------------------------------------------------------------------------
# points


@dataclass(frozen=True)
class Circle:
    frac: int

    def __post_init__(self):
        if not 0 <= self.frac < ONE:
            raise ValueError(f"circle fraction out of range: {self.frac}")

    @property
    def value(self) -> float:
        return self.frac / ONE

    @classmethod
    def from_value(cls, t) -> "Circle":
        """Round-to-nearest fixed-point image of ``t mod 1`` (float, str or Fraction)."""
        q = Fraction(t)
        q -= math.floor(q)
        return cls(round(q * ONE) & MASK)


@dataclass(frozen=True)
class Word:
    symbols: bytes = field(repr=False)

    def __post_init__(self):
        if self.symbols.translate(None, b"\x00\x01"):
            raise ValueError("word symbols must be 0 or 1")

    def __len__(self):
        return len(self.symbols)

    def __repr__(self):
        head = "".join(map(str, self.symbols[:16]))
        return f"Word({head}{'...' if len(self.symbols) > 16 else ''}, n={len(self.symbols)})"


@dataclass(frozen=True)
class ProductPoint:
    left: "Point"
    right: "Point"


Point = Union[Circle, Word, ProductPoint]


def periodic_word(pattern: str, capacity: int) -> Word:
    """Fill ``capacity`` symbols by repeating ``pattern`` (e.g. ``"01"`` for (01)^inf)."""
    if not pattern or set(pattern) - {"0", "1"}:
        raise ValueError(f"bad word pattern {pattern!r}")
    reps = -(-capacity // len(pattern))
    return Word(bytes(int(c) for c in (pattern * reps)[:capacity]))


def prefixed_word(prefix: str, tail: Word | str, capacity: int) -> Word:
    """``prefix`` followed by a tail (a periodic pattern or an explicit word), cut to capacity."""
    head = bytes(int(c) for c in prefix)
    if isinstance(tail, str):
        tail = periodic_word(tail, max(capacity - len(head), 1))
    return Word((head + tail.symbols)[:capacity])


def block_word(capacity: int, base: int = 4) -> Word:
    """Concatenated blocks 0^(b^k) 1^(b^k), k = 0, 1, ...; the point is not uniformly generic."""
    out = bytearray()
    k = 0
    while len(out) < capacity:
        n = base ** k
        out += b"\x00" * n + b"\x01" * n
        k += 1
    return Word(bytes(out[:capacity]))


def random_word(capacity: int, rng: np.random.Generator) -> Word:
    return Word(rng.integers(0, 2, size=capacity, dtype=np.uint8).tobytes())


# ---------------------------------------------------------------------------
# systems


def golden_alpha() -> int:
    """Round-to-nearest 64-bit fixed-point image of (sqrt(5) - 1) / 2."""
    # 11 spare bits below the binary point, then round half up
    s = math.isqrt(5 << 148)  # sqrt(5) * 2^74
    num = s - (1 << 74)  # (sqrt5 - 1) * 2^74
    return (num + (1 << 10)) >> 11


@dataclass(frozen=True)
class Rotation:
    alpha: int
    name: str = field(default="", compare=False)

    def __post_init__(self):
        if not 0 <= self.alpha < ONE:
            raise ValueError("rotation alpha must be a 64-bit fraction")

    diameter = 0.5
    metric = "circle: min(|s-t|, 1-|s-t|)"

    @classmethod
    def golden(cls) -> "Rotation":
        return cls(golden_alpha(), name="golden")

    @classmethod
    def from_value(cls, t) -> "Rotation":
        return cls(Circle.from_value(t).frac)

    def describe(self) -> str:
        return f"rotation({self.name or hex(self.alpha)})"


@dataclass(frozen=True)
class FullShift:
    capacity: int

    def __post_init__(self):
        if self.capacity < 1:
            raise ValueError("shift capacity must be positive")

    diameter = 1.0
    metric = "shift: 2^-(first disagreement), 64-symbol scan"

    @classmethod
    def for_horizon(cls, horizon: int) -> "FullShift":
        return cls(horizon + GUARD)

    def describe(self) -> str:
        return f"fullshift(W={self.capacity})"


@dataclass(frozen=True)
class Product:
    left: "SystemSpec"
    right: "SystemSpec"

    @property
    def diameter(self) -> float:
        return self.left.diameter + self.right.diameter

    @property
    def metric(self) -> str:
        return f"sum[{self.left.metric}; {self.right.metric}]"

    def describe(self) -> str:
        return f"product({self.left.describe()},{self.right.describe()})"


SystemSpec = Union[Rotation, FullShift, Product]


def check_point(system: SystemSpec, p: Point) -> None:
    if isinstance(system, Rotation):
        ok = isinstance(p, Circle)
    elif isinstance(system, FullShift):
        ok = isinstance(p, Word)
    elif isinstance(system, Product):
        ok = isinstance(p, ProductPoint)
        if ok:
            check_point(system.left, p.left)
            check_point(system.right, p.right)
    else:
        raise SpaceMismatchError(f"unknown system {system!r}")
    if not ok:
        raise SpaceMismatchError(f"{type(p).__name__} is not a point of {system.describe()}")


# ---------------------------------------------------------------------------
# per-point operations


def step(system: SystemSpec, p: Point) -> Point:
    """Apply the map T once."""
    check_point(system, p)
    if isinstance(system, Rotation):
        return Circle((p.frac + system.alpha) & MASK)
    if isinstance(system, FullShift):
        if not p.symbols:
            raise CapacityError("shift word has no symbols left")
        return Word(p.symbols[1:])
    return ProductPoint(step(system.left, p.left), step(system.right, p.right))


def iterate(system: SystemSpec, p: Point, k: int) -> Point:
    """T^k(p), in O(1) for rotations and shifts."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    check_point(system, p)
    if isinstance(system, Rotation):
        return Circle((p.frac + k * system.alpha) & MASK)
    if isinstance(system, FullShift):
        if k > len(p.symbols):
            raise CapacityError(f"cannot shift a {len(p)}-symbol word {k} times")
        return Word(p.symbols[k:])
    return ProductPoint(iterate(system.left, p.left, k), iterate(system.right, p.right, k))


def _circle_distance_int(a: int, b: int) -> int:
    diff = (a - b) & MASK
    return min(diff, ONE - diff)


def distance(system: SystemSpec, p: Point, q: Point) -> float:
    check_point(system, p)
    check_point(system, q)
    if isinstance(system, Rotation):
        return _circle_distance_int(p.frac, q.frac) / ONE
    if isinstance(system, FullShift):
        n = min(GUARD, len(p.symbols), len(q.symbols))
        for j in range(n):
            if p.symbols[j] != q.symbols[j]:
                return 2.0 ** -j
        return 0.0
    return distance(system.left, p.left, q.left) + distance(system.right, p.right, q.right)


# ---------------------------------------------------------------------------
# vectorised coordinates


def word_keys(symbols: np.ndarray, start: int, count: int) -> np.ndarray:
    """64-symbol prefix keys of the words ``symbols[k:]`` for k in [start, start+count).

    Positions past the end of ``symbols`` read as 0.
    """
    seg = symbols[start:start + count + GUARD - 1]
    if len(seg) < count + GUARD - 1:
        seg = np.concatenate([seg, np.zeros(count + GUARD - 1 - len(seg), dtype=np.uint8)])
    win = sliding_window_view(seg, GUARD)
    return np.packbits(win, axis=1).view(">u8").ravel().astype(np.uint64)


def word_key(w: Word) -> np.uint64:
    arr = np.frombuffer(w.symbols[:GUARD], dtype=np.uint8)
    return word_keys(arr, 0, 1)[0]


def point_coords(system: SystemSpec, points) -> object:
    """Coordinates of an arbitrary sequence of points."""
    points = list(points)
    if isinstance(system, Rotation):
        return np.array([p.frac for p in points], dtype=np.uint64)
    if isinstance(system, FullShift):
        return np.array([word_key(p) for p in points], dtype=np.uint64)
    return (point_coords(system.left, [p.left for p in points]),
            point_coords(system.right, [p.right for p in points]))


def orbit_coords(system: SystemSpec, base: Point, m: int, length: int):
    """Coordinates of T^m(base), ..., T^(m+length-1)(base)."""
    if m < 0 or length < 1:
        raise ValueError("need m >= 0 and length >= 1")
    if m + length > MAX_HORIZON:
        raise CapacityError(f"m + L = {m + length} exceeds the horizon limit {MAX_HORIZON}")
    check_point(system, base)
    if isinstance(system, Rotation):
        ks = np.arange(m, m + length, dtype=np.uint64)
        return ks * np.uint64(system.alpha) + np.uint64(base.frac)
    if isinstance(system, FullShift):
        if len(base.symbols) < m + length + GUARD:
            raise CapacityError(
                f"word of {len(base)} symbols cannot support window [{m}, {m + length}) "
                f"plus {GUARD} guard symbols")
        return word_keys(np.frombuffer(base.symbols, dtype=np.uint8), m, length)
    return (orbit_coords(system.left, base.left, m, length),
            orbit_coords(system.right, base.right, m, length))


def coords_len(coords) -> int:
    return len(coords[0]) if isinstance(coords, tuple) else len(coords)


def coords_slice(coords, lo: int, hi: int):
    if isinstance(coords, tuple):
        return tuple(coords_slice(c, lo, hi) for c in coords)
    return coords[lo:hi]


def coords_take(coords, idx):
    if isinstance(coords, tuple):
        return tuple(coords_take(c, idx) for c in coords)
    return coords[idx]


def circle_gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise (broadcasting) circle distance of uint64 fractions, as floats."""
    diff = a - b
    return np.minimum(diff, np.uint64(0) - diff).astype(np.float64) * 2.0 ** -64


def shift_gap(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Elementwise 2^-(first disagreement) on 64-symbol keys; exact powers of two."""
    v = a ^ b
    for s in (1, 2, 4, 8, 16, 32):
        v = v | (v >> np.uint64(s))
    top = v ^ (v >> np.uint64(1))  # highest set bit, isolated
    return top.astype(np.float64) * 2.0 ** -63


def paired_distances(system: SystemSpec, a, b) -> np.ndarray:
    """d(a[i], b[i]) for coordinate arrays of equal length (broadcasting allowed)."""
    if isinstance(system, Rotation):
        return circle_gap(a, b)
    if isinstance(system, FullShift):
        return shift_gap(a, b)
    return paired_distances(system.left, a[0], b[0]) + paired_distances(system.right, a[1], b[1])


def pairwise_distances(system: SystemSpec, a, b) -> np.ndarray:
    """The matrix d(a[i], b[j])."""
    if isinstance(system, Product):
        return pairwise_distances(system.left, a[0], b[0]) + pairwise_distances(system.right, a[1], b[1])
    return paired_distances(system, a[:, None], b[None, :])


# ---------------------------------------------------------------------------
# orbit segments


@dataclass(frozen=True)
class OrbitSegment:
    system: SystemSpec
    base: Point
    start: int
    coords: object = field(repr=False, compare=False)

    def __len__(self):
        return coords_len(self.coords)

    @property
    def points(self) -> list:
        """Materialised Point objects (slow for long shift orbits)."""
        return [iterate(self.system, self.base, self.start + i) for i in range(len(self))]


def orbit_segment(system: SystemSpec, base: Point, m: int, length: int) -> OrbitSegment:
    return OrbitSegment(system, base, m, orbit_coords(system, base, m, length))


# ---------------------------------------------------------------------------
# sampling


def random_point(system: SystemSpec, rng: np.random.Generator) -> Point:
    if isinstance(system, Rotation):
        return Circle(int(rng.integers(0, ONE, dtype=np.uint64)))
    if isinstance(system, FullShift):
        return random_word(system.capacity, rng)
    return ProductPoint(random_point(system.left, rng), random_point(system.right, rng))
