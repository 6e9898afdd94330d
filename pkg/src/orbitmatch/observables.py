"""Named continuous (and cell-indicator) observables evaluated on orbit coordinates.

Rotation: ``cos1 sin1 cos2 sin2`` (cos/sin of 2 pi k t), ``arc0`` .. ``arc7``
(indicators of [k/8, (k+1)/8)). FullShift: ``cyl:<bits>`` for the cylinder of
words starting with ``bits``. Product: ``left:<name>`` / ``right:<name>``.
Every system also accepts ``const:<c>``.
"""
from __future__ import annotations

import numpy as np

from .spaces import FullShift, Product, Rotation, SystemSpec

ARCS = 8
CYLINDER_DEPTH = 3


class UnknownObservable(KeyError):
    pass


def _rotation(name: str):
    trig = {"cos1": (np.cos, 1), "sin1": (np.sin, 1), "cos2": (np.cos, 2), "sin2": (np.sin, 2)}
    if name in trig:
        fn, k = trig[name]
        return lambda c: fn(2 * np.pi * k * (c.astype(np.float64) * 2.0 ** -64))
    if name.startswith("arc") and name[3:].isdigit() and int(name[3:]) < ARCS:
        k = np.uint64(int(name[3:]))
        return lambda c: ((c >> np.uint64(61)) == k).astype(np.float64)
    return None


def _shift(name: str):
    if not name.startswith("cyl:"):
        return None
    bits = name[4:]
    if not bits or len(bits) > 64 or set(bits) - {"0", "1"}:
        return None
    shift = np.uint64(64 - len(bits))
    want = np.uint64(int(bits, 2))
    return lambda c: ((c >> shift) == want).astype(np.float64)


def observable(system: SystemSpec, name: str):
    """Vectorised f: coordinates -> float array."""
    if name.startswith("const:"):
        try:
            value = float(name[6:])
        except ValueError:
            raise UnknownObservable(name) from None

        def const(c):
            n = len(c[0]) if isinstance(c, tuple) else len(c)
            return np.full(n, value)
        return const
    fn = None
    if isinstance(system, Rotation):
        fn = _rotation(name)
    elif isinstance(system, FullShift):
        fn = _shift(name)
    elif isinstance(system, Product):
        side, _, rest = name.partition(":")
        if side in ("left", "right") and rest:
            inner = observable(getattr(system, side), rest)
            idx = 0 if side == "left" else 1
            fn = lambda c: inner(c[idx])  # noqa: E731
    if fn is None:
        raise UnknownObservable(f"{name!r} is not an observable of {system.describe()}")
    return fn


def observable_basis(system: SystemSpec) -> list:
    """The fixed basis used for uniform-genericity diagnostics."""
    if isinstance(system, Rotation):
        return ["cos1", "sin1", "cos2", "sin2"] + [f"arc{k}" for k in range(ARCS)]
    if isinstance(system, FullShift):
        out = []
        for depth in range(1, CYLINDER_DEPTH + 1):
            out += [f"cyl:{k:0{depth}b}" for k in range(2 ** depth)]
        return out
    return ([f"left:{n}" for n in observable_basis(system.left)]
            + [f"right:{n}" for n in observable_basis(system.right)])
