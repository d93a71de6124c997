"""Random crosscut and chain generators shared by tests and the acceptance run."""
from __future__ import annotations

import random
from fractions import Fraction as F

from boundext.crosscuts import CrosscutError, avoiding_arc, make_crosscut
from boundext.domain import point_in_D
from boundext.geometry import QPoint


def point_on_constituent(rng: random.Random, dm, k: int, den: int = 97) -> QPoint:
    c = dm.constituent(k)
    s = rng.choice(c.segments)
    return s.point_at(F(rng.randint(1, den - 1), den))


def random_interior_point(rng: random.Random, dm, den: int = 256) -> QPoint:
    while True:
        p = QPoint(F(rng.randint(1, den - 1), den), F(rng.randint(1, den - 1), den))
        if point_in_D(dm, p):
            return p


def random_crosscut(rng: random.Random, dm, need_avoiding_arc: bool = True, tries: int = 10_000):
    """A random polyline crosscut, optionally with acceptably placed ends; returns (C, tau or None)."""
    for _ in range(tries):
        k1 = rng.randrange(dm.n_constituents)
        k2 = rng.randrange(dm.n_constituents)
        p = point_on_constituent(rng, dm, k1)
        q = point_on_constituent(rng, dm, k2)
        if p == q:
            continue
        tau = avoiding_arc(dm, p, q)
        if need_avoiding_arc and tau is None:
            continue
        mids = [random_interior_point(rng, dm) for _ in range(rng.randint(0, 2))]
        try:
            C = make_crosscut(dm, [p, *mids, q])
        except CrosscutError:
            continue
        return C, tau
    raise RuntimeError("no crosscut found")
