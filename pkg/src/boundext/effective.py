"""Rectangle predicates and enumerations that make D computably open and X computably closed."""
from __future__ import annotations

from itertools import islice
from typing import Callable, Iterator, Optional

from gmpy2 import mpq

from .domain import DomainError, DomainModel, point_in_D, pow2
from .geometry import QRect, seg_meets_rect

LATTICE_LO = mpq(-1, 8)
LATTICE_HI = mpq(9, 8)


def rect_meets_sigma(dm: DomainModel, R: QRect, k: int) -> bool:
    """Whether the open rectangle ``R`` contains a point of sigma_k."""
    if not R.is_open:
        raise ValueError("rect_meets_sigma expects an open rectangle")
    return any(seg_meets_rect(s, R) for s in dm.constituent(k).segments)


def rect_avoids_rest(dm: DomainModel, R: QRect, k: int) -> bool:
    """Whether the closed rectangle ``R`` misses every vertex and every constituent other than sigma_k.

    The truncated boundary is finite, so this is a direct exhaustive check.
    """
    if R.is_open:
        raise ValueError("rect_avoids_rest expects a closed rectangle")
    dm.constituent(k)
    if any(R.contains(v) for v in dm.vertex_set):
        return False
    for c in dm.constituents:
        if c.index != k and any(seg_meets_rect(s, R) for s in c.segments):
            return False
    return True


def mj_rect(j: int) -> tuple[mpq, QRect]:
    """(m_j, R_j) with m_j = 2^-(j+3) + 2^-(j+5) + 2^-(j+2) - 2^-(j+4) and R_j = (-2^-j, m_j)^2."""
    if j < 1:
        raise DomainError("m_j is defined for j >= 1")
    m = pow2(-(j + 3)) + pow2(-(j + 5)) + pow2(-(j + 2)) - pow2(-(j + 4))
    return m, QRect.open(-pow2(-j), m, -pow2(-j), m)


def closed_rect_in_D(dm: DomainModel, R: QRect) -> bool:
    if not point_in_D(dm, R.center()):
        return False
    closed = R.closure()
    return not any(seg_meets_rect(e, closed) for e in dm.edges)


def open_rect_meets_X(dm: DomainModel, R: QRect) -> bool:
    opened = R.interior()
    return any(seg_meets_rect(e, opened) for e in dm.edges)


def lattice_cells(dm: DomainModel, level: int, kind: str) -> list[QRect]:
    """Squares of side 2^-level anchored on the 2^-(level+1) lattice inside [-1/8, 9/8]^2.

    Ordered by distance of the centre to the interior reference point, then y, then x.
    """
    side = pow2(-level)
    step = pow2(-(level + 1))
    first = -((-LATTICE_LO) // step) * step  # smallest lattice point >= LATTICE_LO
    first = mpq(first)
    anchors = []
    a = first
    while a + side <= LATTICE_HI:
        anchors.append(a)
        a += step
    ref = dm.interior_ref
    cells = []
    for y in anchors:
        for x in anchors:
            cx = x + side / 2 - ref.re
            cy = y + side / 2 - ref.im
            cells.append((cx * cx + cy * cy, y, x))
    cells.sort()
    return [QRect(x, x + side, y, y + side, kind) for _, y, x in cells]


class RectStream:
    """Deterministic dyadic sweep emitting every lattice rectangle that satisfies ``predicate``.

    Levels run 0, 1, 2, ...; ``max_level`` bounds the sweep (None = unbounded).
    Single consumer: iterate once, or use :meth:`prefix`.
    """

    def __init__(
        self,
        dm: DomainModel,
        predicate: Callable[[DomainModel, QRect], bool],
        kind: str,
        max_level: Optional[int] = None,
    ) -> None:
        self.dm = dm
        self.predicate = predicate
        self.kind = kind
        self.max_level = max_level
        self.level = 0

    def __iter__(self) -> Iterator[QRect]:
        level = 0
        while self.max_level is None or level <= self.max_level:
            self.level = level
            for cell in lattice_cells(self.dm, level, self.kind):
                if self.predicate(self.dm, cell):
                    yield cell
            level += 1

    def with_levels(self) -> Iterator[tuple[int, QRect]]:
        for rect in self:
            yield self.level, rect

    def prefix(self, n: int) -> list[QRect]:
        return list(islice(iter(self), n))


def enum_open_D(dm: DomainModel, max_level: Optional[int] = None) -> RectStream:
    """Closed rational rectangles included in D."""
    return RectStream(dm, closed_rect_in_D, "closed", max_level)


def enum_closed_X(dm: DomainModel, max_level: Optional[int] = None) -> RectStream:
    """Open rational rectangles meeting the boundary X."""
    return RectStream(dm, open_rect_meets_X, "open", max_level)
