"""Exact planar primitives over the rationals.

Every predicate here is decided in exact arithmetic (``gmpy2.mpq``).  Quantities
involving sqrt(2) are compared after squaring, and diameters are carried
squared so that nothing leaves the rational field.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations
from typing import Iterable, Sequence, Union

from gmpy2 import mpq

Rational = Union[int, str, Fraction, "mpq"]

OPEN = "open"
CLOSED = "closed"

_ZERO = mpq(0)
_ONE = mpq(1)


class GeometryError(ValueError):
    """Raised on invalid geometric input (degenerate rectangles, equal endpoints...)."""


def q(x: Rational) -> mpq:
    """Coerce ``x`` to an exact rational.  Floats are accepted only if exactly representable."""
    if type(x) is type(_ZERO):
        return x
    if isinstance(x, float):
        if x != x or x in (float("inf"), float("-inf")):
            raise GeometryError(f"cannot make a rational from {x!r}")
        return mpq(x)
    if isinstance(x, Fraction):
        return mpq(x.numerator, x.denominator)
    return mpq(x)


def dyadic(x: float, bits: int = 48) -> mpq:
    """Round a float to the nearest multiple of 2**-bits."""
    scale = 1 << bits
    return mpq(round(x * scale), scale)


@dataclass(frozen=True, slots=True)
class QPoint:
    re: mpq
    im: mpq

    def __post_init__(self) -> None:
        object.__setattr__(self, "re", q(self.re))
        object.__setattr__(self, "im", q(self.im))

    @classmethod
    def from_complex(cls, z: complex, bits: int = 48) -> "QPoint":
        return cls(dyadic(z.real, bits), dyadic(z.imag, bits))

    def __add__(self, other: "QPoint") -> "QPoint":
        return QPoint(self.re + other.re, self.im + other.im)

    def __sub__(self, other: "QPoint") -> "QPoint":
        return QPoint(self.re - other.re, self.im - other.im)

    def scale(self, c: Rational) -> "QPoint":
        c = q(c)
        return QPoint(self.re * c, self.im * c)

    def abs2(self) -> mpq:
        return self.re * self.re + self.im * self.im

    def __complex__(self) -> complex:
        return complex(float(self.re), float(self.im))

    def __repr__(self) -> str:
        return f"QPoint({self.re}, {self.im})"


def dist2(p: QPoint, r: QPoint) -> mpq:
    dx = p.re - r.re
    dy = p.im - r.im
    return dx * dx + dy * dy


def cross(o: QPoint, a: QPoint, b: QPoint) -> mpq:
    """z-component of (a - o) x (b - o); positive when o, a, b turn left."""
    return (a.re - o.re) * (b.im - o.im) - (a.im - o.im) * (b.re - o.re)


@dataclass(frozen=True, slots=True)
class Segment:
    """Closed segment [a, b]; ``a == b`` is the singleton {a}."""

    a: QPoint
    b: QPoint

    @property
    def is_point(self) -> bool:
        return self.a == self.b

    def point_at(self, t: Rational) -> QPoint:
        t = q(t)
        return QPoint(self.a.re + t * (self.b.re - self.a.re), self.a.im + t * (self.b.im - self.a.im))

    def midpoint(self) -> QPoint:
        return self.point_at(mpq(1, 2))

    def reversed(self) -> "Segment":
        return Segment(self.b, self.a)

    def length2(self) -> mpq:
        return dist2(self.a, self.b)

    def contains(self, p: QPoint) -> bool:
        return point_on_segment(p, self)

    @property
    def is_horizontal(self) -> bool:
        return self.a.im == self.b.im

    @property
    def is_vertical(self) -> bool:
        return self.a.re == self.b.re


@dataclass(frozen=True, slots=True)
class QRect:
    x_lo: mpq
    x_hi: mpq
    y_lo: mpq
    y_hi: mpq
    kind: str = OPEN

    def __post_init__(self) -> None:
        for name in ("x_lo", "x_hi", "y_lo", "y_hi"):
            object.__setattr__(self, name, q(getattr(self, name)))
        if self.kind not in (OPEN, CLOSED):
            raise GeometryError(f"rectangle kind must be open or closed, got {self.kind!r}")
        if not (self.x_lo < self.x_hi and self.y_lo < self.y_hi):
            raise GeometryError(
                f"degenerate rectangle [{self.x_lo}, {self.x_hi}] x [{self.y_lo}, {self.y_hi}]"
            )

    @classmethod
    def open(cls, x_lo: Rational, x_hi: Rational, y_lo: Rational, y_hi: Rational) -> "QRect":
        return cls(x_lo, x_hi, y_lo, y_hi, OPEN)

    @classmethod
    def closed(cls, x_lo: Rational, x_hi: Rational, y_lo: Rational, y_hi: Rational) -> "QRect":
        return cls(x_lo, x_hi, y_lo, y_hi, CLOSED)

    @property
    def is_open(self) -> bool:
        return self.kind == OPEN

    def closure(self) -> "QRect":
        return QRect(self.x_lo, self.x_hi, self.y_lo, self.y_hi, CLOSED)

    def interior(self) -> "QRect":
        return QRect(self.x_lo, self.x_hi, self.y_lo, self.y_hi, OPEN)

    def corners(self) -> tuple[QPoint, QPoint, QPoint, QPoint]:
        return (
            QPoint(self.x_lo, self.y_lo),
            QPoint(self.x_hi, self.y_lo),
            QPoint(self.x_hi, self.y_hi),
            QPoint(self.x_lo, self.y_hi),
        )

    def edges(self) -> tuple[Segment, ...]:
        c = self.corners()
        return tuple(Segment(c[i], c[(i + 1) % 4]) for i in range(4))

    def center(self) -> QPoint:
        return QPoint((self.x_lo + self.x_hi) / 2, (self.y_lo + self.y_hi) / 2)

    def contains(self, p: QPoint) -> bool:
        if self.kind == OPEN:
            return self.x_lo < p.re < self.x_hi and self.y_lo < p.im < self.y_hi
        return self.x_lo <= p.re <= self.x_hi and self.y_lo <= p.im <= self.y_hi

    def contains_rect(self, other: "QRect") -> bool:
        """Set inclusion ``other ⊆ self`` honouring both kinds."""
        if self.kind == CLOSED or other.kind == OPEN:
            return (
                self.x_lo <= other.x_lo
                and other.x_hi <= self.x_hi
                and self.y_lo <= other.y_lo
                and other.y_hi <= self.y_hi
            )
        return (
            self.x_lo < other.x_lo
            and other.x_hi < self.x_hi
            and self.y_lo < other.y_lo
            and other.y_hi < self.y_hi
        )

    def meets(self, other: "QRect") -> bool:
        """Whether the two point sets intersect."""
        for lo1, hi1, lo2, hi2 in (
            (self.x_lo, self.x_hi, other.x_lo, other.x_hi),
            (self.y_lo, self.y_hi, other.y_lo, other.y_hi),
        ):
            if self.kind == CLOSED and other.kind == CLOSED:
                if hi1 < lo2 or hi2 < lo1:
                    return False
            elif hi1 <= lo2 or hi2 <= lo1:
                return False
        return True

    def diam2(self) -> mpq:
        return (self.x_hi - self.x_lo) ** 2 + (self.y_hi - self.y_lo) ** 2

    def to_list(self) -> list:
        return [self.x_lo, self.x_hi, self.y_lo, self.y_hi]


@dataclass(frozen=True, slots=True)
class TaxicabArc:
    """One horizontal or vertical segment, or two meeting at a right angle."""

    legs: tuple[Segment, ...]

    def __post_init__(self) -> None:
        legs = tuple(self.legs)
        object.__setattr__(self, "legs", legs)
        if len(legs) not in (1, 2):
            raise GeometryError("a taxicab arc has one or two legs")
        for leg in legs:
            if leg.is_point or not (leg.is_horizontal or leg.is_vertical):
                raise GeometryError(f"taxicab leg must be a proper axis-parallel segment: {leg}")
        if len(legs) == 2:
            first, second = legs
            if first.b != second.a:
                raise GeometryError("taxicab legs must share their middle endpoint")
            if first.is_horizontal == second.is_horizontal:
                raise GeometryError("taxicab legs must meet at a right angle")

    @property
    def start(self) -> QPoint:
        return self.legs[0].a

    @property
    def end(self) -> QPoint:
        return self.legs[-1].b

    def points(self) -> list[QPoint]:
        return [self.legs[0].a] + [leg.b for leg in self.legs]

    def diam2(self) -> mpq:
        return polyline_diameter_sq(self.points())


def taxicab_arcs(z1: QPoint, z2: QPoint) -> list[TaxicabArc]:
    """The taxicab arcs from ``z1`` to ``z2``: through Re z1 + i Im z2 and through Re z2 + i Im z1."""
    if z1 == z2:
        raise GeometryError("taxicab arcs need two distinct points")
    if z1.re == z2.re or z1.im == z2.im:
        return [TaxicabArc((Segment(z1, z2),))]
    out = []
    for corner in (QPoint(z1.re, z2.im), QPoint(z2.re, z1.im)):
        out.append(TaxicabArc((Segment(z1, corner), Segment(corner, z2))))
    return out


def point_on_segment(p: QPoint, s: Segment) -> bool:
    if s.is_point:
        return p == s.a
    if cross(s.a, s.b, p) != 0:
        return False
    return (
        min(s.a.re, s.b.re) <= p.re <= max(s.a.re, s.b.re)
        and min(s.a.im, s.b.im) <= p.im <= max(s.a.im, s.b.im)
    )


def seg_meets_rect(s: Segment, r: QRect) -> bool:
    """Whether the closed segment ``s`` has a point in ``r`` (open or closed).

    Separating-axis test over the two coordinate axes and the segment normal;
    for an open rectangle a supporting line that merely touches its closure
    separates.
    """
    ax, ay, bx, by = s.a.re, s.a.im, s.b.re, s.b.im
    xmin, xmax = (ax, bx) if ax <= bx else (bx, ax)
    ymin, ymax = (ay, by) if ay <= by else (by, ay)
    if r.kind == CLOSED:
        if xmax < r.x_lo or xmin > r.x_hi or ymax < r.y_lo or ymin > r.y_hi:
            return False
    elif xmax <= r.x_lo or xmin >= r.x_hi or ymax <= r.y_lo or ymin >= r.y_hi:
        return False
    dx = bx - ax
    dy = by - ay
    if dx == 0 and dy == 0:
        return True
    pos = neg = False
    for cx, cy in ((r.x_lo, r.y_lo), (r.x_hi, r.y_lo), (r.x_hi, r.y_hi), (r.x_lo, r.y_hi)):
        c = dx * (cy - ay) - dy * (cx - ax)
        if c > 0:
            pos = True
        elif c < 0:
            neg = True
        elif r.kind == CLOSED:
            return True
    if r.kind == CLOSED:
        return pos and neg
    return pos and neg


def segment_param_interval(s: Segment, r: QRect):
    """Parameters t in [0, 1] with s(t) in r, as ``(lo, lo_closed, hi, hi_closed)`` or None."""
    lo, lo_closed, hi, hi_closed = _ZERO, True, _ONE, True
    for p0, d, rlo, rhi in (
        (s.a.re, s.b.re - s.a.re, r.x_lo, r.x_hi),
        (s.a.im, s.b.im - s.a.im, r.y_lo, r.y_hi),
    ):
        strict = r.kind == OPEN
        if d == 0:
            if strict and not (rlo < p0 < rhi):
                return None
            if not strict and not (rlo <= p0 <= rhi):
                return None
            continue
        t1 = (rlo - p0) / d
        t2 = (rhi - p0) / d
        if t1 > t2:
            t1, t2 = t2, t1
        closed_end = not strict
        if t1 > lo:
            lo, lo_closed = t1, closed_end
        elif t1 == lo:
            lo_closed = lo_closed and closed_end
        if t2 < hi:
            hi, hi_closed = t2, closed_end
        elif t2 == hi:
            hi_closed = hi_closed and closed_end
    if lo < hi or (lo == hi and lo_closed and hi_closed):
        return lo, lo_closed, hi, hi_closed
    return None


def segment_intersection(s: Segment, t: Segment):
    """Intersection of two closed segments: None, a QPoint, or an overlap Segment."""
    d = s.b - s.a
    e = t.b - t.a
    w = t.a - s.a
    denom = d.re * e.im - d.im * e.re
    if denom != 0:
        u = (w.re * e.im - w.im * e.re) / denom
        v = (w.re * d.im - w.im * d.re) / denom
        if 0 <= u <= 1 and 0 <= v <= 1:
            return s.point_at(u)
        return None
    if s.is_point:
        return s.a if point_on_segment(s.a, t) else None
    if w.re * d.im - w.im * d.re != 0:
        return None
    dd = d.abs2()
    u0 = (w.re * d.re + w.im * d.im) / dd
    w1 = t.b - s.a
    u1 = (w1.re * d.re + w1.im * d.im) / dd
    lo = max(_ZERO, min(u0, u1))
    hi = min(_ONE, max(u0, u1))
    if lo > hi:
        return None
    if lo == hi:
        return s.point_at(lo)
    return Segment(s.point_at(lo), s.point_at(hi))


def intersection_params(s: Segment, t: Segment) -> list[mpq]:
    """Parameters on ``s`` bounding its intersection with ``t`` (0, 1 or 2 values)."""
    if s.is_point:
        return [_ZERO] if point_on_segment(s.a, t) else []
    hit = segment_intersection(s, t)
    if hit is None:
        return []
    pts = [hit] if isinstance(hit, QPoint) else [hit.a, hit.b]
    d = s.b - s.a
    dd = d.abs2()
    return [((p.re - s.a.re) * d.re + (p.im - s.a.im) * d.im) / dd for p in pts]


def segments_intersect(s: Segment, t: Segment) -> bool:
    return segment_intersection(s, t) is not None


def _hull(pts: Sequence[QPoint]) -> list[QPoint]:
    """Exact convex hull vertices (monotone chain); the diameter is attained there."""
    P = sorted(set(pts), key=lambda p: (p.re, p.im))
    if len(P) <= 2:
        return P

    def chain(seq):
        out: list[QPoint] = []
        for p in seq:
            while len(out) >= 2 and cross(out[-2], out[-1], p) <= 0:
                out.pop()
            out.append(p)
        return out

    lower, upper = chain(P), chain(reversed(P))
    return lower[:-1] + upper[:-1]


def polyline_diameter_sq(pts: Sequence[QPoint]) -> mpq:
    """Exact squared diameter of a piecewise-linear set, attained at its vertices."""
    if not pts:
        raise GeometryError("diameter of an empty point set")
    best = _ZERO
    for p, r in combinations(_hull(pts), 2):
        d = dist2(p, r)
        if d > best:
            best = d
    return best


def point_segment_dist2(p: QPoint, s: Segment) -> mpq:
    if s.is_point:
        return dist2(p, s.a)
    d = s.b - s.a
    t = ((p.re - s.a.re) * d.re + (p.im - s.a.im) * d.im) / d.abs2()
    t = min(_ONE, max(_ZERO, t))
    return dist2(p, s.point_at(t))


def winding_number(p: QPoint, closed: Sequence[QPoint]) -> int:
    """Winding number of the closed polygonal curve ``closed`` (last joins first) about ``p``.

    Undefined when ``p`` lies on the curve; callers test that first.  Doubled
    (slit) edges cancel because they are traversed once in each direction.
    """
    wn = 0
    n = len(closed)
    py = p.im
    for i in range(n):
        a = closed[i]
        b = closed[(i + 1) % n]
        if a.im <= py:
            if b.im > py and cross(a, b, p) > 0:
                wn += 1
        elif b.im <= py and cross(a, b, p) < 0:
            wn -= 1
    return wn


def sqrt2_le(a2: mpq, b2: mpq) -> bool:
    """a <= sqrt(2) * b for nonnegative a, b given as squares."""
    return a2 <= 2 * b2


def one_plus_sqrt2_lt(d2: mpq, rho2: mpq) -> bool:
    """(1 + sqrt 2) * d < rho for nonnegative d, rho given as squares.

    (1 + sqrt 2)^2 = 3 + 2 sqrt 2, so the test is 2 sqrt2 d^2 < rho^2 - 3 d^2.
    """
    rhs = rho2 - 3 * d2
    if rhs <= 0:
        return False
    return 8 * d2 * d2 < rhs * rhs


def one_plus_sqrt2_ge(d2: mpq, rho2: mpq) -> bool:
    """(1 + sqrt 2) * d >= rho, the negation of :func:`one_plus_sqrt2_lt`."""
    return not one_plus_sqrt2_lt(d2, rho2)


def bbox(points: Iterable[QPoint]) -> tuple[mpq, mpq, mpq, mpq]:
    pts = list(points)
    xs = [p.re for p in pts]
    ys = [p.im for p in pts]
    return min(xs), max(xs), min(ys), max(ys)


def qpair(x: mpq) -> list[int]:
    """Numerator/denominator pair for serialization."""
    x = q(x)
    return [int(x.numerator), int(x.denominator)]


def from_qpair(pair: Sequence[int]) -> mpq:
    num, den = pair
    return mpq(int(num), int(den))
