"""Wads, approximate crosscuts, acceptability and the exact side test for crosscuts."""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Iterator, Optional, Sequence

from gmpy2 import mpq

from .domain import DomainModel, constituent_of, point_in_D
from .effective import closed_rect_in_D, open_rect_meets_X, rect_avoids_rest, rect_meets_sigma
from .geometry import (
    GeometryError,
    QPoint,
    QRect,
    Segment,
    TaxicabArc,
    from_qpair,
    intersection_params,
    one_plus_sqrt2_lt,
    point_segment_dist2,
    polyline_diameter_sq,
    qpair,
    segment_intersection,
    segment_param_interval,
    taxicab_arcs,
    winding_number,
)


class CrosscutError(ValueError):
    pass


@dataclass(frozen=True)
class Verdict:
    ok: bool
    reason: str = ""

    def __bool__(self) -> bool:
        return self.ok


@dataclass(frozen=True)
class Wad:
    """Union of a chain of open rational boxes."""

    boxes: tuple[QRect, ...]

    def __post_init__(self) -> None:
        boxes = tuple(self.boxes)
        object.__setattr__(self, "boxes", boxes)
        if not boxes:
            raise CrosscutError("a wad needs at least one box")
        for b in boxes:
            if not b.is_open:
                raise CrosscutError("wad boxes must be open rectangles")
        for b, c in zip(boxes, boxes[1:]):
            if not b.meets(c):
                raise CrosscutError("consecutive wad boxes do not intersect")

    def meets(self, other: "Wad") -> bool:
        return any(b.meets(c) for b in self.boxes for c in other.boxes)

    def contains(self, p: QPoint) -> bool:
        return any(b.contains(p) for b in self.boxes)

    def corners(self) -> list[QPoint]:
        return [c for b in self.boxes for c in b.corners()]

    def diam2(self) -> mpq:
        """Squared diameter of the closure; attained at box corners."""
        return polyline_diameter_sq(self.corners())


@dataclass(frozen=True)
class ApproxCrosscut:
    wads: tuple[Wad, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "wads", tuple(self.wads))
        if not self.wads:
            raise CrosscutError("an approximate crosscut needs at least one wad")

    def __len__(self) -> int:
        return len(self.wads)

    def corners(self) -> list[QPoint]:
        return [c for w in self.wads for c in w.corners()]

    def to_document(self) -> dict:
        return {
            "wads": [[[qpair(v) for v in b.to_list()] for b in w.boxes] for w in self.wads],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, separators=(",", ":"))


def chain_from_document(doc) -> ApproxCrosscut:
    try:
        wads = [
            Wad(tuple(QRect.open(*(from_qpair(v) for v in box)) for box in w)) for w in doc["wads"]
        ]
    except (KeyError, TypeError, ValueError) as exc:
        raise CrosscutError(f"malformed chain document: {exc}") from None
    return ApproxCrosscut(tuple(wads))


@dataclass(frozen=True)
class Crosscut:
    """Rational polyline with both endpoints on the boundary and everything else inside D."""

    polyline: tuple[QPoint, ...]
    ends: tuple[int, int]
    segments: tuple[Segment, ...] = field(repr=False, compare=False, default=())

    def __post_init__(self) -> None:
        pts = tuple(self.polyline)
        object.__setattr__(self, "polyline", pts)
        object.__setattr__(self, "segments", tuple(Segment(a, b) for a, b in zip(pts, pts[1:])))

    @property
    def start(self) -> QPoint:
        return self.polyline[0]

    @property
    def end(self) -> QPoint:
        return self.polyline[-1]

    def diam2(self) -> mpq:
        return polyline_diameter_sq(self.polyline)

    def point_at(self, t: mpq) -> QPoint:
        """Global parameter: segment index plus local parameter."""
        i = min(int(t), len(self.segments) - 1)
        return self.segments[i].point_at(t - i)

    def to_document(self) -> dict:
        return {"polyline": [[qpair(p.re), qpair(p.im)] for p in self.polyline]}

    def dumps(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, separators=(",", ":"))


def _is_simple_polyline(segs: Sequence[Segment]) -> bool:
    # sweep over x so only pairs with overlapping exact bounding boxes are tested
    boxes = [
        (min(s.a.re, s.b.re), max(s.a.re, s.b.re), min(s.a.im, s.b.im), max(s.a.im, s.b.im)) for s in segs
    ]
    order = sorted(range(len(segs)), key=lambda i: boxes[i][0])
    pairs = []
    for pos, i in enumerate(order):
        for j in order[pos + 1 :]:
            if boxes[j][0] > boxes[i][1]:
                break
            if boxes[j][2] <= boxes[i][3] and boxes[i][2] <= boxes[j][3]:
                pairs.append((min(i, j), max(i, j)))
    for i, j in sorted(pairs):
        hit = segment_intersection(segs[i], segs[j])
        if hit is None:
            continue
        if j == i + 1 and hit == segs[i].b:
            continue
        return False
    return True


def make_crosscut(dm: DomainModel, pts: Sequence[QPoint]) -> Crosscut:
    """Validate a polyline as a crosscut of ``dm`` and label its end constituents."""
    pts = tuple(pts)
    if len(pts) < 2 or any(a == b for a, b in zip(pts, pts[1:])):
        raise CrosscutError("a crosscut needs at least two points and no repeated consecutive points")
    ends = []
    for p in (pts[0], pts[-1]):
        loc = constituent_of(dm, p)
        if loc.is_vertex:
            raise CrosscutError(f"crosscut endpoint {p} is a vertex")
        if loc.constituent is None:
            raise CrosscutError(f"crosscut endpoint {p} is not on the boundary")
        ends.append(loc.constituent)
    segs = [Segment(a, b) for a, b in zip(pts, pts[1:])]
    if not _is_simple_polyline(segs):
        raise CrosscutError("crosscut polyline is not simple")
    endpoints = {pts[0], pts[-1]}
    for s in segs:
        for e in dm.edges:
            hit = segment_intersection(s, e)
            if hit is None:
                continue
            if isinstance(hit, Segment) or hit not in endpoints:
                raise CrosscutError(f"crosscut meets the boundary at {hit}")
    for p in pts[1:-1]:
        if not point_in_D(dm, p):
            raise CrosscutError(f"crosscut vertex {p} lies outside D")
    if not point_in_D(dm, segs[0].midpoint()):
        raise CrosscutError("crosscut leaves D")
    return Crosscut(pts, (ends[0], ends[1]))


def crosscut_from_document(dm: DomainModel, doc) -> Crosscut:
    try:
        pts = [QPoint(from_qpair(x), from_qpair(y)) for x, y in doc["polyline"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise CrosscutError(f"malformed crosscut document: {exc}") from None
    return make_crosscut(dm, pts)


# -- approximate crosscuts ---------------------------------------------------


def is_approx_crosscut(dm: DomainModel, a: ApproxCrosscut) -> Verdict:
    wads = a.wads
    n = len(wads)
    for j in range(n - 1):
        if not wads[j].meets(wads[j + 1]):
            return Verdict(False, f"not a chain: wads {j + 1} and {j + 2} are disjoint")
    for j, k in combinations(range(n), 2):
        if k - j > 1 and wads[j].meets(wads[k]):
            return Verdict(False, f"not simple: wads {j + 1} and {k + 1} intersect")
    for j in range(1, n - 1):
        for b in wads[j].boxes:
            if not closed_rect_in_D(dm, b.closure()):
                return Verdict(False, f"closure escapes D: wad {j + 1}")
    for j in {0, n - 1}:
        if not any(open_rect_meets_X(dm, b) for b in wads[j].boxes):
            return Verdict(False, f"end wad {j + 1} misses the boundary")
    return Verdict(True)


# Parameter intervals are (lo, lo_closed, hi, hi_closed) over the global polyline parameter.


def _merge(intervals: list) -> list:
    intervals = sorted(intervals, key=lambda iv: (iv[0], not iv[1]))
    out: list = []
    for lo, lc, hi, hc in intervals:
        if out:
            plo, plc, phi, phc = out[-1]
            if lo < phi or (lo == phi and (lc or phc)):
                if hi > phi:
                    out[-1] = (plo, plc, hi, hc)
                elif hi == phi:
                    out[-1] = (plo, plc, phi, phc or hc)
                continue
        out.append((lo, lc, hi, hc))
    return out


def _wad_params(C: Crosscut, w: Wad) -> list:
    ivs = []
    for i, s in enumerate(C.segments):
        for b in w.boxes:
            iv = segment_param_interval(s, b)
            if iv is not None:
                lo, lc, hi, hc = iv
                ivs.append((lo + i, lc, hi + i, hc))
    return _merge(ivs)


def _contains(iv, t) -> bool:
    lo, lc, hi, hc = iv
    return (lo < t or (lc and lo == t)) and (t < hi or (hc and t == hi))


def approximates(a: ApproxCrosscut, C: Crosscut) -> bool:
    """Whether 0 = t_0 < ... < t_n = end exists with C[t_{j-1}, t_j] inside wad j.

    F holds the feasible values of t_j.  Inside one component I of the
    parameter set of wad j, the reachable values are those in I above the
    smallest feasible t_{j-1} lying in I.
    """
    end = mpq(len(C.segments))
    feasible = [(mpq(0), True, mpq(0), True)]
    for w in a.wads:
        nxt = []
        for comp in _wad_params(C, w):
            lo, lc, hi, hc = comp
            starts = []
            for f in feasible:
                flo, flc, fhi, fhc = f
                # intersection of f with comp
                if flo > lo or (flo == lo and (lc or not flc)):
                    ilo, ilc = flo, flc
                else:
                    ilo, ilc = lo, lc
                if fhi < hi or (fhi == hi and (not fhc or hc)):
                    ihi, ihc = fhi, fhc
                else:
                    ihi, ihc = hi, hc
                if ilo < ihi or (ilo == ihi and ilc and ihc):
                    starts.append(ilo)
            if not starts:
                continue
            s = min(starts)
            if s < hi:
                nxt.append((s, False, hi, hc))
        feasible = _merge(nxt)
        if not feasible:
            return False
    return any(_contains(f, end) for f in feasible)


def error_of(a: ApproxCrosscut) -> mpq:
    """Largest squared wad diameter."""
    return max(w.diam2() for w in a.wads)


def chain_diam2(a: ApproxCrosscut) -> mpq:
    """Squared diameter of the union of the wad closures."""
    return polyline_diameter_sq(a.corners())


def thicken(C: Crosscut, pieces: int, eps: mpq) -> ApproxCrosscut:
    """One single-box wad per parameter piece: the piece's bounding box grown by ``eps``."""
    end = len(C.segments)
    cuts = [mpq(end * i, pieces) for i in range(pieces + 1)]
    wads = []
    for t0, t1 in zip(cuts, cuts[1:]):
        pts = [C.point_at(t0), C.point_at(t1)]
        pts += [C.polyline[i] for i in range(len(C.polyline)) if t0 < i < t1]
        xs = [p.re for p in pts]
        ys = [p.im for p in pts]
        box = QRect.open(min(xs) - eps, max(xs) + eps, min(ys) - eps, max(ys) + eps)
        wads.append(Wad((box,)))
    return ApproxCrosscut(tuple(wads))


def chain_for(dm: DomainModel, C: Crosscut, max_error2: Optional[mpq] = None, max_pieces: int = 256):
    """Search subdivisions of ``C`` for a valid approximate crosscut approximating it.

    Returns the first thickened subdivision that is an approximate crosscut, approximates
    ``C``, has conservatively intersecting end wads and error at most ``max_error2``.
    """
    pieces = 3
    while pieces <= max_pieces:
        for shrink in (4, 8, 16, 64):
            length2 = max(s.length2() for s in C.segments)
            eps = _dyadic_below(length2 / (pieces * pieces * shrink * shrink))
            a = thicken(C, pieces, eps)
            if max_error2 is not None and error_of(a) > max_error2:
                continue
            if not is_approx_crosscut(dm, a) or not approximates(a, C):
                continue
            if conservatively_intersects(dm, a.wads[0]) is None:
                continue
            if conservatively_intersects(dm, a.wads[-1]) is None:
                continue
            return a
        pieces *= 2
    return None


def _dyadic_below(x2: mpq) -> mpq:
    """Largest power of two whose square is at most ``x2``."""
    e = mpq(1)
    while e * e > x2:
        e /= 2
    return e


# -- boundary placement --------------------------------------------------------


def conservatively_intersects(dm: DomainModel, U: Wad) -> Optional[int]:
    """The unique constituent met by ``U`` whose closure avoids every vertex and every other constituent."""
    met = {k for k in range(dm.n_constituents) if any(rect_meets_sigma(dm, b, k) for b in U.boxes)}
    if len(met) != 1:
        return None
    (k,) = met
    if all(rect_avoids_rest(dm, b.closure(), k) for b in U.boxes):
        return k
    return None


def _breakpoints(dm: DomainModel, leg: Segment) -> list[mpq]:
    ts = {mpq(0), mpq(1)}
    for e in dm.edges:
        ts.update(intersection_params(leg, e))
    return sorted(ts)


def arc_avoids_D(dm: DomainModel, arc: TaxicabArc) -> bool:
    """Whether the taxicab arc contains no point of D.

    Each leg is cut where it meets X; between cuts the leg is either inside D
    or outside it entirely, so the cut points and one midpoint per piece decide.
    """
    for leg in arc.legs:
        ts = _breakpoints(dm, leg)
        probes = ts + [(u + v) / 2 for u, v in zip(ts, ts[1:])]
        if any(point_in_D(dm, leg.point_at(t)) for t in probes):
            return False
    return True


def acceptably_placed_points(dm: DomainModel, p: QPoint, q: QPoint) -> bool:
    if p == q:
        raise CrosscutError("acceptable placement needs two distinct points")
    locs = [constituent_of(dm, z) for z in (p, q)]
    if any(not loc.on_boundary for loc in locs):
        raise CrosscutError("acceptable placement is defined for boundary points")
    if any(loc.is_vertex for loc in locs):
        return False
    return any(arc_avoids_D(dm, arc) for arc in taxicab_arcs(p, q))


def representative_points(dm: DomainModel, k: int) -> tuple[QPoint, QPoint]:
    """Two distinct non-vertex points of constituent k."""
    s = dm.constituent(k).segments[0]
    return s.point_at(mpq(1, 3)), s.point_at(mpq(2, 3))


def acceptably_placed_constituents(dm: DomainModel, k: int, k2: int) -> bool:
    """Placement of constituents decided on one representative pair.

    Placement is constant across non-vertex point pairs of two fixed
    constituents, so a single pair settles it.
    """
    p, p2 = representative_points(dm, k)
    q = p2 if k == k2 else representative_points(dm, k2)[0]
    return acceptably_placed_points(dm, p, q)


def star_filter(dm: DomainModel, chains: Iterable[ApproxCrosscut], rho_lb: mpq) -> Iterator[ApproxCrosscut]:
    """Keep chains whose end wads sit conservatively on acceptably placed constituents and are small.

    Small means (1 + sqrt 2) * diam(union of wad closures) < rho_lb, decided exactly.
    """
    rho_lb = mpq(rho_lb)
    if rho_lb <= 0:
        raise CrosscutError("rho lower bound must be positive")
    rho2 = rho_lb * rho_lb
    placed: dict = {}
    for a in chains:
        k1 = conservatively_intersects(dm, a.wads[0])
        if k1 is None:
            continue
        k2 = conservatively_intersects(dm, a.wads[-1])
        if k2 is None:
            continue
        key = (k1, k2)
        if key not in placed:
            placed[key] = acceptably_placed_constituents(dm, k1, k2)
        if not placed[key]:
            continue
        if one_plus_sqrt2_lt(chain_diam2(a), rho2):
            yield a


# -- sides of a crosscut ---------------------------------------------------------


@dataclass(frozen=True)
class SideReport:
    interior_side: str  # "left" or "right" of the crosscut's direction
    left_probe: QPoint
    right_probe: QPoint
    left_winding: int
    right_winding: int


def _offset_probes(dm: DomainModel, C: Crosscut, s: Segment):
    mid = s.midpoint()
    d = s.b - s.a
    normal = QPoint(-d.im, d.re)  # points to the left of travel
    eps = mpq(1, 4)
    for _ in range(60):
        left = mid + normal.scale(eps)
        right = mid - normal.scale(eps)
        probe = Segment(right, left)
        if point_in_D(dm, left) and point_in_D(dm, right):
            clear = not any(segment_intersection(probe, e) is not None for e in dm.edges)
            hits = [segment_intersection(probe, t) for t in C.segments]
            if clear and all(h is None or h == mid for h in hits):
                return left, right
        eps /= 2
    raise CrosscutError("could not place side probes next to the crosscut")


def interior_side_check(dm: DomainModel, C: Crosscut, tau: TaxicabArc) -> SideReport:
    """Classify probes on both sides of C against the closed curve C + tau by exact winding."""
    if {tau.start, tau.end} != {C.start, C.end}:
        raise CrosscutError("tau must join the endpoints of the crosscut")
    if not arc_avoids_D(dm, tau):
        raise CrosscutError("tau contains a point of D")
    ends = {C.start, C.end}
    for leg in tau.legs:
        for s in C.segments:
            hit = segment_intersection(leg, s)
            if hit is None:
                continue
            if isinstance(hit, Segment) or hit not in ends:
                raise CrosscutError("tau crosses the crosscut; C + tau is not a Jordan curve")
    pts = list(tau.points())
    if pts[0] != C.end:
        pts.reverse()
    ring = list(C.polyline) + pts[1:-1]
    longest = max(C.segments, key=lambda s: s.length2())
    left, right = _offset_probes(dm, C, longest)
    wl = winding_number(left, ring)
    wr = winding_number(right, ring)
    inside = [name for name, w in (("left", wl), ("right", wr)) if w != 0]
    if len(inside) != 1:
        raise CrosscutError(f"expected exactly one interior side, found {len(inside)}")
    return SideReport(inside[0], left, right, wl, wr)


def avoiding_arc(dm: DomainModel, p: QPoint, q: QPoint) -> Optional[TaxicabArc]:
    """A taxicab arc from p to q containing no point of D, if one exists."""
    for arc in taxicab_arcs(p, q):
        if arc_avoids_D(dm, arc):
            return arc
    return None


def distance2_to_boundary(dm: DomainModel, p: QPoint) -> mpq:
    return min(point_segment_dist2(p, e) for e in dm.edges)


__all__ = [
    "ApproxCrosscut",
    "Crosscut",
    "CrosscutError",
    "GeometryError",
    "SideReport",
    "Verdict",
    "Wad",
    "acceptably_placed_constituents",
    "acceptably_placed_points",
    "approximates",
    "arc_avoids_D",
    "avoiding_arc",
    "chain_diam2",
    "chain_for",
    "chain_from_document",
    "conservatively_intersects",
    "crosscut_from_document",
    "error_of",
    "interior_side_check",
    "is_approx_crosscut",
    "make_crosscut",
    "star_filter",
    "thicken",
]
