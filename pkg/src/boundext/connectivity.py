"""Boundary arcs, the minimal boundary connectivity function of a truncated domain, and the reduction.

The boundary X of a truncated domain is a polygonal cycle with pendant stems
(the spikes).  Between two points of X there are at most two arcs, one each
way around the cycle, so arc diameters are exact maxima over finite node sets.

For the minimal connectivity function we need, for T = 2^-k,

    delta_k = min |p - q| over pairs p != q of X whose every arc has diameter >= T.

For p on edge e1 (parameter s) and q on edge e2 (parameter t) the arc going
one way has node set V_A, and its diameter is below T exactly when
diam(V_A) < T, |p - q| < T and every node lies within T of both p and q.  The
last condition cuts out an open interval in s and one in t, so the pairs with
a short arc form an open box in the (s, t) square.  The bad pairs are the
square minus the two boxes.  We split the square along the box sides and
minimise |p - q| on every face (cell, edge or corner) that no box covers.  The
interval ends are irrational, so this part runs in binary64 and the final
choice of g is made with a relative guard band.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from functools import cached_property
from itertools import combinations
from typing import Mapping, Optional

from gmpy2 import mpq

from .domain import DomainModel, Kind, pow2
from .geometry import QPoint, Segment, dyadic, point_on_segment, polyline_diameter_sq, point_segment_dist2, segment_intersection
from .staged import member_at

GUARD = 1e-9


class ConnectivityError(ValueError):
    pass


@dataclass(frozen=True)
class Place:
    """Where a point sits: the loop indices an arc leaves through going forward and backward."""

    fwd: int
    bwd: int
    edge: Optional[int]  # graph edge index, None for a loop vertex


class BoundaryGraph:
    """The boundary as a cycle of loop vertices with spike stems hanging off their feet."""

    def __init__(self, dm: DomainModel) -> None:
        self.dm = dm
        loop: list[QPoint] = []
        stems: list[tuple[int, QPoint]] = []
        verts = dm.vertices
        n = 0
        while n < len(verts):
            if n >= 4 and (n - 4) % 3 == 0 and n + 2 < len(verts) and verts[n] == verts[n + 2]:
                loop.append(verts[n])
                stems.append((len(loop) - 1, verts[n + 1]))
                n += 3
                continue
            loop.append(verts[n])
            n += 1
        self.loop = loop
        self.stems = stems
        m = len(loop)
        self.edges: list[Segment] = [Segment(loop[i], loop[(i + 1) % m]) for i in range(m)]
        self.edges += [Segment(loop[f], apex) for f, apex in stems]
        self.index = {p: i for i, p in enumerate(loop)}

    @property
    def m(self) -> int:
        return len(self.loop)

    def edge_place(self, e: int) -> Place:
        m = self.m
        if e < m:
            return Place((e + 1) % m, e, e)
        foot = self.stems[e - m][0]
        return Place(foot, foot, e)

    def locate(self, p: QPoint) -> Place:
        if p in self.index:
            i = self.index[p]
            return Place(i, i, None)
        for e, s in enumerate(self.edges):
            if point_on_segment(p, s):
                return self.edge_place(e)
        raise ConnectivityError(f"{p} is not on the boundary")

    def forward_nodes(self, a: int, b: int) -> list[QPoint]:
        """Loop vertices a, a+1, ..., b (cyclic, inclusive)."""
        m = self.m
        out = [self.loop[a]]
        i = a
        while i != b:
            i = (i + 1) % m
            out.append(self.loop[i])
        return out

    def backward_nodes(self, a: int, b: int) -> list[QPoint]:
        m = self.m
        out = [self.loop[a]]
        i = a
        while i != b:
            i = (i - 1) % m
            out.append(self.loop[i])
        return out

    def arc_nodes(self, pp: Place, pq: Place) -> list[list[QPoint]]:
        """Interior node sets of the arcs between two places on different edges."""
        return [self.forward_nodes(pp.fwd, pq.bwd), self.backward_nodes(pp.bwd, pq.fwd)]


def boundary_graph(dm: DomainModel) -> BoundaryGraph:
    return BoundaryGraph(dm)


def min_arc_diameter_sq(bg: BoundaryGraph, p: QPoint, q: QPoint) -> mpq:
    """Exact squared diameter of the smaller of the boundary arcs from p to q."""
    if p == q:
        raise ConnectivityError("arc endpoints must differ")
    pp, pq = bg.locate(p), bg.locate(q)
    if pp.edge is not None and pp.edge == pq.edge:
        return (p - q).abs2()
    if pp.edge is not None and pq.edge is None and point_on_segment(q, bg.edges[pp.edge]):
        return (p - q).abs2()
    if pq.edge is not None and pp.edge is None and point_on_segment(p, bg.edges[pq.edge]):
        return (p - q).abs2()
    best = None
    for nodes in bg.arc_nodes(pp, pq):
        d = polyline_diameter_sq([p, q, *nodes])
        if best is None or d < best:
            best = d
    return best


# -- connectivity function ----------------------------------------------------------


@dataclass(frozen=True)
class BCF:
    """Boundary connectivity function table k -> g(k) for k = 0 .. k_max."""

    values: tuple[int, ...]

    def __post_init__(self) -> None:
        vals = tuple(int(v) for v in self.values)
        object.__setattr__(self, "values", vals)
        if not vals:
            raise ConnectivityError("empty connectivity table")
        if any(v < 0 for v in vals):
            raise ConnectivityError("connectivity values must be natural numbers")
        if any(b < a for a, b in zip(vals, vals[1:])):
            raise ConnectivityError("connectivity table must be non-decreasing")

    @property
    def k_max(self) -> int:
        return len(self.values) - 1

    def __call__(self, k: int) -> int:
        if not 0 <= k <= self.k_max:
            raise ConnectivityError(f"g({k}) is outside the table (k_max={self.k_max})")
        return self.values[k]

    def to_document(self) -> dict:
        return {"g": [[k, v] for k, v in enumerate(self.values)]}

    def dumps(self) -> str:
        return json.dumps(self.to_document(), separators=(",", ":"))


def bcf_from_document(doc: Mapping) -> BCF:
    try:
        pairs = sorted((int(k), int(v)) for k, v in doc["g"])
    except (KeyError, TypeError, ValueError) as exc:
        raise ConnectivityError(f"malformed connectivity document: {exc}") from None
    if [k for k, _ in pairs] != list(range(len(pairs))):
        raise ConnectivityError("connectivity document must list k = 0, 1, ... without gaps")
    return BCF(tuple(v for _, v in pairs))


def load_bcf(text: str) -> BCF:
    try:
        return bcf_from_document(json.loads(text))
    except json.JSONDecodeError as exc:
        raise ConnectivityError(f"malformed connectivity document: {exc}") from None


@dataclass(frozen=True)
class BadPair:
    """A closest pair whose arcs are all at least 2^-k across."""

    k: int
    distance: float
    edge_p: int
    s: float
    edge_q: int
    t: float

    def points(self, bg: BoundaryGraph, bits: int = 40) -> tuple[QPoint, QPoint]:
        p = bg.edges[self.edge_p].point_at(dyadic(self.s, bits))
        q = bg.edges[self.edge_q].point_at(dyadic(self.t, bits))
        return p, q


def _f(p: QPoint) -> tuple[float, float]:
    return float(p.re), float(p.im)


def _disk_interval(a, d, nodes, T2) -> tuple[float, float]:
    """Open interval of s where a + s*d lies within sqrt(T2) of every node."""
    lo, hi = -math.inf, math.inf
    dd = d[0] * d[0] + d[1] * d[1]
    for v in nodes:
        wx, wy = a[0] - v[0], a[1] - v[1]
        if dd == 0:
            if wx * wx + wy * wy >= T2:
                return (0.0, 0.0)
            continue
        b = 2 * (wx * d[0] + wy * d[1])
        c = wx * wx + wy * wy - T2
        disc = b * b - 4 * dd * c
        if disc <= 0:
            return (0.0, 0.0)
        r = math.sqrt(disc)
        r1, r2 = (-b - r) / (2 * dd), (-b + r) / (2 * dd)
        lo, hi = max(lo, r1), min(hi, r2)
        if lo >= hi:
            return (0.0, 0.0)
    return (lo, hi)


def _pt_seg(px, py, ax, ay, bx, by):
    dx, dy = bx - ax, by - ay
    dd = dx * dx + dy * dy
    if dd == 0:
        return (px - ax) ** 2 + (py - ay) ** 2, 0.0
    u = ((px - ax) * dx + (py - ay) * dy) / dd
    u = min(1.0, max(0.0, u))
    return (px - ax - u * dx) ** 2 + (py - ay - u * dy) ** 2, u


def _min_on_face(a1, d1, s0, s1, a2, d2, t0, t1):
    """Minimum of |p(s) - q(t)|^2 over [s0, s1] x [t0, t1] with its argmin."""
    P0 = (a1[0] + s0 * d1[0], a1[1] + s0 * d1[1])
    P1 = (a1[0] + s1 * d1[0], a1[1] + s1 * d1[1])
    Q0 = (a2[0] + t0 * d2[0], a2[1] + t0 * d2[1])
    Q1 = (a2[0] + t1 * d2[0], a2[1] + t1 * d2[1])
    best = None
    for px, py, ax, ay, bx, by, flip, base in (
        (*P0, *Q0, *Q1, False, s0),
        (*P1, *Q0, *Q1, False, s1),
        (*Q0, *P0, *P1, True, t0),
        (*Q1, *P0, *P1, True, t1),
    ):
        d2_, u = _pt_seg(px, py, ax, ay, bx, by)
        if flip:
            cand = (d2_, s0 + u * (s1 - s0), base)
        else:
            cand = (d2_, base, t0 + u * (t1 - t0))
        if best is None or cand[0] < best[0]:
            best = cand
    return best


class ConnectivityAnalysis:
    """Cached per-domain computation of delta_k."""

    def __init__(self, dm: DomainModel) -> None:
        self.dm = dm
        self.bg = BoundaryGraph(dm)
        self._delta: dict[int, tuple[float, Optional[BadPair]]] = {}

    @cached_property
    def _pairs(self):
        bg = self.bg
        out = []
        fe = [(_f(e.a), (float(e.b.re - e.a.re), float(e.b.im - e.a.im))) for e in bg.edges]
        for e1, e2 in combinations(range(len(bg.edges)), 2):
            p1, p2 = bg.edge_place(e1), bg.edge_place(e2)
            arcs = []
            for nodes in bg.arc_nodes(p1, p2):
                arcs.append((polyline_diameter_sq(nodes), [_f(v) for v in nodes]))
            out.append((e1, e2, fe[e1], fe[e2], _segment_distance2(bg.edges[e1], bg.edges[e2]), arcs))
        return out

    def delta(self, k: int) -> tuple[float, Optional[BadPair]]:
        """delta_k and a pair attaining it (None when delta_k = 2^-k is attained only at distance T)."""
        if k in self._delta:
            return self._delta[k]
        T = pow2(-k)
        T2q = T * T
        T2 = float(T2q)
        best, arg = float(T), None
        for e1, e2, (a1, d1), (a2, d2), dist2, arcs in self._pairs:
            if dist2 >= T2q:
                continue
            boxes = []
            for D2, nodes in arcs:
                if D2 >= T2q:
                    continue
                I = _disk_interval(a1, d1, nodes, T2)
                Jv = _disk_interval(a2, d2, nodes, T2)
                if I[0] < I[1] and Jv[0] < Jv[1]:
                    boxes.append((I, Jv))
            ss = sorted({0.0, 1.0, *(x for b in boxes for x in b[0] if 0 < x < 1)})
            ts = sorted({0.0, 1.0, *(x for b in boxes for x in b[1] if 0 < x < 1)})

            def covered(s, t):
                return any(I[0] < s < I[1] and Jv[0] < t < Jv[1] for I, Jv in boxes)

            faces = []
            for i in range(len(ss)):
                for j in range(len(ts)):
                    faces.append((ss[i], ss[i], ts[j], ts[j]))
                    if i + 1 < len(ss):
                        faces.append((ss[i], ss[i + 1], ts[j], ts[j]))
                    if j + 1 < len(ts):
                        faces.append((ss[i], ss[i], ts[j], ts[j + 1]))
                    if i + 1 < len(ss) and j + 1 < len(ts):
                        faces.append((ss[i], ss[i + 1], ts[j], ts[j + 1]))
            for s0, s1, t0, t1 in faces:
                if covered((s0 + s1) / 2, (t0 + t1) / 2):
                    continue
                d2_, s, t = _min_on_face(a1, d1, s0, s1, a2, d2, t0, t1)
                d = math.sqrt(d2_)
                if d < best:
                    if d == 0.0:
                        raise ConnectivityError(f"degenerate bad pair on edges {e1}, {e2}")
                    best, arg = d, BadPair(k, d, e1, s, e2, t)
        self._delta[k] = (best, arg)
        return best, arg

    def g_at(self, k: int) -> int:
        """Smallest G with 2^-G < delta_k, with a relative guard band against rounding."""
        d, _ = self.delta(k)
        G = k + 1
        while 2.0 ** (-G) >= d * (1 - GUARD):
            G += 1
        return G

    def table(self, k_max: int) -> BCF:
        vals = []
        run = 0
        for k in range(k_max + 1):
            run = max(run, self.g_at(k))
            vals.append(run)
        return BCF(tuple(vals))

    @cached_property
    def vertex_pairs(self) -> list[tuple[mpq, mpq, QPoint, QPoint]]:
        """(|p-q|^2, shortest arc diameter^2, p, q) for all pairs of distinct vertices, exactly."""
        pts = sorted(set(self.dm.vertices), key=lambda p: (p.re, p.im))
        out = []
        for p, q in combinations(pts, 2):
            out.append(((p - q).abs2(), min_arc_diameter_sq(self.bg, p, q), p, q))
        return out

    def exact_offender(self, g: BCF, k_max: int):
        """Closest vertex pair breaking g, as (dist2, k, p, q), or None."""
        best = None
        for k in range(k_max + 1):
            T2 = pow2(-2 * k)
            lim2 = pow2(-2 * g(k))
            for d2, arc2, p, q in self.vertex_pairs:
                if arc2 >= T2 and d2 <= lim2 and (best is None or d2 < best[0]):
                    best = (d2, k, p, q)
        return best

    def violation(self, g: BCF, k_max: Optional[int] = None) -> Optional[BadPair]:
        k_max = g.k_max if k_max is None else k_max
        for k in range(k_max + 1):
            d, arg = self.delta(k)
            if not 2.0 ** (-g(k)) < d * (1 - GUARD):
                if arg is None:
                    arg = BadPair(k, d, -1, 0.0, -1, 0.0)
                return arg
        return None


def _segment_distance2(s: Segment, t: Segment) -> mpq:
    if segment_intersection(s, t) is not None:
        return mpq(0)
    return min(
        point_segment_dist2(s.a, t),
        point_segment_dist2(s.b, t),
        point_segment_dist2(t.a, s),
        point_segment_dist2(t.b, s),
    )


_CACHE: dict[int, ConnectivityAnalysis] = {}


def analysis(dm: DomainModel) -> ConnectivityAnalysis:
    key = id(dm)
    hit = _CACHE.get(key)
    if hit is None or hit.dm is not dm:
        hit = ConnectivityAnalysis(dm)
        _CACHE[key] = hit
    return hit


def default_k_max(dm: DomainModel) -> int:
    return dm.depth + 1


def mlc_table(dm: DomainModel, k_max: Optional[int] = None) -> BCF:
    """The pointwise-minimal non-decreasing connectivity function for k = 0 .. k_max."""
    return analysis(dm).table(default_k_max(dm) if k_max is None else k_max)


@dataclass(frozen=True)
class Counterexample:
    p: QPoint
    q: QPoint
    k: int
    distance: float
    exact: bool = False  # True when p, q are vertices and the violation was checked exactly


def validate_bcf(dm: DomainModel, g: BCF, k_max: Optional[int] = None) -> Optional[Counterexample]:
    """None when g is valid up to k_max, otherwise a closest offending pair."""
    k_max = g.k_max if k_max is None else k_max
    if k_max > g.k_max:
        raise ConnectivityError(f"table stops at k={g.k_max}, asked to validate to {k_max}")
    an = analysis(dm)
    exact = an.exact_offender(g, k_max)
    if exact is not None:
        d2, k, p, q = exact
        return Counterexample(p, q, k, math.sqrt(float(d2)), exact=True)
    bad = an.violation(g, k_max)
    if bad is None:
        return None
    if bad.edge_p < 0:
        # only pairs at distance exactly 2^-k are bad; any such pair on [0, i] is a witness
        T = pow2(-bad.k)
        p, q = QPoint(0, (1 - T) / 2), QPoint(0, (1 + T) / 2)
        return Counterexample(p, q, bad.k, float(T), exact=True)
    p, q = bad.points(an.bg)
    return Counterexample(p, q, bad.k, bad.distance)


def turing_reduce(dm: DomainModel, g: BCF, check: bool = True) -> dict[int, bool]:
    """Decide membership of n < J from the stage table at stage g(n + 2)."""
    if dm.staged is None:
        raise ConnectivityError("the reduction needs a domain built from a stage table")
    if g.k_max < dm.depth + 1:
        raise ConnectivityError(f"the reduction needs g up to k={dm.depth + 1}")
    if check and validate_bcf(dm, g) is not None:
        raise ConnectivityError("g is not a valid connectivity function for this domain")
    return {n: member_at(dm.staged, n, g(n + 2)) for n in range(dm.depth)}


def tent_feet(dm: DomainModel, j: int) -> tuple[QPoint, QPoint]:
    c = dm.tent_constituent(j)
    return c.segments[0].a, c.segments[1].b


def tent_feet_arc_sq(dm: DomainModel, j: int) -> mpq:
    """Squared diameter of the shortest boundary arc between the feet of tent j."""
    c = dm.tent_constituent(j)
    if c.kind != Kind.TENT:
        raise ConnectivityError(f"feature {j} is a spike")
    p, q = tent_feet(dm, j)
    return min_arc_diameter_sq(analysis(dm).bg, p, q)


__all__ = [
    "BCF",
    "BadPair",
    "BoundaryGraph",
    "ConnectivityAnalysis",
    "ConnectivityError",
    "Counterexample",
    "analysis",
    "bcf_from_document",
    "boundary_graph",
    "load_bcf",
    "min_arc_diameter_sq",
    "mlc_table",
    "tent_feet",
    "tent_feet_arc_sq",
    "turing_reduce",
    "validate_bcf",
]
