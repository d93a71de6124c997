"""The truncated counterexample domain built from a stage table.

Vertices follow the recurrence

    nu_0 = 0, nu_1 = i, nu_2 = 1 + i, nu_3 = 1,
    nu_{3j+4} = 2^-(j+1) + 2^-(j+3+s)   (j enters at stage s; else 2^-(j+1))
    nu_{3j+5} = 2^-(j+1) (1 + i)
    nu_{3j+6} = 2^-(j+1) - 2^-(j+3+s)   (j enters at stage s; else 2^-(j+1))

and the boundary is the polygonal curve through nu_0 ... nu_{3J+3}, closed by
the real segment [nu_{3J+3}, 0].  Spikes (j never enters) are kept as doubled
segments so that the slit survives.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from enum import Enum
from functools import cached_property
from typing import Mapping, Optional

from gmpy2 import mpq

from .geometry import (
    QPoint,
    Segment,
    from_qpair,
    point_on_segment,
    qpair,
    winding_number,
)
from .staged import StagedSet, stage_table_from_document

DOCUMENT_FORMAT = "boundext.domain/1"
INTERIOR_REF = QPoint(mpq(1, 2), mpq(3, 4))


class DomainError(ValueError):
    pass


class Kind(str, Enum):
    SQUARE_SIDE = "square-side"
    BOTTOM_RUN = "bottom-run"
    TENT = "tent"
    SPIKE = "spike"


@dataclass(frozen=True)
class Constituent:
    index: int
    kind: Kind
    segments: tuple[Segment, ...]
    tent_index: Optional[int] = None

    @property
    def is_feature(self) -> bool:
        """Tent or spike."""
        return self.kind in (Kind.TENT, Kind.SPIKE)

    def points(self) -> list[QPoint]:
        return [self.segments[0].a] + [s.b for s in self.segments]

    def contains(self, p: QPoint) -> bool:
        return any(point_on_segment(p, s) for s in self.segments)


@dataclass(frozen=True)
class BoundaryLocation:
    constituent: Optional[int]
    is_vertex: bool

    @property
    def on_boundary(self) -> bool:
        return self.is_vertex or self.constituent is not None


def pow2(e: int) -> mpq:
    """2**e as an exact rational (e may be negative)."""
    return mpq(2) ** e


def _foot_offset(j: int, S: StagedSet) -> mpq:
    stage = S.entries.get(j) if j <= S.n_max else None
    if stage is None:
        return mpq(0)
    return pow2(-(j + 3 + stage))


def vertex(n: int, S: StagedSet, depth: Optional[int] = None) -> QPoint:
    """The vertex nu_n for the stage table ``S``."""
    if n < 0:
        raise DomainError("vertex index must be natural")
    if depth is not None and n > 3 * depth + 3:
        raise DomainError(f"vertex {n} beyond truncation depth {depth} (last is {3 * depth + 3})")
    base = (QPoint(0, 0), QPoint(0, 1), QPoint(1, 1), QPoint(1, 0))
    if n < 4:
        return base[n]
    j, r = divmod(n - 4, 3)
    if j > S.n_max:
        raise DomainError(f"vertex {n} needs tent {j} but the stage table stops at n_max={S.n_max}")
    station = pow2(-(j + 1))
    if r == 1:
        return QPoint(station, station)
    off = _foot_offset(j, S)
    return QPoint(station + off if r == 0 else station - off, 0)


@dataclass(frozen=True, eq=False)
class DomainModel:
    staged: Optional[StagedSet]
    depth: int
    vertices: tuple[QPoint, ...]
    boundary_segments: tuple[Segment, ...]
    constituents: tuple[Constituent, ...]
    interior_ref: QPoint

    @cached_property
    def vertex_set(self) -> frozenset:
        return frozenset(self.vertices)

    @cached_property
    def edges(self) -> tuple[Segment, ...]:
        """Boundary segments as point sets: doubled slit segments appear once."""
        seen = set()
        out = []
        for s in self.boundary_segments:
            key = frozenset((s.a, s.b))
            if key not in seen:
                seen.add(key)
                out.append(s)
        return tuple(out)

    @cached_property
    def edge_constituent(self) -> tuple[int, ...]:
        lookup = {}
        for c in self.constituents:
            for s in c.segments:
                lookup[frozenset((s.a, s.b))] = c.index
        return tuple(lookup[frozenset((e.a, e.b))] for e in self.edges)

    @property
    def n_constituents(self) -> int:
        return len(self.constituents)

    def constituent(self, k: int) -> Constituent:
        if not 0 <= k < len(self.constituents):
            raise DomainError(f"no constituent sigma_{k} (have {len(self.constituents)})")
        return self.constituents[k]

    def tent_constituent(self, j: int) -> Constituent:
        for c in self.constituents:
            if c.tent_index == j:
                return c
        raise DomainError(f"no tent or spike with index {j}")

    def is_vertex(self, p: QPoint) -> bool:
        return p in self.vertex_set

    def on_boundary(self, p: QPoint) -> bool:
        if not (0 <= p.re <= 1 and 0 <= p.im <= 1):
            return False
        return any(point_on_segment(p, e) for e in self.edges)

    def contains(self, p: QPoint) -> bool:
        return point_in_D(self, p)

    def polygon(self) -> list[complex]:
        """Boundary vertices as floats in traversal order (nu_0 first)."""
        return [complex(v) for v in self.vertices]

    def to_document(self) -> dict:
        return {
            "format": DOCUMENT_FORMAT,
            "stage_table": None if self.staged is None else self.staged.to_document(),
            "depth": self.depth,
            "interior_ref": [qpair(self.interior_ref.re), qpair(self.interior_ref.im)],
            "vertices": [[qpair(v.re), qpair(v.im)] for v in self.vertices],
            "constituents": [
                {
                    "index": c.index,
                    "kind": c.kind.value,
                    "tent_index": c.tent_index,
                    "segments": [
                        [[qpair(s.a.re), qpair(s.a.im)], [qpair(s.b.re), qpair(s.b.im)]]
                        for s in c.segments
                    ],
                }
                for c in self.constituents
            ],
        }

    def dumps(self) -> str:
        return json.dumps(self.to_document(), sort_keys=True, indent=1)


def _assemble(staged, depth, vertices, constituents, interior_ref) -> DomainModel:
    n = len(vertices)
    segs = tuple(Segment(vertices[i], vertices[(i + 1) % n]) for i in range(n))
    return DomainModel(staged, depth, tuple(vertices), segs, tuple(constituents), interior_ref)


def build_domain(S: StagedSet, J: int) -> DomainModel:
    """Truncated domain with tents/spikes j = 0 .. J-1, constituents labelled clockwise from [0, i]."""
    if J < 1:
        raise DomainError("depth J must be at least 1")
    if J > S.n_max + 1:
        raise DomainError(f"depth J={J} needs stage data for n <= {J - 1} but n_max={S.n_max}")
    verts = [vertex(n, S, J) for n in range(3 * J + 4)]
    for j in range(J):
        off = _foot_offset(j, S)
        # feet must stay strictly between the neighbouring stations
        assert off < pow2(-(j + 2)), "foot perturbation collides with the next station"
        if j + 1 < J:
            assert verts[3 * j + 7].re < verts[3 * j + 6].re, "bottom run collapsed"
    K = Kind
    cons = [
        Constituent(0, K.SQUARE_SIDE, (Segment(verts[0], verts[1]),)),
        Constituent(1, K.SQUARE_SIDE, (Segment(verts[1], verts[2]),)),
        Constituent(2, K.SQUARE_SIDE, (Segment(verts[2], verts[3]),)),
        Constituent(3, K.BOTTOM_RUN, (Segment(verts[3], verts[4]),)),
    ]
    for j in range(J):
        foot_r, apex, foot_l = verts[3 * j + 4], verts[3 * j + 5], verts[3 * j + 6]
        kind = K.TENT if foot_r != foot_l else K.SPIKE
        cons.append(
            Constituent(len(cons), kind, (Segment(foot_r, apex), Segment(apex, foot_l)), tent_index=j)
        )
        nxt = verts[3 * j + 7] if j + 1 < J else verts[0]
        cons.append(Constituent(len(cons), K.BOTTOM_RUN, (Segment(foot_l, nxt),)))
    return _assemble(S, J, verts, cons, INTERIOR_REF)


def square_domain() -> DomainModel:
    """The plain unit square, used as a symmetric fixture for the conformal solver."""
    verts = [QPoint(0, 0), QPoint(0, 1), QPoint(1, 1), QPoint(1, 0)]
    cons = [
        Constituent(k, Kind.SQUARE_SIDE, (Segment(verts[k], verts[(k + 1) % 4]),)) for k in range(4)
    ]
    return _assemble(None, 0, verts, cons, QPoint(mpq(1, 2), mpq(1, 2)))


def constituent_of(dm: DomainModel, p: QPoint) -> BoundaryLocation:
    """Locate ``p`` on the boundary: its constituent, or the vertex flag."""
    if dm.is_vertex(p):
        return BoundaryLocation(None, True)
    for c in dm.constituents:
        if c.contains(p):
            return BoundaryLocation(c.index, False)
    return BoundaryLocation(None, False)


def point_in_D(dm: DomainModel, p: QPoint) -> bool:
    """Exact membership in the open domain."""
    if not (0 < p.re < 1 and 0 < p.im < 1):
        return False
    if dm.on_boundary(p):
        return False
    return winding_number(p, dm.vertices) != 0


def domain_from_document(doc: Mapping) -> DomainModel:
    """Rebuild a domain document and check it against the stored vertex list."""
    if doc.get("format") != DOCUMENT_FORMAT:
        raise DomainError(f"unknown domain document format {doc.get('format')!r}")
    if doc.get("stage_table") is None:
        dm = square_domain()
    else:
        dm = build_domain(stage_table_from_document(doc["stage_table"]), int(doc["depth"]))
    stored = [QPoint(from_qpair(x), from_qpair(y)) for x, y in doc["vertices"]]
    if stored != list(dm.vertices):
        raise DomainError("vertex list does not match the stage table and depth")
    return dm


def load_domain(text: str) -> DomainModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DomainError(f"malformed domain document: {exc}") from None
    return domain_from_document(doc)
