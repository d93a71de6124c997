"""Exact and numerical tools for a planar domain whose boundary encodes a staged set."""
from .domain import DomainModel, build_domain, constituent_of, load_domain, point_in_D, vertex
from .geometry import QPoint, QRect, Segment, TaxicabArc, polyline_diameter_sq, seg_meets_rect, taxicab_arcs
from .staged import StagedSet, load_stage_table, member_at

__all__ = [
    "DomainModel",
    "QPoint",
    "QRect",
    "Segment",
    "StagedSet",
    "TaxicabArc",
    "build_domain",
    "constituent_of",
    "load_domain",
    "load_stage_table",
    "member_at",
    "point_in_D",
    "polyline_diameter_sq",
    "seg_meets_rect",
    "taxicab_arcs",
    "vertex",
]

__version__ = "0.1.0"
