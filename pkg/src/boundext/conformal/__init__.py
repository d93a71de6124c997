"""Numerical conformal map of the unit disk onto a truncated domain, with covers and checks."""
from .cover import (
    Cover,
    CoverElement,
    StrongEvaluator,
    StrongOutput,
    circle_arcs_in_rect,
    covers_unit_circle,
    oscillation_cover,
    sample_rect_disk,
    sampled_oscillation,
    strong_eval,
)
from .sc import (
    BoundaryEstimate,
    ConformalError,
    ConformalMap,
    ImageArc,
    boundary_point,
    image_arc,
    map_from_document,
    rho_details,
    rho_lower_bound,
    solve_map,
)
from .witness import (
    NumVerdict,
    RecognitionReport,
    WitnessParams,
    WitnessReport,
    build_recognizing_crosscut,
    check_recognizably_bounds,
    is_acceptable,
    witness_bound_check,
)

__all__ = [
    "BoundaryEstimate",
    "ConformalError",
    "ConformalMap",
    "Cover",
    "CoverElement",
    "ImageArc",
    "NumVerdict",
    "RecognitionReport",
    "StrongEvaluator",
    "StrongOutput",
    "WitnessParams",
    "WitnessReport",
    "boundary_point",
    "build_recognizing_crosscut",
    "check_recognizably_bounds",
    "circle_arcs_in_rect",
    "covers_unit_circle",
    "image_arc",
    "is_acceptable",
    "map_from_document",
    "oscillation_cover",
    "rho_details",
    "rho_lower_bound",
    "sample_rect_disk",
    "sampled_oscillation",
    "solve_map",
    "strong_eval",
    "witness_bound_check",
]
