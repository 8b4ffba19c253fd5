"""B-Rep domain model, interchange parser and geometry kernel."""

from .geometry import curve_length, eval_curve, eval_surface, invert_surface
from .io import load_solid, parse_solid, save_solid, serialize_solid, solid_from_dict, solid_to_dict
from .measure import edge_length, face_aabb_geom, face_area, face_centroid, point_in_trim, trim_mask
from .normalize import normalize_solid, solid_aabb
from .types import (
    CONVEXITIES,
    CURVE_KINDS,
    SURFACE_KINDS,
    CurveSamples,
    CurveSpec,
    Edge,
    Face,
    SampleGrid,
    Solid,
    SurfaceSpec,
    TrimLoop,
)
from .validate import Defect, ValidationReport, validate_solid

__all__ = [
    "CONVEXITIES",
    "CURVE_KINDS",
    "SURFACE_KINDS",
    "CurveSamples",
    "CurveSpec",
    "Defect",
    "Edge",
    "Face",
    "SampleGrid",
    "Solid",
    "SurfaceSpec",
    "TrimLoop",
    "ValidationReport",
    "curve_length",
    "edge_length",
    "eval_curve",
    "eval_surface",
    "face_aabb_geom",
    "face_area",
    "face_centroid",
    "invert_surface",
    "load_solid",
    "normalize_solid",
    "parse_solid",
    "point_in_trim",
    "save_solid",
    "serialize_solid",
    "solid_aabb",
    "solid_from_dict",
    "solid_to_dict",
    "trim_mask",
    "validate_solid",
]
