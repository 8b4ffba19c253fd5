"""Solid to geometric attributed adjacency graph conversion."""

from .features import (
    edge_attributes,
    face_attributes,
    sample_edge_points,
    sample_face_grid,
    uv_lattice,
)
from .graph import GAAG, NO_LABEL, build_gaag, gaag_from_dict, gaag_to_dict, load_gaag, save_gaag
from .standardize import Standardizer, apply_standardizer, fit_standardizer, unapply_standardizer

__all__ = [
    "GAAG",
    "NO_LABEL",
    "Standardizer",
    "apply_standardizer",
    "build_gaag",
    "edge_attributes",
    "face_attributes",
    "fit_standardizer",
    "gaag_from_dict",
    "gaag_to_dict",
    "load_gaag",
    "sample_edge_points",
    "sample_face_grid",
    "save_gaag",
    "unapply_standardizer",
    "uv_lattice",
]
