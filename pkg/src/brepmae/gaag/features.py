"""Per-face and per-edge tensors: UV grids, edge samples and attribute vectors."""

import numpy as np

from ..brep.geometry import curve_points_tangents, invert_surface, surface_points_normals
from ..brep.measure import edge_length, face_aabb_geom, face_area, face_centroid, trim_mask
from ..brep.types import CONVEXITIES, CURVE_KINDS, SURFACE_KINDS
from ..errors import ShapeError

FACE_ATTR_DIM = 10
FACE_AABB_DIM = 6
EDGE_ATTR_DIM = 14
FACE_GRID_CHANNELS = 7
EDGE_GRID_CHANNELS = 12


def uv_lattice(k):
    """Inclusive-endpoint k x k lattice on [0, 1]^2 (row = u, column = v)."""
    t = np.linspace(0.0, 1.0, k)
    return np.meshgrid(t, t, indexing="ij")


def sample_face_grid(face, k=10):
    """7 x k x k tensor: point (3), normal (3), trim flag (1) on the UV lattice."""
    if k < 2:
        raise ShapeError(f"grid resolution must be at least 2, got {k}")
    s = face.surface
    (u0, u1), (v0, v1) = s.u_domain, s.v_domain
    a, b = uv_lattice(k)
    uu = u0 + a * (u1 - u0)
    vv = v0 + b * (v1 - v0)
    # pin the far endpoints exactly so trimming sees the true domain edge
    uu[-1, :] = u1
    vv[:, -1] = v1
    pts, nrm = surface_points_normals(s, uu, vv)
    trim = trim_mask(face, uu, vv).astype(np.float64)
    return np.concatenate([pts.transpose(2, 0, 1), nrm.transpose(2, 0, 1), trim[None]], axis=0)


def _face_normals_at(face, points):
    uv = np.array([invert_surface(face.surface, p) for p in points])
    _, nrm = surface_points_normals(face.surface, uv[:, 0], uv[:, 1])
    return nrm


def sample_edge_points(edge, solid, s=10):
    """12 x s tensor: point, tangent, left-face normal, right-face normal."""
    if s < 2:
        raise ShapeError(f"edge sample count must be at least 2, got {s}")
    t0, t1 = edge.curve.t_domain
    t = np.linspace(t0, t1, s)
    t[-1] = t1
    pts, tng = curve_points_tangents(edge.curve, t)
    left = _face_normals_at(solid.face(edge.left_face), pts)
    right = _face_normals_at(solid.face(edge.right_face), pts)
    return np.concatenate([pts, tng, left, right], axis=1).T.copy()


def _one_hot(value, choices):
    out = np.zeros(len(choices))
    out[choices.index(value)] = 1.0
    return out


def face_attributes(face):
    """(attr, aabb): the 10-vector type/area/centroid and the 6-vector AABB."""
    attr = np.concatenate(
        [_one_hot(face.surface.kind, SURFACE_KINDS), [face_area(face)], face_centroid(face)]
    )
    return attr, face_aabb_geom(face)


def edge_attributes(edge):
    return np.concatenate(
        [
            _one_hot(edge.curve.kind, CURVE_KINDS),
            [edge_length(edge)],
            _one_hot(edge.convexity, CONVEXITIES),
        ]
    )
