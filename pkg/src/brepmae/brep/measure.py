"""Trim queries and quadrature-based face/edge measures."""

import numpy as np

from ..kernels import points_in_loops
from .geometry import area_element, curve_length as _curve_length, surface_points_normals, wrap_periodic

AREA_SUBGRID = 20
TRIM_TOL = 1e-9


def trim_mask(face, u, v):
    """Vectorized even-odd trim test; boundary points count as inside."""
    s = face.surface
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    u, v = np.broadcast_arrays(u, v)
    if s.periodic[0]:
        u = _wrap_keep_end(u, s.u_domain)
    if s.periodic[1]:
        v = _wrap_keep_end(v, s.v_domain)
    a, b = face.trim_segments
    pts = np.stack([u.ravel(), v.ravel()], axis=1)
    return points_in_loops(pts, a, b, TRIM_TOL).reshape(u.shape)


def _wrap_keep_end(x, interval):
    # values already inside the closed domain stay put (keeps u = u_max on the seam)
    lo, hi = interval
    inside = (x >= lo) & (x <= hi)
    return np.where(inside, x, wrap_periodic(x, interval))


def point_in_trim(face, u, v):
    """1 if (u, v) is inside the outer loop and outside every inner loop."""
    return int(trim_mask(face, np.array([u]), np.array([v]))[0])


def _midpoint_lattice(surface, n=AREA_SUBGRID):
    (u0, u1), (v0, v1) = surface.u_domain, surface.v_domain
    du, dv = (u1 - u0) / n, (v1 - v0) / n
    uu, vv = np.meshgrid(u0 + (np.arange(n) + 0.5) * du, v0 + (np.arange(n) + 0.5) * dv, indexing="ij")
    return uu, vv, du * dv


def _weighted_samples(face):
    s = face.surface
    uu, vv, cell = _midpoint_lattice(s)
    w = area_element(s, uu, vv) * cell * trim_mask(face, uu, vv)
    return uu, vv, w


def face_area(face):
    """Midpoint quadrature of the area element over a 20x20 subgrid, trim-weighted."""
    _, _, w = _weighted_samples(face)
    return float(max(w.sum(), 0.0))


def face_centroid(face):
    uu, vv, w = _weighted_samples(face)
    pts, _ = surface_points_normals(face.surface, uu, vv)
    total = w.sum()
    if total <= 0.0:
        return pts.reshape(-1, 3).mean(axis=0)
    return np.einsum("ij,ijk->k", w, pts) / total


def face_sample_points(face, n=AREA_SUBGRID):
    """Trimmed-in points of the (n+1)x(n+1) corner lattice of the quadrature subgrid."""
    s = face.surface
    (u0, u1), (v0, v1) = s.u_domain, s.v_domain
    uu, vv = np.meshgrid(np.linspace(u0, u1, n + 1), np.linspace(v0, v1, n + 1), indexing="ij")
    pts, _ = surface_points_normals(s, uu, vv)
    keep = trim_mask(face, uu, vv)
    if not keep.any():
        return pts.reshape(-1, 3)
    return pts[keep]


def face_aabb_geom(face):
    """AABB of the face as center (3) + half-extent (3)."""
    pts = face_sample_points(face)
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    return np.concatenate([(lo + hi) / 2.0, (hi - lo) / 2.0])


def edge_length(edge):
    return _curve_length(edge.curve)
