"""Unit-box normalization: move the AABB minimum to the origin, then scale
uniformly so the longest AABB extent is exactly 1."""

from dataclasses import replace

import numpy as np

from ..errors import DegenerateExtent
from .geometry import curve_points_tangents
from .measure import face_sample_points
from .types import CurveSamples, SampleGrid, TrimLoop

# surface kinds whose u / v parameters are lengths (scale with the model)
_LENGTH_PARAMS = {
    "plane": (True, True),
    "cylinder": (False, True),
    "cone": (False, True),
    "sphere": (False, False),
    "torus": (False, False),
    "nurbs": (False, False),
}


def solid_aabb(solid):
    """(lo, hi) over trimmed face samples and edge samples."""
    pts = [face_sample_points(f) for f in solid.faces]
    for e in solid.edges:
        t0, t1 = e.curve.t_domain
        p, _ = curve_points_tangents(e.curve, np.linspace(t0, t1, 33))
        pts.append(p)
    allp = np.concatenate(pts)
    return allp.min(axis=0), allp.max(axis=0)


def _tx(p, shift, scale):
    return tuple(float(x) for x in (np.asarray(p) - shift) * scale)


def _sc(x, scale):
    return None if x is None else float(x * scale)


def _scale_uv(points, su, sv):
    return tuple((float(u * su), float(v * sv)) for u, v in points)


def _transform_face(face, shift, scale):
    s = face.surface
    lu, lv = _LENGTH_PARAMS[s.kind]
    su = scale if lu else 1.0
    sv = scale if lv else 1.0
    grid = s.grid
    if grid is not None:
        pts = (grid.points_array - shift) * scale
        grid = SampleGrid(
            points=tuple(tuple(tuple(float(c) for c in p) for p in row) for row in pts),
            normals=grid.normals,
        )
    surface = replace(
        s,
        origin=_tx(s.origin, shift, scale),
        u_domain=(float(s.u_domain[0] * su), float(s.u_domain[1] * su)),
        v_domain=(float(s.v_domain[0] * sv), float(s.v_domain[1] * sv)),
        radius=_sc(s.radius, scale),
        major_radius=_sc(s.major_radius, scale),
        minor_radius=_sc(s.minor_radius, scale),
        grid=grid,
    )
    loops = tuple(
        TrimLoop(
            polyline=_scale_uv(lp.polyline, su, sv),
            orientation=lp.orientation,
            pieces=None if lp.pieces is None else tuple(_scale_uv(pc, su, sv) for pc in lp.pieces),
        )
        for lp in face.loops
    )
    return replace(face, surface=surface, loops=loops)


def _transform_edge(edge, shift, scale):
    c = edge.curve
    samples = c.samples
    if samples is not None:
        pts = (samples.points_array - shift) * scale
        samples = CurveSamples(
            points=tuple(tuple(float(x) for x in p) for p in pts), tangents=samples.tangents
        )
    origin = c.origin
    if c.kind in ("line", "circle", "ellipse") or origin != (0.0, 0.0, 0.0):
        origin = _tx(origin, shift, scale)
    curve = replace(
        c,
        origin=origin,
        direction=None if c.direction is None else tuple(float(x * scale) for x in c.direction),
        radius=_sc(c.radius, scale),
        major_radius=_sc(c.major_radius, scale),
        minor_radius=_sc(c.minor_radius, scale),
        samples=samples,
    )
    return replace(edge, curve=curve)


def normalize_solid(solid):
    lo, hi = solid_aabb(solid)
    extent = float(np.max(hi - lo))
    if not extent > 0.0:
        raise DegenerateExtent(f"solid {solid.name!r} has zero spatial extent")
    scale = 1.0 / extent
    if np.all(lo == 0.0) and scale == 1.0:
        return solid
    return replace(
        solid,
        faces=tuple(_transform_face(f, lo, scale) for f in solid.faces),
        edges=tuple(_transform_edge(e, lo, scale) for e in solid.edges),
    )
