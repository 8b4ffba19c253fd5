"""Closed-form evaluation of the analytic surfaces and curves.

Surface parameterizations, in the local frame (x̂, ŷ, ẑ) at ``origin``:

* plane     P = O + u x̂ + v ŷ                         normal ẑ
* cylinder  P = O + r e(u) + v ẑ                       normal e(u)
* cone      P = O + (r + v sin a) e(u) + v cos a ẑ     normal cos a e(u) - sin a ẑ
* sphere    P = O + R (cos v e(u) + sin v ẑ)           normal cos v e(u) + sin v ẑ
* torus     P = O + (R + r cos v) e(u) + r sin v ẑ     normal cos v e(u) + sin v ẑ

with e(u) = cos u x̂ + sin u ŷ. ``reversed`` flips the normal. NURBS faces are
handled by bilinear interpolation of their precomputed sample lattice.
"""

import math

import numpy as np

from ..errors import DomainError, PreimageError, UnsupportedKind
from .types import EVALUABLE_CURVES

TWO_PI = 2.0 * math.pi
DOMAIN_TOL = 1e-9
PREIMAGE_TOL = 1e-6

_GL_NODES, _GL_WEIGHTS = np.polynomial.legendre.leggauss(32)


def _frame_axes(spec):
    m = spec.frame
    return np.asarray(spec.origin, dtype=np.float64), m[0], m[1], m[2]


def _check_domain(value, interval, periodic, what):
    if periodic:
        return
    lo, hi = interval
    tol = DOMAIN_TOL * max(1.0, hi - lo)
    v = np.asarray(value)
    if np.any(v < lo - tol) or np.any(v > hi + tol):
        raise DomainError(f"{what} outside [{lo}, {hi}]")


def wrap_periodic(value, interval):
    lo = interval[0]
    return lo + np.mod(np.asarray(value, dtype=np.float64) - lo, TWO_PI)


# --------------------------------------------------------------------------
# surfaces
# --------------------------------------------------------------------------


def _grid_interp(spec, u, v, field):
    lattice = field
    gu, gv = lattice.shape[0], lattice.shape[1]
    (u0, u1), (v0, v1) = spec.u_domain, spec.v_domain
    su = np.clip((u - u0) / (u1 - u0), 0.0, 1.0) * (gu - 1)
    sv = np.clip((v - v0) / (v1 - v0), 0.0, 1.0) * (gv - 1)
    i0 = np.minimum(np.floor(su).astype(np.int64), gu - 2)
    j0 = np.minimum(np.floor(sv).astype(np.int64), gv - 2)
    fu = (su - i0)[..., None]
    fv = (sv - j0)[..., None]
    return (
        lattice[i0, j0] * (1 - fu) * (1 - fv)
        + lattice[i0 + 1, j0] * fu * (1 - fv)
        + lattice[i0, j0 + 1] * (1 - fu) * fv
        + lattice[i0 + 1, j0 + 1] * fu * fv
    )


def surface_points_normals(spec, u, v):
    """Vectorized evaluation without domain checks; returns (points, normals)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    kind = spec.kind
    if kind == "nurbs":
        if spec.grid is None:
            raise UnsupportedKind("nurbs surface without a precomputed grid")
        pts = _grid_interp(spec, u, v, spec.grid.points_array)
        nrm = _grid_interp(spec, u, v, spec.grid.normals_array)
        nrm = nrm / np.linalg.norm(nrm, axis=-1, keepdims=True)
        return pts, (-nrm if spec.reversed else nrm)
    o, x, y, z = _frame_axes(spec)
    cu = np.cos(u)[..., None]
    su = np.sin(u)[..., None]
    if kind == "plane":
        pts = o + u[..., None] * x + v[..., None] * y
        nrm = np.broadcast_to(z, pts.shape).copy()
    elif kind == "cylinder":
        e = cu * x + su * y
        pts = o + spec.radius * e + v[..., None] * z
        nrm = e
    elif kind == "cone":
        a = spec.half_angle
        e = cu * x + su * y
        pts = o + (spec.radius + v[..., None] * math.sin(a)) * e + v[..., None] * math.cos(a) * z
        nrm = math.cos(a) * e - math.sin(a) * z
    elif kind == "sphere":
        cv = np.cos(v)[..., None]
        sv = np.sin(v)[..., None]
        nrm = cv * (cu * x + su * y) + sv * z
        pts = o + spec.radius * nrm
    elif kind == "torus":
        cv = np.cos(v)[..., None]
        sv = np.sin(v)[..., None]
        e = cu * x + su * y
        pts = o + (spec.major_radius + spec.minor_radius * cv) * e + spec.minor_radius * sv * z
        nrm = cv * e + sv * z
    else:
        raise UnsupportedKind(f"unknown surface kind {kind!r}")
    # renormalize: the closed forms are unit up to rounding
    nrm = nrm / np.linalg.norm(nrm, axis=-1, keepdims=True)
    if spec.reversed:
        nrm = -nrm
    return pts, nrm


def eval_surface(spec, u, v):
    """Point and outward unit normal at (u, v); raises ``DomainError`` off-domain."""
    _check_domain(u, spec.u_domain, spec.periodic[0], "u")
    _check_domain(v, spec.v_domain, spec.periodic[1], "v")
    p, n = surface_points_normals(spec, u, v)
    return p, n


def area_element(spec, u, v):
    """|dP/du x dP/dv| at (u, v)."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    kind = spec.kind
    if kind == "plane":
        return np.ones(np.broadcast(u, v).shape)
    if kind == "cylinder":
        return np.full(np.broadcast(u, v).shape, spec.radius)
    if kind == "cone":
        return np.abs(spec.radius + v * math.sin(spec.half_angle)) + 0.0 * u
    if kind == "sphere":
        return spec.radius**2 * np.abs(np.cos(v)) + 0.0 * u
    if kind == "torus":
        r, big = spec.minor_radius, spec.major_radius
        return r * np.abs(big + r * np.cos(v)) + 0.0 * u
    if kind == "nurbs":
        hu = 1e-6 * (spec.u_domain[1] - spec.u_domain[0])
        hv = 1e-6 * (spec.v_domain[1] - spec.v_domain[0])
        pu = (surface_points_normals(spec, u + hu, v)[0] - surface_points_normals(spec, u - hu, v)[0]) / (2 * hu)
        pv = (surface_points_normals(spec, u, v + hv)[0] - surface_points_normals(spec, u, v - hv)[0]) / (2 * hv)
        return np.linalg.norm(np.cross(pu, pv), axis=-1)
    raise UnsupportedKind(f"unknown surface kind {kind!r}")


def invert_surface(spec, point):
    """Closed-form UV preimage of a 3D point lying on the surface.

    Raises ``PreimageError`` when the point is farther than 1e-6 from the
    surface patch.
    """
    p = np.asarray(point, dtype=np.float64)
    kind = spec.kind
    if kind == "nurbs":
        if spec.grid is None:
            raise UnsupportedKind("nurbs surface without a precomputed grid")
        lat = spec.grid.points_array
        d = np.linalg.norm(lat - p, axis=-1)
        i, j = np.unravel_index(np.argmin(d), d.shape)
        (u0, u1), (v0, v1) = spec.u_domain, spec.v_domain
        u = u0 + (u1 - u0) * i / (lat.shape[0] - 1)
        v = v0 + (v1 - v0) * j / (lat.shape[1] - 1)
        return float(u), float(v)
    o = np.asarray(spec.origin, dtype=np.float64)
    lx, ly, lz = spec.frame @ (p - o)
    if kind == "plane":
        u, v = lx, ly
    else:
        u = math.atan2(ly, lx)
        rho = math.hypot(lx, ly)
        if kind == "cylinder":
            v = lz
        elif kind == "cone":
            a = spec.half_angle
            v = (rho - spec.radius) * math.sin(a) + lz * math.cos(a)
        elif kind == "sphere":
            v = math.atan2(lz, rho)
        elif kind == "torus":
            v = math.atan2(lz, rho - spec.major_radius)
        else:
            raise UnsupportedKind(f"unknown surface kind {kind!r}")
    u, v = _fit_to_domain(u, spec.u_domain, spec.periodic[0]), _fit_to_domain(
        v, spec.v_domain, spec.periodic[1]
    )
    q, _ = surface_points_normals(spec, u, v)
    if np.linalg.norm(q - p) > PREIMAGE_TOL:
        raise PreimageError(
            f"point {p.tolist()} is {np.linalg.norm(q - p):.3g} away from the {kind} surface"
        )
    return float(u), float(v)


def _fit_to_domain(x, interval, periodic):
    lo, hi = interval
    if periodic:
        x = float(wrap_periodic(x, interval))
        # a point on the seam may map to either end; prefer the one in range
        if x > hi and x - TWO_PI >= lo - DOMAIN_TOL:
            x -= TWO_PI
        return min(max(x, lo), hi) if hi - lo < TWO_PI else x
    return min(max(float(x), lo), hi)


# --------------------------------------------------------------------------
# curves
# --------------------------------------------------------------------------


def curve_points_tangents(spec, t):
    """Vectorized curve evaluation without domain checks."""
    t = np.asarray(t, dtype=np.float64)
    kind = spec.kind
    if kind not in EVALUABLE_CURVES:
        if spec.samples is None:
            raise UnsupportedKind(f"{kind} curves need precomputed samples")
        pts = spec.samples.points_array
        tng = spec.samples.tangents_array
        t0, t1 = spec.t_domain
        s = np.clip((t - t0) / (t1 - t0), 0.0, 1.0) * (len(pts) - 1)
        i0 = np.minimum(np.floor(s).astype(np.int64), len(pts) - 2)
        f = (s - i0)[..., None]
        p = pts[i0] * (1 - f) + pts[i0 + 1] * f
        d = tng[i0] * (1 - f) + tng[i0 + 1] * f
        return p, d / np.linalg.norm(d, axis=-1, keepdims=True)
    o = np.asarray(spec.origin, dtype=np.float64)
    if kind == "line":
        d = np.asarray(spec.direction, dtype=np.float64)
        p = o + t[..., None] * d
        tangent = np.broadcast_to(d / np.linalg.norm(d), p.shape).copy()
        return p, tangent
    x = np.asarray(spec.x_axis, dtype=np.float64)
    y = np.asarray(spec.y_axis, dtype=np.float64)
    c = np.cos(t)[..., None]
    s = np.sin(t)[..., None]
    if kind == "circle":
        a = b = spec.radius
    else:
        a, b = spec.major_radius, spec.minor_radius
    p = o + a * c * x + b * s * y
    d = -a * s * x + b * c * y
    return p, d / np.linalg.norm(d, axis=-1, keepdims=True)


def eval_curve(spec, t):
    """Point and unit tangent (direction of increasing t)."""
    _check_domain(t, spec.t_domain, False, "t")
    return curve_points_tangents(spec, t)


def curve_length(spec):
    """Analytic for lines and circles, 32-point Gauss-Legendre for ellipses,
    polyline length for sampled curves."""
    t0, t1 = spec.t_domain
    if spec.kind == "line":
        return float(np.linalg.norm(spec.direction) * (t1 - t0))
    if spec.kind == "circle":
        return float(spec.radius * (t1 - t0))
    if spec.kind == "ellipse":
        a, b = spec.major_radius, spec.minor_radius
        t = 0.5 * (t1 - t0) * _GL_NODES + 0.5 * (t1 + t0)
        speed = np.sqrt((a * np.sin(t)) ** 2 + (b * np.cos(t)) ** 2)
        return float(0.5 * (t1 - t0) * np.dot(_GL_WEIGHTS, speed))
    if spec.samples is None:
        raise UnsupportedKind(f"{spec.kind} curves need precomputed samples")
    pts = spec.samples.points_array
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))
