"""Immutable B-Rep value types.

All containers are tuples so that values compare field by field and a
parse/serialize round trip can be checked with ``==``.
"""

from dataclasses import dataclass
from functools import cached_property
from typing import Optional, Tuple

import numpy as np

SURFACE_KINDS = ("plane", "cylinder", "cone", "sphere", "torus", "nurbs")
CURVE_KINDS = (
    "line",
    "circle",
    "ellipse",
    "parabola",
    "hyperbola",
    "closed",
    "bezier",
    "bspline",
    "rbs",
    "offset",
)
EVALUABLE_CURVES = ("line", "circle", "ellipse")
CONVEXITIES = ("concave", "convex", "smooth")
LOOP_ORIENTATIONS = ("outer", "inner")

Vec3 = Tuple[float, float, float]
Interval = Tuple[float, float]
UV = Tuple[float, float]


@dataclass(frozen=True)
class SampleGrid:
    """Precomputed surface samples on a regular lattice over the UV domain."""

    points: Tuple[Tuple[Vec3, ...], ...]
    normals: Tuple[Tuple[Vec3, ...], ...]

    @cached_property
    def points_array(self):
        return np.asarray(self.points, dtype=np.float64)

    @cached_property
    def normals_array(self):
        return np.asarray(self.normals, dtype=np.float64)


@dataclass(frozen=True)
class CurveSamples:
    """Precomputed curve samples, uniform in the curve parameter."""

    points: Tuple[Vec3, ...]
    tangents: Tuple[Vec3, ...]

    @cached_property
    def points_array(self):
        return np.asarray(self.points, dtype=np.float64)

    @cached_property
    def tangents_array(self):
        return np.asarray(self.tangents, dtype=np.float64)


@dataclass(frozen=True)
class SurfaceSpec:
    kind: str
    origin: Vec3
    x_axis: Vec3
    y_axis: Vec3
    z_axis: Vec3
    u_domain: Interval
    v_domain: Interval
    periodic: Tuple[bool, bool] = (False, False)
    radius: Optional[float] = None
    half_angle: Optional[float] = None
    major_radius: Optional[float] = None
    minor_radius: Optional[float] = None
    reversed: bool = False
    grid: Optional[SampleGrid] = None

    @cached_property
    def frame(self):
        """3x3 matrix whose rows are the frame axes."""
        return np.array([self.x_axis, self.y_axis, self.z_axis], dtype=np.float64)


@dataclass(frozen=True)
class CurveSpec:
    kind: str
    t_domain: Interval
    origin: Vec3 = (0.0, 0.0, 0.0)
    direction: Optional[Vec3] = None
    x_axis: Optional[Vec3] = None
    y_axis: Optional[Vec3] = None
    z_axis: Optional[Vec3] = None
    radius: Optional[float] = None
    major_radius: Optional[float] = None
    minor_radius: Optional[float] = None
    samples: Optional[CurveSamples] = None


@dataclass(frozen=True)
class TrimLoop:
    """Closed UV polyline; closure from last point back to the first is implicit.

    ``pieces`` keeps the per-coedge polylines when the loop was supplied that
    way, so closure and connectivity can be audited.
    """

    polyline: Tuple[UV, ...]
    orientation: str = "outer"
    pieces: Optional[Tuple[Tuple[UV, ...], ...]] = None

    @cached_property
    def array(self):
        return np.asarray(self.polyline, dtype=np.float64).reshape(-1, 2)

    def signed_area(self):
        p = self.array
        q = np.roll(p, -1, axis=0)
        return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))


@dataclass(frozen=True)
class Face:
    id: int
    surface: SurfaceSpec
    loops: Tuple[TrimLoop, ...]
    label: Optional[int] = None

    @property
    def outer_loop(self):
        return next(lp for lp in self.loops if lp.orientation == "outer")

    @cached_property
    def trim_segments(self):
        """(start, end) arrays of every loop segment, for point-in-trim tests."""
        a = [lp.array for lp in self.loops]
        b = [np.roll(x, -1, axis=0) for x in a]
        return np.concatenate(a), np.concatenate(b)


@dataclass(frozen=True)
class Edge:
    id: int
    curve: CurveSpec
    left_face: int
    right_face: int
    convexity: str


@dataclass(frozen=True)
class Solid:
    name: str
    faces: Tuple[Face, ...]
    edges: Tuple[Edge, ...]
    units: str = "mm"

    @cached_property
    def face_index(self):
        """face id -> position in ``faces``."""
        return {f.id: i for i, f in enumerate(self.faces)}

    def face(self, face_id):
        return self.faces[self.face_index[face_id]]
