"""Topology and trim validation.

Detects the failure patterns that break UV-grid extraction: open loops,
disconnected loop pieces, self-intersecting trim wires, sliver faces and
disconnected face adjacency. Defects are returned as data, never raised.
"""

import math
from collections import deque
from dataclasses import dataclass, field
from typing import Optional, Tuple

import numpy as np

from ..kernels import loop_self_intersects
from .geometry import surface_points_normals
from .io import CLOSURE_TOL

SLIVER_RATIO = 1000.0

FACE_NOT_CLOSED = "face not closed"
WIRE_NOT_CONNECTED = "wire not connected"
SELF_INTERSECTING = "self-intersecting wire"
SLIVER = "sliver-like face"
DISCONNECTED = "disconnected graph"


@dataclass(frozen=True)
class Defect:
    kind: str
    face_id: Optional[int] = None
    edge_id: Optional[int] = None
    detail: str = ""

    def __str__(self):
        where = f"face {self.face_id}" if self.face_id is not None else ""
        if self.edge_id is not None:
            where = f"edge {self.edge_id}"
        return f"{self.kind} ({where}) {self.detail}".strip()


@dataclass(frozen=True)
class ValidationReport:
    defects: Tuple[Defect, ...] = field(default_factory=tuple)

    @property
    def ok(self):
        return not self.defects

    def kinds(self):
        return {d.kind for d in self.defects}


def _gap(p, q):
    return math.hypot(p[0] - q[0], p[1] - q[1])


def _loop_defects(face, loop):
    out = []
    if loop.pieces is not None:
        pieces = loop.pieces
        for i in range(len(pieces) - 1):
            g = _gap(pieces[i][-1], pieces[i + 1][0])
            if g > CLOSURE_TOL:
                out.append(Defect(WIRE_NOT_CONNECTED, face.id, detail=f"gap {g:.3g} after piece {i}"))
        g = _gap(pieces[-1][-1], pieces[0][0])
        if g > CLOSURE_TOL:
            out.append(Defect(FACE_NOT_CLOSED, face.id, detail=f"{loop.orientation} loop gap {g:.3g}"))
    if loop_self_intersects(loop.array):
        out.append(Defect(SELF_INTERSECTING, face.id, detail=f"{loop.orientation} loop"))
    return out


def _iso_length(surface, along_u, n=33):
    (u0, u1), (v0, v1) = surface.u_domain, surface.v_domain
    if along_u:
        u = np.linspace(u0, u1, n)
        v = np.full(n, 0.5 * (v0 + v1))
    else:
        u = np.full(n, 0.5 * (u0 + u1))
        v = np.linspace(v0, v1, n)
    pts, _ = surface_points_normals(surface, u, v)
    return float(np.sum(np.linalg.norm(np.diff(pts, axis=0), axis=1)))


def sliver_ratio(surface):
    """Aspect ratio of the UV domain measured as 3D iso-curve lengths."""
    lu = _iso_length(surface, True)
    lv = _iso_length(surface, False)
    lo, hi = min(lu, lv), max(lu, lv)
    return math.inf if lo == 0.0 else hi / lo


def _connectivity_defects(solid):
    if len(solid.faces) <= 1:
        return []
    adj = {f.id: set() for f in solid.faces}
    for e in solid.edges:
        adj[e.left_face].add(e.right_face)
        adj[e.right_face].add(e.left_face)
    start = solid.faces[0].id
    seen = {start}
    todo = deque([start])
    while todo:
        for nb in adj[todo.popleft()]:
            if nb not in seen:
                seen.add(nb)
                todo.append(nb)
    return [
        Defect(DISCONNECTED, f.id, detail="unreachable from face %d" % start)
        for f in solid.faces
        if f.id not in seen
    ]


def validate_solid(solid):
    defects = []
    for face in solid.faces:
        for loop in face.loops:
            defects.extend(_loop_defects(face, loop))
        ratio = sliver_ratio(face.surface)
        if ratio > SLIVER_RATIO:
            defects.append(Defect(SLIVER, face.id, detail=f"aspect ratio {ratio:.4g}"))
    defects.extend(_connectivity_defects(solid))
    return ValidationReport(tuple(defects))
