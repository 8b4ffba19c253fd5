"""JSON interchange format for solids.

One document per solid::

    {"name": str, "units": str,
     "faces": [{"id", "surface": {...}, "loops": [...], "label"?}],
     "edges": [{"id", "curve": {...}, "left_face", "right_face", "convexity"}]}

Unknown keys are rejected. Numbers are written with ``repr`` precision so a
round trip is exact.
"""

import json
import math

import numpy as np

from ..errors import FaceReferenceError, SchemaError
from .types import (
    CONVEXITIES,
    CURVE_KINDS,
    EVALUABLE_CURVES,
    LOOP_ORIENTATIONS,
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

CLOSURE_TOL = 1e-7

_SURFACE_SCALARS = {
    "plane": (),
    "cylinder": ("radius",),
    "cone": ("radius", "half_angle"),
    "sphere": ("radius",),
    "torus": ("major_radius", "minor_radius"),
    "nurbs": (),
}
_SURFACE_BASE = ("kind", "origin", "x_axis", "y_axis", "z_axis", "u_domain", "v_domain")
_SURFACE_OPTIONAL = ("periodic", "reversed", "grid")

_CURVE_FIELDS = {
    "line": ("origin", "direction"),
    "circle": ("origin", "x_axis", "y_axis", "z_axis", "radius"),
    "ellipse": ("origin", "x_axis", "y_axis", "z_axis", "major_radius", "minor_radius"),
}
_CURVE_FRAME = ("origin", "direction", "x_axis", "y_axis", "z_axis")


# --------------------------------------------------------------------------
# low-level readers
# --------------------------------------------------------------------------


def _obj(node, path, required, optional=()):
    if not isinstance(node, dict):
        raise SchemaError(path, "expected an object")
    for key in node:
        if key not in required and key not in optional:
            raise SchemaError(f"{path}.{key}", "unknown field")
    for key in required:
        if key not in node:
            raise SchemaError(f"{path}.{key}", "missing required field")
    return node


def _num(node, path):
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        raise SchemaError(path, "expected a number")
    x = float(node)
    if not math.isfinite(x):
        raise SchemaError(path, "non-finite number")
    return x


def _int(node, path):
    if isinstance(node, bool) or not isinstance(node, int):
        raise SchemaError(path, "expected an integer")
    return node


def _str(node, path, choices=None):
    if not isinstance(node, str):
        raise SchemaError(path, "expected a string")
    if choices is not None and node not in choices:
        raise SchemaError(path, f"expected one of {list(choices)}")
    return node


def _bool(node, path):
    if not isinstance(node, bool):
        raise SchemaError(path, "expected a boolean")
    return node


def _list(node, path, min_len=0):
    if not isinstance(node, list):
        raise SchemaError(path, "expected an array")
    if len(node) < min_len:
        raise SchemaError(path, f"expected at least {min_len} entries")
    return node


def _vec(node, path, n=3):
    _list(node, path)
    if len(node) != n:
        raise SchemaError(path, f"expected {n} numbers")
    return tuple(_num(x, f"{path}[{i}]") for i, x in enumerate(node))


def _interval(node, path):
    a, b = _vec(node, path, 2)
    if not b > a:
        raise SchemaError(path, "degenerate interval")
    return (a, b)


def _positive(node, path):
    x = _num(node, path)
    if not x > 0.0:
        raise SchemaError(path, "must be positive")
    return x


def _check_frame(axes, path):
    m = np.array(axes, dtype=np.float64)
    if np.max(np.abs(m @ m.T - np.eye(3))) > 1e-9:
        raise SchemaError(path, "frame axes are not orthonormal")


# --------------------------------------------------------------------------
# entity readers
# --------------------------------------------------------------------------


def _read_grid(node, path):
    _obj(node, path, ("points", "normals"))

    def lattice(arr, p):
        rows = _list(arr, p, 2)
        out = []
        width = None
        for i, row in enumerate(rows):
            cells = _list(row, f"{p}[{i}]", 2)
            if width is None:
                width = len(cells)
            elif len(cells) != width:
                raise SchemaError(f"{p}[{i}]", "ragged grid")
            out.append(tuple(_vec(c, f"{p}[{i}][{j}]") for j, c in enumerate(cells)))
        return tuple(out)

    pts = lattice(node["points"], f"{path}.points")
    nrm = lattice(node["normals"], f"{path}.normals")
    if (len(pts), len(pts[0])) != (len(nrm), len(nrm[0])):
        raise SchemaError(path, "points/normals lattices differ in size")
    return SampleGrid(points=pts, normals=nrm)


def _read_surface(node, path):
    if not isinstance(node, dict):
        raise SchemaError(path, "expected an object")
    kind = _str(node.get("kind"), f"{path}.kind", SURFACE_KINDS) if "kind" in node else None
    if kind is None:
        raise SchemaError(f"{path}.kind", "missing required field")
    scalars = _SURFACE_SCALARS[kind]
    _obj(node, path, _SURFACE_BASE + scalars, _SURFACE_OPTIONAL)
    axes = [_vec(node[k], f"{path}.{k}") for k in ("x_axis", "y_axis", "z_axis")]
    _check_frame(axes, path)
    values = {k: _positive(node[k], f"{path}.{k}") for k in scalars}
    if kind == "cone" and not values["half_angle"] < math.pi / 2:
        raise SchemaError(f"{path}.half_angle", "cone half-angle must lie in (0, pi/2)")
    periodic = (False, False)
    if "periodic" in node:
        p = _list(node["periodic"], f"{path}.periodic")
        if len(p) != 2:
            raise SchemaError(f"{path}.periodic", "expected 2 booleans")
        periodic = (_bool(p[0], f"{path}.periodic[0]"), _bool(p[1], f"{path}.periodic[1]"))
    grid = _read_grid(node["grid"], f"{path}.grid") if "grid" in node else None
    if kind == "nurbs" and grid is None:
        raise SchemaError(f"{path}.grid", "nurbs surfaces require a precomputed grid")
    return SurfaceSpec(
        kind=kind,
        origin=_vec(node["origin"], f"{path}.origin"),
        x_axis=axes[0],
        y_axis=axes[1],
        z_axis=axes[2],
        u_domain=_interval(node["u_domain"], f"{path}.u_domain"),
        v_domain=_interval(node["v_domain"], f"{path}.v_domain"),
        periodic=periodic,
        reversed=_bool(node["reversed"], f"{path}.reversed") if "reversed" in node else False,
        grid=grid,
        **values,
    )


def _read_uv_list(node, path, min_len):
    pts = _list(node, path, min_len)
    return tuple(_vec(p, f"{path}[{i}]", 2) for i, p in enumerate(pts))


def _close(p, q):
    return math.hypot(p[0] - q[0], p[1] - q[1]) <= CLOSURE_TOL


def join_pieces(pieces):
    """Concatenate coedge polylines into one loop polyline (junctions merged)."""
    out = list(pieces[0])
    for piece in pieces[1:]:
        start = 1 if _close(out[-1], piece[0]) else 0
        out.extend(piece[start:])
    if len(out) > 1 and _close(out[-1], out[0]):
        out.pop()
    return tuple(out)


def _read_loop(node, path):
    if not isinstance(node, dict):
        raise SchemaError(path, "expected an object")
    if "pieces" in node:
        _obj(node, path, ("orientation", "pieces"))
        raw = _list(node["pieces"], f"{path}.pieces", 1)
        pieces = tuple(_read_uv_list(p, f"{path}.pieces[{i}]", 2) for i, p in enumerate(raw))
        polyline = join_pieces(pieces)
    else:
        _obj(node, path, ("orientation", "polyline"))
        pieces = None
        polyline = _read_uv_list(node["polyline"], f"{path}.polyline", 3)
        if polyline[0] == polyline[-1]:
            raise SchemaError(f"{path}.polyline", "closure is implicit; drop the repeated point")
    if len(polyline) < 3:
        raise SchemaError(path, "loop needs at least 3 distinct points")
    orientation = _str(node["orientation"], f"{path}.orientation", LOOP_ORIENTATIONS)
    return TrimLoop(polyline=polyline, orientation=orientation, pieces=pieces)


def _read_face(node, path):
    _obj(node, path, ("id", "surface", "loops"), ("label",))
    loops = tuple(
        _read_loop(x, f"{path}.loops[{i}]")
        for i, x in enumerate(_list(node["loops"], f"{path}.loops", 1))
    )
    if sum(lp.orientation == "outer" for lp in loops) != 1:
        raise SchemaError(f"{path}.loops", "exactly one outer loop required")
    label = node.get("label")
    if label is not None:
        label = _int(label, f"{path}.label")
        if label < 0:
            raise SchemaError(f"{path}.label", "labels are non-negative class indices")
    return Face(
        id=_int(node["id"], f"{path}.id"),
        surface=_read_surface(node["surface"], f"{path}.surface"),
        loops=loops,
        label=label,
    )


def _read_curve(node, path):
    if not isinstance(node, dict):
        raise SchemaError(path, "expected an object")
    if "kind" not in node:
        raise SchemaError(f"{path}.kind", "missing required field")
    kind = _str(node["kind"], f"{path}.kind", CURVE_KINDS)
    if kind in EVALUABLE_CURVES:
        required = ("kind", "t_domain") + _CURVE_FIELDS[kind]
        optional = ("samples",)
    else:
        required = ("kind", "t_domain", "samples")
        optional = _CURVE_FRAME
    _obj(node, path, required, optional)
    kw = {}
    for key in ("origin", "direction", "x_axis", "y_axis", "z_axis"):
        if key in node:
            kw[key] = _vec(node[key], f"{path}.{key}")
    for key in ("radius", "major_radius", "minor_radius"):
        if key in node:
            kw[key] = _positive(node[key], f"{path}.{key}")
    if kind in ("circle", "ellipse"):
        _check_frame([kw["x_axis"], kw["y_axis"], kw["z_axis"]], path)
    if kind == "line" and np.linalg.norm(kw["direction"]) == 0.0:
        raise SchemaError(f"{path}.direction", "zero direction")
    if "samples" in node:
        s = _obj(node["samples"], f"{path}.samples", ("points", "tangents"))
        pts = _list(s["points"], f"{path}.samples.points", 2)
        tng = _list(s["tangents"], f"{path}.samples.tangents", 2)
        if len(pts) != len(tng):
            raise SchemaError(f"{path}.samples", "points/tangents differ in length")
        kw["samples"] = CurveSamples(
            points=tuple(_vec(p, f"{path}.samples.points[{i}]") for i, p in enumerate(pts)),
            tangents=tuple(_vec(p, f"{path}.samples.tangents[{i}]") for i, p in enumerate(tng)),
        )
    return CurveSpec(kind=kind, t_domain=_interval(node["t_domain"], f"{path}.t_domain"), **kw)


def _read_edge(node, path):
    _obj(node, path, ("id", "curve", "left_face", "right_face", "convexity"))
    return Edge(
        id=_int(node["id"], f"{path}.id"),
        curve=_read_curve(node["curve"], f"{path}.curve"),
        left_face=_int(node["left_face"], f"{path}.left_face"),
        right_face=_int(node["right_face"], f"{path}.right_face"),
        convexity=_str(node["convexity"], f"{path}.convexity", CONVEXITIES),
    )


def solid_from_dict(doc):
    _obj(doc, "$", ("name", "units", "faces", "edges"))
    faces = tuple(
        _read_face(f, f"$.faces[{i}]") for i, f in enumerate(_list(doc["faces"], "$.faces", 1))
    )
    edges = tuple(_read_edge(e, f"$.edges[{i}]") for i, e in enumerate(_list(doc["edges"], "$.edges")))
    ids = [f.id for f in faces]
    if len(set(ids)) != len(ids):
        raise SchemaError("$.faces", "duplicate face id")
    if len({e.id for e in edges}) != len(edges):
        raise SchemaError("$.edges", "duplicate edge id")
    known = set(ids)
    for i, e in enumerate(edges):
        for side in ("left_face", "right_face"):
            if getattr(e, side) not in known:
                raise FaceReferenceError(
                    f"$.edges[{i}].{side}: face id {getattr(e, side)} does not exist"
                )
    return Solid(
        name=_str(doc["name"], "$.name"),
        units=_str(doc["units"], "$.units"),
        faces=faces,
        edges=edges,
    )


def parse_solid(data):
    """Parse interchange JSON (bytes or str) into a fully resolved ``Solid``."""
    if isinstance(data, (bytes, bytearray)):
        try:
            data = data.decode("utf-8")
        except UnicodeDecodeError as exc:
            raise SchemaError("$", f"not UTF-8: {exc}") from None
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise SchemaError("$", f"invalid JSON: {exc}") from None
    return solid_from_dict(doc)


def load_solid(path):
    with open(path, "rb") as fh:
        return parse_solid(fh.read())


# --------------------------------------------------------------------------
# writers
# --------------------------------------------------------------------------


def _surface_to_dict(s):
    d = {
        "kind": s.kind,
        "origin": list(s.origin),
        "x_axis": list(s.x_axis),
        "y_axis": list(s.y_axis),
        "z_axis": list(s.z_axis),
        "u_domain": list(s.u_domain),
        "v_domain": list(s.v_domain),
        "periodic": list(s.periodic),
    }
    for key in _SURFACE_SCALARS[s.kind]:
        d[key] = getattr(s, key)
    if s.reversed:
        d["reversed"] = True
    if s.grid is not None:
        d["grid"] = {
            "points": [[list(p) for p in row] for row in s.grid.points],
            "normals": [[list(p) for p in row] for row in s.grid.normals],
        }
    return d


def _curve_to_dict(c):
    d = {"kind": c.kind, "t_domain": list(c.t_domain)}
    for key in _CURVE_FRAME:
        val = getattr(c, key)
        if key == "origin" and c.kind not in EVALUABLE_CURVES and val == (0.0, 0.0, 0.0):
            continue
        if val is not None:
            d[key] = list(val)
    for key in ("radius", "major_radius", "minor_radius"):
        if getattr(c, key) is not None:
            d[key] = getattr(c, key)
    if c.samples is not None:
        d["samples"] = {
            "points": [list(p) for p in c.samples.points],
            "tangents": [list(p) for p in c.samples.tangents],
        }
    return d


def _loop_to_dict(lp):
    if lp.pieces is not None:
        return {"orientation": lp.orientation, "pieces": [[list(p) for p in pc] for pc in lp.pieces]}
    return {"orientation": lp.orientation, "polyline": [list(p) for p in lp.polyline]}


def solid_to_dict(solid):
    faces = []
    for f in solid.faces:
        d = {"id": f.id, "surface": _surface_to_dict(f.surface), "loops": [_loop_to_dict(lp) for lp in f.loops]}
        if f.label is not None:
            d["label"] = f.label
        faces.append(d)
    edges = [
        {
            "id": e.id,
            "curve": _curve_to_dict(e.curve),
            "left_face": e.left_face,
            "right_face": e.right_face,
            "convexity": e.convexity,
        }
        for e in solid.edges
    ]
    return {"name": solid.name, "units": solid.units, "faces": faces, "edges": edges}


def serialize_solid(solid):
    """UTF-8 JSON bytes; ``parse_solid(serialize_solid(s)) == s``."""
    return json.dumps(solid_to_dict(solid), sort_keys=True, indent=1).encode("utf-8")


def save_solid(solid, path):
    with open(path, "wb") as fh:
        fh.write(serialize_solid(solid))
