"""Deterministic generator of small labeled machined parts.

A part is a prismatic stock block (profile in the xz-plane extruded along y)
carrying axis-aligned machining features:

* ``step`` and ``chamfer`` modify the profile (right and left top edges),
* ``through_hole``, ``blind_hole``, ``rectangular_pocket`` and
  ``rectangular_through_slot`` (a rectangular passage through the full
  height) are cut into the top face.

Cylindrical faces are single periodic faces without seam edges. Output is
plain interchange ``Solid`` values; ``gen_dataset`` also writes the JSON
files and a split manifest.
"""

import hashlib
import json
import math
import os
from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

import numpy as np

from .brep.io import serialize_solid
from .brep.types import CurveSpec, Edge, Face, Solid, SurfaceSpec, TrimLoop
from .errors import InsufficientParts, OverlapError, PlacementError
from .rng import make_rng

FEATURE_KINDS = (
    "through_hole",
    "blind_hole",
    "rectangular_through_slot",
    "rectangular_pocket",
    "step",
    "chamfer",
)
DEFAULT_CLASSES = {kind: i for i, kind in enumerate(FEATURE_KINDS)}
STOCK_CLASS = 24
CIRCLE_SEGMENTS = 32
MARGIN = 4.0  # mm between a feature footprint and the top-face border
GAP = 3.0  # mm between two feature footprints

_TOP_FEATURES = ("through_hole", "blind_hole", "rectangular_through_slot", "rectangular_pocket")


@dataclass(frozen=True)
class FeatureRecipe:
    """One machining feature. ``None`` fields are drawn from the seeded RNG.

    ``size`` is the hole radius, the rectangle half-width along x, the step
    width or the chamfer leg; ``size2`` the rectangle half-width along y;
    ``position`` the footprint center (x, y) for top-face features.
    """

    kind: str
    class_index: Optional[int] = None
    position: Optional[Tuple[float, float]] = None
    size: Optional[float] = None
    size2: Optional[float] = None
    depth: Optional[float] = None

    @property
    def label(self):
        return DEFAULT_CLASSES[self.kind] if self.class_index is None else self.class_index


# --------------------------------------------------------------------------
# geometry builders
# --------------------------------------------------------------------------


def _unit(v):
    v = np.asarray(v, dtype=np.float64)
    return v / np.linalg.norm(v)


def _t(v):
    return tuple(float(x) for x in v)


class _Builder:
    def __init__(self):
        self.faces = []
        self.edges = []

    def plane(self, origin, x_axis, normal, loops3d, label):
        """Planar face; ``loops3d[0]`` is the outer boundary, the rest holes."""
        z = _unit(normal)
        x = _unit(x_axis)
        y = np.cross(z, x)
        o = np.asarray(origin, dtype=np.float64)
        loops = []
        for k, pts in enumerate(loops3d):
            rel = np.asarray(pts, dtype=np.float64) - o
            uv = np.stack([rel @ x, rel @ y], axis=1)
            area = 0.5 * np.sum(uv[:, 0] * np.roll(uv[:, 1], -1) - np.roll(uv[:, 0], -1) * uv[:, 1])
            outer = k == 0
            if (area < 0) == outer:
                uv = uv[::-1]
            loops.append(
                TrimLoop(
                    polyline=tuple((float(a), float(b)) for a, b in uv),
                    orientation="outer" if outer else "inner",
                )
            )
        outer_uv = loops[0].array
        surface = SurfaceSpec(
            kind="plane",
            origin=_t(o),
            x_axis=_t(x),
            y_axis=_t(y),
            z_axis=_t(z),
            u_domain=(float(outer_uv[:, 0].min()), float(outer_uv[:, 0].max())),
            v_domain=(float(outer_uv[:, 1].min()), float(outer_uv[:, 1].max())),
        )
        return self._add_face(surface, loops, label)

    def cylinder(self, base, radius, height, label):
        """Vertical cylindrical wall of a hole (normal points toward the axis)."""
        surface = SurfaceSpec(
            kind="cylinder",
            origin=_t(base),
            x_axis=(1.0, 0.0, 0.0),
            y_axis=(0.0, 1.0, 0.0),
            z_axis=(0.0, 0.0, 1.0),
            u_domain=(0.0, 2.0 * math.pi),
            v_domain=(0.0, float(height)),
            periodic=(True, False),
            radius=float(radius),
            reversed=True,
        )
        loop = TrimLoop(
            polyline=((0.0, 0.0), (2.0 * math.pi, 0.0), (2.0 * math.pi, float(height)), (0.0, float(height))),
            orientation="outer",
        )
        return self._add_face(surface, [loop], label)

    def _add_face(self, surface, loops, label):
        fid = len(self.faces)
        self.faces.append(Face(id=fid, surface=surface, loops=tuple(loops), label=label))
        return fid

    def line(self, a, b, left, right, convexity):
        a = np.asarray(a, dtype=np.float64)
        curve = CurveSpec(kind="line", t_domain=(0.0, 1.0), origin=_t(a), direction=_t(np.asarray(b) - a))
        self._add_edge(curve, left, right, convexity)

    def circle(self, center, radius, left, right, convexity):
        curve = CurveSpec(
            kind="circle",
            t_domain=(0.0, 2.0 * math.pi),
            origin=_t(center),
            x_axis=(1.0, 0.0, 0.0),
            y_axis=(0.0, 1.0, 0.0),
            z_axis=(0.0, 0.0, 1.0),
            radius=float(radius),
        )
        self._add_edge(curve, left, right, convexity)

    def _add_edge(self, curve, left, right, convexity):
        self.edges.append(
            Edge(id=len(self.edges), curve=curve, left_face=left, right_face=right, convexity=convexity)
        )


def _circle_points(cx, cy, z, r, n=CIRCLE_SEGMENTS):
    a = 2.0 * math.pi * np.arange(n) / n
    return np.stack([cx + r * np.cos(a), cy + r * np.sin(a), np.full(n, z)], axis=1)


def _rect_points(x0, x1, y0, y1, z):
    return np.array([[x0, y0, z], [x1, y0, z], [x1, y1, z], [x0, y1, z]], dtype=np.float64)


# --------------------------------------------------------------------------
# feature placement
# --------------------------------------------------------------------------


@dataclass
class _Placed:
    kind: str
    label: int
    cx: float = 0.0
    cy: float = 0.0
    hx: float = 0.0  # half-width along x (radius for holes)
    hy: float = 0.0
    depth: float = 0.0

    def footprint(self):
        return (self.cx - self.hx, self.cx + self.hx, self.cy - self.hy, self.cy + self.hy)


def _overlaps(a, b, gap):
    return not (a[1] + gap <= b[0] or b[1] + gap <= a[0] or a[3] + gap <= b[2] or b[3] + gap <= a[2])


def _stock_dims(rng):
    return float(rng.uniform(80, 120)), float(rng.uniform(60, 100)), float(rng.uniform(20, 40))


def _place(recipes, dims, rng):
    lx, ly, lz = dims
    step = chamfer = None
    tops = []
    for r in recipes:
        if r.kind not in FEATURE_KINDS:
            raise PlacementError(f"unknown feature kind {r.kind!r}")
        if r.kind == "step":
            if step is not None:
                raise OverlapError("a part carries at most one step")
            w = r.size if r.size is not None else float(rng.uniform(0.15, 0.25) * lx)
            d = r.depth if r.depth is not None else float(rng.uniform(0.3, 0.6) * lz)
            if not (0 < w < lx / 2 and 0 < d < lz):
                raise PlacementError("step does not fit in the stock")
            step = _Placed("step", r.label, hx=w, depth=d)
        elif r.kind == "chamfer":
            if chamfer is not None:
                raise OverlapError("a part carries at most one chamfer")
            c = r.size if r.size is not None else float(rng.uniform(0.1, 0.25) * lz)
            if not (0 < c < min(lz, lx / 4)):
                raise PlacementError("chamfer does not fit in the stock")
            chamfer = _Placed("chamfer", r.label, hx=c)
    x_lo = (chamfer.hx if chamfer else 0.0) + MARGIN
    x_hi = lx - (step.hx if step else 0.0) - MARGIN
    y_lo, y_hi = MARGIN, ly - MARGIN
    for r in recipes:
        if r.kind not in _TOP_FEATURES:
            continue
        if r.kind in ("through_hole", "blind_hole"):
            hx = hy = r.size if r.size is not None else float(rng.uniform(3.0, 8.0))
        else:
            hx = r.size if r.size is not None else float(rng.uniform(5.0, 12.0))
            hy = r.size2 if r.size2 is not None else float(rng.uniform(5.0, 12.0))
        depth = lz
        if r.kind in ("blind_hole", "rectangular_pocket"):
            depth = r.depth if r.depth is not None else float(rng.uniform(0.3, 0.7) * lz)
            if not 0 < depth < lz:
                raise PlacementError(f"{r.kind} depth must lie inside the stock height")
        if r.position is not None:
            cx, cy = r.position
        else:
            if x_hi - x_lo < 2 * hx or y_hi - y_lo < 2 * hy:
                raise PlacementError(f"{r.kind} is larger than the free top face")
            cx = float(rng.uniform(x_lo + hx, x_hi - hx))
            cy = float(rng.uniform(y_lo + hy, y_hi - hy))
        p = _Placed(r.kind, r.label, cx, cy, hx, hy, depth)
        fp = p.footprint()
        for other in tops:
            if _overlaps(fp, other.footprint(), GAP):
                raise OverlapError(f"{r.kind} at ({cx:.3g}, {cy:.3g}) overlaps {other.kind}")
        if step is not None and fp[1] > lx - step.hx - MARGIN:
            raise OverlapError(f"{r.kind} overlaps the step footprint")
        if chamfer is not None and fp[0] < chamfer.hx + MARGIN:
            raise OverlapError(f"{r.kind} overlaps the chamfer footprint")
        if fp[0] < MARGIN or fp[1] > lx - MARGIN or fp[2] < y_lo or fp[3] > y_hi:
            raise PlacementError(f"{r.kind} footprint leaves the stock")
        tops.append(p)
    return step, chamfer, tops


# --------------------------------------------------------------------------
# solid assembly
# --------------------------------------------------------------------------


def _profile(dims, step, chamfer):
    lx, _, lz = dims
    pts = [(0.0, 0.0, "bottom"), (lx, 0.0, "right")]
    if step is not None:
        w, d = step.hx, step.depth
        pts += [(lx, lz - d, "step_floor"), (lx - w, lz - d, "step_wall"), (lx - w, lz, "top")]
    else:
        pts += [(lx, lz, "top")]
    if chamfer is not None:
        c = chamfer.hx
        pts += [(c, lz, "chamfer"), (0.0, lz - c, "left")]
    else:
        pts += [(0.0, lz, "left")]
    # each vertex carries the role of the segment that starts there
    return [(x, z) for x, z, _ in pts], [role for _, _, role in pts]


def _assemble(name, dims, step, chamfer, tops):
    lx, ly, lz = dims
    b = _Builder()
    verts, roles = _profile(dims, step, chamfer)
    n = len(verts)
    labels = {"step_floor": step.label if step else None, "step_wall": step.label if step else None}
    labels["chamfer"] = chamfer.label if chamfer else None

    cap_pts = [np.array([[x, 0.0, z] for x, z in verts]), np.array([[x, ly, z] for x, z in verts])]
    cap0 = b.plane((0.0, 0.0, 0.0), (1, 0, 0), (0, -1, 0), [cap_pts[0]], STOCK_CLASS)
    cap1 = b.plane((0.0, ly, 0.0), (1, 0, 0), (0, 1, 0), [cap_pts[1][::-1]], STOCK_CLASS)

    top_holes, bottom_holes = [], []
    for p in tops:
        if p.kind in ("through_hole", "blind_hole"):
            top_holes.append(_circle_points(p.cx, p.cy, lz, p.hx))
            if p.kind == "through_hole":
                bottom_holes.append(_circle_points(p.cx, p.cy, 0.0, p.hx))
        else:
            x0, x1, y0, y1 = p.footprint()
            top_holes.append(_rect_points(x0, x1, y0, y1, lz))
            if p.kind == "rectangular_through_slot":
                bottom_holes.append(_rect_points(x0, x1, y0, y1, 0.0))

    lateral = []
    for i in range(n):
        (ax, az), (bx, bz) = verts[i], verts[(i + 1) % n]
        d = np.array([bx - ax, 0.0, bz - az])
        normal = np.array([bz - az, 0.0, -(bx - ax)])
        outline = np.array([[ax, 0.0, az], [bx, 0.0, bz], [bx, ly, bz], [ax, ly, az]])
        holes = top_holes if roles[i] == "top" else bottom_holes if roles[i] == "bottom" else []
        label = labels.get(roles[i]) or STOCK_CLASS
        lateral.append(b.plane((ax, 0.0, az), d, normal, [outline] + holes, label))

    for i in range(n):
        (ax, az), (bx, bz) = verts[i], verts[(i + 1) % n]
        b.line((ax, 0.0, az), (bx, 0.0, bz), cap0, lateral[i], "convex")
        b.line((ax, ly, az), (bx, ly, bz), cap1, lateral[i], "convex")
    for i in range(n):
        j = (i + 1) % n
        (ax, az), (vx, vz), (cx_, cz) = verts[i], verts[j], verts[(j + 1) % n]
        turn = (vx - ax) * (cz - vz) - (vz - az) * (cx_ - vx)
        b.line((vx, 0.0, vz), (vx, ly, vz), lateral[i], lateral[j], "convex" if turn > 0 else "concave")

    top = lateral[roles.index("top")]
    bottom = lateral[roles.index("bottom")]
    for p in tops:
        if p.kind in ("through_hole", "blind_hole"):
            through = p.kind == "through_hole"
            z0 = 0.0 if through else lz - p.depth
            wall = b.cylinder((p.cx, p.cy, z0), p.hx, lz - z0, p.label)
            b.circle((p.cx, p.cy, lz), p.hx, top, wall, "convex")
            if through:
                b.circle((p.cx, p.cy, 0.0), p.hx, bottom, wall, "convex")
            else:
                floor = b.plane(
                    (p.cx, p.cy, z0), (1, 0, 0), (0, 0, 1), [_circle_points(p.cx, p.cy, z0, p.hx)], p.label
                )
                b.circle((p.cx, p.cy, z0), p.hx, floor, wall, "concave")
        else:
            _rect_feature(b, p, lz, top, bottom)
    return Solid(name=name, faces=tuple(b.faces), edges=tuple(b.edges), units="mm")


def _rect_feature(b, p, lz, top, bottom):
    x0, x1, y0, y1 = p.footprint()
    through = p.kind == "rectangular_through_slot"
    z0 = 0.0 if through else lz - p.depth
    # walls in order x0, y0, x1, y1; normals point into the opening
    corners = [(x0, y1), (x0, y0), (x1, y0), (x1, y1)]
    normals = [(1, 0, 0), (0, 1, 0), (-1, 0, 0), (0, -1, 0)]
    walls = []
    for k in range(4):
        (ax, ay), (bx, by) = corners[k], corners[(k + 1) % 4]
        outline = np.array([[ax, ay, z0], [bx, by, z0], [bx, by, lz], [ax, ay, lz]])
        walls.append(b.plane((ax, ay, z0), (bx - ax, by - ay, 0.0), normals[k], [outline], p.label))
    floor = None
    if not through:
        floor = b.plane((x0, y0, z0), (1, 0, 0), (0, 0, 1), [_rect_points(x0, x1, y0, y1, z0)], p.label)
    for k in range(4):
        (ax, ay), (bx, by) = corners[k], corners[(k + 1) % 4]
        b.line((ax, ay, lz), (bx, by, lz), top, walls[k], "convex")
        if through:
            b.line((ax, ay, 0.0), (bx, by, 0.0), bottom, walls[k], "convex")
        else:
            b.line((ax, ay, z0), (bx, by, z0), floor, walls[k], "concave")
    for k in range(4):
        bx, by = corners[(k + 1) % 4]
        b.line((bx, by, z0), (bx, by, lz), walls[k], walls[(k + 1) % 4], "concave")


def gen_part(recipes: Sequence[FeatureRecipe], seed, name=None, max_tries=50):
    """Build one labeled solid. Randomly placed features are re-drawn until
    they fit; explicitly positioned features that collide raise at once."""
    recipes = list(recipes)
    rng = make_rng(seed, "synth-part")
    dims = _stock_dims(rng)
    explicit = all(r.position is not None for r in recipes if r.kind in _TOP_FEATURES)
    last = None
    for _ in range(1 if explicit else max_tries):
        try:
            step, chamfer, tops = _place(recipes, dims, rng)
            break
        except OverlapError as exc:
            last = exc
    else:
        raise last
    return _assemble(name or f"part_{seed}", dims, step, chamfer, tops)


# --------------------------------------------------------------------------
# datasets
# --------------------------------------------------------------------------


def _split_sizes(n):
    n_val = max(1, int(round(0.1 * n)))
    n_test = max(1, int(round(0.1 * n)))
    return n - n_val - n_test, n_val, n_test


def plan_dataset(n_parts, kinds=FEATURE_KINDS, seed=0, max_features=3):
    """Split assignment and feature kinds per part, without building geometry.

    Parts are shuffled into an 80/10/10 split; inside each split the feature
    kinds are dealt round-robin so that every kind occurs in every split as
    soon as the split has room for it.
    """
    if n_parts < 10:
        raise InsufficientParts(f"need at least 10 parts for an 80/10/10 split, got {n_parts}")
    kinds = tuple(kinds)
    rng = make_rng(seed, "synth-plan")
    order = rng.permutation(n_parts)
    sizes = _split_sizes(n_parts)
    split_of = np.empty(n_parts, dtype=object)
    start = 0
    for name, size in zip(("train", "val", "test"), sizes):
        split_of[order[start : start + size]] = name
        start += size
    plan = [None] * n_parts
    for name, size in zip(("train", "val", "test"), sizes):
        members = sorted(i for i in range(n_parts) if split_of[i] == name)
        need = math.ceil(len(kinds) / len(members))
        cursor = int(rng.integers(len(kinds)))
        for i in members:
            m = max(int(rng.integers(1, max_features + 1)), min(need, len(kinds)))
            picked = []
            while len(picked) < m:
                k = kinds[cursor % len(kinds)]
                cursor += 1
                if k not in picked:
                    picked.append(k)
            plan[i] = (name, tuple(picked))
    return plan


def _sha256(data):
    return hashlib.sha256(data).hexdigest()


def gen_dataset(n_parts, out_dir, kinds=FEATURE_KINDS, seed=0, max_features=3):
    """Write ``n_parts`` interchange files plus ``manifest.json`` to ``out_dir``.

    Returns the manifest dict.
    """
    os.makedirs(out_dir, exist_ok=True)
    plan = plan_dataset(n_parts, kinds, seed, max_features)
    parts = []
    for i, (split, picked) in enumerate(plan):
        name = f"part_{i:05d}"
        solid = gen_part([FeatureRecipe(k) for k in picked], seed=(seed, i), name=name)
        data = serialize_solid(solid)
        fname = f"{name}.json"
        with open(os.path.join(out_dir, fname), "wb") as fh:
            fh.write(data)
        parts.append({"file": fname, "split": split, "sha256": _sha256(data), "features": list(picked)})
    manifest = {
        "version": "dataset-v1",
        "generator": "synthgen",
        "seed": seed,
        "n_parts": n_parts,
        "seam_edges": False,
        "parts": parts,
    }
    write_manifest(manifest, os.path.join(out_dir, "manifest.json"))
    return manifest


def write_manifest(manifest, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=1, sort_keys=True)
        fh.write("\n")


def manifest_hash(path):
    with open(path, "rb") as fh:
        return _sha256(fh.read())
