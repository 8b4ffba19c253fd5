"""The gAAG container, its construction from a solid and the JSON cache."""

import json
from dataclasses import dataclass, replace

import numpy as np

from ..brep.validate import validate_solid
from ..errors import InvalidSolid, SchemaError
from .features import edge_attributes, face_attributes, sample_edge_points, sample_face_grid

CACHE_VERSION = "gaag-v1"
NO_LABEL = -1


@dataclass(frozen=True, eq=False)
class GAAG:
    """Attributed adjacency graph of one solid.

    Nodes ``0..n-1`` are faces in solid order and node ``n`` is the virtual
    node. Directed edges are stored as ``src``/``dst`` index arrays: first the
    two directions of every B-Rep edge (``2k`` is left to right, ``2k+1`` the
    reverse), then the virtual pairs ``(i, n), (n, i)`` for each face ``i``.
    Only the first ``n_real_edges`` directed edges carry samples and
    attributes.
    """

    name: str
    face_ids: np.ndarray  # (n,) int
    face_grid: np.ndarray  # (n, 7, K, K)
    face_attr: np.ndarray  # (n, 10)
    face_aabb: np.ndarray  # (n, 6)
    labels: np.ndarray  # (n,) int, NO_LABEL when absent
    src: np.ndarray  # (E,) int
    dst: np.ndarray  # (E,) int
    edge_grid: np.ndarray  # (E_real, 12, S)
    edge_attr: np.ndarray  # (E_real, 14)

    @property
    def n_real(self):
        return len(self.face_ids)

    @property
    def n_nodes(self):
        return self.n_real + 1

    @property
    def virtual(self):
        return self.n_real

    @property
    def n_edges(self):
        return len(self.src)

    @property
    def n_real_edges(self):
        return len(self.edge_attr)

    @property
    def grid_size(self):
        return self.face_grid.shape[-1]

    @property
    def edge_samples(self):
        return self.edge_grid.shape[-1]

    def adjacency(self):
        a = np.zeros((self.n_nodes, self.n_nodes), dtype=np.int64)
        np.add.at(a, (self.src, self.dst), 1)
        return a

    def with_(self, **changes):
        return replace(self, **changes)


def _virtual_edges(n):
    i = np.arange(n)
    src = np.stack([i, np.full(n, n)], axis=1).ravel()
    dst = np.stack([np.full(n, n), i], axis=1).ravel()
    return src, dst


def _swap_normals(grid):
    out = grid.copy()
    out[6:9], out[9:12] = grid[9:12], grid[6:9]
    return out


def build_gaag(solid, k=10, s=10, validate=True):
    """Build the graph of a (normalized) solid; raises ``InvalidSolid`` on defects."""
    if validate:
        report = validate_solid(solid)
        if not report.ok:
            raise InvalidSolid(report.defects)
    index = solid.face_index
    n = len(solid.faces)
    grids, attrs, boxes = [], [], []
    for f in solid.faces:
        grids.append(sample_face_grid(f, k))
        a, b = face_attributes(f)
        attrs.append(a)
        boxes.append(b)
    e_src, e_dst, e_grid, e_attr = [], [], [], []
    for e in solid.edges:
        g = sample_edge_points(e, solid, s)
        a = edge_attributes(e)
        left, right = index[e.left_face], index[e.right_face]
        e_src += [left, right]
        e_dst += [right, left]
        e_grid += [g, _swap_normals(g)]
        e_attr += [a, a]
    v_src, v_dst = _virtual_edges(n)
    labels = [NO_LABEL if f.label is None else f.label for f in solid.faces]
    return GAAG(
        name=solid.name,
        face_ids=np.array([f.id for f in solid.faces], dtype=np.int64),
        face_grid=np.stack(grids),
        face_attr=np.stack(attrs),
        face_aabb=np.stack(boxes),
        labels=np.array(labels, dtype=np.int64),
        src=np.concatenate([np.array(e_src, dtype=np.int64), v_src]),
        dst=np.concatenate([np.array(e_dst, dtype=np.int64), v_dst]),
        edge_grid=np.stack(e_grid) if e_grid else np.zeros((0, 12, s)),
        edge_attr=np.stack(e_attr) if e_attr else np.zeros((0, 14)),
    )


# --------------------------------------------------------------------------
# JSON cache
# --------------------------------------------------------------------------

_FLOAT_FIELDS = ("face_grid", "face_attr", "face_aabb", "edge_grid", "edge_attr")
_INT_FIELDS = ("face_ids", "labels", "src", "dst")


def gaag_to_dict(g):
    d = {"version": CACHE_VERSION, "name": g.name}
    for f in _FLOAT_FIELDS + _INT_FIELDS:
        arr = getattr(g, f)
        d[f] = {"shape": list(arr.shape), "data": arr.ravel().tolist()}
    return d


def gaag_from_dict(d):
    if d.get("version") != CACHE_VERSION:
        raise SchemaError("$.version", f"expected {CACHE_VERSION!r}, got {d.get('version')!r}")
    expected = {"version", "name", *_FLOAT_FIELDS, *_INT_FIELDS}
    extra = set(d) - expected
    if extra:
        raise SchemaError(f"$.{sorted(extra)[0]}", "unknown field")
    fields = {"name": d["name"]}
    for f in _FLOAT_FIELDS + _INT_FIELDS:
        if f not in d:
            raise SchemaError(f"$.{f}", "missing required field")
        dtype = np.float64 if f in _FLOAT_FIELDS else np.int64
        fields[f] = np.array(d[f]["data"], dtype=dtype).reshape(d[f]["shape"])
    return GAAG(**fields)


def save_gaag(g, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(gaag_to_dict(g), fh, separators=(",", ":"))


def load_gaag(path):
    with open(path, "r", encoding="utf-8") as fh:
        return gaag_from_dict(json.load(fh))
