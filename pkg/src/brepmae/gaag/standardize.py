"""Dataset-level standardization of the continuous attribute channels."""

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from ..errors import EmptyDataset, SchemaError

STD_FLOOR = 1e-8
FACE_CONT = slice(6, 10)  # area + centroid inside the 10-vector
EDGE_CONT = slice(10, 11)  # length inside the 14-vector
VERSION = "standardizer-v1"


@dataclass(frozen=True, eq=False)
class Standardizer:
    face_mean: np.ndarray  # (4,)
    face_std: np.ndarray
    aabb_mean: np.ndarray  # (6,)
    aabb_std: np.ndarray
    edge_mean: np.ndarray  # (1,)
    edge_std: np.ndarray

    def to_dict(self):
        return {
            "version": VERSION,
            **{k: getattr(self, k).tolist() for k in _FIELDS},
        }

    @classmethod
    def from_dict(cls, d):
        if d.get("version") != VERSION:
            raise SchemaError("$.version", f"expected {VERSION!r}")
        missing = [k for k in _FIELDS if k not in d]
        if missing:
            raise SchemaError(f"$.{missing[0]}", "missing required field")
        return cls(**{k: np.array(d[k], dtype=np.float64) for k in _FIELDS})

    def dumps(self):
        return json.dumps(self.to_dict(), sort_keys=True, indent=1) + "\n"

    def sha256(self):
        return hashlib.sha256(self.dumps().encode("utf-8")).hexdigest()

    def save(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            fh.write(self.dumps())

    @classmethod
    def load(cls, path):
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


_FIELDS = ("face_mean", "face_std", "aabb_mean", "aabb_std", "edge_mean", "edge_std")


def _stats(x):
    return x.mean(axis=0), np.maximum(x.std(axis=0), STD_FLOOR)


def fit_standardizer(graphs):
    """Means and floored stds over every real node and real edge, in list order."""
    graphs = list(graphs)
    if not graphs:
        raise EmptyDataset("cannot fit a standardizer on an empty dataset")
    faces = np.concatenate([g.face_attr[:, FACE_CONT] for g in graphs])
    boxes = np.concatenate([g.face_aabb for g in graphs])
    edges = np.concatenate([g.edge_attr[:, EDGE_CONT] for g in graphs])
    if len(faces) == 0:
        raise EmptyDataset("dataset has no faces")
    fm, fs = _stats(faces)
    am, as_ = _stats(boxes)
    if len(edges):
        em, es = _stats(edges)
    else:
        em, es = np.zeros(1), np.ones(1)
    return Standardizer(fm, fs, am, as_, em, es)


def _transform(g, st, fwd):
    def f(x, m, s):
        return (x - m) / s if fwd else x * s + m

    face_attr = g.face_attr.copy()
    face_attr[:, FACE_CONT] = f(face_attr[:, FACE_CONT], st.face_mean, st.face_std)
    edge_attr = g.edge_attr.copy()
    edge_attr[:, EDGE_CONT] = f(edge_attr[:, EDGE_CONT], st.edge_mean, st.edge_std)
    return g.with_(
        face_attr=face_attr,
        face_aabb=f(g.face_aabb, st.aabb_mean, st.aabb_std),
        edge_attr=edge_attr,
    )


def apply_standardizer(g, st):
    return _transform(g, st, True)


def unapply_standardizer(g, st):
    return _transform(g, st, False)
