"""Dataset manifests, gAAG caches and in-memory graph datasets."""

import hashlib
import json
import os
from dataclasses import dataclass, field

from ..brep.io import load_solid
from ..brep.normalize import normalize_solid
from ..brep.validate import validate_solid
from ..errors import BRepMAEError, EmptyDataset, SchemaError
from ..gaag import Standardizer, apply_standardizer, build_gaag, fit_standardizer, load_gaag, save_gaag

SPLITS = ("train", "val", "test")
CACHE_VERSION = "cache-v1"
CACHE_ENV = "BREPMAE_CACHE_DIR"


def file_sha256(path):
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def read_json(path):
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)


def write_json(obj, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=1, sort_keys=True)
        fh.write("\n")


@dataclass
class GraphDataset:
    """Standardized graphs plus their split assignment."""

    graphs: list
    splits: dict  # split name -> list of graph indices
    standardizer: Standardizer
    dataset_hash: str = ""
    skipped: list = field(default_factory=list)

    def split(self, name):
        return [self.graphs[i] for i in self.splits.get(name, [])]


def _read_manifest(manifest_path):
    manifest = read_json(manifest_path)
    if "parts" not in manifest:
        raise SchemaError("$.parts", "missing required field")
    return manifest


def _convert(path, k, s):
    solid = normalize_solid(load_solid(path))
    report = validate_solid(solid)
    if not report.ok:
        return None, [str(d) for d in report.defects]
    return build_gaag(solid, k, s, validate=False), []


def build_dataset(manifest_path, k=10, s=10):
    """Load, normalize, validate and convert every part listed in a manifest.

    Invalid parts are skipped and reported. The standardizer is fitted on the
    training split only, in manifest order.
    """
    manifest = _read_manifest(manifest_path)
    root = os.path.dirname(os.path.abspath(manifest_path))
    raw, splits, skipped = [], {name: [] for name in SPLITS}, []
    for entry in manifest["parts"]:
        try:
            g, defects = _convert(os.path.join(root, entry["file"]), k, s)
        except BRepMAEError as exc:
            g, defects = None, [str(exc)]
        if g is None:
            skipped.append({"file": entry["file"], "defects": defects})
            continue
        splits.setdefault(entry["split"], []).append(len(raw))
        raw.append(g)
    train = [raw[i] for i in splits["train"]]
    if not train:
        raise EmptyDataset("no valid parts in the training split")
    st = fit_standardizer(train)
    graphs = [apply_standardizer(g, st) for g in raw]
    return GraphDataset(graphs, splits, st, file_sha256(manifest_path), skipped)


def preprocess(manifest_path, out_dir, k=10, s=10):
    """Write one ``gaag-v1`` JSON per valid part, the standardizer and a cache manifest.

    Cached graphs are stored *before* standardization so the statistics can
    be refitted; :func:`load_cache` applies the stored standardizer.
    """
    manifest = _read_manifest(manifest_path)
    root = os.path.dirname(os.path.abspath(manifest_path))
    os.makedirs(out_dir, exist_ok=True)
    parts, skipped, train = [], [], []
    for entry in manifest["parts"]:
        try:
            g, defects = _convert(os.path.join(root, entry["file"]), k, s)
        except BRepMAEError as exc:
            g, defects = None, [str(exc)]
        if g is None:
            skipped.append({"file": entry["file"], "defects": defects})
            continue
        name = os.path.splitext(entry["file"])[0] + ".gaag.json"
        save_gaag(g, os.path.join(out_dir, name))
        parts.append({"file": name, "split": entry["split"], "source": entry["file"]})
        if entry["split"] == "train":
            train.append(g)
    if not train:
        raise EmptyDataset("no valid parts in the training split")
    st = fit_standardizer(train)
    st.save(os.path.join(out_dir, "standardizer.json"))
    cache = {
        "version": CACHE_VERSION,
        "source_manifest_sha256": file_sha256(manifest_path),
        "grid_size": k,
        "edge_samples": s,
        "seam_edges": manifest.get("seam_edges", "unknown"),
        "standardizer": "standardizer.json",
        "standardizer_sha256": st.sha256(),
        "parts": parts,
        "skipped": skipped,
    }
    write_json(cache, os.path.join(out_dir, "cache.json"))
    return cache


def load_cache(cache_dir):
    path = os.path.join(cache_dir, "cache.json")
    cache = read_json(path)
    if cache.get("version") != CACHE_VERSION:
        raise SchemaError("$.version", f"expected {CACHE_VERSION!r}")
    st = Standardizer.load(os.path.join(cache_dir, cache["standardizer"]))
    graphs, splits = [], {name: [] for name in SPLITS}
    for entry in cache["parts"]:
        splits.setdefault(entry["split"], []).append(len(graphs))
        graphs.append(apply_standardizer(load_gaag(os.path.join(cache_dir, entry["file"])), st))
    return GraphDataset(graphs, splits, st, file_sha256(path), cache.get("skipped", []))


def load_dataset(path, k=10, s=10):
    """Accept either a gAAG cache directory or a raw dataset manifest/directory."""
    if os.path.isdir(path) and os.path.exists(os.path.join(path, "cache.json")):
        return load_cache(path)
    if os.path.isdir(path):
        path = os.path.join(path, "manifest.json")
    return build_dataset(path, k, s)
