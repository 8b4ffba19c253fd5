"""Binary checkpoint format ``ckpt-v1``.

Layout: an 8-byte little-endian header length, a UTF-8 JSON header, then
every array of the manifest as little-endian float64 in manifest order.
The header holds the version, the config hash, the manifest
(``name``, ``shape``, ``trainable``) and optional free-form metadata.
"""

import json
import struct

import numpy as np

from ..errors import CheckpointError

VERSION = "ckpt-v1"


def _header(state, trainable, config_hash, meta):
    return {
        "version": VERSION,
        "config_hash": config_hash,
        "manifest": [
            {"name": n, "shape": list(np.shape(a)), "trainable": bool(n in trainable)}
            for n, a in state.items()
        ],
        "meta": meta or {},
    }


def checkpoint_bytes(state, trainable=(), config_hash="", meta=None):
    trainable = set(trainable)
    head = json.dumps(_header(state, trainable, config_hash, meta), sort_keys=True).encode("utf-8")
    payload = b"".join(np.ascontiguousarray(a, dtype="<f8").tobytes() for a in state.values())
    return struct.pack("<Q", len(head)) + head + payload


def save_checkpoint(path, state, trainable=(), config_hash="", meta=None):
    data = checkpoint_bytes(state, trainable, config_hash, meta)
    with open(path, "wb") as fh:
        fh.write(data)
    return data


def parse_checkpoint(data):
    """Return ``(header, state)`` from checkpoint bytes."""
    if len(data) < 8:
        raise CheckpointError("truncated checkpoint header")
    (n,) = struct.unpack("<Q", data[:8])
    try:
        header = json.loads(data[8 : 8 + n].decode("utf-8"))
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointError(f"unreadable checkpoint header: {exc}") from exc
    if header.get("version") != VERSION:
        raise CheckpointError(f"unsupported checkpoint version {header.get('version')!r}")
    state = {}
    pos = 8 + n
    for entry in header["manifest"]:
        count = int(np.prod(entry["shape"], dtype=np.int64))
        end = pos + 8 * count
        if end > len(data):
            raise CheckpointError(f"payload ends before {entry['name']}")
        state[entry["name"]] = np.frombuffer(data[pos:end], dtype="<f8").astype(np.float64).reshape(entry["shape"])
        pos = end
    if pos != len(data):
        raise CheckpointError("trailing bytes after the last array")
    return header, state


def load_checkpoint(path):
    with open(path, "rb") as fh:
        return parse_checkpoint(fh.read())


def payload_bytes(path):
    """The raw array payload (everything after the header)."""
    with open(path, "rb") as fh:
        data = fh.read()
    (n,) = struct.unpack("<Q", data[:8])
    return data[8 + n :]


def _matches(name, namespaces):
    return not namespaces or any(name == ns or name.startswith(ns.rstrip(".") + ".") for ns in namespaces)


def count_params(header, namespaces=()):
    """Number of trainable scalars whose names fall under any namespace prefix.

    ``namespaces`` may be a single prefix string; an empty filter counts all.
    """
    if isinstance(namespaces, str):
        namespaces = (namespaces,)
    total = 0
    for entry in header["manifest"]:
        if entry["trainable"] and _matches(entry["name"], namespaces):
            total += int(np.prod(entry["shape"], dtype=np.int64))
    return total
