import copy
import math
import os

import numpy as np
import pytest

from brepmae.brep.io import solid_from_dict
from brepmae.brep.types import CurveSpec, Face, SurfaceSpec, TrimLoop
from brepmae.synthgen import gen_dataset

E = np.eye(3)


def _vec(a):
    return [float(x) for x in a]


def cube_doc(size=1.0, name="cube"):
    """Axis-aligned cube [0, size]^3 as an interchange document.

    Face ``2a + side`` lies at coordinate ``side * size`` along axis ``a``
    and its frame normal points outward.
    """
    faces = []
    for a in range(3):
        for side in (0, 1):
            b, c = E[(a + 1) % 3], E[(a + 2) % 3]
            x, y = (b, c) if side else (c, b)
            faces.append(
                {
                    "id": 2 * a + side,
                    "surface": {
                        "kind": "plane",
                        "origin": _vec(side * size * E[a]),
                        "x_axis": _vec(x),
                        "y_axis": _vec(y),
                        "z_axis": _vec(np.cross(x, y)),
                        "u_domain": [0.0, size],
                        "v_domain": [0.0, size],
                    },
                    "loops": [
                        {"orientation": "outer", "polyline": [[0.0, 0.0], [size, 0.0], [size, size], [0.0, size]]}
                    ],
                }
            )
    edges = []
    for a in range(3):
        for b in range(a + 1, 3):
            c = 3 - a - b
            for sa in (0, 1):
                for sb in (0, 1):
                    edges.append(
                        {
                            "id": len(edges),
                            "curve": {
                                "kind": "line",
                                "t_domain": [0.0, 1.0],
                                "origin": _vec(size * (sa * E[a] + sb * E[b])),
                                "direction": _vec(size * E[c]),
                            },
                            "left_face": 2 * a + sa,
                            "right_face": 2 * b + sb,
                            "convexity": "convex",
                        }
                    )
    return {"name": name, "units": "mm", "faces": faces, "edges": edges}


@pytest.fixture
def cube_document():
    return copy.deepcopy(cube_doc())


@pytest.fixture
def cube():
    return solid_from_dict(cube_doc())


def plane(origin=(0, 0, 0), x=(1, 0, 0), y=(0, 1, 0), u=(0.0, 1.0), v=(0.0, 1.0)):
    z = tuple(np.cross(x, y))
    return SurfaceSpec("plane", tuple(origin), tuple(x), tuple(y), z, u, v)


def cylinder(radius=1.0, height=1.0, reversed_=False):
    return SurfaceSpec(
        "cylinder", (0, 0, 0), (1, 0, 0), (0, 1, 0), (0, 0, 1), (0.0, 2 * math.pi), (0.0, height),
        periodic=(True, False), radius=radius, reversed=reversed_,
    )


def square(lo, hi):
    return ((lo, lo), (hi, lo), (hi, hi), (lo, hi))


def square_face(hole=None, face_id=0):
    loops = [TrimLoop(square(0.0, 1.0), "outer")]
    if hole is not None:
        loops.append(TrimLoop(square(*hole)[::-1], "inner"))
    return Face(face_id, plane(), tuple(loops))


def line(a, b):
    return CurveSpec("line", (0.0, 1.0), origin=tuple(a), direction=tuple(np.subtract(b, a)))


@pytest.fixture(scope="session")
def synth_dir(tmp_path_factory):
    """A small labeled dataset shared by the training tests."""
    out = tmp_path_factory.mktemp("synth")
    gen_dataset(20, str(out), seed=3, max_features=2)
    return str(out)


@pytest.fixture(scope="session")
def synth_dataset(synth_dir):
    from brepmae.trainer.data import build_dataset

    return build_dataset(os.path.join(synth_dir, "manifest.json"))


def permute_graph(g, perm):
    """Relabel the faces of ``g`` so that new node ``i`` is old node ``perm[i]``.

    Edge order is kept; only endpoint indices change. The virtual node keeps
    its index.
    """
    perm = np.asarray(perm)
    inv = np.empty(g.n_nodes, dtype=np.int64)
    inv[perm] = np.arange(len(perm))
    inv[g.virtual] = g.virtual
    return g.with_(
        face_ids=g.face_ids[perm],
        face_grid=g.face_grid[perm],
        face_attr=g.face_attr[perm],
        face_aabb=g.face_aabb[perm],
        labels=g.labels[perm],
        src=inv[g.src],
        dst=inv[g.dst],
    )


# -- acceptance report --------------------------------------------------------------------

_CRITERIA = []


class _Criterion:
    def __init__(self, number, title):
        self.number, self.title, self.detail = number, title, ""

    def __enter__(self):
        return self

    def __exit__(self, kind, exc, tb):
        status = "PASS" if kind is None else "FAIL"
        note = self.detail if kind is None else f"{kind.__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"
        line = f"[{status}] criterion {self.number:>2}: {self.title}" + (f" ({note})" if note else "")
        print(line)
        _CRITERIA.append((self.number, line))
        return False


@pytest.fixture
def criterion():
    """``with criterion(n, title) as c: ...`` records one pass/fail line."""
    return _Criterion


def pytest_terminal_summary(terminalreporter):
    if _CRITERIA:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(_CRITERIA):
            terminalreporter.write_line(line)
