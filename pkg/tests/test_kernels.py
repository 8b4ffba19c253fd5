"""The numba and numpy kernel paths must agree bit for bit."""

import os
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from brepmae import kernels
from brepmae._jit import USE_NUMBA

needs_numba = pytest.mark.skipif(not USE_NUMBA, reason="numba path disabled")


def _segments(rng, n_seg, n_ch):
    deg = rng.integers(0, 5, size=n_seg)
    offsets = np.concatenate([[0], np.cumsum(deg)]).astype(np.int64)
    values = rng.normal(size=(int(offsets[-1]) + 3, n_ch))
    order = rng.permutation(values.shape[0])[: offsets[-1]].astype(np.int64)
    return values, order, offsets


def _star(rng, n):
    """Closed star-shaped polygon as segment arrays, plus the vertex list."""
    ang = np.sort(rng.uniform(0, 2 * np.pi, size=n))
    r = rng.uniform(0.3, 1.0, size=n)
    poly = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
    return poly, np.roll(poly, -1, axis=0)


@needs_numba
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(1, 6))
def test_segment_aggregate_paths_agree(seed, n_seg, n_ch):
    values, order, offsets = _segments(np.random.default_rng(seed), n_seg, n_ch)
    a = kernels._segment_aggregate_nb(values, order, offsets, kernels.STD_EPS)
    b = kernels._segment_aggregate_np(values, order, offsets, kernels.STD_EPS)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


@needs_numba
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(1, 40))
def test_scatter_add_paths_agree(seed, n):
    rng = np.random.default_rng(seed)
    idx = rng.integers(0, 5, size=n).astype(np.int64)
    src = rng.normal(size=(n, 3))
    a = kernels._scatter_add_rows_nb(np.zeros((5, 3)), idx, src)
    b = np.zeros((5, 3))
    np.add.at(b, idx, src)
    assert np.array_equal(a, b)


@needs_numba
@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(3, 12))
def test_point_in_loop_paths_agree(seed, n):
    rng = np.random.default_rng(seed)
    poly, nxt = _star(rng, n)
    pts = np.concatenate([rng.uniform(-1.2, 1.2, size=(200, 2)), poly, (poly + nxt) / 2])
    a = kernels._points_in_loops_nb(pts, poly, nxt, 1e-9)
    b = kernels._points_in_loops_np(pts, poly, nxt, 1e-9)
    assert np.array_equal(a, b)


@needs_numba
@settings(max_examples=40, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(4, 9))
def test_self_intersection_paths_agree(seed, n):
    poly = np.random.default_rng(seed).uniform(0, 1, size=(n, 2))
    assert bool(kernels._loop_self_intersects_nb(poly, 1e-12)) == kernels._loop_self_intersects_np(poly, 1e-12)


def test_self_intersection_examples():
    square = np.array([[0, 0], [1, 0], [1, 1], [0, 1]], dtype=float)
    bowtie = np.array([[0, 0], [1, 1], [1, 0], [0, 1]], dtype=float)
    assert not kernels.loop_self_intersects(square)
    assert kernels.loop_self_intersects(bowtie)


def test_scatter_keeps_trailing_shape():
    out = kernels.scatter_add_rows(3, [2, 0, 2], np.ones((3, 2, 4)))
    assert out.shape == (3, 2, 4)
    assert out[2].sum() == 16 and out[1].sum() == 0


_PROBE = """
import hashlib, numpy as np
from brepmae import kernels
from brepmae._jit import USE_NUMBA
rng = np.random.default_rng(5)
deg = rng.integers(0, 4, size=30)
off = np.concatenate([[0], np.cumsum(deg)])
vals = rng.normal(size=(off[-1], 8))
h = hashlib.sha256()
for arr in kernels.segment_aggregate(vals, np.arange(off[-1]), off):
    h.update(np.ascontiguousarray(arr).tobytes())
h.update(kernels.scatter_add_rows(7, rng.integers(0, 7, 50), rng.normal(size=(50, 3))).tobytes())
ang = np.linspace(0, 2 * np.pi, 9)[:-1]
poly = np.stack([np.cos(ang), np.sin(ang)], 1)
h.update(kernels.points_in_loops(rng.uniform(-1, 1, (500, 2)), poly, np.roll(poly, -1, 0)).tobytes())
print(USE_NUMBA, h.hexdigest())
"""


def _probe(flag):
    env = {**os.environ, "BREPMAE_NUMBA": flag}
    src = os.path.join(os.path.dirname(kernels.__file__), os.pardir)
    env["PYTHONPATH"] = os.pathsep.join([os.path.abspath(src), env.get("PYTHONPATH", "")])
    out = subprocess.run([sys.executable, "-c", _PROBE], env=env, capture_output=True, text=True, check=True)
    return out.stdout.split()


def test_environment_switch_selects_numpy_with_identical_results():
    numpy_flag, numpy_hash = _probe("0")
    assert numpy_flag == "False"
    if USE_NUMBA:
        numba_flag, numba_hash = _probe("1")
        assert numba_flag == "True"
        assert numba_hash == numpy_hash
