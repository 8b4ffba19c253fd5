import numpy as np
import pytest
from conftest import cylinder, line, plane, square_face
from hypothesis import given, settings
from hypothesis import strategies as st

from brepmae.brep.measure import point_in_trim
from brepmae.brep.types import CONVEXITIES, CURVE_KINDS, SURFACE_KINDS, Edge, Face, Solid, TrimLoop
from brepmae.errors import EmptyDataset
from brepmae.gaag import (
    apply_standardizer,
    build_gaag,
    fit_standardizer,
    load_gaag,
    save_gaag,
    unapply_standardizer,
)
from brepmae.gaag.features import edge_attributes, face_attributes, sample_edge_points, sample_face_grid, uv_lattice
from brepmae.synthgen import FeatureRecipe, gen_part


def test_default_face_grid_shape():
    assert sample_face_grid(square_face()).shape == (7, 10, 10)


def test_small_plane_grid():
    g = sample_face_grid(square_face(), k=3)
    np.testing.assert_allclose(g[0], [[0, 0, 0], [0.5, 0.5, 0.5], [1, 1, 1]])
    np.testing.assert_allclose(g[3:6].reshape(3, -1).T, np.tile([0.0, 0.0, 1.0], (9, 1)))
    assert np.all(g[6] == 1.0)


def test_hole_trim_channel_matches_point_oracle():
    face = square_face(hole=(0.4, 0.6))
    g = sample_face_grid(face, k=10)
    uu, vv = uv_lattice(10)
    want = np.array([[point_in_trim(face, uu[i, j], vv[i, j]) for j in range(10)] for i in range(10)])
    assert np.array_equal(g[6], want)
    assert (g[6] == 0).any()


def _two_planes():
    floor = Face(0, plane(), (TrimLoop(((0, 0), (1, 0), (1, 1), (0, 1))),))
    wall = Face(1, plane(x=(0, 1, 0), y=(0, 0, 1)), (TrimLoop(((0, 0), (1, 0), (1, 1), (0, 1))),))
    edge = Edge(0, line((0, 0, 0), (0, 1, 0)), 0, 1, "concave")
    return Solid("corner", (floor, wall), (edge,)), edge


def test_edge_samples_shape_and_normals():
    solid, edge = _two_planes()
    e = sample_edge_points(edge, solid)
    assert e.shape == (12, 10)
    np.testing.assert_allclose(e[6:9].T, np.tile([0, 0, 1.0], (10, 1)), atol=1e-12)
    np.testing.assert_allclose(e[9:12].T, np.tile([1.0, 0, 0], (10, 1)), atol=1e-12)


def test_hole_circle_tangents_are_horizontal_and_tangential():
    solid = gen_part([FeatureRecipe("through_hole")], seed=4)
    circles = [e for e in solid.edges if e.curve.kind == "circle"]
    assert circles
    for edge in circles:
        grid = sample_edge_points(edge, solid)
        p, t = grid[0:3].T, grid[3:6].T
        radial = p - np.asarray(edge.curve.origin)
        np.testing.assert_allclose(t[:, 2], 0.0, atol=1e-9)
        np.testing.assert_allclose(np.einsum("ij,ij->i", t, radial), 0.0, atol=1e-9)


def test_plane_face_attributes():
    attr, aabb = face_attributes(square_face())
    np.testing.assert_allclose(attr, [1, 0, 0, 0, 0, 0, 1.0, 0.5, 0.5, 0], atol=1e-9)
    np.testing.assert_allclose(aabb, [0.5, 0.5, 0, 0.5, 0.5, 0], atol=1e-12)


def test_convex_line_attributes():
    e = Edge(0, line((0, 0, 0), (2, 0, 0)), 0, 1, "convex")
    a = edge_attributes(e)
    onehot = np.zeros(len(CURVE_KINDS))
    onehot[CURVE_KINDS.index("line")] = 1
    np.testing.assert_allclose(a, np.concatenate([onehot, [2.0], [0, 1, 0]]))


@settings(max_examples=200, deadline=None)
@given(
    st.sampled_from(["plane", "cylinder"]),
    st.floats(0.1, 5.0),
    st.sampled_from(CONVEXITIES),
    st.floats(0.01, 10.0),
)
def test_one_hot_blocks_sum_to_one(kind, size, convexity, length):
    if kind == "plane":
        face = Face(0, plane(u=(0, size), v=(0, size)), (TrimLoop(((0, 0), (size, 0), (size, size), (0, size))),))
    else:
        face = Face(0, cylinder(height=size), (TrimLoop(((0, 0), (6.283185307179586, 0), (6.283185307179586, size), (0, size))),))
    attr, _ = face_attributes(face)
    assert attr[: len(SURFACE_KINDS)].sum() == 1.0
    e = edge_attributes(Edge(0, line((0, 0, 0), (length, 0, 0)), 0, 1, convexity))
    assert e[: len(CURVE_KINDS)].sum() == 1.0
    assert e[-3:].sum() == 1.0


def test_cube_graph_counts(cube):
    g = build_gaag(cube)
    assert g.n_nodes == 7
    assert g.n_real_edges == 24
    assert g.n_edges - g.n_real_edges == 12


def test_through_hole_graph():
    solid = gen_part([FeatureRecipe("through_hole")], seed=2)
    g = build_gaag(solid)
    assert g.n_nodes == 8
    adj = g.adjacency()
    cyl = next(i for i, f in enumerate(solid.faces) if f.surface.kind == "cylinder")
    planes = [i for i, f in enumerate(solid.faces) if f.surface.kind == "plane"]
    neighbours = {i for i in planes if adj[cyl, i]}
    zs = {i: np.asarray(solid.faces[i].surface.z_axis) for i in neighbours}
    assert len(neighbours) == 2
    assert all(abs(abs(z[2]) - 1.0) < 1e-12 for z in zs.values())


@pytest.mark.parametrize("seed", range(5))
def test_adjacency_symmetric(seed):
    g = build_gaag(gen_part([FeatureRecipe("rectangular_pocket"), FeatureRecipe("blind_hole")], seed=seed))
    adj = g.adjacency()
    assert np.array_equal(adj, adj.T)


def test_reverse_edge_swaps_normal_blocks(cube):
    g = build_gaag(cube)
    fwd, rev = g.edge_grid[0], g.edge_grid[1]
    np.testing.assert_array_equal(fwd[6:9], rev[9:12])
    np.testing.assert_array_equal(fwd[9:12], rev[6:9])
    assert (g.src[0], g.dst[0]) == (g.dst[1], g.src[1])


def test_cache_round_trip(tmp_path, cube):
    g = build_gaag(cube)
    path = tmp_path / "cube.gaag.json"
    save_gaag(g, str(path))
    h = load_gaag(str(path))
    for name in ("face_grid", "face_attr", "face_aabb", "edge_grid", "edge_attr", "src", "dst", "labels"):
        np.testing.assert_array_equal(getattr(g, name), getattr(h, name))


# -- standardization -------------------------------------------------------------


def _with_areas(g, areas):
    fa = g.face_attr.copy()
    fa[:, 6] = areas
    return g.with_(face_attr=fa)


def test_two_value_standardizer(cube):
    g = _with_areas(build_gaag(cube), [0, 2, 0, 2, 0, 2])
    st_ = fit_standardizer([g])
    assert st_.face_mean[0] == pytest.approx(1.0)
    assert st_.face_std[0] == pytest.approx(1.0)
    z = apply_standardizer(g, st_)
    assert z.face_attr[0, 6] == pytest.approx(-1.0)


def test_constant_channel_floor(cube):
    g = _with_areas(build_gaag(cube), 3.0)
    st_ = fit_standardizer([g])
    assert st_.face_std[0] == 1e-8
    np.testing.assert_allclose(apply_standardizer(g, st_).face_attr[:, 6], 0.0)


def test_fit_then_apply_statistics():
    graphs = [build_gaag(gen_part([FeatureRecipe("step"), FeatureRecipe("through_hole")], seed=s)) for s in range(4)]
    st_ = fit_standardizer(graphs)
    z = [apply_standardizer(g, st_) for g in graphs]
    cont = np.concatenate([g.face_attr[:, 6:10] for g in z])
    live = st_.face_std > 1e-8
    np.testing.assert_allclose(cont.mean(axis=0), 0.0, atol=1e-9)
    np.testing.assert_allclose(cont.std(axis=0)[live], 1.0, atol=1e-6)
    back = unapply_standardizer(z[0], st_)
    np.testing.assert_allclose(back.face_attr, graphs[0].face_attr, atol=1e-9)


def test_empty_fit_raises():
    with pytest.raises(EmptyDataset):
        fit_standardizer([])
