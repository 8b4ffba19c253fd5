import json
import os
from collections import Counter

import numpy as np
import pytest

from brepmae.brep.geometry import curve_points_tangents, invert_surface, surface_points_normals
from brepmae.brep.io import parse_solid, serialize_solid
from brepmae.brep.measure import edge_length, point_in_trim
from brepmae.brep.validate import validate_solid
from brepmae.errors import InsufficientParts, OverlapError, PlacementError
from brepmae.synthgen import (
    FEATURE_KINDS,
    STOCK_CLASS,
    FeatureRecipe,
    gen_dataset,
    gen_part,
    manifest_hash,
    plan_dataset,
)

SMOOTH_ANGLE = 1e-3


def test_block_only():
    solid = gen_part([], seed=0)
    assert len(solid.faces) == 6
    assert {f.label for f in solid.faces} == {STOCK_CLASS}


def test_block_with_through_hole():
    solid = gen_part([FeatureRecipe("through_hole")], seed=0)
    assert len(solid.faces) == 7
    assert len(solid.edges) == 14  # 12 block edges and the two rims
    cyl = [f for f in solid.faces if f.surface.kind == "cylinder"]
    assert len(cyl) == 1 and cyl[0].label == FEATURE_KINDS.index("through_hole")
    holed = [f for f in solid.faces if len(f.loops) == 2]
    assert len(holed) == 2


def test_same_seed_same_bytes():
    recipes = [FeatureRecipe("blind_hole"), FeatureRecipe("step")]
    assert serialize_solid(gen_part(recipes, seed=9)) == serialize_solid(gen_part(recipes, seed=9))
    assert serialize_solid(gen_part(recipes, seed=9)) != serialize_solid(gen_part(recipes, seed=10))


def test_explicit_overlap_raises():
    a = FeatureRecipe("through_hole", position=(40.0, 30.0), size=5.0)
    b = FeatureRecipe("rectangular_pocket", position=(44.0, 30.0), size=5.0, size2=5.0)
    with pytest.raises(OverlapError):
        gen_part([a, b], seed=0)


def test_oversized_feature_raises():
    with pytest.raises(PlacementError):
        gen_part([FeatureRecipe("rectangular_pocket", size=200.0, size2=5.0)], seed=0)
    with pytest.raises(PlacementError):
        gen_part([FeatureRecipe("countersink")], seed=0)


def test_custom_class_index():
    solid = gen_part([FeatureRecipe("chamfer", class_index=11)], seed=1)
    assert 11 in {f.label for f in solid.faces}


# -- validity and convexity ----------------------------------------------------------------


def _into_face(face, p, t, eps):
    """Unit 3D direction at ``p`` that lies in ``face`` and points into it."""
    u, v = invert_surface(face.surface, p)
    _, n = surface_points_normals(face.surface, np.array(u), np.array(v))
    d = np.cross(n, t)
    d /= np.linalg.norm(d)
    # tangent-plane derivatives by central differences map d to a UV step
    h = 1e-6
    pu = (surface_points_normals(face.surface, np.array(u + h), np.array(v))[0]
          - surface_points_normals(face.surface, np.array(u - h), np.array(v))[0]) / (2 * h)
    pv = (surface_points_normals(face.surface, np.array(u), np.array(v + h))[0]
          - surface_points_normals(face.surface, np.array(u), np.array(v - h))[0]) / (2 * h)
    w, *_ = np.linalg.lstsq(np.stack([pu, pv], axis=1), d, rcond=None)
    w *= eps / np.linalg.norm(d)
    inside = [point_in_trim(face, u + s * w[0], v + s * w[1]) for s in (1.0, -1.0)]
    assert sum(inside) == 1, f"face {face.id}: probes {inside}"
    return (d if inside[0] else -d), n


def _dihedral_tag(solid, edge):
    """convex / concave / smooth from the geometry alone."""
    lo, hi = edge.curve.t_domain
    p, t = curve_points_tangents(edge.curve, np.array([(lo + hi) / 2]))
    p, t = p[0], t[0] / np.linalg.norm(t[0])
    eps = 0.02 * edge_length(edge)
    faces = {f.id: f for f in solid.faces}
    _, n_left = _into_face(faces[edge.left_face], p, t, eps)
    d_right, n_right = _into_face(faces[edge.right_face], p, t, eps)
    angle = np.arccos(np.clip(np.dot(n_left, n_right), -1.0, 1.0))
    if angle < SMOOTH_ANGLE:
        return "smooth"
    return "convex" if np.dot(d_right, n_left) < 0 else "concave"


SAMPLE_RECIPES = [
    [],
    ["through_hole"],
    ["blind_hole", "rectangular_pocket"],
    ["rectangular_through_slot", "step"],
    ["chamfer", "through_hole", "blind_hole"],
    ["step", "chamfer", "rectangular_pocket"],
]


@pytest.mark.parametrize("kinds", SAMPLE_RECIPES, ids=lambda k: "+".join(k) or "block")
@pytest.mark.parametrize("seed", range(2))
def test_generated_parts_are_valid_and_tags_match_geometry(kinds, seed):
    solid = gen_part([FeatureRecipe(k) for k in kinds], seed=seed)
    assert validate_solid(solid).ok
    for edge in solid.edges:
        assert _dihedral_tag(solid, edge) == edge.convexity, edge.id
    labels = {f.label for f in solid.faces}
    assert {FEATURE_KINDS.index(k) for k in kinds} <= labels


# -- datasets ------------------------------------------------------------------------------


def test_plan_covers_every_kind_in_train():
    plan = plan_dataset(100, seed=0)
    train = Counter(k for split, kinds in plan if split == "train" for k in kinds)
    assert all(train[k] >= 8 for k in FEATURE_KINDS)


def test_every_kind_in_every_split():
    plan = plan_dataset(4 * len(FEATURE_KINDS), seed=5)
    for split in ("train", "val", "test"):
        seen = {k for s, kinds in plan if s == split for k in kinds}
        assert seen == set(FEATURE_KINDS), split


def test_split_sizes_are_80_10_10():
    plan = plan_dataset(100, seed=1)
    assert Counter(s for s, _ in plan) == {"train": 80, "val": 10, "test": 10}


def test_too_few_parts():
    with pytest.raises(InsufficientParts):
        plan_dataset(5)


def test_dataset_files_and_hash(tmp_path, synth_dir):
    again = tmp_path / "again"
    gen_dataset(20, str(again), seed=3, max_features=2)
    a, b = os.path.join(synth_dir, "manifest.json"), str(again / "manifest.json")
    assert manifest_hash(a) == manifest_hash(b)
    with open(a) as fh:
        manifest = json.load(fh)
    files = [p["file"] for p in manifest["parts"]]
    assert len(files) == len(set(files)) == 20
    assert {p["split"] for p in manifest["parts"]} == {"train", "val", "test"}
    for entry in manifest["parts"]:
        with open(os.path.join(synth_dir, entry["file"]), "rb") as fh:
            solid = parse_solid(fh.read())
        assert validate_solid(solid).ok


def test_class_histogram_is_reproducible():
    def hist(seed):
        return Counter(k for _, kinds in plan_dataset(50, seed=seed) for k in kinds)

    assert hist(4) == hist(4)
