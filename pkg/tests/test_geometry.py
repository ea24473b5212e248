"""
Tests for meshes, spatial queries, penetration and SDF grids
"""

import numpy as np
import pytest

import hoi_dno.geometry.sdf as sdf_module
from hoi_dno.exceptions import MeshBudgetError, MeshError, NotWatertightError
from hoi_dno.geometry import (
    TriMesh,
    bake_sdf,
    box,
    capsule,
    cylinder,
    inside_by_winding,
    load_obj,
    load_sdf,
    merge,
    mesh_digest,
    nearest_point,
    nearest_points,
    object_sdf,
    penetration_loss,
    penetration_term,
    point_in_mesh,
    points_in_mesh,
    query_sdf,
    sample_surface,
    save_obj,
    save_sdf,
    winding_numbers,
)
from hoi_dno.numerics import Tensor
from tests.helpers import assert_grads_match


def test_primitives_are_watertight(unit_cube, sphere):
    """Test that every generated primitive is closed and consistently wound"""
    for mesh in (unit_cube, sphere, cylinder(0.1, 0.3), capsule(0.05, (0.0, 0.0, 0.0), (0.0, 0.0, 0.2))):
        assert mesh.watertight, mesh


def test_unit_cube_volume(unit_cube):
    """Test the signed volume of the unit cube"""
    assert unit_cube.volume == pytest.approx(1.0)


def test_single_triangle_is_open():
    """Test that an open surface is not watertight and is refused by inside tests"""
    tri = TriMesh(np.eye(3), np.array([[0, 1, 2]]), name="tri")
    assert not tri.watertight
    with pytest.raises(NotWatertightError):
        points_in_mesh(np.zeros((1, 3)), tri)


def test_degenerate_face_rejected():
    """Test that a zero-area face raises MeshError"""
    with pytest.raises(MeshError):
        TriMesh(np.array([[0.0, 0.0, 0.0], [1.0, 0.0, 0.0], [2.0, 0.0, 0.0]]), np.array([[0, 1, 2]]))


def test_face_index_out_of_range():
    """Test that faces must reference existing vertices"""
    with pytest.raises(MeshError):
        TriMesh(np.eye(3), np.array([[0, 1, 3]]))


def test_nearest_point_on_cube_face(unit_cube):
    """Test the projection of an outside point onto the nearest face"""
    q, dist, _ = nearest_point([0.1, 0.2, 2.0], unit_cube)
    np.testing.assert_allclose(q, [0.1, 0.2, 0.5], atol=1e-12)
    assert dist == pytest.approx(1.5)


def test_bvh_pruning_matches_exhaustive_search(sphere):
    """Test that BVH-pruned nearest points equal the exhaustive result"""
    points = np.random.default_rng(1).uniform(-1.0, 1.0, size=(200, 3))
    exhaustive = nearest_points(points, sphere)
    pruned = nearest_points(points, sphere, bvh=sphere.bvh())
    np.testing.assert_allclose(pruned.distances, exhaustive.distances, atol=1e-12)
    np.testing.assert_allclose(pruned.points, exhaustive.points, atol=1e-12)


def test_inside_test_agrees_with_winding_number(sphere):
    """Test the ray-parity inside test against the winding-number oracle on random probes"""
    probes = np.random.default_rng(2).uniform(-0.7, 0.7, size=(1000, 3))
    by_ray = points_in_mesh(probes, sphere, seed=5, bvh=sphere.bvh())
    by_winding = inside_by_winding(probes, sphere)
    assert int(np.sum(by_ray != by_winding)) == 0


def test_winding_number_values(unit_cube):
    """Test winding numbers of one point inside and one outside"""
    w = winding_numbers(np.array([[0.0, 0.0, 0.0], [3.0, 0.0, 0.0]]), unit_cube)
    np.testing.assert_allclose(w, [1.0, 0.0], atol=1e-9)


def test_point_in_mesh_single(unit_cube):
    """Test the single-point inside helper with an explicit ray"""
    assert point_in_mesh([0.1, 0.1, 0.1], unit_cube, ray_dir=[0.267, 0.534, 0.802])
    assert not point_in_mesh([0.9, 0.1, 0.1], unit_cube, ray_dir=[0.267, 0.534, 0.802])


def test_penetration_term_matches_dense_oracle(sphere):
    """Test one direction of the penetration loss against a brute-force inside/nearest oracle"""
    rng = np.random.default_rng(3)
    for trial in range(20):
        points = rng.uniform(-0.6, 0.6, size=(40, 3))
        inside = inside_by_winding(points, sphere)
        depth = nearest_points(points, sphere).distances
        expected = float(np.sum(depth[inside] ** 2) / len(points))
        got = penetration_term(points, sphere, seed=trial).item()
        assert got == pytest.approx(expected, rel=1e-3, abs=1e-12)


def test_penetration_loss_of_overlapping_boxes(unit_cube):
    """Test the symmetric loss of a small box whose left half sits inside the unit cube"""
    small = box((0.6, 0.6, 0.6), center=(0.6, 0.0, 0.0))
    # four corners of the small box lie 0.2 m deep inside the cube, none of the cube's inside it
    assert penetration_loss(unit_cube, small).item() == pytest.approx(4 * 0.04 / 8)


def dense_penetration_loss(mesh_a, mesh_b):
    """Both penetration directions from winding-number membership and exhaustive nearest points"""
    total = 0.0
    for points, target in ((mesh_a.vertices, mesh_b), (mesh_b.vertices, mesh_a)):
        inside = inside_by_winding(points, target)
        total += float(np.sum(nearest_points(points[inside], target).distances ** 2)) / len(points)
    return total


def test_nested_cube_penetration(unit_cube):
    """Test a 0.2 m cube inside the unit cube: eight corners 0.4 m deep, none of the outer corners inside"""
    inner = box((0.2, 0.2, 0.2))
    assert penetration_loss(unit_cube, inner).item() == pytest.approx(0.16)
    assert penetration_loss(inner, unit_cube).item() == pytest.approx(0.16)
    assert dense_penetration_loss(unit_cube, inner) == pytest.approx(0.16)


def test_shifted_subdivided_cubes():
    """Test overlapping subdivided cubes in both argument orders and after a common translation"""
    a = box((1.0, 1.0, 1.0), subdivisions=3)
    b = a.transformed(translation=np.array([0.8, 0.0, 0.0]))
    # 49 interior face vertices per cube overlap the other: 25 at 0.2 m depth and 24 at 0.125 m, over 386 vertices
    expected = 2.0 * (25 * 0.04 + 24 * 0.125**2) / 386
    assert expected == pytest.approx(0.0071243523, rel=1e-9)
    ab = penetration_loss(a, b).item()
    ba = penetration_loss(b, a).item()
    shift = np.array([1.0, 2.0, -0.5])
    translated = penetration_loss(a.transformed(translation=shift), b.transformed(translation=shift)).item()
    assert ab == pytest.approx(expected, rel=1e-9)
    assert ba == pytest.approx(ab, rel=1e-12)
    assert translated == pytest.approx(ab, rel=1e-9)
    assert dense_penetration_loss(a, b) == pytest.approx(expected, rel=1e-9)


def test_penetration_loss_disjoint_is_zero(unit_cube):
    """Test that separated meshes do not penetrate"""
    far = box((0.5, 0.5, 0.5), center=(3.0, 0.0, 0.0))
    assert penetration_loss(unit_cube, far).item() == 0.0


def test_penetration_gradient(sphere):
    """Test the gradient of the penetration term with respect to query points"""
    points = np.random.default_rng(4).normal(size=(6, 3))
    points = 0.3 * points / np.linalg.norm(points, axis=1, keepdims=True)
    assert_grads_match(lambda p: penetration_term(p, sphere, seed=1), points, rtol=1e-3, atol=1e-8)


def test_penetration_with_posed_target_vertices(unit_cube):
    """Test that moving target vertices per frame changes the loss"""
    inside_pt = np.array([[0.0, 0.0, 0.0]])
    frames = np.stack([unit_cube.vertices, unit_cube.vertices + np.array([5.0, 0.0, 0.0])])
    loss = penetration_term(np.stack([inside_pt, inside_pt]), unit_cube, target_vertices=Tensor(frames))
    # inside only in the first frame, at depth 0.5
    assert loss.item() == pytest.approx(0.25 / 2)


def test_sample_surface_is_deterministic(unit_cube):
    """Test seeded surface sampling"""
    a = sample_surface(unit_cube, 50, seed=9)
    b = sample_surface(unit_cube, 50, seed=9)
    np.testing.assert_array_equal(a, b)
    np.testing.assert_allclose(np.abs(a).max(axis=1), 0.5, atol=1e-12)


def test_merge_offsets_faces(unit_cube):
    """Test the disjoint union of two cubes"""
    merged = merge([unit_cube, unit_cube.transformed(translation=np.array([2.0, 0.0, 0.0]))], name="pair")
    assert len(merged.vertices) == 2 * len(unit_cube.vertices)
    assert merged.faces.max() == len(merged.vertices) - 1
    assert merged.watertight


def test_obj_save_and_load(tmp_path, sphere):
    """Test the OBJ writer and reader"""
    path = tmp_path / "ball.obj"
    save_obj(path, sphere)
    loaded = load_obj(path)
    assert loaded.name == "ball"
    np.testing.assert_array_equal(loaded.faces, sphere.faces)
    np.testing.assert_allclose(loaded.vertices, sphere.vertices, atol=1e-8)


def test_obj_polygon_faces_are_triangulated(tmp_path):
    """Test fan triangulation of quad faces"""
    path = tmp_path / "quad.obj"
    path.write_text("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n", encoding="utf-8")
    mesh = load_obj(path)
    np.testing.assert_array_equal(mesh.faces, [[0, 1, 2], [0, 2, 3]])


def test_obj_errors(tmp_path, unit_cube):
    """Test missing files, malformed records and the face budget"""
    with pytest.raises(FileNotFoundError):
        load_obj(tmp_path / "missing.obj")
    bad = tmp_path / "bad.obj"
    bad.write_text("v 0 0\n", encoding="utf-8")
    with pytest.raises(MeshError):
        load_obj(bad)
    path = tmp_path / "cube.obj"
    save_obj(path, unit_cube)
    with pytest.raises(MeshBudgetError):
        load_obj(path, max_faces=4)


def test_sdf_bake_query_and_file(tmp_path, sphere):
    """Test SDF signs, interpolation and the SDF file"""
    grid = bake_sdf(sphere, resolution=16)
    values, clamped = query_sdf(grid, np.array([[0.0, 0.0, 0.0], [0.55, 0.0, 0.0], [3.0, 0.0, 0.0]]))
    assert values[0] < -0.3
    assert values[1] > 0.0
    assert clamped.tolist() == [False, False, True]
    path = str(tmp_path / "ball.sdf")
    save_sdf(path, grid)
    loaded = load_sdf(path)
    assert loaded.shape == grid.shape
    np.testing.assert_allclose(loaded.values, grid.values, atol=1e-6)


def test_sdf_resolution_floor(sphere):
    """Test that coarse grids are refused"""
    with pytest.raises(MeshError):
        bake_sdf(sphere, resolution=4)


def test_object_sdf_is_cached_on_disk(tmp_path, sphere, monkeypatch):
    """Test that an object SDF is written once under its mesh digest and read back instead of rebaked"""
    monkeypatch.setattr(sdf_module, "_BAKED", {})
    grid = object_sdf(sphere, cache_dir=tmp_path, resolution=16)
    files = list(tmp_path.glob("object-*-16.sdf"))
    assert len(files) == 1
    assert mesh_digest(sphere)[:16] in files[0].name

    def refuse(*args, **kwargs):
        raise AssertionError("object SDF baked twice")

    monkeypatch.setattr(sdf_module, "_BAKED", {})
    monkeypatch.setattr(sdf_module, "bake_sdf", refuse)
    again = object_sdf(sphere, cache_dir=tmp_path, resolution=16)
    np.testing.assert_allclose(again.values, grid.values, atol=1e-6)
    assert object_sdf(sphere, resolution=16) is again


def test_mesh_digest_follows_content(unit_cube):
    """Test that the SDF cache key changes with the vertices and not with the name"""
    renamed = TriMesh(unit_cube.vertices, unit_cube.faces, name="other")
    moved = unit_cube.transformed(translation=np.array([0.0, 0.0, 0.1]))
    assert mesh_digest(renamed) == mesh_digest(unit_cube)
    assert mesh_digest(moved) != mesh_digest(unit_cube)
