import numpy as np
import pytest

from cloudsketch import Pose, TriangleBvh, TriangleMesh
from cloudsketch.errors import EmptyMesh
from conftest import make_pose


def test_box_builder_basic():
    mesh = TriangleMesh.box((1.0, 2.0, 3.0), center=(0.5, 0.0, -1.0))
    assert len(mesh) == 12
    assert len(mesh.vertices) == 8
    assert mesh.areas().sum() == pytest.approx(2 * (1 * 2 + 2 * 3 + 1 * 3))
    assert np.allclose(mesh.vertices.mean(axis=0), [0.5, 0.0, -1.0])


def test_box_triangles_face_outward():
    mesh = TriangleMesh.box((2.0, 2.0, 2.0))
    tv = mesh.triangle_vertices()
    normals = np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0])
    centers = tv.mean(axis=1)
    assert (np.sum(normals * centers, axis=1) > 0).all()


def test_quad_builder():
    mesh = TriangleMesh.quad((2.0, 3.0), center=(0, 0, 0.5))
    assert len(mesh) == 2
    assert mesh.areas().sum() == pytest.approx(6.0)
    assert np.allclose(mesh.vertices[:, 2], 0.5)


def test_index_range_validation():
    with pytest.raises(ValueError):
        TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 3]]))
    with pytest.raises(ValueError):
        TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, -1]]))


def test_drop_degenerate():
    vertices = np.array([[0, 0, 0], [1, 0, 0], [0, 1, 0], [2, 0, 0]], dtype=float)
    triangles = np.array([[0, 1, 2], [0, 1, 3]])  # second is collinear
    mesh = TriangleMesh(vertices, triangles).drop_degenerate()
    assert len(mesh) == 1
    assert np.array_equal(mesh.triangles[0], [0, 1, 2])


def test_transformed_moves_vertices(rng):
    mesh = TriangleMesh.box()
    pose = make_pose(rng)
    moved = mesh.transformed(pose)
    assert np.allclose(moved.vertices, pose.apply(mesh.vertices))
    assert np.array_equal(moved.triangles, mesh.triangles)


def test_bvh_rejects_empty():
    mesh = TriangleMesh(np.zeros((3, 3)), np.empty((0, 3), dtype=np.int64))
    with pytest.raises(EmptyMesh):
        TriangleBvh(mesh)


def test_bvh_structure_invariants(rng):
    nt = 500
    base = rng.uniform(-1, 1, size=(nt, 3))
    tris = base[:, None, :] + rng.normal(scale=0.1, size=(nt, 3, 3))
    mesh = TriangleMesh(tris.reshape(-1, 3), np.arange(nt * 3).reshape(-1, 3))
    bvh = TriangleBvh(mesh)

    assert sorted(bvh.tri_order.tolist()) == list(range(nt))
    leaves = np.nonzero(bvh.node_count > 0)[0]
    covered = []
    for node in leaves:
        start, count = int(bvh.node_start[node]), int(bvh.node_count[node])
        covered.extend(range(start, start + count))
    assert sorted(covered) == list(range(nt))

    # children fit inside their parent's bounds; leaf boxes contain their triangles
    for node in range(len(bvh.node_min)):
        left, right = int(bvh.node_left[node]), int(bvh.node_right[node])
        if left >= 0:
            for child in (left, right):
                assert (bvh.node_min[child] >= bvh.node_min[node] - 1e-12).all()
                assert (bvh.node_max[child] <= bvh.node_max[node] + 1e-12).all()
        else:
            start, count = int(bvh.node_start[node]), int(bvh.node_count[node])
            tri = bvh.tri_order[start:start + count]
            tv = mesh.triangle_vertices()[tri]
            assert (tv.min(axis=(0, 1)) >= bvh.node_min[node] - 1e-12).all()
            assert (tv.max(axis=(0, 1)) <= bvh.node_max[node] + 1e-12).all()


def test_bvh_arrays_match_kernel_layout():
    bvh = TriangleBvh(TriangleMesh.box())
    assert bvh.node_min.dtype == np.float64 and bvh.node_min.flags.c_contiguous
    assert bvh.node_left.dtype == np.int32
    assert bvh.tri_order.dtype == np.int32
    for arr in (bvh.v0, bvh.v1, bvh.v2):
        assert arr.dtype == np.float64 and arr.flags.c_contiguous
