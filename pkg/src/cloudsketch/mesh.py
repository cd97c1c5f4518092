"""Triangle meshes and a bounding-volume hierarchy for geometry queries.

The BVH answers two queries: distance to the closest triangle and
first-hit ray casting. Both are exact (identical to brute force over all
triangles); the hierarchy only accelerates.
"""
from __future__ import annotations

import numpy as np

from . import kernels
from .errors import EmptyMesh
from .geometry import Pose

MIN_TRIANGLE_AREA = 1e-12
DEFAULT_LEAF_SIZE = 8


class TriangleMesh:
    """Indexed triangle mesh: vertices in meters, faces as index triples."""

    __slots__ = ("vertices", "triangles")

    def __init__(self, vertices, triangles):
        vertices = np.ascontiguousarray(vertices, dtype=np.float64).reshape(-1, 3)
        triangles = np.ascontiguousarray(triangles, dtype=np.int64).reshape(-1, 3)
        if len(triangles) and (triangles.min() < 0 or triangles.max() >= len(vertices)):
            raise ValueError("triangle index out of range")
        vertices.flags.writeable = False
        triangles.flags.writeable = False
        object.__setattr__(self, "vertices", vertices)
        object.__setattr__(self, "triangles", triangles)

    def __setattr__(self, name, value):
        raise AttributeError("TriangleMesh is immutable")

    def __len__(self) -> int:
        return len(self.triangles)

    def triangle_vertices(self) -> np.ndarray:
        """Per-triangle vertex coordinates, shape (T, 3, 3)."""
        return self.vertices[self.triangles]

    def areas(self) -> np.ndarray:
        tv = self.triangle_vertices()
        cross = np.cross(tv[:, 1] - tv[:, 0], tv[:, 2] - tv[:, 0])
        return 0.5 * np.linalg.norm(cross, axis=1)

    def drop_degenerate(self, min_area: float = MIN_TRIANGLE_AREA) -> "TriangleMesh":
        """Remove triangles whose area does not exceed ``min_area``."""
        keep = self.areas() > min_area
        return TriangleMesh(self.vertices, self.triangles[keep])

    def transformed(self, pose: Pose) -> "TriangleMesh":
        return TriangleMesh(pose.apply(self.vertices), self.triangles)

    @staticmethod
    def box(size=(1.0, 1.0, 1.0), center=(0.0, 0.0, 0.0)) -> "TriangleMesh":
        """Axis-aligned box with outward-facing triangles."""
        size = np.asarray(size, dtype=np.float64)
        center = np.asarray(center, dtype=np.float64)
        h = size / 2.0
        corners = np.array(
            [
                [-1, -1, -1], [1, -1, -1], [1, 1, -1], [-1, 1, -1],
                [-1, -1, 1], [1, -1, 1], [1, 1, 1], [-1, 1, 1],
            ],
            dtype=np.float64,
        )
        vertices = corners * h + center
        faces = np.array(
            [
                [0, 2, 1], [0, 3, 2],  # bottom (-z)
                [4, 5, 6], [4, 6, 7],  # top (+z)
                [0, 1, 5], [0, 5, 4],  # -y
                [2, 3, 7], [2, 7, 6],  # +y
                [1, 2, 6], [1, 6, 5],  # +x
                [3, 0, 4], [3, 4, 7],  # -x
            ],
            dtype=np.int64,
        )
        return TriangleMesh(vertices, faces)

    @staticmethod
    def quad(size=(1.0, 1.0), center=(0.0, 0.0, 0.0)) -> "TriangleMesh":
        """Horizontal rectangle (normal +z), e.g. a floor patch."""
        sx, sy = float(size[0]) / 2.0, float(size[1]) / 2.0
        cx, cy, cz = (float(v) for v in center)
        vertices = np.array(
            [[cx - sx, cy - sy, cz], [cx + sx, cy - sy, cz],
             [cx + sx, cy + sy, cz], [cx - sx, cy + sy, cz]]
        )
        return TriangleMesh(vertices, np.array([[0, 1, 2], [0, 2, 3]], dtype=np.int64))


class TriangleBvh:
    """Median-split BVH over a mesh, stored as flat arrays for the kernels.

    Immutable once built; queries are pure and thread-safe.
    """

    def __init__(self, mesh: TriangleMesh, leaf_size: int = DEFAULT_LEAF_SIZE):
        if len(mesh) == 0:
            raise EmptyMesh("cannot build a BVH over zero triangles")
        self.mesh = mesh
        tv = mesh.triangle_vertices()
        self.v0 = np.ascontiguousarray(tv[:, 0])
        self.v1 = np.ascontiguousarray(tv[:, 1])
        self.v2 = np.ascontiguousarray(tv[:, 2])
        self._build(tv, leaf_size)

    def _build(self, tv: np.ndarray, leaf_size: int) -> None:
        n = len(tv)
        tri_min = tv.min(axis=1)
        tri_max = tv.max(axis=1)
        centroids = tv.mean(axis=1)
        order = np.arange(n, dtype=np.int32)

        node_min, node_max = [], []
        node_left, node_right = [], []
        node_start, node_count = [], []

        def new_node(lo, hi):
            node_min.append(lo)
            node_max.append(hi)
            node_left.append(-1)
            node_right.append(-1)
            node_start.append(0)
            node_count.append(0)
            return len(node_min) - 1

        def build(start: int, end: int) -> int:
            idx = order[start:end]
            node = new_node(tri_min[idx].min(axis=0), tri_max[idx].max(axis=0))
            if end - start <= leaf_size:
                node_start[node] = start
                node_count[node] = end - start
                return node
            cen = centroids[idx]
            axis = int(np.argmax(cen.max(axis=0) - cen.min(axis=0)))
            mid = (end - start) // 2
            part = np.argpartition(cen[:, axis], mid)
            order[start:end] = idx[part]
            node_left[node] = build(start, start + mid)
            node_right[node] = build(start + mid, end)
            return node

        build(0, n)
        self.tri_order = np.ascontiguousarray(order, dtype=np.int32)
        self.node_min = np.ascontiguousarray(np.array(node_min))
        self.node_max = np.ascontiguousarray(np.array(node_max))
        self.node_left = np.array(node_left, dtype=np.int32)
        self.node_right = np.array(node_right, dtype=np.int32)
        self.node_start = np.array(node_start, dtype=np.int32)
        self.node_count = np.array(node_count, dtype=np.int32)
        for arr in (self.v0, self.v1, self.v2, self.tri_order, self.node_min,
                    self.node_max, self.node_left, self.node_right,
                    self.node_start, self.node_count):
            arr.flags.writeable = False

    def closest_distances(self, queries: np.ndarray) -> np.ndarray:
        """Distance from each query point to the nearest triangle surface."""
        return np.sqrt(kernels.closest_squared_distances(self, queries))

    def raycast(self, origins: np.ndarray, dirs: np.ndarray, max_t: float = np.inf):
        """First triangle hit per ray.

        Returns (t, triangle_index); a miss is (inf, -1). ``t`` measures
        world distance when ``dirs`` are unit vectors.
        """
        return kernels.raycast(self, origins, dirs, max_t)
