"""Neighbor queries and selection-volume membership over point clouds.

A SpatialIndex is an immutable snapshot of a cloud; edits never mutate
an existing index, callers rebuild instead. All queries return results
identical to a brute-force scan of the snapshot.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import cKDTree

from .cloud import PointCloud
from .errors import EmptyCloud, TooFewPoints
from .geometry import Aabb, Cone, OrientedBox

DEFAULT_NEIGHBOR_COUNT = 20


class SpatialIndex:
    """k-d tree over a cloud snapshot for knn and radius queries."""

    def __init__(self, cloud: PointCloud):
        if len(cloud) == 0:
            raise EmptyCloud("cannot index an empty cloud")
        self.cloud = cloud
        self._tree = cKDTree(cloud.positions)

    def __len__(self) -> int:
        return len(self.cloud)

    def knn(self, point_id: int, k: int):
        """Ids and distances of the k nearest other points, nearest first."""
        if k < 1:
            raise ValueError("k must be >= 1")
        if len(self.cloud) <= k:
            raise TooFewPoints(f"knn(k={k}) needs more than {k} points, have {len(self.cloud)}")
        row = self.cloud.rows_for_ids([point_id])[0]
        dists, rows = self._tree.query(self.cloud.positions[row], k=k + 1)
        # The query point itself comes back at distance 0; drop one such
        # entry (with coincident points the distance multiset is unchanged).
        drop = int(np.argmin(dists))
        keep = np.delete(np.arange(k + 1), drop)
        return self.cloud.ids[rows[keep]], dists[keep]

    def knn_mean_distance(self, point_id: int, k: int = DEFAULT_NEIGHBOR_COUNT) -> float:
        """Mean Euclidean distance from a point to its k nearest neighbors."""
        _, dists = self.knn(point_id, k)
        return float(np.mean(dists))

    def mean_knn_distances(self, k: int = DEFAULT_NEIGHBOR_COUNT) -> np.ndarray:
        """knn_mean_distance for every point at once (cloud order)."""
        if len(self.cloud) <= k:
            raise TooFewPoints(f"knn(k={k}) needs more than {k} points, have {len(self.cloud)}")
        dists, _ = self._tree.query(self.cloud.positions, k=k + 1)
        # Column 0 is the self-match at distance 0 (ties with coincident
        # points keep the multiset identical), so average columns 1..k.
        return dists[:, 1:].mean(axis=1)

    def radius_neighbors(self, center, radius: float) -> np.ndarray:
        """Ids of all points within ``radius`` of ``center`` (inclusive)."""
        rows = self._tree.query_ball_point(np.asarray(center, dtype=np.float64), radius)
        return self.cloud.ids[np.asarray(sorted(rows), dtype=np.intp)]


def points_in_aabb(cloud: PointCloud, box: Aabb) -> np.ndarray:
    """Ids of points inside an axis-aligned box, boundaries included."""
    return cloud.ids[box.contains(cloud.positions)]


def points_in_oriented_box(cloud: PointCloud, box: OrientedBox) -> np.ndarray:
    """Ids of points inside an oriented box, boundaries included."""
    return cloud.ids[box.contains(cloud.positions)]


def points_in_cone(cloud: PointCloud, cone: Cone) -> np.ndarray:
    """Ids of points inside a cone, boundaries included."""
    return cloud.ids[cone.contains(cloud.positions)]
