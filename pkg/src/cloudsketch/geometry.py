"""Rigid transforms and selection volumes.

Rotations are 3x3 orthonormal matrices with det +1; quaternions use
(w, x, y, z) order throughout the package and its file formats.
"""
from __future__ import annotations

import numpy as np

from .cloud import PointCloud
from .errors import InvalidRotation

ROTATION_TOL = 1e-9
UNIT_TOL = 1e-9


def quat_to_matrix(q) -> np.ndarray:
    """Rotation matrix for a (w, x, y, z) quaternion (normalized first)."""
    q = np.asarray(q, dtype=np.float64)
    norm = np.linalg.norm(q)
    if norm == 0.0 or not np.all(np.isfinite(q)):
        raise InvalidRotation(f"quaternion {q.tolist()} has no direction")
    w, x, y, z = q / norm
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def matrix_to_quat(rotation: np.ndarray) -> np.ndarray:
    """Unit (w, x, y, z) quaternion for a rotation matrix, w >= 0."""
    m = np.asarray(rotation, dtype=np.float64)
    t = np.trace(m)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] >= m[1, 1] and m[0, 0] >= m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] >= m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    if q[0] < 0:
        q = -q
    return q / np.linalg.norm(q)


def rotation_angle(rotation: np.ndarray) -> float:
    """Geodesic angle of a rotation matrix, radians in [0, pi]."""
    c = (np.trace(rotation) - 1.0) / 2.0
    return float(np.arccos(np.clip(c, -1.0, 1.0)))


class Pose:
    """Rigid transform: world point = rotation @ local point + translation."""

    __slots__ = ("rotation", "translation")

    def __init__(self, rotation, translation):
        rotation = np.ascontiguousarray(rotation, dtype=np.float64)
        translation = np.ascontiguousarray(translation, dtype=np.float64).reshape(3)
        if rotation.shape != (3, 3):
            raise InvalidRotation(f"rotation must be 3x3, got {rotation.shape}")
        if not np.all(np.isfinite(rotation)) or not np.all(np.isfinite(translation)):
            raise InvalidRotation("pose must be finite")
        if np.max(np.abs(rotation @ rotation.T - np.eye(3))) > ROTATION_TOL:
            raise InvalidRotation("rotation is not orthonormal")
        if abs(np.linalg.det(rotation) - 1.0) > ROTATION_TOL:
            raise InvalidRotation("rotation determinant is not +1")
        rotation.flags.writeable = False
        translation.flags.writeable = False
        object.__setattr__(self, "rotation", rotation)
        object.__setattr__(self, "translation", translation)

    def __setattr__(self, name, value):
        raise AttributeError("Pose is immutable")

    @staticmethod
    def identity() -> "Pose":
        return Pose(np.eye(3), np.zeros(3))

    @staticmethod
    def from_quat(quat, translation=(0.0, 0.0, 0.0)) -> "Pose":
        return Pose(quat_to_matrix(quat), translation)

    @property
    def quaternion(self) -> np.ndarray:
        return matrix_to_quat(self.rotation)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform one (3,) point or an (N, 3) batch into world frame."""
        points = np.asarray(points, dtype=np.float64)
        return points @ self.rotation.T + self.translation

    def inverse(self) -> "Pose":
        rt = self.rotation.T
        return Pose(rt, -(rt @ self.translation))

    def compose(self, other: "Pose") -> "Pose":
        """self of other: applies ``other`` first, then ``self``."""
        return Pose(self.rotation @ other.rotation, self.rotation @ other.translation + self.translation)

    def rotation_angle_to(self, other: "Pose") -> float:
        """Geodesic angle between the two rotations, radians."""
        return rotation_angle(self.rotation.T @ other.rotation)

    def __eq__(self, other) -> bool:
        if not isinstance(other, Pose):
            return NotImplemented
        return np.array_equal(self.rotation, other.rotation) and np.array_equal(
            self.translation, other.translation
        )

    def __repr__(self) -> str:
        q = np.round(self.quaternion, 6)
        t = np.round(self.translation, 6)
        return f"Pose(q={q.tolist()}, t={t.tolist()})"


class Aabb:
    """Axis-aligned box; membership is boundary-inclusive."""

    __slots__ = ("min", "max")

    def __init__(self, min_corner, max_corner):
        lo = np.ascontiguousarray(min_corner, dtype=np.float64).reshape(3)
        hi = np.ascontiguousarray(max_corner, dtype=np.float64).reshape(3)
        if np.any(lo > hi):
            raise ValueError(f"Aabb min {lo.tolist()} exceeds max {hi.tolist()}")
        lo.flags.writeable = False
        hi.flags.writeable = False
        object.__setattr__(self, "min", lo)
        object.__setattr__(self, "max", hi)

    def __setattr__(self, name, value):
        raise AttributeError("Aabb is immutable")

    @staticmethod
    def around(positions: np.ndarray, margin: float = 0.0) -> "Aabb":
        """Tight bounding box of the positions, optionally padded."""
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        if len(positions) == 0:
            raise ValueError("cannot bound zero positions")
        return Aabb(positions.min(axis=0) - margin, positions.max(axis=0) + margin)

    def contains(self, positions: np.ndarray) -> np.ndarray:
        positions = np.asarray(positions, dtype=np.float64)
        return np.all((positions >= self.min) & (positions <= self.max), axis=-1)

    def __repr__(self) -> str:
        return f"Aabb({self.min.tolist()}, {self.max.tolist()})"


class OrientedBox:
    """Box given by a center pose and half extents; boundary-inclusive."""

    __slots__ = ("pose", "half_extents")

    def __init__(self, pose: Pose, half_extents):
        half = np.ascontiguousarray(half_extents, dtype=np.float64).reshape(3)
        if np.any(half <= 0):
            raise ValueError(f"half_extents must be positive, got {half.tolist()}")
        half.flags.writeable = False
        object.__setattr__(self, "pose", pose)
        object.__setattr__(self, "half_extents", half)

    def __setattr__(self, name, value):
        raise AttributeError("OrientedBox is immutable")

    def contains(self, positions: np.ndarray) -> np.ndarray:
        local = self.pose.inverse().apply(positions)
        return np.all(np.abs(local) <= self.half_extents, axis=-1)


class Cone:
    """Cone with apex, unit axis, height and base radius; membership is
    boundary-inclusive and the apex itself is inside (radius 0 at t=0)."""

    __slots__ = ("apex", "axis", "height", "base_radius")

    def __init__(self, apex, axis, height: float, base_radius: float):
        apex = np.ascontiguousarray(apex, dtype=np.float64).reshape(3)
        axis = np.ascontiguousarray(axis, dtype=np.float64).reshape(3)
        if abs(np.linalg.norm(axis) - 1.0) > UNIT_TOL:
            raise ValueError("cone axis must be a unit vector")
        if height <= 0 or base_radius <= 0:
            raise ValueError("cone height and base_radius must be positive")
        apex.flags.writeable = False
        axis.flags.writeable = False
        object.__setattr__(self, "apex", apex)
        object.__setattr__(self, "axis", axis)
        object.__setattr__(self, "height", float(height))
        object.__setattr__(self, "base_radius", float(base_radius))

    def __setattr__(self, name, value):
        raise AttributeError("Cone is immutable")

    def contains(self, positions: np.ndarray) -> np.ndarray:
        positions = np.asarray(positions, dtype=np.float64)
        single = positions.ndim == 1
        rel = np.atleast_2d(positions) - self.apex
        t = rel @ self.axis
        radial = np.linalg.norm(rel - t[:, None] * self.axis, axis=1)
        inside = (t >= 0.0) & (t <= self.height) & (radial <= self.base_radius * t / self.height)
        return inside[0] if single else inside


def transform_cloud(cloud: PointCloud, pose: Pose) -> PointCloud:
    """Apply a rigid transform to every position; ids and colors unchanged."""
    return PointCloud(cloud.ids, pose.apply(cloud.positions), cloud.colors)
