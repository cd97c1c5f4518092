"""Point cloud container: positions, colors, and stable point ids.

The cloud is stored column-oriented (ids, positions, colors) and is
immutable after construction, so snapshots can be shared freely between
the edit session, spatial indices, and concurrent readers.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

import numpy as np

WHITE = (255, 255, 255)


@dataclass(frozen=True)
class Point:
    """A single cloud point: stable id, world position (m), RGB color."""

    id: int
    position: np.ndarray
    color: tuple[int, int, int]


def _as_readonly(array: np.ndarray) -> np.ndarray:
    array = np.ascontiguousarray(array)
    array.flags.writeable = False
    return array


class PointCloud:
    """Ordered, immutable collection of points with unique 64-bit ids.

    Iteration order is storage order (insertion order). All editing
    operations produce new clouds; ids survive edits unchanged, which is
    what makes preview diffs and undo representable as id sets.
    """

    __slots__ = ("ids", "positions", "colors")

    def __init__(self, ids, positions, colors=None):
        ids = np.asarray(ids, dtype=np.int64)
        positions = np.asarray(positions, dtype=np.float64)
        if positions.size == 0:
            positions = positions.reshape(0, 3)
        if colors is None:
            colors = np.full((len(ids), 3), 255, dtype=np.uint8)
        colors = np.asarray(colors, dtype=np.uint8)
        if colors.size == 0:
            colors = colors.reshape(0, 3)

        if ids.ndim != 1:
            raise ValueError("ids must be a 1-D array")
        if positions.shape != (len(ids), 3):
            raise ValueError(
                f"positions shape {positions.shape} does not match {len(ids)} ids"
            )
        if colors.shape != (len(ids), 3):
            raise ValueError(
                f"colors shape {colors.shape} does not match {len(ids)} ids"
            )
        if not np.all(np.isfinite(positions)):
            raise ValueError("positions must be finite")
        if len(np.unique(ids)) != len(ids):
            raise ValueError("point ids must be unique")

        object.__setattr__(self, "ids", _as_readonly(ids))
        object.__setattr__(self, "positions", _as_readonly(positions))
        object.__setattr__(self, "colors", _as_readonly(colors))

    def __setattr__(self, name, value):
        raise AttributeError("PointCloud is immutable")

    @staticmethod
    def empty() -> "PointCloud":
        return PointCloud(np.empty(0, np.int64), np.empty((0, 3)), np.empty((0, 3), np.uint8))

    @staticmethod
    def from_positions(positions, colors=None, start_id: int = 0) -> "PointCloud":
        """Build a cloud with sequential ids starting at ``start_id``."""
        positions = np.asarray(positions, dtype=np.float64).reshape(-1, 3)
        ids = np.arange(start_id, start_id + len(positions), dtype=np.int64)
        return PointCloud(ids, positions, colors)

    @staticmethod
    def from_points(points: Iterable[Point]) -> "PointCloud":
        points = list(points)
        ids = np.array([p.id for p in points], dtype=np.int64)
        positions = np.array([p.position for p in points], dtype=np.float64).reshape(-1, 3)
        colors = np.array([p.color for p in points], dtype=np.uint8).reshape(-1, 3)
        return PointCloud(ids, positions, colors)

    def __len__(self) -> int:
        return len(self.ids)

    def __iter__(self) -> Iterator[Point]:
        for i in range(len(self.ids)):
            yield Point(int(self.ids[i]), self.positions[i], tuple(int(c) for c in self.colors[i]))

    def __eq__(self, other) -> bool:
        if not isinstance(other, PointCloud):
            return NotImplemented
        return (
            np.array_equal(self.ids, other.ids)
            and np.array_equal(self.positions, other.positions)
            and np.array_equal(self.colors, other.colors)
        )

    def __repr__(self) -> str:
        return f"PointCloud({len(self)} points)"

    def max_id(self) -> int:
        """Largest id in the cloud, or -1 when empty."""
        return int(self.ids.max()) if len(self.ids) else -1

    def select(self, mask: np.ndarray) -> "PointCloud":
        """Subset by boolean mask or integer row indices, order preserved."""
        return PointCloud(self.ids[mask], self.positions[mask], self.colors[mask])

    def remove_ids(self, ids: Sequence[int] | np.ndarray) -> "PointCloud":
        keep = ~np.isin(self.ids, np.asarray(ids, dtype=np.int64))
        return self.select(keep)

    def rows_for_ids(self, ids) -> np.ndarray:
        """Row indices for the given ids, in the order requested.

        Raises KeyError when an id is not present.
        """
        ids = np.asarray(ids, dtype=np.int64)
        if len(self.ids) == 0:
            if len(ids) == 0:
                return np.empty(0, dtype=np.intp)
            raise KeyError(f"unknown point id(s): {ids[:5].tolist()}")
        order = np.argsort(self.ids, kind="stable")
        sorted_ids = self.ids[order]
        pos = np.searchsorted(sorted_ids, ids)
        clipped = np.minimum(pos, len(sorted_ids) - 1)
        bad = (pos >= len(sorted_ids)) | (sorted_ids[clipped] != ids)
        if np.any(bad):
            raise KeyError(f"unknown point id(s): {ids[bad][:5].tolist()}")
        return order[pos]

    def with_colors(self, colors: np.ndarray) -> "PointCloud":
        return PointCloud(self.ids, self.positions, colors)


def concat(clouds: Sequence[PointCloud]) -> PointCloud:
    """Concatenate clouds in order; ids must stay globally unique."""
    if not clouds:
        return PointCloud.empty()
    return PointCloud(
        np.concatenate([c.ids for c in clouds]),
        np.concatenate([c.positions for c in clouds]),
        np.concatenate([c.colors for c in clouds]),
    )
