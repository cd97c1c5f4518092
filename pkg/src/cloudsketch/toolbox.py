"""Point-cloud editing tools with preview/commit/undo session semantics.

Every tool computes a pending edit (points added, point ids removed) against
the committed cloud without mutating it; commit applies the edit and pushes
the previous state onto a bounded history stack. Point ids are never reused,
even across discard and undo.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import cloud as cloud_mod
from .cloud import PointCloud
from .errors import (
    CloudSketchError,
    EmptyCloud,
    EmptyStroke,
    InvalidParams,
    NoPendingEdit,
    NoPlaneFound,
    NotAxisAligned,
    NothingToUndo,
    ScriptError,
    TooFewPoints,
    UnknownTool,
)
from .geometry import Aabb, Cone, OrientedBox, Pose
from .spatial import (
    DEFAULT_NEIGHBOR_COUNT,
    SpatialIndex,
    points_in_cone,
    points_in_oriented_box,
)

# strength tables; the enums name these values everywhere else
OUTLIER_STD_RATIO = {"weak": 3.0, "medium": 2.0, "strong": 1.0}
VOXEL_SIZE = {"weak": 0.01, "medium": 0.02, "strong": 0.04}  # meters
SPONGE_HALF_EXTENTS = {
    "small": (0.05, 0.035, 0.01),
    "medium": (0.10, 0.07, 0.02),
    "big": (0.15, 0.105, 0.04),
}  # meters; phone-like aspect, w > h > t
SPRAY_RADIUS = {"small": 0.05, "medium": 0.10, "big": 0.20}  # meters at full depth
SPRAY_DEPTH = {"shallow": 0.5, "medium": 1.0, "deep": 2.0}  # meters

DEFAULT_SAMPLE_SPACING = 0.0087  # meters; matches capture resolution at 1 m
HISTORY_CAP = 32

PLANE_RANSAC_ITERATIONS = 200
PLANE_INLIER_THRESHOLD = 0.01  # meters
PLANE_MIN_INLIER_RATIO = 0.5
PLANE_AXIS_TOLERANCE_DEG = 15.0


@dataclass(frozen=True)
class PrimitiveSpec:
    """A rectangular prism to sample onto the cloud.

    pose places the prism center; z is the support-surface normal.
    """

    pose: Pose
    dimensions: tuple
    sample_spacing: float = DEFAULT_SAMPLE_SPACING
    color: tuple = (255, 255, 255)

    def __post_init__(self):
        dims = tuple(float(d) for d in self.dimensions)
        if len(dims) != 3 or any(d <= 0 for d in dims):
            raise ValueError("dimensions must be 3 positive lengths")
        object.__setattr__(self, "dimensions", dims)
        if self.sample_spacing <= 0:
            raise ValueError("sample_spacing must be positive")


@dataclass(frozen=True)
class SprayStroke:
    """One spray sample: a ray from the device through the touched point."""

    origin: np.ndarray
    direction: np.ndarray
    size: str = "medium"
    depth: str = "medium"

    def __post_init__(self):
        origin = np.asarray(self.origin, dtype=np.float64).reshape(3)
        direction = np.asarray(self.direction, dtype=np.float64).reshape(3)
        norm = np.linalg.norm(direction)
        if not np.isfinite(norm) or norm == 0.0:
            raise ValueError("spray direction must be a nonzero vector")
        if self.size not in SPRAY_RADIUS:
            raise ValueError("size must be one of %s" % sorted(SPRAY_RADIUS))
        if self.depth not in SPRAY_DEPTH:
            raise ValueError("depth must be one of %s" % sorted(SPRAY_DEPTH))
        object.__setattr__(self, "origin", origin)
        object.__setattr__(self, "direction", direction / norm)

    def cone(self) -> Cone:
        return Cone(
            apex=self.origin,
            axis=self.direction,
            height=SPRAY_DEPTH[self.depth],
            base_radius=SPRAY_RADIUS[self.size],
        )


@dataclass(frozen=True)
class PendingEdit:
    """An uncommitted diff: new points plus ids to delete."""

    tool: str
    params: dict
    added: PointCloud
    removed_ids: np.ndarray  # sorted int64

    @property
    def added_count(self) -> int:
        return len(self.added)

    @property
    def removed_count(self) -> int:
        return len(self.removed_ids)


def sample_primitive(spec: PrimitiveSpec) -> np.ndarray:
    """Boundary-inclusive grid samples of all 6 prism faces, deduplicated.

    Per-axis grid count is ceil(edge/spacing) + 1; shared edges coincide
    exactly, so duplicate removal compares exact positions. Returned in
    lexicographic order, already transformed by spec.pose.
    """
    half = np.array(spec.dimensions) / 2.0
    axes = [
        np.linspace(-half[a], half[a], math.ceil(spec.dimensions[a] / spec.sample_spacing) + 1)
        for a in range(3)
    ]
    faces = []
    for a in range(3):
        b, c = (a + 1) % 3, (a + 2) % 3
        bb, cc = np.meshgrid(axes[b], axes[c], indexing="ij")
        face = np.empty((bb.size, 3))
        face[:, b] = bb.ravel()
        face[:, c] = cc.ravel()
        for sign in (-1.0, 1.0):
            face[:, a] = sign * half[a]
            faces.append(face.copy())
    local = np.unique(np.vstack(faces), axis=0)
    return spec.pose.apply(local)


def voxel_centroids(cloud: PointCloud, voxel: float):
    """Group points by voxel key floor(p/voxel); return centroid positions
    and mean colors, ordered by key.
    """
    keys = np.floor(cloud.positions / voxel).astype(np.int64)
    uniq, inverse = np.unique(keys, axis=0, return_inverse=True)
    counts = np.bincount(inverse, minlength=len(uniq)).astype(np.float64)
    pos_sum = np.zeros((len(uniq), 3))
    np.add.at(pos_sum, inverse, cloud.positions)
    col_sum = np.zeros((len(uniq), 3))
    np.add.at(col_sum, inverse, cloud.colors.astype(np.float64))
    centroids = pos_sum / counts[:, None]
    colors = np.rint(col_sum / counts[:, None]).astype(np.uint8)
    return centroids, colors


def fit_support_plane(cloud: PointCloud, seed_point, radius: float, seed: int = 0):
    """Fit an axis-aligned support plane near seed_point.

    RANSAC over the ball neighborhood (fixed iteration count and inlier
    threshold), least-squares refinement over the winning inliers, then an
    orientation gate: the normal must lie within 15 degrees of vertical
    (floor/table) or horizontal (wall). Returns (plane point, unit normal).
    """
    seed_point = np.asarray(seed_point, dtype=np.float64).reshape(3)
    positions = cloud.positions
    near = np.linalg.norm(positions - seed_point, axis=1) <= radius
    pts = positions[near]
    if len(pts) < 3:
        raise TooFewPoints("plane fit needs >= 3 points within the radius, got %d" % len(pts))

    rng = np.random.default_rng(seed)
    best_count = 0
    best_mask = None
    for _ in range(PLANE_RANSAC_ITERATIONS):
        i, j, k = rng.choice(len(pts), size=3, replace=False)
        normal = np.cross(pts[j] - pts[i], pts[k] - pts[i])
        norm = np.linalg.norm(normal)
        if norm < 1e-12:
            continue
        dist = np.abs((pts - pts[i]) @ (normal / norm))
        mask = dist <= PLANE_INLIER_THRESHOLD
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
    if best_mask is None or best_count / len(pts) < PLANE_MIN_INLIER_RATIO:
        raise NoPlaneFound(
            "best inlier ratio %.3f below %.2f"
            % (best_count / len(pts), PLANE_MIN_INLIER_RATIO)
        )

    inliers = pts[best_mask]
    centroid = inliers.mean(axis=0)
    _, _, vt = np.linalg.svd(inliers - centroid, full_matrices=False)
    normal = vt[2]
    # canonical sign, then face the query side when it is off the plane
    lead = int(np.argmax(np.abs(normal)))
    if normal[lead] < 0:
        normal = -normal
    side = float((seed_point - centroid) @ normal)
    if side < -1e-9:
        normal = -normal

    tilt = abs(normal[2])
    vertical_ok = tilt >= math.cos(math.radians(PLANE_AXIS_TOLERANCE_DEG))
    horizontal_ok = tilt <= math.sin(math.radians(PLANE_AXIS_TOLERANCE_DEG))
    if not (vertical_ok or horizontal_ok):
        raise NotAxisAligned(
            "plane normal tilted %.1f degrees from vertical"
            % math.degrees(math.acos(min(1.0, tilt)))
        )
    return centroid, normal


class EditSession:
    """Single-writer editing session over one point cloud."""

    def __init__(self, cloud: PointCloud, history_cap: int = HISTORY_CAP):
        if history_cap < 1:
            raise ValueError("history_cap must be at least 1")
        self.committed = cloud
        self.pending = None
        self.history = []
        self.history_cap = history_cap
        self._next_id = cloud.max_id() + 1

    # -- previews ---------------------------------------------------------

    def _claim_ids(self, count: int) -> np.ndarray:
        ids = np.arange(self._next_id, self._next_id + count, dtype=np.int64)
        self._next_id += count
        return ids

    def _set_pending(self, tool, params, added, removed_ids) -> PendingEdit:
        removed_ids = np.sort(np.asarray(removed_ids, dtype=np.int64))
        self.pending = PendingEdit(tool, params, added, removed_ids)
        return self.pending

    def crop(self, box: Aabb) -> PendingEdit:
        """Preview removal of every point outside the box."""
        inside = box.contains(self.committed.positions)
        removed = self.committed.ids[~inside]
        params = {"min": list(map(float, box.min)), "max": list(map(float, box.max))}
        return self._set_pending("crop", params, PointCloud.empty(), removed)

    def remove_outliers(self, strength: str) -> PendingEdit:
        """Preview statistical outlier removal at the given strength.

        A point is an outlier when its mean distance to the k nearest
        neighbors exceeds the cloud-wide mean by ratio(strength) standard
        deviations.
        """
        ratio = _table_get(OUTLIER_STD_RATIO, strength, "strength")
        k = DEFAULT_NEIGHBOR_COUNT
        if len(self.committed) <= k + 1:
            raise TooFewPoints(
                "outlier removal needs more than %d points, got %d"
                % (k + 1, len(self.committed))
            )
        index = SpatialIndex(self.committed)
        means = index.mean_knn_distances(k)
        threshold = means.mean() + ratio * means.std()
        removed = self.committed.ids[means > threshold]
        return self._set_pending(
            "remove_outliers", {"strength": strength}, PointCloud.empty(), removed
        )

    def downsample(self, strength: str) -> PendingEdit:
        """Preview voxel downsampling: originals out, voxel centroids in."""
        voxel = _table_get(VOXEL_SIZE, strength, "strength")
        if len(self.committed) == 0:
            raise EmptyCloud("cannot downsample an empty cloud")
        centroids, colors = voxel_centroids(self.committed, voxel)
        added = PointCloud(self._claim_ids(len(centroids)), centroids, colors)
        return self._set_pending(
            "downsample", {"strength": strength}, added, self.committed.ids
        )

    def create_primitive(self, spec: PrimitiveSpec) -> PendingEdit:
        """Preview adding surface samples of a rectangular prism."""
        positions = sample_primitive(spec)
        colors = np.tile(np.asarray(spec.color, dtype=np.uint8), (len(positions), 1))
        added = PointCloud(self._claim_ids(len(positions)), positions, colors)
        params = {
            "pose": _pose_params(spec.pose),
            "dimensions": list(spec.dimensions),
            "sample_spacing": spec.sample_spacing,
            "color": list(map(int, spec.color)),
        }
        return self._set_pending("create_primitive", params, added, np.empty(0, np.int64))

    def erase_sponge(self, stroke, size: str) -> PendingEdit:
        """Preview erasing by sweeping an oriented box along device poses."""
        half = _table_get(SPONGE_HALF_EXTENTS, size, "size")
        poses = list(stroke)
        if not poses:
            raise EmptyStroke("sponge stroke has no poses")
        removed = [
            points_in_oriented_box(self.committed, OrientedBox(pose, half))
            for pose in poses
        ]
        params = {"stroke": [_pose_params(p) for p in poses], "size": size}
        return self._set_pending(
            "erase_sponge", params, PointCloud.empty(), _union_ids(removed)
        )

    def erase_spray(self, stroke) -> PendingEdit:
        """Preview erasing with inverted cones along spray rays."""
        strokes = list(stroke)
        if not strokes:
            raise EmptyStroke("spray stroke has no samples")
        removed = [points_in_cone(self.committed, s.cone()) for s in strokes]
        params = {
            "stroke": [
                {
                    "origin": list(map(float, s.origin)),
                    "dir": list(map(float, s.direction)),
                    "size": s.size,
                    "depth": s.depth,
                }
                for s in strokes
            ]
        }
        return self._set_pending(
            "erase_spray", params, PointCloud.empty(), _union_ids(removed)
        )

    # -- session algebra ---------------------------------------------------

    def preview_cloud(self) -> PointCloud:
        """Committed state with the pending edit applied (committed if none)."""
        if self.pending is None:
            return self.committed
        survivors = self.committed.remove_ids(self.pending.removed_ids)
        return cloud_mod.concat([survivors, self.pending.added])

    def commit(self) -> PointCloud:
        if self.pending is None:
            raise NoPendingEdit("commit requires a pending edit")
        result = self.preview_cloud()
        self.history.append(self.committed)
        if len(self.history) > self.history_cap:
            self.history.pop(0)
        self.committed = result
        self.pending = None
        return result

    def discard(self) -> None:
        if self.pending is None:
            raise NoPendingEdit("discard requires a pending edit")
        self.pending = None

    def undo(self) -> PointCloud:
        if not self.history:
            raise NothingToUndo("history is empty")
        self.committed = self.history.pop()
        self.pending = None
        return self.committed


def _union_ids(id_arrays) -> np.ndarray:
    if not id_arrays:
        return np.empty(0, dtype=np.int64)
    return np.unique(np.concatenate(id_arrays))


def _table_get(table, key, what):
    if key not in table:
        raise InvalidParams("%s must be one of %s, got %r" % (what, sorted(table), key))
    return table[key]


def _pose_params(pose: Pose) -> dict:
    return {
        "translation": list(map(float, pose.translation)),
        "quaternion": list(map(float, pose.quaternion)),
    }


# -- script records --------------------------------------------------------


@dataclass(frozen=True)
class ToolInvocation:
    """One recorded tool call: the tool name plus its raw parameters."""

    tool: str
    params: dict


def _want(params, key, kind):
    if key not in params:
        raise InvalidParams("missing field %r" % key)
    value = params[key]
    if kind == "vec3":
        if not (isinstance(value, (list, tuple)) and len(value) == 3
                and all(isinstance(v, (int, float)) for v in value)):
            raise InvalidParams("field %r must be a 3-vector" % key)
    elif kind == "quat":
        if not (isinstance(value, (list, tuple)) and len(value) == 4
                and all(isinstance(v, (int, float)) for v in value)):
            raise InvalidParams("field %r must be a wxyz quaternion" % key)
    elif isinstance(kind, dict):
        if value not in kind:
            raise InvalidParams(
                "field %r must be one of %s, got %r" % (key, sorted(kind), value)
            )
    return value


def _want_pose(raw):
    if not isinstance(raw, dict):
        raise InvalidParams("pose must be an object with translation/quaternion")
    _want(raw, "translation", "vec3")
    _want(raw, "quaternion", "quat")
    return Pose.from_quat(
        np.asarray(raw["quaternion"], dtype=np.float64),
        np.asarray(raw["translation"], dtype=np.float64),
    )


def _validate_crop(params):
    lo = np.asarray(_want(params, "min", "vec3"), dtype=np.float64)
    hi = np.asarray(_want(params, "max", "vec3"), dtype=np.float64)
    if np.any(lo > hi):
        raise InvalidParams("min must not exceed max on any axis")
    return {"box": Aabb(lo, hi)}


def _validate_strength(params):
    return {"strength": _want(params, "strength", OUTLIER_STD_RATIO)}


def _validate_primitive(params):
    pose = _want_pose(params.get("pose"))
    dims = _want(params, "dimensions", "vec3")
    spacing = params.get("sample_spacing", DEFAULT_SAMPLE_SPACING)
    if not isinstance(spacing, (int, float)) or spacing <= 0:
        raise InvalidParams("sample_spacing must be a positive number")
    color = params.get("color", [255, 255, 255])
    if not (isinstance(color, (list, tuple)) and len(color) == 3
            and all(isinstance(c, int) and 0 <= c <= 255 for c in color)):
        raise InvalidParams("color must be 3 integers in [0, 255]")
    try:
        spec = PrimitiveSpec(pose, tuple(dims), float(spacing), tuple(color))
    except ValueError as exc:
        raise InvalidParams(str(exc))
    return {"spec": spec}


def _validate_sponge(params):
    stroke = params.get("stroke")
    if not isinstance(stroke, list) or not stroke:
        raise InvalidParams("stroke must be a nonempty list of poses")
    poses = [_want_pose(raw) for raw in stroke]
    return {"stroke": poses, "size": _want(params, "size", SPONGE_HALF_EXTENTS)}


def _validate_spray(params):
    stroke = params.get("stroke")
    if not isinstance(stroke, list) or not stroke:
        raise InvalidParams("stroke must be a nonempty list of ray samples")
    samples = []
    for raw in stroke:
        if not isinstance(raw, dict):
            raise InvalidParams("each spray sample must be an object")
        origin = _want(raw, "origin", "vec3")
        direction = _want(raw, "dir", "vec3")
        size = _want(raw, "size", SPRAY_RADIUS)
        depth = _want(raw, "depth", SPRAY_DEPTH)
        try:
            samples.append(SprayStroke(origin, direction, size, depth))
        except ValueError as exc:
            raise InvalidParams(str(exc))
    return {"stroke": samples}


TOOL_SCHEMAS = {
    "crop": _validate_crop,
    "remove_outliers": _validate_strength,
    "downsample": _validate_strength,
    "create_primitive": _validate_primitive,
    "erase_sponge": _validate_sponge,
    "erase_spray": _validate_spray,
}


def validate_invocation(record: ToolInvocation) -> dict:
    """Check a record against its tool's schema; returns typed arguments."""
    if record.tool not in TOOL_SCHEMAS:
        raise UnknownTool("unknown tool %r" % record.tool)
    return TOOL_SCHEMAS[record.tool](record.params)


def invoke_tool(session: EditSession, record: ToolInvocation) -> PendingEdit:
    """Validate a record and run its tool as a preview on the session."""
    args = validate_invocation(record)
    method = getattr(session, record.tool)
    return method(**args)


def apply_script(session: EditSession, script) -> None:
    """Run each record as preview + immediate commit, transactionally.

    On failure the session stays at the last successful commit and the
    raised ScriptError carries the failing record's index.
    """
    for index, record in enumerate(script):
        try:
            invoke_tool(session, record)
            session.commit()
        except CloudSketchError as exc:
            session.pending = None
            raise ScriptError(index, exc) from exc
