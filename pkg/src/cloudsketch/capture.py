"""Simulated depth capture: grid ray casting of a mesh scene along a trajectory.

A frame casts one ray per grid cell (row-major pixel centers). Hits within
range then pass a per-material noise stage whose random draws follow a fixed
per-pixel protocol, so a scan is bit-reproducible from the scene seed:

    for each hit pixel in row-major order:
        u ~ uniform(0,1); dropped if u < dropout_prob
        if kept: depth += normal(0, depth_noise_sigma)
                 u ~ uniform(0,1); if u < outlier_prob:
                     depth += uniform(0.1, outlier_scale)   # along the ray

Rays that miss (or hit beyond range) consume no draws.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field

import numpy as np

from .cloud import PointCloud
from .errors import EmptyTrajectory, NonPositiveDepth, ParseError
from .formats.obj import read_obj
from .geometry import Aabb, Pose
from .mesh import TriangleBvh, TriangleMesh

DEFAULT_GRID_COLS = 50
DEFAULT_GRID_ROWS = 40
DEFAULT_MOVE_THRESHOLD = 0.01  # meters
DEFAULT_ROTATE_THRESHOLD = 1.0  # degrees
DEFAULT_MAX_RANGE = 5.0  # meters
# grid spacing projected to 1 m range: width/(grid_cols*fx) = 0.0087 m
DEFAULT_FOCAL = 1.0 / 0.0087


@dataclass(frozen=True)
class CameraIntrinsics:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ValueError("principal point must lie inside the sensor")

    @staticmethod
    def default() -> "CameraIntrinsics":
        # one pixel per grid cell; 8.7 mm inter-ray spacing at 1 m
        return CameraIntrinsics(
            fx=DEFAULT_FOCAL, fy=DEFAULT_FOCAL,
            cx=DEFAULT_GRID_COLS / 2.0, cy=DEFAULT_GRID_ROWS / 2.0,
            width=DEFAULT_GRID_COLS, height=DEFAULT_GRID_ROWS,
        )


@dataclass(frozen=True)
class CaptureConfig:
    grid_cols: int = DEFAULT_GRID_COLS
    grid_rows: int = DEFAULT_GRID_ROWS
    move_threshold: float = DEFAULT_MOVE_THRESHOLD
    rotate_threshold: float = DEFAULT_ROTATE_THRESHOLD
    max_range: float = DEFAULT_MAX_RANGE

    def __post_init__(self):
        if self.grid_cols < 1 or self.grid_rows < 1:
            raise ValueError("grid dimensions must be at least 1")
        if self.move_threshold <= 0 or self.rotate_threshold <= 0:
            raise ValueError("capture thresholds must be positive")
        if self.max_range <= 0:
            raise ValueError("max_range must be positive")


@dataclass(frozen=True)
class MaterialModel:
    """Surface response: diffuse depth noise, reflective outliers, dropout."""

    depth_noise_sigma: float = 0.0
    outlier_prob: float = 0.0
    outlier_scale: float = 0.5
    dropout_prob: float = 0.0

    def __post_init__(self):
        if self.depth_noise_sigma < 0:
            raise ValueError("depth_noise_sigma must be >= 0")
        for p in (self.outlier_prob, self.dropout_prob):
            if not 0.0 <= p <= 1.0:
                raise ValueError("probabilities must lie in [0, 1]")
        if self.outlier_prob > 0 and self.outlier_scale <= 0.1:
            raise ValueError("outlier_scale must exceed 0.1 m")


@dataclass(frozen=True)
class SceneObject:
    mesh: TriangleMesh
    pose: Pose = field(default_factory=Pose.identity)
    material: MaterialModel = field(default_factory=MaterialModel)
    color: tuple = (255, 255, 255)


class SceneSpec:
    """A capture scene: posed meshes with materials, plus the RNG seed."""

    def __init__(self, objects, seed: int = 0):
        objects = list(objects)
        if not objects:
            raise ValueError("scene needs at least one object")
        self.objects = objects
        self.seed = int(seed)
        self._bvh = None
        self._tri_region = None

    def combined(self):
        """World-frame BVH over all objects plus a triangle -> object map."""
        if self._bvh is None:
            verts, tris, region = [], [], []
            base = 0
            for i, obj in enumerate(self.objects):
                world = obj.mesh.transformed(obj.pose)
                verts.append(world.vertices)
                tris.append(world.triangles + base)
                region.append(np.full(len(world), i, dtype=np.int32))
                base += len(world.vertices)
            mesh = TriangleMesh(np.vstack(verts), np.vstack(tris))
            self._bvh = TriangleBvh(mesh)
            self._tri_region = np.concatenate(region)
        return self._bvh, self._tri_region


def should_capture(prev: Pose, curr: Pose, cfg: CaptureConfig) -> bool:
    """True iff the device moved or rotated at least the trigger thresholds."""
    moved = float(np.linalg.norm(curr.translation - prev.translation))
    angle = math.degrees(prev.rotation_angle_to(curr))
    return moved >= cfg.move_threshold or angle >= cfg.rotate_threshold


def backproject(pixel, depth: float, intr: CameraIntrinsics, pose: Pose) -> np.ndarray:
    """Map a pixel plus z-depth to a world point (camera looks along +z)."""
    if depth <= 0:
        raise NonPositiveDepth("depth must be positive, got %r" % depth)
    u, v = float(pixel[0]), float(pixel[1])
    cam = np.array(
        [(u - intr.cx) * depth / intr.fx, (v - intr.cy) * depth / intr.fy, depth]
    )
    return pose.apply(cam)


def project(point, intr: CameraIntrinsics, pose: Pose):
    """Inverse of backproject: world point -> (u, v, depth)."""
    cam = pose.inverse().apply(np.asarray(point, dtype=np.float64))
    if cam[2] <= 0:
        raise NonPositiveDepth("point is behind the camera")
    u = cam[0] * intr.fx / cam[2] + intr.cx
    v = cam[1] * intr.fy / cam[2] + intr.cy
    return u, v, cam[2]


def _grid_rays(pose: Pose, intr: CameraIntrinsics, cfg: CaptureConfig):
    """Unit world-frame ray directions through grid-cell centers, row-major."""
    cols = (np.arange(cfg.grid_cols) + 0.5) * (intr.width / cfg.grid_cols)
    rows = (np.arange(cfg.grid_rows) + 0.5) * (intr.height / cfg.grid_rows)
    u, v = np.meshgrid(cols, rows)  # row-major: v varies slowest
    dirs = np.column_stack(
        [
            (u.ravel() - intr.cx) / intr.fx,
            (v.ravel() - intr.cy) / intr.fy,
            np.ones(cfg.grid_cols * cfg.grid_rows),
        ]
    )
    dirs /= np.linalg.norm(dirs, axis=1, keepdims=True)
    return dirs @ pose.rotation.T


def capture_frame(scene: SceneSpec, pose: Pose, intr: CameraIntrinsics,
                  cfg: CaptureConfig, rng: np.random.Generator):
    """Cast one frame of rays; returns (positions, colors) after noise.

    Draws from ``rng`` exactly per the module protocol, so identical state
    yields identical output.
    """
    bvh, tri_region = scene.combined()
    dirs = _grid_rays(pose, intr, cfg)
    origins = np.broadcast_to(pose.translation, dirs.shape)
    t, tri = bvh.raycast(origins, dirs, max_t=cfg.max_range)

    positions, colors = [], []
    for i in np.nonzero(tri >= 0)[0]:
        obj = scene.objects[tri_region[tri[i]]]
        mat = obj.material
        if rng.uniform() < mat.dropout_prob:
            continue
        depth = t[i] + rng.normal(0.0, mat.depth_noise_sigma)
        if rng.uniform() < mat.outlier_prob:
            depth += rng.uniform(0.1, mat.outlier_scale)
        positions.append(pose.translation + depth * dirs[i])
        colors.append(obj.color)
    if not positions:
        return np.empty((0, 3)), np.empty((0, 3), dtype=np.uint8)
    return np.array(positions), np.array(colors, dtype=np.uint8)


def simulate_scan(scene: SceneSpec, trajectory, intr: CameraIntrinsics = None,
                  cfg: CaptureConfig = None, crop: Aabb = None) -> PointCloud:
    """Capture frames along a trajectory and accumulate one cropped cloud.

    The first sample always captures; later samples capture only when the
    pose trigger fires relative to the last captured pose. Ids are assigned
    sequentially after cropping.
    """
    if intr is None:
        intr = CameraIntrinsics.default()
    if cfg is None:
        cfg = CaptureConfig()
    samples = list(trajectory)
    if not samples:
        raise EmptyTrajectory("trajectory has no samples")

    rng = np.random.default_rng(scene.seed)
    all_pos, all_col = [], []
    last_pose = None
    for sample in samples:
        if last_pose is not None and not should_capture(last_pose, sample.pose, cfg):
            continue
        pos, col = capture_frame(scene, sample.pose, intr, cfg, rng)
        all_pos.append(pos)
        all_col.append(col)
        last_pose = sample.pose

    positions = np.vstack(all_pos)
    colors = np.vstack(all_col)
    if crop is not None and len(positions):
        keep = crop.contains(positions)
        positions, colors = positions[keep], colors[keep]
    return PointCloud.from_positions(positions, colors=colors)


def load_scene(path) -> SceneSpec:
    """Read a scene config: JSON with a seed and a list of posed objects.

    Shape: {"seed": int, "objects": [{"mesh": "relative.obj",
    "pose": {"translation": [x,y,z], "quaternion": [w,x,y,z]},
    "material": {...MaterialModel fields...}, "color": [r,g,b]}]}.
    Mesh paths resolve relative to the config file.
    """
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ParseError("bad JSON: %s" % exc, path=path)
    if not isinstance(raw, dict) or "objects" not in raw:
        raise ParseError("scene config needs an 'objects' list", path=path)
    base = os.path.dirname(os.path.abspath(path))
    objects = []
    for i, entry in enumerate(raw["objects"]):
        try:
            mesh = read_obj(os.path.join(base, entry["mesh"]))
            pose_raw = entry.get("pose", {})
            pose = Pose.from_quat(
                np.asarray(pose_raw.get("quaternion", [1, 0, 0, 0]), dtype=np.float64),
                np.asarray(pose_raw.get("translation", [0, 0, 0]), dtype=np.float64),
            )
            material = MaterialModel(**entry.get("material", {}))
            color = tuple(entry.get("color", (255, 255, 255)))
        except (KeyError, TypeError, ValueError) as exc:
            raise ParseError("object %d: %s" % (i, exc), path=path)
        objects.append(SceneObject(mesh, pose, material, color))
    if not objects:
        raise ParseError("scene config has no objects", path=path)
    return SceneSpec(objects, seed=raw.get("seed", 0))
