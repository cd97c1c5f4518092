"""Point-cloud workcell sketching: capture, edit, and evaluate scans."""
from . import errors
from .capture import (
    CameraIntrinsics,
    CaptureConfig,
    MaterialModel,
    SceneObject,
    SceneSpec,
    backproject,
    capture_frame,
    load_scene,
    project,
    should_capture,
    simulate_scan,
)
from .cloud import Point, PointCloud, concat
from .evaluation import (
    CorrespondenceSet,
    DistanceReport,
    EvalConfig,
    IcpConfig,
    align_from_correspondences,
    colorize_heatmap,
    evaluate,
    icp_refine,
    point_to_mesh_distance,
    read_correspondences,
    rigid_fit,
    sample_mesh,
)
from .formats import (
    TrajectorySample,
    read_obj,
    read_ply,
    read_script,
    read_trajectory,
    write_ply,
    write_script,
    write_trajectory,
)
from .geometry import Aabb, Cone, OrientedBox, Pose, transform_cloud
from .kernels import BACKEND
from .mesh import TriangleBvh, TriangleMesh
from .service import ServiceClient, SessionService
from .spatial import SpatialIndex, points_in_aabb, points_in_cone, points_in_oriented_box
from .toolbox import (
    EditSession,
    PendingEdit,
    PrimitiveSpec,
    SprayStroke,
    ToolInvocation,
    apply_script,
    fit_support_plane,
    invoke_tool,
    sample_primitive,
)

__version__ = "0.1.0"
