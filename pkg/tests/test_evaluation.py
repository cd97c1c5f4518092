import numpy as np
import pytest

import oracles
from cloudsketch import (
    CorrespondenceSet,
    DistanceReport,
    EvalConfig,
    IcpConfig,
    PointCloud,
    Pose,
    TriangleBvh,
    TriangleMesh,
    align_from_correspondences,
    colorize_heatmap,
    evaluate,
    icp_refine,
    point_to_mesh_distance,
    read_correspondences,
    rigid_fit,
    sample_mesh,
    transform_cloud,
)
from cloudsketch.errors import (
    DegenerateCorrespondences,
    EmptyCloud,
    EmptyMesh,
    MismatchedReport,
    NoCorrespondences,
    ParseError,
)
from conftest import make_cloud, make_pose


def pose_error(a: Pose, b: Pose) -> float:
    """Largest elementwise difference across rotation and translation."""
    return max(
        float(np.abs(a.rotation - b.rotation).max()),
        float(np.abs(a.translation - b.translation).max()),
    )


# -- rigid fit / alignment ----------------------------------------------


def test_rigid_fit_recovers_construction(rng):
    for _ in range(20):
        source = rng.uniform(-1, 1, (30, 3))
        pose = make_pose(rng)
        fit = rigid_fit(source, pose.apply(source))
        assert pose_error(fit, pose) <= 1e-9


def test_rigid_fit_identity(rng):
    source = rng.uniform(-1, 1, (10, 3))
    fit = rigid_fit(source, source)
    assert pose_error(fit, Pose.identity()) <= 1e-12


def test_rigid_fit_reflection_guard(rng):
    # mirrored targets admit a better reflection; the fit must stay a rotation
    source = rng.uniform(-1, 1, (40, 3))
    target = source * np.array([-1.0, 1.0, 1.0])
    fit = rigid_fit(source, target)
    assert np.isclose(np.linalg.det(fit.rotation), 1.0, atol=1e-12)


def test_align_from_correspondences_recovers_pose(rng):
    cloud = make_cloud(rng, 200)
    pose = make_pose(rng)
    picked = rng.choice(cloud.ids, size=8, replace=False)
    targets = pose.apply(cloud.positions[cloud.rows_for_ids(picked)])
    fit = align_from_correspondences(CorrespondenceSet(picked, targets), cloud)
    assert pose_error(fit, pose) <= 1e-9


def test_align_needs_three_pairs(rng):
    cloud = make_cloud(rng, 10)
    corr = CorrespondenceSet(cloud.ids[:2], cloud.positions[:2])
    with pytest.raises(DegenerateCorrespondences):
        align_from_correspondences(corr, cloud)


def test_align_rejects_collinear_sources():
    positions = np.column_stack(
        [np.linspace(0, 1, 5), np.zeros(5), np.zeros(5)]
    )
    cloud = PointCloud.from_positions(positions)
    corr = CorrespondenceSet(cloud.ids, positions + 0.1)
    with pytest.raises(DegenerateCorrespondences):
        align_from_correspondences(corr, cloud)


# -- mesh sampling ------------------------------------------------------


def test_sample_mesh_points_on_surface(rng):
    mesh = TriangleMesh.box((0.4, 0.7, 0.2))
    samples = sample_mesh(mesh, 5000, seed=1)
    d = TriangleBvh(mesh).closest_distances(samples.positions)
    assert d.max() <= 1e-12


def test_sample_mesh_area_weighting():
    # two triangles with area ratio 9:1; counts must match within 3 sigma
    vertices = np.array(
        [[0, 0, 0], [9.0, 0, 0], [0, 2.0, 0], [10.0, 0, 0], [11.0, 0, 0], [10.0, 2.0, 0]]
    )
    triangles = np.array([[0, 1, 2], [3, 4, 5]])
    mesh = TriangleMesh(vertices, triangles)
    n = 20_000
    samples = sample_mesh(mesh, n, seed=7)
    big = int((samples.positions[:, 0] < 9.5).sum())
    p = 0.9
    sigma = np.sqrt(n * p * (1 - p))
    assert abs(big - n * p) <= 3 * sigma


def test_sample_mesh_deterministic():
    mesh = TriangleMesh.box((1.0, 1.0, 1.0))
    a = sample_mesh(mesh, 1000, seed=3)
    b = sample_mesh(mesh, 1000, seed=3)
    assert a == b
    c = sample_mesh(mesh, 1000, seed=4)
    assert c != a


def test_sample_mesh_large_count():
    mesh = TriangleMesh.box((1.0, 1.0, 1.0))
    samples = sample_mesh(mesh, 10_000_000, seed=0)
    assert len(samples) == 10_000_000
    assert np.abs(samples.positions).max() <= 0.5 + 1e-12


def test_sample_mesh_rejects_empty_and_zero():
    mesh = TriangleMesh.box((1, 1, 1))
    with pytest.raises(ValueError):
        sample_mesh(mesh, 0)
    degenerate = TriangleMesh(np.zeros((3, 3)), np.array([[0, 1, 2]]))
    with pytest.raises(EmptyMesh):
        sample_mesh(degenerate.drop_degenerate(), 10)


# -- icp ----------------------------------------------------------------


def test_icp_self_alignment_is_identity(rng):
    cloud = make_cloud(rng, 500)
    pose, rmse = icp_refine(cloud, cloud, Pose.identity())
    assert rmse <= 1e-12
    assert pose_error(pose, Pose.identity()) <= 1e-12


def test_icp_recovers_small_offset():
    # target is an exactly displaced copy, so every point has a true match
    mesh = TriangleMesh.box((0.5, 0.5, 0.5))
    cloud = sample_mesh(mesh, 4_000, seed=5)
    nudge = Pose.from_quat(
        np.array([np.cos(np.radians(2.5)), 0, 0, np.sin(np.radians(2.5))]),
        np.array([0.02, -0.01, 0.015]),
    )
    target = transform_cloud(cloud, nudge)
    pose, rmse = icp_refine(cloud, target, Pose.identity())
    assert rmse < 1e-6
    assert pose_error(pose, nudge) <= 1e-6


def test_icp_no_correspondences(rng):
    cloud = make_cloud(rng, 50)
    far = PointCloud.from_positions(cloud.positions + 100.0)
    with pytest.raises(NoCorrespondences):
        icp_refine(cloud, far, Pose.identity())


def test_icp_empty_cloud(rng):
    cloud = make_cloud(rng, 10)
    with pytest.raises(EmptyCloud):
        icp_refine(PointCloud.empty(), cloud, Pose.identity())


def test_icp_config_validation():
    with pytest.raises(ValueError):
        IcpConfig(max_iterations=0)
    with pytest.raises(ValueError):
        IcpConfig(max_correspondence_distance=-1.0)


# -- point-to-mesh distances --------------------------------------------


def test_cube_hand_distances():
    mesh = TriangleMesh.box((1.0, 1.0, 1.0))
    bvh = TriangleBvh(mesh)
    queries = PointCloud.from_positions(
        np.array(
            [
                [0.0, 0.0, 0.6],   # 0.1 above the top face
                [0.5, 0.5, 0.5],   # on a corner
                [0.0, 0.0, 0.0],   # center: 0.5 from every face
                [0.7, 0.0, 0.0],   # 0.2 off the +x face
                [0.6, 0.6, 0.5],   # off a vertical edge: 0.1*sqrt(2)
            ]
        )
    )
    report = point_to_mesh_distance(queries, bvh)
    want = np.array([0.1, 0.0, 0.5, 0.2, 0.1 * np.sqrt(2.0)])
    assert np.allclose(report.distances, want, atol=1e-12)


def test_distances_match_brute_force(rng):
    for _ in range(5):
        vertices = rng.uniform(-1, 1, (30, 3))
        triangles = rng.integers(0, 30, (40, 3))
        mesh = TriangleMesh(vertices, triangles).drop_degenerate()
        cloud = make_cloud(rng, 60, lo=-1.5, hi=1.5)
        report = point_to_mesh_distance(cloud, TriangleBvh(mesh))
        want = oracles.point_mesh_distances(
            cloud.positions, mesh.triangle_vertices()
        )
        assert np.allclose(report.distances, want, atol=1e-12)


def test_report_stats_definitions(rng):
    distances = rng.uniform(0, 1, 101)
    report = DistanceReport.from_distances(np.arange(101), distances)
    assert report.mean == pytest.approx(float(np.mean(distances)), abs=0)
    assert report.median == pytest.approx(float(np.median(distances)), abs=0)
    assert report.std == pytest.approx(float(np.std(distances)), abs=0)
    assert report.min == float(distances.min())
    assert report.max == float(distances.max())
    # even count: median is the mean of the two middle values
    even = DistanceReport.from_distances(np.arange(4), np.array([1.0, 2.0, 4.0, 8.0]))
    assert even.median == 3.0


def test_distance_stats_invariant_under_rigid_motion(rng):
    mesh = TriangleMesh.box((0.8, 0.5, 0.3))
    cloud = make_cloud(rng, 300, lo=-0.6, hi=0.6)
    base = point_to_mesh_distance(cloud, TriangleBvh(mesh))
    pose = make_pose(rng)
    moved = point_to_mesh_distance(
        transform_cloud(cloud, pose), TriangleBvh(mesh.transformed(pose))
    )
    assert np.allclose(moved.distances, base.distances, atol=1e-9)
    assert moved.mean == pytest.approx(base.mean, abs=1e-9)
    assert moved.max == pytest.approx(base.max, abs=1e-9)


# -- heat map -----------------------------------------------------------


def test_heatmap_ramp_endpoints():
    cloud = PointCloud.from_positions(np.zeros((5, 3)))
    report = DistanceReport.from_distances(
        cloud.ids, np.array([0.0, 0.25, 0.5, 0.75, 1.0])
    )
    heat = colorize_heatmap(cloud, report, saturation=1.0)
    want = np.array(
        [
            [0, 0, 255],     # zero: blue
            [0, 128, 128],   # quarter
            [0, 255, 0],     # half: green
            [128, 128, 0],   # three quarters
            [255, 0, 0],     # saturation: red
        ],
        dtype=np.uint8,
    )
    assert np.array_equal(heat.colors, want)


def test_heatmap_clamps_beyond_saturation():
    cloud = PointCloud.from_positions(np.zeros((2, 3)))
    report = DistanceReport.from_distances(cloud.ids, np.array([5.0, 50.0]))
    heat = colorize_heatmap(cloud, report, saturation=1.0)
    assert (heat.colors == [255, 0, 0]).all()


def test_heatmap_default_saturation_is_p99(rng):
    cloud = PointCloud.from_positions(np.zeros((1000, 3)))
    distances = rng.uniform(0, 1, 1000)
    report = DistanceReport.from_distances(cloud.ids, distances)
    heat = colorize_heatmap(cloud, report)
    explicit = colorize_heatmap(
        cloud, report, saturation=float(np.percentile(distances, 99.0))
    )
    assert np.array_equal(heat.colors, explicit.colors)


def test_heatmap_preserves_geometry(rng):
    cloud = make_cloud(rng, 50)
    report = DistanceReport.from_distances(cloud.ids, rng.uniform(0, 1, 50))
    heat = colorize_heatmap(cloud, report, saturation=1.0)
    assert np.array_equal(heat.ids, cloud.ids)
    assert np.array_equal(heat.positions, cloud.positions)


def test_heatmap_rejects_mismatched_report(rng):
    cloud = make_cloud(rng, 10)
    report = DistanceReport.from_distances(cloud.ids + 1, np.zeros(10))
    with pytest.raises(MismatchedReport):
        colorize_heatmap(cloud, report)


def test_heatmap_zero_saturation_all_blue(rng):
    cloud = make_cloud(rng, 8)
    report = DistanceReport.from_distances(cloud.ids, np.zeros(8))
    heat = colorize_heatmap(cloud, report)  # p99 of zeros is 0
    assert (heat.colors == [0, 0, 255]).all()


# -- full pipeline ------------------------------------------------------


def test_evaluate_self_consistency(rng):
    # the cloud is the same deterministic sampling evaluate regenerates for
    # its ICP target, so the whole pipeline is a fixed point at zero error
    mesh = TriangleMesh.box((0.5, 0.5, 0.5))
    cfg = EvalConfig(mesh_samples=20_000)
    cloud = sample_mesh(mesh, cfg.mesh_samples, seed=cfg.seed)
    picked = rng.choice(cloud.ids, size=6, replace=False)
    rows = cloud.rows_for_ids(picked)
    corr = CorrespondenceSet(picked, cloud.positions[rows])
    report, heat = evaluate(cloud, mesh, corr, cfg)
    assert report.mean < 1e-6
    assert report.max < 1e-6
    assert len(heat) == len(cloud)
    assert np.array_equal(heat.ids, cloud.ids)


def test_evaluate_recovers_displaced_cloud(rng):
    # displaced cloud with exact correspondences: alignment is exact, then
    # ICP against an independent sampling drifts by at most the sampling
    # noise of the rigid fit, far below the capture noise floor
    mesh = TriangleMesh.box((0.5, 0.5, 0.5))
    cloud = sample_mesh(mesh, 3000, seed=9)
    pose = make_pose(rng, max_angle_rad=np.radians(8), max_translation=0.04)
    moved = transform_cloud(cloud, pose)
    picked = rng.choice(cloud.ids, size=6, replace=False)
    rows = cloud.rows_for_ids(picked)
    corr = CorrespondenceSet(picked, cloud.positions[rows])
    report, _ = evaluate(moved, mesh, corr, EvalConfig(mesh_samples=20_000))
    assert report.mean <= 1e-3
    assert report.max <= 5e-3


# -- correspondence files -----------------------------------------------


def test_read_correspondences(tmp_path):
    path = tmp_path / "pairs.txt"
    path.write_text(
        "# id  x y z\n"
        "4 0.1 0.2 0.3\n"
        "\n"
        "9 -1 2e-3 0.5\n"
    )
    corr = read_correspondences(path)
    assert corr.ids.tolist() == [4, 9]
    assert np.allclose(corr.targets, [[0.1, 0.2, 0.3], [-1, 0.002, 0.5]])


def test_read_correspondences_errors(tmp_path):
    short = tmp_path / "short.txt"
    short.write_text("4 0.1 0.2\n")
    with pytest.raises(ParseError) as info:
        read_correspondences(short)
    assert info.value.line == 1
    bad = tmp_path / "bad.txt"
    bad.write_text("4 a b c\n")
    with pytest.raises(ParseError):
        read_correspondences(bad)
