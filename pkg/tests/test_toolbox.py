import numpy as np
import pytest

import oracles
from cloudsketch import (
    Aabb,
    EditSession,
    OrientedBox,
    PointCloud,
    Pose,
    PrimitiveSpec,
    SprayStroke,
    ToolInvocation,
    TriangleBvh,
    TriangleMesh,
    apply_script,
    fit_support_plane,
    invoke_tool,
)
from cloudsketch.errors import (
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
from cloudsketch.toolbox import (
    DEFAULT_NEIGHBOR_COUNT,
    OUTLIER_STD_RATIO,
    SPONGE_HALF_EXTENTS,
    VOXEL_SIZE,
    sample_primitive,
    validate_invocation,
)
from conftest import make_cloud, make_pose


def grid_cloud(nx=20, ny=20, spacing=0.05):
    xs, ys = np.meshgrid(np.arange(nx) * spacing, np.arange(ny) * spacing,
                         indexing="ij")
    positions = np.column_stack([xs.ravel(), ys.ravel(), np.zeros(nx * ny)])
    return PointCloud.from_positions(positions)


# -- crop ---------------------------------------------------------------


def test_crop_matches_oracle(rng):
    for _ in range(10):
        cloud = make_cloud(rng, 300)
        lo = rng.uniform(-1, 0, 3)
        hi = lo + rng.uniform(0.2, 1.5, 3)
        session = EditSession(cloud)
        edit = session.crop(Aabb(lo, hi))
        keep = oracles.ids_in_aabb(cloud.ids, cloud.positions, lo, hi)
        assert set(edit.removed_ids.tolist()) == set(cloud.ids.tolist()) - keep
        assert edit.added_count == 0


def test_crop_boundary_inclusive():
    cloud = PointCloud.from_positions(np.array([[0.0, 0, 0], [1.0, 1, 1], [1.0 + 1e-9, 0, 0]]))
    session = EditSession(cloud)
    edit = session.crop(Aabb(np.zeros(3), np.ones(3)))
    assert edit.removed_ids.tolist() == [2]


# -- remove_outliers ----------------------------------------------------


def test_outliers_match_oracle(rng):
    for _ in range(5):
        cloud = make_cloud(rng, 120)
        for strength, ratio in OUTLIER_STD_RATIO.items():
            session = EditSession(cloud)
            edit = session.remove_outliers(strength)
            want = oracles.outlier_ids(
                cloud.ids, cloud.positions, DEFAULT_NEIGHBOR_COUNT, ratio
            )
            assert set(edit.removed_ids.tolist()) == want


def test_outliers_regular_grid_weak_flags_only_corners():
    # on a uniform grid the std of mean-kNN distances is tiny, so the four
    # corners (the most exposed points) sit far above mean + 3*std
    cloud = grid_cloud(spacing=1.0)
    session = EditSession(cloud)
    edit = session.remove_outliers("weak")
    want = oracles.outlier_ids(cloud.ids, cloud.positions, DEFAULT_NEIGHBOR_COUNT, 3.0)
    assert set(edit.removed_ids.tolist()) == want
    corners = {0, 19, 380, 399}
    assert want == corners


def test_outliers_grid_plus_far_points_medium_removes_them():
    base = grid_cloud()
    far = np.array([[50.0, 0, 0], [0, 50.0, 1], [50, 50, 2], [-50, 0, 3], [0, -50, 4]])
    far_ids = np.arange(len(base), len(base) + 5)
    cloud = PointCloud(
        np.concatenate([base.ids, far_ids]),
        np.vstack([base.positions, far]),
        np.vstack([base.colors, np.zeros((5, 3), np.uint8)]),
    )
    session = EditSession(cloud)
    edit = session.remove_outliers("medium")
    assert set(edit.removed_ids.tolist()) == set(far_ids.tolist())


def test_outliers_too_few_points(rng):
    cloud = make_cloud(rng, DEFAULT_NEIGHBOR_COUNT + 1)
    with pytest.raises(TooFewPoints):
        EditSession(cloud).remove_outliers("weak")
    ok = make_cloud(rng, DEFAULT_NEIGHBOR_COUNT + 2)
    EditSession(ok).remove_outliers("weak")


def test_outliers_unknown_strength(rng):
    with pytest.raises(InvalidParams):
        EditSession(make_cloud(rng, 50)).remove_outliers("extreme")


# -- downsample ---------------------------------------------------------


def test_downsample_matches_oracle(rng):
    for _ in range(5):
        cloud = make_cloud(rng, 200, lo=-0.2, hi=0.2)
        for strength, voxel in VOXEL_SIZE.items():
            session = EditSession(cloud)
            edit = session.downsample(strength)
            want = oracles.voxel_centroids(cloud.positions, cloud.colors, voxel)
            assert edit.removed_ids.tolist() == sorted(cloud.ids.tolist())
            assert len(edit.added) == len(want)
            got = {
                tuple(np.floor(p / voxel).astype(int)): (p, c)
                for p, c in zip(edit.added.positions, edit.added.colors)
            }
            assert set(got) == set(want)
            for key, (wp, wc) in want.items():
                gp, gc = got[key]
                assert np.allclose(gp, wp, atol=1e-12)
                assert np.array_equal(gc, np.rint(wc).astype(np.uint8))


def test_downsample_cube_corners_collapse_to_center():
    center = np.full(3, 0.01)
    offsets = np.array(
        [[sx, sy, sz] for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
    ) * 0.005
    cloud = PointCloud.from_positions(center + offsets)
    edit = EditSession(cloud).downsample("medium")
    assert edit.removed_count == 8
    assert edit.added_count == 1
    assert np.allclose(edit.added.positions[0], center, atol=1e-15)


def test_downsample_sparse_points_survive_unchanged():
    positions = np.array([[0.005, 0.005, 0.005], [1.005, 0.005, 0.005],
                          [0.005, 2.005, 0.005], [3.005, 3.005, 3.005]])
    cloud = PointCloud.from_positions(positions)
    edit = EditSession(cloud).downsample("strong")
    assert edit.added_count == len(positions)
    got = np.array(sorted(map(tuple, edit.added.positions)))
    want = np.array(sorted(map(tuple, positions)))
    assert np.array_equal(got, want)


# -- create_primitive ---------------------------------------------------


def test_prism_lattice_matches_oracle():
    spec = PrimitiveSpec(Pose.identity(), (0.1, 0.1, 0.1), sample_spacing=0.01)
    got = sample_primitive(spec)
    want = oracles.prism_samples((0.1, 0.1, 0.1), 0.01)
    assert len(got) == 602
    got_sorted = np.array(sorted(map(tuple, got)))
    assert np.array_equal(got_sorted, want)


def test_prism_random_dims_match_oracle(rng):
    for _ in range(5):
        dims = tuple(rng.uniform(0.03, 0.2, 3))
        spacing = rng.uniform(0.005, 0.05)
        got = sample_primitive(PrimitiveSpec(Pose.identity(), dims, sample_spacing=spacing))
        want = oracles.prism_samples(dims, spacing)
        assert np.array_equal(np.array(sorted(map(tuple, got))), want)


def test_prism_coarse_spacing_gives_corners():
    spec = PrimitiveSpec(Pose.identity(), (0.04, 0.06, 0.02), sample_spacing=1.0)
    got = sample_primitive(spec)
    assert len(got) == 8
    want = np.array(
        [[sx * 0.02, sy * 0.03, sz * 0.01]
         for sx in (-1, 1) for sy in (-1, 1) for sz in (-1, 1)]
    )
    assert np.array_equal(np.array(sorted(map(tuple, got))), np.array(sorted(map(tuple, want))))


def test_prism_samples_lie_on_posed_surface(rng):
    for _ in range(5):
        dims = tuple(rng.uniform(0.05, 0.3, 3))
        pose = make_pose(rng)
        spec = PrimitiveSpec(pose, dims, sample_spacing=0.013)
        samples = sample_primitive(spec)
        surface = TriangleBvh(TriangleMesh.box(dims).transformed(pose))
        assert surface.closest_distances(samples).max() <= 1e-9


def test_create_primitive_session_adds_colored_points(rng):
    cloud = make_cloud(rng, 30)
    session = EditSession(cloud)
    spec = PrimitiveSpec(Pose.identity(), (0.05, 0.05, 0.05), color=(9, 8, 7))
    edit = session.create_primitive(spec)
    assert edit.removed_count == 0
    assert (edit.added.colors == [9, 8, 7]).all()
    assert edit.added.ids.min() > cloud.max_id()


# -- erasers ------------------------------------------------------------


def test_sponge_matches_oracle(rng):
    half = SPONGE_HALF_EXTENTS["medium"]
    for _ in range(5):
        cloud = make_cloud(rng, 400, lo=-0.3, hi=0.3)
        poses = [make_pose(rng, max_translation=0.3) for _ in range(3)]
        edit = EditSession(cloud).erase_sponge(poses, "medium")
        want = set()
        for pose in poses:
            want |= oracles.ids_in_oriented_box(
                cloud.ids, cloud.positions, pose.rotation, pose.translation, half
            )
        assert set(edit.removed_ids.tolist()) == want


def test_spray_matches_oracle(rng):
    for _ in range(5):
        cloud = make_cloud(rng, 400, lo=-0.5, hi=0.5)
        strokes = [
            SprayStroke(rng.uniform(-0.5, 0.5, 3), rng.normal(size=3), "big", "deep")
            for _ in range(3)
        ]
        edit = EditSession(cloud).erase_spray(strokes)
        want = set()
        for s in strokes:
            want |= oracles.ids_in_cone(
                cloud.ids, cloud.positions, s.origin, s.direction, 2.0, 0.2
            )
        assert set(edit.removed_ids.tolist()) == want


def test_eraser_idempotent(rng):
    cloud = make_cloud(rng, 300, lo=-0.3, hi=0.3)
    session = EditSession(cloud)
    poses = [make_pose(rng, max_translation=0.2)]
    first = session.erase_sponge(poses, "big")
    assert first.removed_count > 0
    session.commit()
    second = session.erase_sponge(poses, "big")
    assert second.removed_count == 0


def test_empty_stroke_rejected(rng):
    session = EditSession(make_cloud(rng, 50))
    with pytest.raises(EmptyStroke):
        session.erase_sponge([], "small")
    with pytest.raises(EmptyStroke):
        session.erase_spray([])


# -- support plane ------------------------------------------------------


def test_fit_support_plane_floor(rng):
    xs = rng.uniform(-0.5, 0.5, (500, 2))
    positions = np.column_stack([xs, np.full(500, 0.75)])
    cloud = PointCloud.from_positions(positions)
    point, normal = fit_support_plane(cloud, (0, 0, 0.75), radius=0.5)
    assert abs(abs(normal[2]) - 1.0) <= 1e-9
    assert abs(point[2] - 0.75) <= 1e-6


def test_fit_support_plane_wall(rng):
    yz = rng.uniform(-0.4, 0.4, (400, 2))
    positions = np.column_stack([np.full(400, 0.2), yz])
    cloud = PointCloud.from_positions(positions)
    point, normal = fit_support_plane(cloud, (0.25, 0, 0), radius=1.0)
    assert abs(normal[2]) <= 1e-9
    assert abs(abs(normal[0]) - 1.0) <= 1e-9


def test_fit_support_plane_normal_faces_query_side(rng):
    xs = rng.uniform(-0.5, 0.5, (300, 2))
    cloud = PointCloud.from_positions(np.column_stack([xs, np.zeros(300)]))
    _, from_above = fit_support_plane(cloud, (0, 0, 0.3), radius=1.0)
    assert from_above[2] > 0.99
    _, from_below = fit_support_plane(cloud, (0, 0, -0.3), radius=1.0)
    assert from_below[2] < -0.99


def test_fit_support_plane_slope_rejected(rng):
    ab = rng.uniform(-0.5, 0.5, (400, 2))
    # 45 degree ramp: z = x
    positions = np.column_stack([ab[:, 0], ab[:, 1], ab[:, 0]])
    cloud = PointCloud.from_positions(positions)
    with pytest.raises(NotAxisAligned):
        fit_support_plane(cloud, (0, 0, 0), radius=2.0)


def test_fit_support_plane_too_few_points():
    cloud = PointCloud.from_positions(np.array([[0.0, 0, 0], [1.0, 0, 0]]))
    with pytest.raises(TooFewPoints):
        fit_support_plane(cloud, (0, 0, 0), radius=5.0)


def test_fit_support_plane_no_plane(rng):
    cloud = make_cloud(rng, 400, lo=-0.5, hi=0.5)  # volume-filling noise
    with pytest.raises(NoPlaneFound):
        fit_support_plane(cloud, (0, 0, 0), radius=2.0)


# -- session algebra ----------------------------------------------------


def test_preview_discard_identity(rng):
    cloud = make_cloud(rng, 80)
    session = EditSession(cloud)
    session.downsample("medium")
    assert session.preview_cloud() != cloud
    session.discard()
    assert session.pending is None
    assert session.preview_cloud() == cloud
    assert session.committed == cloud


def test_commit_undo_identity_bit_exact(rng):
    cloud = make_cloud(rng, 100)
    session = EditSession(cloud)
    session.crop(Aabb(np.full(3, -0.5), np.full(3, 0.5)))
    session.commit()
    restored = session.undo()
    assert restored == cloud
    assert session.committed == cloud


def test_preview_cloud_applies_pending(rng):
    cloud = make_cloud(rng, 60)
    session = EditSession(cloud)
    edit = session.crop(Aabb(np.full(3, -0.3), np.full(3, 0.3)))
    preview = session.preview_cloud()
    assert len(preview) == len(cloud) - edit.removed_count
    assert not set(edit.removed_ids.tolist()) & set(preview.ids.tolist())
    # committed state untouched until commit
    assert session.committed == cloud


def test_new_tool_replaces_pending(rng):
    session = EditSession(make_cloud(rng, 60))
    session.downsample("weak")
    edit = session.crop(Aabb(np.full(3, -10.0), np.full(3, 10.0)))
    assert session.pending is edit
    assert session.pending.tool == "crop"


def test_commit_without_pending_raises(rng):
    session = EditSession(make_cloud(rng, 30))
    with pytest.raises(NoPendingEdit):
        session.commit()
    with pytest.raises(NoPendingEdit):
        session.discard()


def test_undo_on_fresh_session_raises(rng):
    session = EditSession(make_cloud(rng, 30))
    with pytest.raises(NothingToUndo):
        session.undo()


def test_undo_stack_depth(rng):
    cloud = make_cloud(rng, 50)
    session = EditSession(cloud)
    states = [cloud]
    for i in range(5):
        session.crop(Aabb(np.full(3, -1.0 + 0.1 * i), np.full(3, 1.0)))
        states.append(session.commit())
    for want in reversed(states[:-1]):
        assert session.undo() == want
    with pytest.raises(NothingToUndo):
        session.undo()


def test_history_cap_drops_oldest(rng):
    cloud = make_cloud(rng, 40)
    session = EditSession(cloud, history_cap=3)
    for i in range(5):
        session.create_primitive(
            PrimitiveSpec(Pose(np.eye(3), np.array([float(i), 0, 0])),
                          (0.02, 0.02, 0.02), sample_spacing=1.0)
        )
        session.commit()
    for _ in range(3):
        session.undo()
    with pytest.raises(NothingToUndo):
        session.undo()
    # two oldest states were dropped: we are left at the state after edit 2
    assert len(session.committed) == len(cloud) + 2 * 8


def test_ids_never_reused_after_discard_or_undo(rng):
    cloud = make_cloud(rng, 30)
    session = EditSession(cloud)
    spec = PrimitiveSpec(Pose.identity(), (0.02, 0.02, 0.02), sample_spacing=1.0)
    first = session.create_primitive(spec)
    session.discard()
    second = session.create_primitive(spec)
    assert second.added.ids.min() > first.added.ids.max()
    session.commit()
    session.undo()
    third = session.create_primitive(spec)
    assert third.added.ids.min() > second.added.ids.max()


def test_untouched_points_keep_position_and_color(rng):
    cloud = make_cloud(rng, 100)
    session = EditSession(cloud)
    session.crop(Aabb(np.full(3, -0.5), np.full(3, 0.5)))
    after = session.commit()
    rows_before = cloud.rows_for_ids(after.ids)
    assert np.array_equal(after.positions, cloud.positions[rows_before])
    assert np.array_equal(after.colors, cloud.colors[rows_before])


# -- script records -----------------------------------------------------


def record_crop(lo, hi):
    return ToolInvocation("crop", {"min": list(lo), "max": list(hi)})


def test_validate_invocation_unknown_tool():
    with pytest.raises(UnknownTool):
        validate_invocation(ToolInvocation("melt", {}))


def test_validate_invocation_bad_params():
    with pytest.raises(InvalidParams):
        validate_invocation(ToolInvocation("crop", {"min": [0, 0, 0]}))
    with pytest.raises(InvalidParams):
        validate_invocation(ToolInvocation("downsample", {"strength": "huge"}))
    with pytest.raises(InvalidParams):
        validate_invocation(
            ToolInvocation("erase_spray", {"stroke": [{"origin": [0, 0, 0]}]})
        )


def test_invoke_tool_matches_direct_call(rng):
    cloud = make_cloud(rng, 80)
    direct = EditSession(cloud)
    direct.crop(Aabb(np.full(3, -0.4), np.full(3, 0.4)))
    scripted = EditSession(cloud)
    invoke_tool(scripted, record_crop([-0.4] * 3, [0.4] * 3))
    assert np.array_equal(
        direct.pending.removed_ids, scripted.pending.removed_ids
    )


def test_apply_script_empty_is_noop(rng):
    cloud = make_cloud(rng, 40)
    session = EditSession(cloud)
    apply_script(session, [])
    assert session.committed == cloud
    assert session.pending is None


def test_apply_script_equals_manual_sequence(rng):
    cloud = make_cloud(rng, 300, lo=-0.4, hi=0.4)
    script = [
        record_crop([-0.3] * 3, [0.3] * 3),
        ToolInvocation("remove_outliers", {"strength": "weak"}),
        ToolInvocation("downsample", {"strength": "medium"}),
    ]
    scripted = EditSession(cloud)
    apply_script(scripted, script)

    manual = EditSession(cloud)
    manual.crop(Aabb(np.full(3, -0.3), np.full(3, 0.3)))
    manual.commit()
    manual.remove_outliers("weak")
    manual.commit()
    manual.downsample("medium")
    manual.commit()

    assert scripted.committed == manual.committed
    assert scripted.pending is None


def test_apply_script_failure_keeps_prior_commits(rng):
    cloud = make_cloud(rng, DEFAULT_NEIGHBOR_COUNT)  # too few for outliers
    script = [
        record_crop([-10.0] * 3, [10.0] * 3),
        ToolInvocation("remove_outliers", {"strength": "weak"}),
    ]
    session = EditSession(cloud)
    with pytest.raises(ScriptError) as info:
        apply_script(session, script)
    assert info.value.index == 1
    assert isinstance(info.value.__cause__, TooFewPoints)
    assert session.pending is None
    assert session.committed == cloud  # crop removed nothing but committed


def test_apply_script_roundtrips_all_tools(rng):
    cloud = make_cloud(rng, 400, lo=-0.3, hi=0.3)
    pose = make_pose(rng, max_translation=0.2)
    script = [
        ToolInvocation(
            "create_primitive",
            {
                "pose": {
                    "translation": [0.0, 0.0, 0.1],
                    "quaternion": [1.0, 0.0, 0.0, 0.0],
                },
                "dimensions": [0.05, 0.05, 0.05],
                "sample_spacing": 0.02,
                "color": [1, 2, 3],
            },
        ),
        ToolInvocation(
            "erase_sponge",
            {
                "stroke": [
                    {
                        "translation": list(map(float, pose.translation)),
                        "quaternion": [1.0, 0.0, 0.0, 0.0],
                    }
                ],
                "size": "small",
            },
        ),
        ToolInvocation(
            "erase_spray",
            {
                "stroke": [
                    {"origin": [0.0, 0.0, -1.0], "dir": [0.0, 0.0, 1.0],
                     "size": "medium", "depth": "deep"}
                ]
            },
        ),
    ]
    session = EditSession(cloud)
    apply_script(session, script)
    assert session.pending is None
    assert len(session.history) == 3
