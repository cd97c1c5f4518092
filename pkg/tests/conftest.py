"""Shared test fixtures and factories."""
import numpy as np
import pytest

import oracles
from cloudsketch import PointCloud, Pose


def make_cloud(rng, n, lo=-1.0, hi=1.0, start_id=0):
    positions = rng.uniform(lo, hi, size=(n, 3))
    colors = rng.integers(0, 256, size=(n, 3), dtype=np.uint8)
    return PointCloud.from_positions(positions, colors=colors, start_id=start_id)


def make_pose(rng, max_angle_rad=np.pi, max_translation=1.0):
    rotation = oracles.random_rotation(rng, max_angle_rad)
    translation = rng.uniform(-max_translation, max_translation, size=3)
    return Pose(rotation, translation)


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
