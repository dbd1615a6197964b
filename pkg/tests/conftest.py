import numpy as np
import pytest

from cfsmooth.robot import RobotModel
from cfsmooth.voxelgrid import VoxelGrid


@pytest.fixture
def two_link():
    """Thin planar 2-link arm used throughout the geometry tests."""
    return RobotModel(
        link_lengths=[0.5, 0.5],
        link_radii=[0.05, 0.05],
        joint_lower=[-np.pi, -np.pi],
        joint_upper=[np.pi, np.pi],
        vel_max=[1.0, 1.0],
        acc_max=[1.0, 1.0],
    )


@pytest.fixture
def small_grid():
    return VoxelGrid(origin=[-1.0, -1.0], edge=0.125, dims=(16, 16))


@pytest.fixture
def arm_3d():
    return RobotModel(
        link_lengths=[0.3, 0.25, 0.25, 0.2, 0.15, 0.1],
        link_radii=[0.06, 0.06, 0.05, 0.05, 0.04, 0.04],
        joint_lower=[-2.8] * 6,
        joint_upper=[2.8] * 6,
        vel_max=[1.5] * 6,
        acc_max=[3.0] * 6,
        workspace_dim=3,
    )
