import numpy as np
import pytest

from cfsmooth.baseline import shortcut_iterative
from cfsmooth.oracle import verify_trajectory
from cfsmooth.trajectory import (PiecewiseLinearPath, min_time_rest_to_rest,
                                 time_parameterize_path)
from cfsmooth.voxelgrid import Box, OccupancyVector, VoxelGrid, occupancy_from_shapes


@pytest.fixture
def grid():
    return VoxelGrid(origin=[-1.2, -1.2], edge=0.15, dims=(16, 16))


def test_zero_iterations_returns_input(two_link, grid):
    occ = OccupancyVector.empty(grid)
    path = PiecewiseLinearPath([[0, 0], [0.8, 0.4], [1.2, -0.3]])
    base = time_parameterize_path(two_link, path)
    traj, report = shortcut_iterative(two_link, grid, occ, path, 0, 0.04, seed=3)
    assert traj.duration == base.duration
    assert report.smoothed_duration == report.unsmoothed_duration
    for t in np.linspace(0, base.duration, 29):
        qa, _ = base.evaluate(t)
        qb, _ = traj.evaluate(t)
        np.testing.assert_array_equal(qa, qb)


def test_duration_converges_toward_direct(two_link, grid):
    occ = OccupancyVector.empty(grid)
    path = PiecewiseLinearPath([[0, 0], [-1.0, 2.2], [0.8, 0.4], [1.2, -0.3]])
    direct = min_time_rest_to_rest(two_link, [0, 0], [1.2, -0.3])
    traj, report = shortcut_iterative(two_link, grid, occ, path, 150, 0.04, seed=5)
    assert traj.duration < report.unsmoothed_duration
    # Not necessarily optimal, but most of the gap to the direct move closes.
    gap0 = report.unsmoothed_duration - direct.duration
    gap1 = traj.duration - direct.duration
    assert gap1 < 0.35 * gap0


def test_duration_monotone_across_iterations(two_link, grid):
    occ = occupancy_from_shapes(grid, [Box(center=[0.83, 0.08], half=[0.1, 0.1])])
    path = PiecewiseLinearPath([[-0.6, 0.25], [1.243, -2.333], [0.75, -0.3]])
    durations = []
    for iters in (0, 10, 25, 50, 100):
        traj, _ = shortcut_iterative(two_link, grid, occ, path, iters, 0.04, seed=11)
        durations.append(traj.duration)
    assert all(d1 >= d2 - 1e-12 for d1, d2 in zip(durations, durations[1:]))


def test_result_always_verifies(two_link, grid):
    occ = occupancy_from_shapes(grid, [Box(center=[0.83, 0.08], half=[0.1, 0.1])])
    path = PiecewiseLinearPath([[-0.6, 0.25], [1.243, -2.333], [0.75, -0.3]])
    for seed in range(6):
        traj, _ = shortcut_iterative(two_link, grid, occ, path, 60, 0.04, seed=seed)
        assert verify_trajectory(two_link, traj, grid, occ, 0.04) is None


def test_deterministic_given_seed(two_link, grid):
    occ = OccupancyVector.empty(grid)
    path = PiecewiseLinearPath([[0, 0], [-1.0, 2.2], [1.2, -0.3]])
    t1, r1 = shortcut_iterative(two_link, grid, occ, path, 40, 0.04, seed=7)
    t2, r2 = shortcut_iterative(two_link, grid, occ, path, 40, 0.04, seed=7)
    assert t1.duration == t2.duration
    assert r1.smoothed_duration == r2.smoothed_duration
