"""Exact geometric ground truth: clearance fields and collision checks.

This module is the safety net. The learned model only proposes; whatever it
proposes is re-checked here with exact capsule-vs-cell geometry before any
trajectory is accepted.
"""

from __future__ import annotations

import numpy as np

from .geometry import segment_box_distance_sq
from .robot import RobotModel, clearance_to_points, fk_points_batch, _check_q
from .voxelgrid import OccupancyVector, VoxelGrid


def exact_clearance_field(model: RobotModel, q, grid: VoxelGrid) -> np.ndarray:
    """Signed distance from every voxel center to the robot surface: (V,)."""
    return clearance_to_points(model, q, grid.centers())


class ExactClearanceModel:
    """Drop-in clearance source computing fields geometrically.

    Matches the inference interface of trained weights, which makes it the
    reference point for pipeline-equivalence tests and a slow-but-exact mode
    of the smoother.
    """

    def __init__(self, model: RobotModel, grid: VoxelGrid):
        self.model = model
        self.grid = grid
        self._centers = grid.centers()

    @property
    def robot_signature(self) -> str:
        return self.model.signature()

    @property
    def grid_signature(self) -> str:
        return self.grid.signature()

    def infer(self, Q) -> np.ndarray:
        Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
        out = np.empty((Q.shape[0], self.grid.V))
        for i in range(Q.shape[0]):
            out[i] = clearance_to_points(self.model, Q[i], self._centers)
        return out


def config_batch_in_collision(model: RobotModel, Q, grid: VoxelGrid,
                              occupancy: OccupancyVector) -> np.ndarray:
    """Exact capsule-vs-occupied-cell overlap for a batch: (M,) booleans.

    A configuration collides iff some occupied cell's cube comes strictly
    closer to a link segment than that link's radius. Tangency (distance
    exactly equal to the radius) does not count.
    """
    Q = np.atleast_2d(np.asarray(Q, dtype=np.float64))
    m = Q.shape[0]
    occ_idx = occupancy.occupied_indices()
    result = np.zeros(m, dtype=bool)
    if len(occ_idx) == 0:
        return result
    lo, hi = grid.cell_bounds(occ_idx)
    pts = fk_points_batch(model, Q)          # (M, dof+1, dim)
    for k in range(model.dof):
        pending = ~result
        if not np.any(pending):
            break
        a = pts[pending, k, :]
        b = pts[pending, k + 1, :]
        dsq = segment_box_distance_sq(a, b, lo, hi)
        r = float(model.link_radii[k])
        result[pending] |= np.any(dsq < r * r, axis=1)
    return result


def config_in_collision(model: RobotModel, q, grid: VoxelGrid,
                        occupancy: OccupancyVector) -> bool:
    q = _check_q(model, q)
    return bool(config_batch_in_collision(model, q[None, :], grid, occupancy)[0])


def verify_trajectory(model: RobotModel, traj, grid: VoxelGrid,
                      occupancy: OccupancyVector, dt_check: float,
                      t_start: float = 0.0):
    """Sampled geometric check of a trajectory.

    Samples at t_start, t_start + dt_check, ... and always includes the final
    time. Returns the earliest sampled time whose configuration collides, or
    None if every sample is free. Sampled checking is resolution-complete
    only: obstacles thinner than one step can slip between samples.
    """
    if dt_check <= 0:
        raise ValueError("dt_check must be positive")
    ts = np.arange(t_start, traj.duration, dt_check)
    if len(ts) == 0 or ts[-1] < traj.duration:
        ts = np.append(ts, traj.duration)
    Q, _ = traj.evaluate_batch(ts)
    hits = config_batch_in_collision(model, Q, grid, occupancy)
    idx = np.flatnonzero(hits)
    if len(idx) == 0:
        return None
    return float(ts[idx[0]])
