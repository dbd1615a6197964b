"""Sampling-based planner producing piecewise-linear collision-free paths.

A plain RRT with a straight-line local planner. The smoother downstream only
contracts on "piecewise linear path", so anything that emits one could be
swapped in; jerky output is expected and is exactly what smoothing is for.
"""

from __future__ import annotations

import numpy as np

from .oracle import config_batch_in_collision, config_in_collision
from .robot import RobotModel
from .trajectory import PiecewiseLinearPath
from .voxelgrid import OccupancyVector, VoxelGrid

EDGE_RESOLUTION = 0.05   # max joint-space step between geometric edge checks


def _edge_free(model, grid, occupancy, a, b, resolution) -> bool:
    dist = float(np.linalg.norm(b - a))
    n = max(int(np.ceil(dist / resolution)), 1) + 1
    ts = np.linspace(0.0, 1.0, n)
    Q = a[None, :] + ts[:, None] * (b - a)[None, :]
    return not config_batch_in_collision(model, Q, grid, occupancy).any()


def plan(model: RobotModel, grid: VoxelGrid, occupancy: OccupancyVector,
         q_start, q_goal, seed: int = 0, max_iters: int = 6000,
         step: float = 0.3, goal_bias: float = 0.1,
         resolution: float = EDGE_RESOLUTION):
    """RRT from q_start to q_goal; returns a PiecewiseLinearPath or None.

    Deterministic given the seed. Raises ValueError when an endpoint is in
    collision; returns None when no path is found within max_iters.
    """
    q_start = np.asarray(q_start, dtype=np.float64)
    q_goal = np.asarray(q_goal, dtype=np.float64)
    if config_in_collision(model, q_start, grid, occupancy):
        raise ValueError("start configuration is in collision")
    if config_in_collision(model, q_goal, grid, occupancy):
        raise ValueError("goal configuration is in collision")
    if np.array_equal(q_start, q_goal):
        return PiecewiseLinearPath(np.vstack([q_start, q_goal]))

    rng = np.random.default_rng(seed)
    nodes = np.empty((max_iters + 1, model.dof))
    nodes[0] = q_start
    parents = [-1]
    n_nodes = 1

    for _ in range(max_iters):
        if rng.random() < goal_bias:
            target = q_goal
        else:
            target = rng.uniform(model.joint_lower, model.joint_upper)
        diffs = nodes[:n_nodes] - target
        near = int(np.argmin(np.einsum("ij,ij->i", diffs, diffs)))
        direction = target - nodes[near]
        dist = float(np.linalg.norm(direction))
        if dist < 1e-12:
            continue
        new = nodes[near] + direction * min(1.0, step / dist)
        if not _edge_free(model, grid, occupancy, nodes[near], new, resolution):
            continue
        nodes[n_nodes] = new
        parents.append(near)
        n_nodes += 1
        if np.linalg.norm(new - q_goal) <= step and \
                _edge_free(model, grid, occupancy, new, q_goal, resolution):
            waypoints = [q_goal, new]
            k = n_nodes - 1
            while parents[k] != -1:
                k = parents[k]
                waypoints.append(nodes[k])
            return PiecewiseLinearPath(np.array(waypoints[::-1]))
    return None
