"""Iterative random shortcutting with geometric checks (comparison baseline).

Classic smoothing loop: repeatedly pick two random times on the current
trajectory, try the direct minimum-time shortcut between those two
configurations, keep it when it verifies collision-free and the trajectory
gets strictly shorter. Same rest-to-rest representation as the batch
smoother, so the comparison isolates the collision-checking strategy.
"""

from __future__ import annotations

import time
import numpy as np

from .oracle import verify_trajectory
from .robot import RobotModel
from .smoother import SmoothingReport
from .trajectory import (PiecewiseLinearPath, min_time_rest_to_rest,
                         time_parameterize_path)
from .voxelgrid import OccupancyVector, VoxelGrid


def _waypoint_times(model, waypoints) -> np.ndarray:
    traj = time_parameterize_path(model, PiecewiseLinearPath(waypoints))
    ends = np.concatenate([[0.0], np.cumsum([s.duration for s in traj.segments])])
    return traj, ends


def shortcut_iterative(model: RobotModel, grid: VoxelGrid, occupancy: OccupancyVector,
                       path: PiecewiseLinearPath, max_iterations: int,
                       dt_check: float, seed: int = 0):
    """Random shortcutting for ``max_iterations`` attempts; returns (traj, report).

    The trajectory is always the time-parameterization of a waypoint list;
    an accepted shortcut replaces every waypoint between its two cut points.
    Deterministic given the seed.
    """
    if max_iterations < 0:
        raise ValueError("max_iterations must be nonnegative")
    rng = np.random.default_rng(seed)
    lap = time.perf_counter()
    check_ms = 0.0

    waypoints = path.waypoints.copy()
    traj, ends = _waypoint_times(model, waypoints)
    unsmoothed = traj.duration

    for _ in range(max_iterations):
        if traj.duration == 0.0:
            break
        t1, t2 = np.sort(rng.uniform(0.0, traj.duration, size=2))
        if t2 - t1 < 1e-9:
            continue
        q1, _ = traj.evaluate(t1)
        q2, _ = traj.evaluate(t2)
        cut = min_time_rest_to_rest(model, q1, q2)
        t0 = time.perf_counter()
        bad = verify_trajectory(model, cut, grid, occupancy, dt_check)
        check_ms += (time.perf_counter() - t0) * 1e3
        if bad is not None:
            continue
        # Keep waypoints strictly before t1 and strictly after t2.
        before = waypoints[: int(np.searchsorted(ends, t1, side="left"))]
        after = waypoints[int(np.searchsorted(ends, t2, side="right")):]
        new_wp = np.vstack([before, q1[None, :], q2[None, :], after])
        new_traj, new_ends = _waypoint_times(model, new_wp)
        if new_traj.duration >= traj.duration:
            continue
        # Re-timing shifts every later sample instant, so the spliced result
        # is re-verified as a whole before it replaces the current one.
        t0 = time.perf_counter()
        bad = verify_trajectory(model, new_traj, grid, occupancy, dt_check)
        check_ms += (time.perf_counter() - t0) * 1e3
        if bad is None:
            waypoints, traj, ends = new_wp, new_traj, new_ends

    total_ms = (time.perf_counter() - lap) * 1e3
    report = SmoothingReport(
        unsmoothed_duration=unsmoothed,
        smoothed_duration=traj.duration,
        retry_index=None,
        fallback=False,
        c=0,
        K=0,
        M=0,
        inference_ms=0.0,
        check_ms=check_ms,
        other_ms=total_ms - check_ms,
        total_ms=total_ms,
        peak_stacked_bytes=0,
    )
    return traj, report
