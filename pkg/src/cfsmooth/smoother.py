"""Shortcut smoothing with batched clearance inference.

Pipeline: sample waypoints along the time-parameterized input path, build
the minimum-time shortcut between every waypoint pair, sub-sample all
shortcuts onto one stacked configuration matrix, infer clearances for the
whole stack in a single batched call, threshold against the occupancy
vector, then pick the shortest composition of inferred-free shortcuts with
Dijkstra. The composition is re-checked by the exact geometric oracle; on
failure the offending edges are removed and Dijkstra re-runs. Geometric
verification is what makes the result safe regardless of inference quality.
"""

from __future__ import annotations

import heapq
import time
from dataclasses import dataclass, field

import numpy as np

from .oracle import verify_trajectory
from .robot import RobotModel
from .trajectory import (ParabolicTrajectory, PiecewiseLinearPath, concatenate,
                         min_time_rest_to_rest, time_parameterize_path)
from .voxelgrid import OccupancyVector, VoxelGrid


class SmootherError(RuntimeError):
    """Raised when even the fallback input path is geometrically colliding."""


@dataclass
class SmoothingConfig:
    c: int = 8
    dt_sample: float = 0.04
    clearance_threshold: float = 0.02
    max_dijkstra_retries: int = 8

    def __post_init__(self):
        if self.c < 0:
            raise ValueError("c must be nonnegative")
        if self.dt_sample <= 0:
            raise ValueError("dt_sample must be positive")
        if self.clearance_threshold < 0:
            raise ValueError("clearance_threshold must be nonnegative")


@dataclass
class ShortcutCandidate:
    i: int
    j: int
    trajectory: ParabolicTrajectory
    duration: float
    samples: np.ndarray | None = None      # (m_ij, N)
    row_range: tuple | None = None         # rows in the stacked matrix


@dataclass
class CandidateSet:
    waypoints: np.ndarray                  # (c + 2, N)
    candidates: list

    @property
    def K(self) -> int:
        return len(self.candidates)

    def by_edge(self, i: int, j: int) -> ShortcutCandidate:
        for cand in self.candidates:
            if cand.i == i and cand.j == j:
                return cand
        raise KeyError((i, j))


@dataclass
class SmoothingReport:
    unsmoothed_duration: float
    smoothed_duration: float
    retry_index: int | None
    fallback: bool
    c: int
    K: int
    M: int
    inference_ms: float
    check_ms: float
    other_ms: float
    total_ms: float
    peak_stacked_bytes: int
    blocked_edges: list = field(default_factory=list)

    @property
    def reduction_ratio(self) -> float:
        if self.unsmoothed_duration == 0.0:
            return 1.0
        return self.smoothed_duration / self.unsmoothed_duration

    def to_dict(self) -> dict:
        return {
            "unsmoothed_duration": self.unsmoothed_duration,
            "smoothed_duration": self.smoothed_duration,
            "reduction_ratio": self.reduction_ratio,
            "retry_index": self.retry_index,
            "fallback": self.fallback,
            "c": self.c,
            "K": self.K,
            "M": self.M,
            "inference_ms": self.inference_ms,
            "check_ms": self.check_ms,
            "other_ms": self.other_ms,
            "total_ms": self.total_ms,
            "peak_stacked_bytes": self.peak_stacked_bytes,
            "blocked_edges": [list(e) for e in self.blocked_edges],
        }


def sample_waypoints(path_traj: ParabolicTrajectory, c: int) -> np.ndarray:
    """Start, c interior configurations at regular times, goal: (c + 2, N)."""
    if c < 0:
        raise ValueError("c must be nonnegative")
    ts = np.linspace(0.0, path_traj.duration, c + 2)
    q, _ = path_traj.evaluate_batch(ts)
    return q


def enumerate_candidates(model: RobotModel, waypoints) -> CandidateSet:
    """Minimum-time shortcut for every ordered waypoint pair i < j."""
    waypoints = np.atleast_2d(np.asarray(waypoints, dtype=np.float64))
    w = waypoints.shape[0]
    if w < 2:
        raise ValueError("need at least two waypoints")
    cands = []
    for i in range(w - 1):
        for j in range(i + 1, w):
            traj = min_time_rest_to_rest(model, waypoints[i], waypoints[j])
            cands.append(ShortcutCandidate(i=i, j=j, trajectory=traj,
                                           duration=traj.duration))
    return CandidateSet(waypoints=waypoints, candidates=cands)


def subsample_and_stack(cand_set: CandidateSet, dt: float):
    """Sample every candidate at a fixed interval and stack the rows.

    Returns the (M, N) matrix and per-candidate (start, stop) row ranges.
    The final time of each candidate is always included; zero-duration
    candidates contribute their two (identical) endpoints.
    """
    if dt <= 0:
        raise ValueError("dt must be positive")
    blocks = []
    ranges = []
    row = 0
    for cand in cand_set.candidates:
        T = cand.duration
        if T == 0.0:
            ts = np.array([0.0, 0.0])
        else:
            ts = np.arange(0.0, T, dt)
            if ts[-1] < T:
                ts = np.append(ts, T)
        q, _ = cand.trajectory.evaluate_batch(ts)
        cand.samples = q
        cand.row_range = (row, row + len(ts))
        blocks.append(q)
        ranges.append(cand.row_range)
        row += len(ts)
    return np.concatenate(blocks, axis=0), ranges


def inferred_collision_matrix(clearances, threshold: float) -> np.ndarray:
    """Boolean (M, V): clearance strictly below the threshold."""
    if threshold < 0:
        raise ValueError("threshold must be nonnegative")
    return np.asarray(clearances) < threshold


def candidate_status(collision, occupancy: OccupancyVector, row_ranges) -> np.ndarray:
    """Per-candidate inferred collision flags.

    A sampled row is in collision iff it collides with some occupied voxel
    (boolean product of the collision matrix with the occupancy vector); a
    candidate is in collision iff any of its rows is.
    """
    collision = np.asarray(collision)
    if collision.shape[1] != occupancy.V:
        raise ValueError("collision matrix width does not match occupancy size")
    occ_idx = occupancy.occupied_indices()
    if len(occ_idx) == 0:
        rows = np.zeros(collision.shape[0], dtype=bool)
    else:
        rows = collision[:, occ_idx].any(axis=1)
    return np.array([rows[a:b].any() for a, b in row_ranges], dtype=bool)


def shortest_free_composition(cand_set: CandidateSet, statuses, blocked=()):
    """Shortest-duration waypoint sequence over inferred-free candidates.

    Dijkstra on the DAG over waypoint indices; edge weight is the shortcut
    duration. Returns the node index sequence from 0 to the last waypoint,
    or None when the graph is disconnected.
    """
    blocked = set(blocked)
    w = cand_set.waypoints.shape[0]
    adj = [[] for _ in range(w)]
    for cand, bad in zip(cand_set.candidates, statuses):
        if bad or (cand.i, cand.j) in blocked:
            continue
        adj[cand.i].append((cand.j, cand.duration))
    dist = [np.inf] * w
    prev = [-1] * w
    dist[0] = 0.0
    heap = [(0.0, 0)]
    while heap:
        d, u = heapq.heappop(heap)
        if d > dist[u]:
            continue
        if u == w - 1:
            break
        for vtx, wgt in adj[u]:
            nd = d + wgt
            if nd < dist[vtx]:
                dist[vtx] = nd
                prev[vtx] = u
                heapq.heappush(heap, (nd, vtx))
    if not np.isfinite(dist[w - 1]):
        return None
    seq = [w - 1]
    while seq[-1] != 0:
        seq.append(prev[seq[-1]])
    return seq[::-1]


def _compose(cand_set: CandidateSet, node_seq) -> tuple[ParabolicTrajectory, list]:
    edges = [(node_seq[k], node_seq[k + 1]) for k in range(len(node_seq) - 1)]
    trajs = [cand_set.by_edge(i, j).trajectory for i, j in edges]
    return concatenate(trajs), edges


def _edges_at_time(cand_set: CandidateSet, edges, t: float) -> list:
    """Edges of a composition whose time window contains t (1 or 2 at a seam)."""
    out = []
    start = 0.0
    for i, j in edges:
        dur = cand_set.by_edge(i, j).duration
        if start <= t <= start + dur:
            out.append((i, j))
        start += dur
    return out or [edges[-1]]


def smooth(model: RobotModel, grid: VoxelGrid, occupancy: OccupancyVector,
           path: PiecewiseLinearPath, clearance_model, cfg: SmoothingConfig):
    """Run the full smoothing pipeline; returns (trajectory, report).

    ``clearance_model`` provides batched inference (trained weights or the
    exact oracle). The caller guarantees the input path's waypoints are
    collision-free for this occupancy; if even the time-parameterized input
    path fails geometric verification, SmootherError is raised.
    """
    lap = time.perf_counter()
    inference_ms = 0.0
    check_ms = 0.0

    gsig = getattr(clearance_model, "grid_signature", None)
    if gsig and gsig != grid.signature():
        raise ValueError("clearance model bound to a different grid")
    rsig = getattr(clearance_model, "robot_signature", None)
    if rsig and rsig != model.signature():
        raise ValueError("clearance model bound to a different robot")

    base_traj = time_parameterize_path(model, path)
    unsmoothed = base_traj.duration

    waypoints = sample_waypoints(base_traj, cfg.c)
    cand_set = enumerate_candidates(model, waypoints)
    Q, ranges = subsample_and_stack(cand_set, cfg.dt_sample)

    t0 = time.perf_counter()
    clearances = np.asarray(clearance_model.infer(Q))
    inference_ms = (time.perf_counter() - t0) * 1e3

    collision = inferred_collision_matrix(clearances, cfg.clearance_threshold)
    statuses = candidate_status(collision, occupancy, ranges)
    peak_bytes = Q.nbytes + clearances.nbytes + collision.nbytes

    blocked = []
    result = None
    retry_index = None
    for attempt in range(cfg.max_dijkstra_retries + 1):
        seq = shortest_free_composition(cand_set, statuses, blocked)
        if seq is None:
            break
        composed, edges = _compose(cand_set, seq)
        t0 = time.perf_counter()
        bad_t = verify_trajectory(model, composed, grid, occupancy, cfg.dt_sample)
        check_ms += (time.perf_counter() - t0) * 1e3
        if bad_t is None:
            if composed.duration < unsmoothed:
                result = composed
                retry_index = attempt
            # A verified composition no shorter than the input cannot improve
            # and later retries only grow, so fall back either way.
            break
        blocked.extend(_edges_at_time(cand_set, edges, bad_t))

    fallback = result is None
    if fallback:
        t0 = time.perf_counter()
        bad_t = verify_trajectory(model, base_traj, grid, occupancy, cfg.dt_sample)
        check_ms += (time.perf_counter() - t0) * 1e3
        if bad_t is not None:
            raise SmootherError(
                f"input path collides at t={bad_t:.3f}s; environment changed "
                "under the planner")
        result = base_traj

    total_ms = (time.perf_counter() - lap) * 1e3
    report = SmoothingReport(
        unsmoothed_duration=unsmoothed,
        smoothed_duration=result.duration,
        retry_index=retry_index,
        fallback=fallback,
        c=cfg.c,
        K=cand_set.K,
        M=Q.shape[0],
        inference_ms=inference_ms,
        check_ms=check_ms,
        other_ms=total_ms - inference_ms - check_ms,
        total_ms=total_ms,
        peak_stacked_bytes=peak_bytes,
        blocked_edges=blocked,
    )
    return result, report
