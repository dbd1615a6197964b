"""Benchmark harness: duration-reduction ratio versus smoothing time.

Sweeps the batch smoother over waypoint counts and the iterative baseline
over iteration budgets on identical planned paths, and reports one CSV row
per trial. Timing wraps the smoothing call only; planning and weight loading
stay outside the clock.
"""

from __future__ import annotations

import csv
import io
import time
from dataclasses import dataclass

import numpy as np

from .baseline import shortcut_iterative
from .oracle import verify_trajectory
from .planner import plan
from .profiles import random_desk_scene
from .smoother import SmoothingConfig, smooth
from .trajectory import time_parameterize_path

CSV_SCHEMA_VERSION = 1
CSV_COLUMNS = [
    "schema_version", "scene", "method", "param", "rep", "seed",
    "unsmoothed_s", "smoothed_s", "ratio", "wall_ms", "inference_ms",
    "check_ms", "retry_index", "fallback",
]


@dataclass
class BenchTask:
    """One planned problem instance shared by both smoothers."""

    scene_name: str
    model: object
    grid: object
    occupancy: object
    path: object
    seed: int


def _usable(model, grid, occ, path, dt=0.04) -> bool:
    """Smoothing requires an input path that itself verifies collision-free.

    The planner checks edges at a joint-space resolution while verification
    samples in time, so marginal paths can pass one and fail the other; those
    are dropped here rather than handed to the smoother.
    """
    if path is None:
        return False
    base = time_parameterize_path(model, path)
    return verify_trajectory(model, base, grid, occ, dt) is None


def corpus_tasks(scenes, reps: int, seed: int) -> list:
    """Plan rep paths per scene between its named A/B configurations."""
    tasks = []
    for scene in scenes:
        occ = scene.static_occupancy()
        for rep in range(reps):
            s = seed + rep
            path = plan(scene.robot, scene.grid, occ, scene.configs["A"],
                        scene.configs["B"], seed=s)
            if not _usable(scene.robot, scene.grid, occ, path):
                continue
            tasks.append(BenchTask(scene_name=scene.name, model=scene.robot,
                                   grid=scene.grid, occupancy=occ, path=path,
                                   seed=s))
    return tasks


def random_tasks(n: int, seed: int, max_attempts: int | None = None,
                 cache_dir=None, log=None) -> list:
    """Plannable randomized scene instances; scene seeds that fail to plan
    are skipped deterministically.

    Generation is fully determined by (n, seed) and the desk profile, so the
    planned waypoints may be cached on disk and reloaded.
    """
    from pathlib import Path

    from .profiles import desk_grid, desk_robot
    from .trajectory import PiecewiseLinearPath

    cache_path = None
    if cache_dir is not None:
        key = f"{desk_robot().signature()}-{desk_grid().signature()}-{n}-{seed}"
        cache_path = Path(cache_dir) / f"tasks-{key}.npz"
        if cache_path.exists():
            blob = np.load(cache_path, allow_pickle=False)
            tasks = []
            for i in range(int(blob["count"])):
                scene_seed = int(blob[f"seed_{i}"])
                scene, _, _, _ = random_desk_scene(scene_seed)
                tasks.append(BenchTask(
                    scene_name=scene.name, model=scene.robot, grid=scene.grid,
                    occupancy=scene.static_occupancy(),
                    path=PiecewiseLinearPath(blob[f"waypoints_{i}"]),
                    seed=scene_seed))
            return tasks

    tasks = []
    attempts = 0
    limit = max_attempts or 20 * n
    scene_seed = seed
    while len(tasks) < n and attempts < limit:
        attempts += 1
        scene_seed += 1
        scene, q_start, q_goal, _ = random_desk_scene(scene_seed)
        occ = scene.static_occupancy()
        path = plan(scene.robot, scene.grid, occ, q_start, q_goal,
                    seed=scene_seed, max_iters=1500)
        if not _usable(scene.robot, scene.grid, occ, path):
            continue
        tasks.append(BenchTask(scene_name=scene.name, model=scene.robot,
                               grid=scene.grid, occupancy=occ, path=path,
                               seed=scene_seed))
        if log and len(tasks) % 50 == 0:
            log(f"generated {len(tasks)}/{n} tasks")
    if cache_path is not None:
        payload = {"count": len(tasks)}
        for i, task in enumerate(tasks):
            payload[f"seed_{i}"] = task.seed
            payload[f"waypoints_{i}"] = task.path.waypoints
        np.savez_compressed(cache_path, **payload)
    return tasks


def _row(task, method, param, rep, report, wall_ms):
    return {
        "schema_version": CSV_SCHEMA_VERSION,
        "scene": task.scene_name,
        "method": method,
        "param": param,
        "rep": rep,
        "seed": task.seed,
        "unsmoothed_s": round(report.unsmoothed_duration, 9),
        "smoothed_s": round(report.smoothed_duration, 9),
        "ratio": round(report.reduction_ratio, 9),
        "wall_ms": round(wall_ms, 3),
        "inference_ms": round(report.inference_ms, 3),
        "check_ms": round(report.check_ms, 3),
        "retry_index": report.retry_index if report.retry_index is not None else "",
        "fallback": int(report.fallback),
    }


def run_bench(tasks, clearance_model, c_values=(2, 4, 8, 16),
              iter_values=(10, 30, 100, 300), dt_sample=0.04,
              threshold=None, log=None) -> list:
    """Both smoothers over their sweep grids on identical tasks.

    Returns CSV-ready row dicts. Wall-clock timing surrounds each smoothing
    call; the inference/check split comes from the smoother's own report.
    """
    rows = []
    for rep, task in enumerate(tasks):
        thr = threshold if threshold is not None else task.grid.edge
        for c in c_values:
            cfg = SmoothingConfig(c=c, dt_sample=dt_sample, clearance_threshold=thr)
            t0 = time.perf_counter()
            _, report = smooth(task.model, task.grid, task.occupancy, task.path,
                               clearance_model, cfg)
            wall = (time.perf_counter() - t0) * 1e3
            rows.append(_row(task, "batch", c, rep, report, wall))
        for iters in iter_values:
            t0 = time.perf_counter()
            _, report = shortcut_iterative(task.model, task.grid, task.occupancy,
                                           task.path, iters, dt_sample, seed=task.seed)
            wall = (time.perf_counter() - t0) * 1e3
            rows.append(_row(task, "baseline", iters, rep, report, wall))
        if log:
            log(f"task {rep + 1}/{len(tasks)} ({task.scene_name}) done")
    return rows


def stats_first_candidate(tasks, clearance_model, cfg: SmoothingConfig,
                          log=None) -> dict:
    """Histogram over which Dijkstra retry produced the accepted trajectory.

    Fallbacks are reported under the "fallback" key; fractions sum to one
    over completed trials.
    """
    counts = {}
    total = 0
    for i, task in enumerate(tasks):
        _, report = smooth(task.model, task.grid, task.occupancy, task.path,
                           clearance_model, cfg)
        key = "fallback" if report.fallback else report.retry_index
        counts[key] = counts.get(key, 0) + 1
        total += 1
        if log:
            log(f"trial {i + 1}/{len(tasks)}: retry={key}")
    return {"counts": counts,
            "fractions": {k: v / total for k, v in counts.items()},
            "trials": total}


def rows_to_csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()


def summarize(rows) -> list:
    """Mean and spread of ratio and wall time per (method, param) cell."""
    cells = {}
    for row in rows:
        cells.setdefault((row["method"], row["param"]), []).append(row)
    out = []
    for (method, param), group in sorted(cells.items(), key=lambda kv: (kv[0][0], kv[0][1])):
        ratios = np.array([g["ratio"] for g in group], dtype=float)
        walls = np.array([g["wall_ms"] for g in group], dtype=float)
        infer = np.array([g["inference_ms"] for g in group], dtype=float)
        check = np.array([g["check_ms"] for g in group], dtype=float)
        out.append({
            "method": method, "param": param, "n": len(group),
            "ratio_mean": float(ratios.mean()), "ratio_std": float(ratios.std()),
            "wall_ms_mean": float(walls.mean()), "wall_ms_std": float(walls.std()),
            "inference_ms_mean": float(infer.mean()),
            "check_ms_mean": float(check.mean()),
        })
    return out
