"""Scene definition: robot, grid, obstacles, named configurations.

Dynamic obstacles move along keyframe scripts or are steered interactively;
``step_obstacles`` is a pure function of (scene, time, overrides), so every
occupancy snapshot can be replayed.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .oracle import config_in_collision
from .robot import RobotModel
from .voxelgrid import (OccupancyVector, VoxelGrid, occupancy_from_shapes,
                        shape_from_dict)


@dataclass
class DynamicShape:
    """A shape whose center follows piecewise-linear keyframes over time."""

    shape_id: str
    shape: object
    keyframes: list   # [(t, center), ...] sorted by t; holds at both ends

    def center_at(self, t: float) -> np.ndarray:
        kf = self.keyframes
        if not kf:
            return np.asarray(self.shape.center)
        times = np.array([k[0] for k in kf])
        if t <= times[0]:
            return np.asarray(kf[0][1], dtype=np.float64)
        if t >= times[-1]:
            return np.asarray(kf[-1][1], dtype=np.float64)
        idx = int(np.searchsorted(times, t, side="right")) - 1
        t0, c0 = kf[idx]
        t1, c1 = kf[idx + 1]
        c0 = np.asarray(c0, dtype=np.float64)
        c1 = np.asarray(c1, dtype=np.float64)
        if t1 == t0:
            return c1
        u = (t - t0) / (t1 - t0)
        return c0 + u * (c1 - c0)

    def at(self, t: float):
        return self.shape.moved_to(self.center_at(t))

    def to_dict(self) -> dict:
        return {"id": self.shape_id, "shape": self.shape.to_dict(),
                "keyframes": [[t, list(np.asarray(c, dtype=float))]
                              for t, c in self.keyframes]}

    @classmethod
    def from_dict(cls, d: dict) -> "DynamicShape":
        return cls(shape_id=d["id"], shape=shape_from_dict(d["shape"]),
                   keyframes=[(float(t), np.asarray(c, dtype=np.float64))
                              for t, c in d.get("keyframes", [])])


@dataclass
class Scene:
    name: str
    robot: RobotModel
    grid: VoxelGrid
    static_shapes: list = field(default_factory=list)
    dynamic_shapes: list = field(default_factory=list)
    configs: dict = field(default_factory=dict)

    def __post_init__(self):
        self.configs = {k: np.asarray(v, dtype=np.float64)
                        for k, v in self.configs.items()}
        self._static_occ = None

    def static_occupancy(self) -> OccupancyVector:
        if self._static_occ is None:
            self._static_occ = occupancy_from_shapes(self.grid, self.static_shapes)
        return self._static_occ

    def validate(self) -> list:
        """Invariant check; returns a list of human-readable problems."""
        problems = []
        occ = self.static_occupancy()
        for name, q in self.configs.items():
            if q.shape != (self.robot.dof,):
                problems.append(f"config {name!r} has wrong dimension")
                continue
            if np.any(q < self.robot.joint_lower) or np.any(q > self.robot.joint_upper):
                problems.append(f"config {name!r} violates joint limits")
            elif config_in_collision(self.robot, q, self.grid, occ):
                problems.append(f"config {name!r} collides with static shapes")
        return problems

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "robot": self.robot.to_dict(),
            "grid": self.grid.to_dict(),
            "static_shapes": [s.to_dict() for s in self.static_shapes],
            "dynamic_shapes": [d.to_dict() for d in self.dynamic_shapes],
            "configs": {k: v.tolist() for k, v in self.configs.items()},
        }

    @classmethod
    def from_dict(cls, d: dict) -> "Scene":
        return cls(
            name=d.get("name", "scene"),
            robot=RobotModel.from_dict(d["robot"]),
            grid=VoxelGrid.from_dict(d["grid"]),
            static_shapes=[shape_from_dict(s) for s in d.get("static_shapes", [])],
            dynamic_shapes=[DynamicShape.from_dict(s) for s in d.get("dynamic_shapes", [])],
            configs=d.get("configs", {}),
        )

    def save(self, path) -> None:
        with open(path, "w") as f:
            json.dump(self.to_dict(), f, indent=2)

    @classmethod
    def load(cls, path) -> "Scene":
        with open(path) as f:
            return cls.from_dict(json.load(f))


def step_obstacles(scene: Scene, t: float, overrides: dict | None = None) -> OccupancyVector:
    """Occupancy snapshot at time t.

    ``overrides`` maps shape ids to interactive state: a shape object to add
    or replace, or None to remove. Scripted shapes advance along their
    keyframes; the result is OR-ed with the static occupancy.
    """
    if t < 0:
        raise ValueError("t must be nonnegative")
    overrides = overrides or {}
    shapes = []
    for dyn in scene.dynamic_shapes:
        if dyn.shape_id in overrides:
            continue
        shapes.append(dyn.at(t))
    for value in overrides.values():
        if value is not None:
            shapes.append(value)
    occ = occupancy_from_shapes(scene.grid, shapes)
    return scene.static_occupancy() | occ
