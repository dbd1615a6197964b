"""Capsule-chain arm model: kinematics, sampling, exact surface distances.

The arm is a serial chain of sphere-swept segments (capsules). Link k runs
from joint k to joint k+1 and carries radius ``link_radii[k]``. Planar (2D)
arms rotate every joint about the plane normal; 3D arms rotate joint k about
``joint_axes[k]`` in the frame accumulated so far, with each link extending
along the rotated local x axis.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass

import numpy as np

from .geometry import point_segment_distance


def _f64(x):
    return np.asarray(x, dtype=np.float64)


@dataclass(frozen=True)
class RobotModel:
    link_lengths: np.ndarray
    link_radii: np.ndarray
    joint_lower: np.ndarray
    joint_upper: np.ndarray
    vel_max: np.ndarray
    acc_max: np.ndarray
    workspace_dim: int = 2
    base: np.ndarray | None = None
    joint_axes: tuple | None = None

    def __post_init__(self):
        for name in ("link_lengths", "link_radii", "joint_lower", "joint_upper",
                     "vel_max", "acc_max"):
            arr = _f64(getattr(self, name))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        n = self.dof
        if n < 1:
            raise ValueError("robot needs at least one joint")
        for name in ("link_radii", "joint_lower", "joint_upper", "vel_max", "acc_max"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match dof {n}")
        if self.workspace_dim not in (2, 3):
            raise ValueError("workspace_dim must be 2 or 3")
        if np.any(self.link_lengths <= 0) or np.any(self.link_radii <= 0):
            raise ValueError("link lengths and radii must be positive")
        if np.any(self.joint_lower > self.joint_upper):
            raise ValueError("joint_lower must not exceed joint_upper")
        if np.any(self.vel_max <= 0) or np.any(self.acc_max <= 0):
            raise ValueError("velocity and acceleration limits must be positive")
        base = np.zeros(self.workspace_dim) if self.base is None else _f64(self.base)
        if base.shape != (self.workspace_dim,):
            raise ValueError("base must match workspace_dim")
        base.flags.writeable = False
        object.__setattr__(self, "base", base)
        if self.workspace_dim == 3:
            axes = self.joint_axes or tuple("zy"[k % 2] for k in range(n))
            if len(axes) != n or any(ax not in ("x", "y", "z") for ax in axes):
                raise ValueError("joint_axes must name x, y or z per joint")
            object.__setattr__(self, "joint_axes", tuple(axes))
        else:
            object.__setattr__(self, "joint_axes", None)

    @property
    def dof(self) -> int:
        return len(self.link_lengths)

    def signature(self) -> str:
        """Stable hash binding datasets and trained weights to this model."""
        payload = {
            "lengths": self.link_lengths.tolist(),
            "radii": self.link_radii.tolist(),
            "lower": self.joint_lower.tolist(),
            "upper": self.joint_upper.tolist(),
            "vel": self.vel_max.tolist(),
            "acc": self.acc_max.tolist(),
            "dim": self.workspace_dim,
            "base": self.base.tolist(),
            "axes": list(self.joint_axes) if self.joint_axes else None,
        }
        blob = json.dumps(payload, sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:16]

    def to_dict(self) -> dict:
        return {
            "dof": self.dof,
            "workspace_dim": self.workspace_dim,
            "link_lengths": self.link_lengths.tolist(),
            "link_radii": self.link_radii.tolist(),
            "joint_lower": self.joint_lower.tolist(),
            "joint_upper": self.joint_upper.tolist(),
            "vel_max": self.vel_max.tolist(),
            "acc_max": self.acc_max.tolist(),
            "base": self.base.tolist(),
            "joint_axes": list(self.joint_axes) if self.joint_axes else None,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RobotModel":
        return cls(
            link_lengths=d["link_lengths"],
            link_radii=d["link_radii"],
            joint_lower=d["joint_lower"],
            joint_upper=d["joint_upper"],
            vel_max=d["vel_max"],
            acc_max=d["acc_max"],
            workspace_dim=d.get("workspace_dim", 2),
            base=d.get("base"),
            joint_axes=tuple(d["joint_axes"]) if d.get("joint_axes") else None,
        )


@dataclass(frozen=True)
class CapsuleChain:
    """Workspace pose of the arm: joint positions plus per-link radii."""

    points: np.ndarray   # (dof + 1, dim)
    radii: np.ndarray    # (dof,)

    @property
    def segments(self):
        return [(self.points[k], self.points[k + 1], float(self.radii[k]))
                for k in range(len(self.radii))]


def _check_q(model: RobotModel, q) -> np.ndarray:
    q = _f64(q)
    if q.shape != (model.dof,):
        raise ValueError(f"configuration has shape {q.shape}, expected ({model.dof},)")
    if not np.all(np.isfinite(q)):
        raise ValueError("configuration must be finite")
    return q


_AXIS_INDEX = {"x": 0, "y": 1, "z": 2}


def _axis_rot_batch(axis: str, angles: np.ndarray) -> np.ndarray:
    """(M, 3, 3) rotation matrices about a principal axis."""
    c = np.cos(angles)
    s = np.sin(angles)
    m = len(angles)
    R = np.zeros((m, 3, 3))
    i = _AXIS_INDEX[axis]
    j, k = (i + 1) % 3, (i + 2) % 3
    R[:, i, i] = 1.0
    R[:, j, j] = c
    R[:, k, k] = c
    R[:, k, j] = s
    R[:, j, k] = -s
    return R


def fk_points_batch(model: RobotModel, Q) -> np.ndarray:
    """Joint positions for a batch of configurations: (M, dof + 1, dim)."""
    Q = np.atleast_2d(_f64(Q))
    if Q.shape[1] != model.dof:
        raise ValueError(f"configuration batch has {Q.shape[1]} columns, expected {model.dof}")
    m = Q.shape[0]
    n = model.dof
    if model.workspace_dim == 2:
        theta = np.cumsum(Q, axis=1)
        steps = model.link_lengths[None, :, None] * np.stack(
            [np.cos(theta), np.sin(theta)], axis=2)
        pts = np.empty((m, n + 1, 2))
        pts[:, 0] = model.base
        pts[:, 1:] = model.base + np.cumsum(steps, axis=1)
        return pts
    R = np.tile(np.eye(3), (m, 1, 1))
    pts = np.empty((m, n + 1, 3))
    pts[:, 0] = model.base
    p = np.tile(model.base, (m, 1))
    for k in range(n):
        R = R @ _axis_rot_batch(model.joint_axes[k], Q[:, k])
        p = p + model.link_lengths[k] * R[:, :, 0]
        pts[:, k + 1] = p
    return pts


def forward_kinematics(model: RobotModel, q) -> CapsuleChain:
    q = _check_q(model, q)
    pts = fk_points_batch(model, q[None, :])[0]
    return CapsuleChain(points=pts, radii=model.link_radii)


def clearance_to_points(model: RobotModel, q, points) -> np.ndarray:
    """Signed distance from each workspace point to the robot surface.

    Negative where the point is inside some capsule. ``points``: (P, dim).
    """
    chain = forward_kinematics(model, q)
    points = _f64(points)
    best = None
    for a, b, r in chain.segments:
        d = point_segment_distance(points, a, b) - r
        best = d if best is None else np.minimum(best, d)
    return best


def surface_signed_distance(model: RobotModel, q, p) -> float:
    """Signed distance from a single workspace point to the robot surface."""
    p = _f64(p)
    if p.shape != (model.workspace_dim,):
        raise ValueError(f"point has shape {p.shape}, expected ({model.workspace_dim},)")
    return float(clearance_to_points(model, q, p[None, :])[0])


def random_configuration(model: RobotModel, rng: np.random.Generator) -> np.ndarray:
    """Uniform draw within the joint limits; deterministic given the generator."""
    return rng.uniform(model.joint_lower, model.joint_upper)
