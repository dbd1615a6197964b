"""Time-parameterized motion: per-joint minimum-time parabolic profiles.

Every piece of motion is a rest-to-rest segment: each joint follows a
bang-bang or trapezoidal velocity profile, all joints synchronized to the
slowest one by lowering peak velocities while keeping acceleration at its
bound. Positions are piecewise quadratic in time, velocities piecewise
linear.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .robot import RobotModel, _check_q

_T_EPS = 1e-12


@dataclass(frozen=True)
class PiecewiseLinearPath:
    """Straight joint-space segments between waypoints (rows of (W, N))."""

    waypoints: np.ndarray

    def __post_init__(self):
        wp = np.atleast_2d(np.asarray(self.waypoints, dtype=np.float64))
        if wp.shape[0] < 2:
            raise ValueError("path needs at least two waypoints")
        if not np.all(np.isfinite(wp)):
            raise ValueError("waypoints must be finite")
        wp.flags.writeable = False
        object.__setattr__(self, "waypoints", wp)

    def __len__(self) -> int:
        return self.waypoints.shape[0]


def _min_time_1d(d: float, v: float, a: float) -> float:
    """Minimum rest-to-rest duration to cover |displacement| d."""
    if d <= 0.0:
        return 0.0
    if d <= v * v / a:
        return 2.0 * np.sqrt(d / a)
    return d / v + v / a


@dataclass(frozen=True)
class TrajectorySegment:
    """One synchronized rest-to-rest move; per-joint phase parameters."""

    q0: np.ndarray
    q1: np.ndarray
    duration: float
    accel: np.ndarray     # signed, zero for stationary joints
    v_peak: np.ndarray    # signed
    t_acc: np.ndarray
    t_cruise: np.ndarray

    def evaluate_batch(self, taus) -> tuple[np.ndarray, np.ndarray]:
        """Positions and velocities at local times ``taus`` (clamped to [0, T])."""
        taus = np.asarray(taus, dtype=np.float64)
        t = np.clip(taus, 0.0, self.duration)[:, None]
        ta = self.t_acc[None, :]
        tc = self.t_cruise[None, :]
        a = self.accel[None, :]
        vp = self.v_peak[None, :]
        q0 = self.q0[None, :]
        q1 = self.q1[None, :]

        in_acc = t < ta
        in_cruise = (t >= ta) & (t < ta + tc)
        td = self.duration - t    # time remaining, mirrors the accel phase

        q_acc = q0 + 0.5 * a * t * t
        q_cru = q0 + 0.5 * a * ta * ta + vp * (t - ta)
        q_dec = q1 - 0.5 * a * td * td
        q = np.where(in_acc, q_acc, np.where(in_cruise, q_cru, q_dec))

        v = np.where(in_acc, a * t, np.where(in_cruise, vp, a * td))
        return q, v


class ParabolicTrajectory:
    """Sequence of rest-to-rest segments; total duration is their sum."""

    __slots__ = ("segments", "duration", "_ends")

    def __init__(self, segments):
        self.segments = tuple(segments)
        if not self.segments:
            raise ValueError("trajectory needs at least one segment")
        durs = np.array([s.duration for s in self.segments], dtype=np.float64)
        self._ends = np.cumsum(durs)
        self.duration = float(self._ends[-1])

    @property
    def start(self) -> np.ndarray:
        return self.segments[0].q0

    @property
    def end(self) -> np.ndarray:
        return self.segments[-1].q1

    def evaluate(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        q, v = self.evaluate_batch(np.array([t]))
        return q[0], v[0]

    def evaluate_batch(self, ts) -> tuple[np.ndarray, np.ndarray]:
        ts = np.asarray(ts, dtype=np.float64)
        if np.any(ts < -_T_EPS) or np.any(ts > self.duration + _T_EPS):
            raise ValueError(f"time out of range [0, {self.duration}]")
        ts = np.clip(ts, 0.0, self.duration)
        idx = np.searchsorted(self._ends, ts, side="left")
        idx = np.minimum(idx, len(self.segments) - 1)
        n = self.segments[0].q0.shape[0]
        q = np.empty((len(ts), n))
        v = np.empty((len(ts), n))
        for k in np.unique(idx):
            seg = self.segments[k]
            mask = idx == k
            start = self._ends[k] - seg.duration
            qk, vk = seg.evaluate_batch(ts[mask] - start)
            q[mask] = qk
            v[mask] = vk
        return q, v

    def to_dict(self) -> dict:
        return {
            "duration": self.duration,
            "segments": [
                {
                    "q0": s.q0.tolist(),
                    "q1": s.q1.tolist(),
                    "duration": s.duration,
                    "accel": s.accel.tolist(),
                    "v_peak": s.v_peak.tolist(),
                    "t_acc": s.t_acc.tolist(),
                    "t_cruise": s.t_cruise.tolist(),
                }
                for s in self.segments
            ],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ParabolicTrajectory":
        segs = [
            TrajectorySegment(
                q0=np.asarray(s["q0"], dtype=np.float64),
                q1=np.asarray(s["q1"], dtype=np.float64),
                duration=float(s["duration"]),
                accel=np.asarray(s["accel"], dtype=np.float64),
                v_peak=np.asarray(s["v_peak"], dtype=np.float64),
                t_acc=np.asarray(s["t_acc"], dtype=np.float64),
                t_cruise=np.asarray(s["t_cruise"], dtype=np.float64),
            )
            for s in d["segments"]
        ]
        return cls(segs)


def _segment_between(model: RobotModel, q0: np.ndarray, q1: np.ndarray) -> TrajectorySegment:
    delta = q1 - q0
    dist = np.abs(delta)
    per_joint = [_min_time_1d(float(d), float(v), float(a))
                 for d, v, a in zip(dist, model.vel_max, model.acc_max)]
    T = max(per_joint) if per_joint else 0.0

    n = model.dof
    accel = np.zeros(n)
    v_peak = np.zeros(n)
    t_acc = np.zeros(n)
    t_cruise = np.full(n, T)
    if T > 0.0:
        for j in range(n):
            d = float(dist[j])
            if d == 0.0:
                continue
            a = float(model.acc_max[j])
            # Peak velocity that stretches this joint to exactly T with the
            # acceleration pinned at its bound (smaller quadratic root).
            disc = max(a * a * T * T - 4.0 * a * d, 0.0)
            vp = 0.5 * (a * T - np.sqrt(disc))
            sign = 1.0 if delta[j] > 0 else -1.0
            accel[j] = sign * a
            v_peak[j] = sign * vp
            t_acc[j] = vp / a
            t_cruise[j] = max(T - 2.0 * t_acc[j], 0.0)
    return TrajectorySegment(q0=q0.copy(), q1=q1.copy(), duration=T, accel=accel,
                             v_peak=v_peak, t_acc=t_acc, t_cruise=t_cruise)


def min_time_rest_to_rest(model: RobotModel, q0, q1) -> ParabolicTrajectory:
    """Fastest synchronized rest-to-rest move between two configurations."""
    q0 = _check_q(model, q0)
    q1 = _check_q(model, q1)
    return ParabolicTrajectory([_segment_between(model, q0, q1)])


def time_parameterize_path(model: RobotModel, path: PiecewiseLinearPath) -> ParabolicTrajectory:
    """Chain of minimum-time segments over consecutive waypoint pairs."""
    wp = path.waypoints
    segs = [_segment_between(model, wp[k], wp[k + 1]) for k in range(len(wp) - 1)]
    return ParabolicTrajectory(segs)


def concatenate(trajs) -> ParabolicTrajectory:
    segs = []
    for t in trajs:
        segs.extend(t.segments)
    return ParabolicTrajectory(segs)
