"""Simulated plan-smooth-execute loop with interactive obstacles.

One coordinator owns the loop state. Each tick it advances the execution
clock, refreshes occupancy from scripted and interactive obstacles, checks
the remaining trajectory against the new snapshot, and replans from the
current configuration when the snapshot invalidates it. Obstacle commands
arrive over a message channel and apply at tick boundaries only, so every
run is replayable from the command log.

Wire protocol (JSON over a websocket): server messages carry a monotonic
``seq`` and a ``type`` of state | trajectory | occupancy | timing | scene |
ack | error. Client messages: obstacle add/move/remove commands (idempotent
per command id), pause/resume, and set-config for smoothing parameters.
"""

from __future__ import annotations

import asyncio
import base64
import time
from dataclasses import dataclass, field

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .oracle import verify_trajectory
from .planner import plan
from .robot import forward_kinematics
from .scene import Scene, step_obstacles
from .smoother import SmootherError, SmoothingConfig, smooth
from .voxelgrid import shape_from_dict


@dataclass
class LoopConfig:
    tick: float = 0.05
    smoothing: SmoothingConfig = field(default_factory=SmoothingConfig)
    planner_seed: int = 0
    planner_max_iters: int = 4000


def _tip_polyline(model, traj, n=60):
    ts = np.linspace(0.0, traj.duration, n) if traj.duration > 0 else np.array([0.0])
    Q, _ = traj.evaluate_batch(ts)
    tips = [forward_kinematics(model, q).points[-1].tolist() for q in Q]
    return tips


def _path_tip_polyline(model, path):
    return [forward_kinematics(model, q).points[-1].tolist() for q in path.waypoints]


class RealtimeLoop:
    """Deterministic coordinator for the A-to-B looping robot."""

    def __init__(self, scene: Scene, clearance_model, cfg: LoopConfig | None = None,
                 point_a="A", point_b="B"):
        if point_a not in scene.configs or point_b not in scene.configs:
            raise ValueError(f"scene must name configurations {point_a!r} and {point_b!r}")
        self.scene = scene
        self.clearance_model = clearance_model
        self.cfg = cfg or LoopConfig()
        self.points = {point_a: scene.configs[point_a], point_b: scene.configs[point_b]}
        self._seq = 0
        self.sim_t = 0.0
        self.exec_t = 0.0
        self.status = "replanning"
        self.paused = False
        self.target = point_b
        self.q_current = scene.configs[point_a].copy()
        self.trajectory = None
        self.planned_path = None
        self.occupancy = None
        self.occupancy_stamp = -1.0
        self.trajectory_snapshot = None   # occupancy the current trajectory was verified under
        self.overrides = {}
        self.seen_commands = set()
        self.pending = []
        self.events = []

    # -- commands --------------------------------------------------------

    def submit(self, command: dict) -> None:
        """Queue a client command; applied at the next tick boundary."""
        self.pending.append(command)

    def _ack(self, command, ok, reason=None):
        msg = {"type": "ack", "command_id": command.get("command_id"), "ok": ok}
        if reason:
            msg["reason"] = reason
        self._emit(msg)

    def _apply_obstacle(self, cmd) -> None:
        cid = cmd.get("command_id")
        if cid is not None and cid in self.seen_commands:
            self._ack(cmd, True, "duplicate command id; already applied")
            return
        action = cmd.get("action")
        shape_id = cmd.get("id")
        if not shape_id:
            self._ack(cmd, False, "missing obstacle id")
            return
        try:
            if action == "add":
                self.overrides[shape_id] = shape_from_dict(cmd["shape"])
            elif action == "move":
                known = shape_id in self.overrides and self.overrides[shape_id] is not None
                scripted = any(d.shape_id == shape_id for d in self.scene.dynamic_shapes)
                if not known and not scripted:
                    self._ack(cmd, False, f"unknown obstacle id {shape_id!r}")
                    return
                base = self.overrides.get(shape_id)
                if base is None:
                    base = next(d.shape for d in self.scene.dynamic_shapes
                                if d.shape_id == shape_id)
                self.overrides[shape_id] = base.moved_to(np.asarray(cmd["center"]))
            elif action == "remove":
                self.overrides[shape_id] = None
            else:
                self._ack(cmd, False, f"unknown action {action!r}")
                return
        except (KeyError, ValueError, TypeError) as exc:
            self._ack(cmd, False, f"malformed command: {exc}")
            return
        if cid is not None:
            self.seen_commands.add(cid)
        self._ack(cmd, True)

    def _apply_commands(self) -> None:
        pending, self.pending = self.pending, []
        for cmd in pending:
            kind = cmd.get("type")
            if kind == "obstacle":
                self._apply_obstacle(cmd)
            elif kind == "pause":
                self.paused = True
                self._ack(cmd, True)
            elif kind == "resume":
                self.paused = False
                self._ack(cmd, True)
            elif kind == "set-config":
                if "c" in cmd:
                    self.cfg.smoothing.c = int(cmd["c"])
                if "threshold" in cmd:
                    self.cfg.smoothing.clearance_threshold = float(cmd["threshold"])
                self._ack(cmd, True)
            else:
                self._ack(cmd, False, f"unknown message type {cmd.get('type')!r}")

    # -- events ----------------------------------------------------------

    def _emit(self, msg: dict) -> None:
        self._seq += 1
        msg["seq"] = self._seq
        msg["sim_t"] = round(self.sim_t, 9)
        self.events.append(msg)

    def _emit_state(self) -> None:
        chain = forward_kinematics(self.scene.robot, self.q_current)
        self._emit({
            "type": "state",
            "q": self.q_current.tolist(),
            "segments": [[a.tolist(), b.tolist(), r] for a, b, r in chain.segments],
            "target": self.target,
            "status": self.status,
            "exec_t": round(self.exec_t, 9),
        })

    def _emit_occupancy(self) -> None:
        self._emit({
            "type": "occupancy",
            "dims": list(self.occupancy.dims),
            "edge": self.scene.grid.edge,
            "origin": self.scene.grid.origin.tolist(),
            "bits_b64": base64.b64encode(np.packbits(self.occupancy.bits).tobytes()).decode(),
            "count": self.occupancy.count(),
        })

    def _emit_trajectory(self, report) -> None:
        self._emit({
            "type": "trajectory",
            "trajectory": self.trajectory.to_dict(),
            "duration": self.trajectory.duration,
            "planned_tips": _path_tip_polyline(self.scene.robot, self.planned_path),
            "smoothed_tips": _tip_polyline(self.scene.robot, self.trajectory),
            "target": self.target,
            "report": report.to_dict() if report else None,
        })

    # -- core loop -------------------------------------------------------

    def scene_message(self) -> dict:
        robot = self.scene.robot
        marks = {name: forward_kinematics(robot, q).points[-1].tolist()
                 for name, q in self.points.items()}
        self._emit({
            "type": "scene",
            "robot": robot.to_dict(),
            "grid": self.scene.grid.to_dict(),
            "points": {k: v.tolist() for k, v in self.points.items()},
            "marks": marks,
            "tick": self.cfg.tick,
        })
        return self.events[-1]

    def _refresh_occupancy(self) -> bool:
        occ = step_obstacles(self.scene, self.sim_t, self.overrides)
        changed = self.occupancy is None or occ != self.occupancy
        if changed:
            self.occupancy = occ
            self.occupancy_stamp = self.sim_t
            self._emit_occupancy()
        return changed

    def _replan(self) -> bool:
        """Plan and smooth from the current configuration to the target."""
        goal = self.points[self.target]
        t0 = time.perf_counter()
        try:
            path = plan(self.scene.robot, self.scene.grid, self.occupancy,
                        self.q_current, goal, seed=self.cfg.planner_seed,
                        max_iters=self.cfg.planner_max_iters)
        except ValueError as exc:
            self._emit({"type": "error", "message": f"planning failed: {exc}"})
            return False
        plan_ms = (time.perf_counter() - t0) * 1e3
        if path is None:
            self._emit({"type": "error", "message": "planner timed out"})
            return False
        t0 = time.perf_counter()
        try:
            traj, report = smooth(self.scene.robot, self.scene.grid, self.occupancy,
                                  path, self.clearance_model, self.cfg.smoothing)
        except SmootherError as exc:
            self._emit({"type": "error", "message": str(exc)})
            return False
        smooth_ms = (time.perf_counter() - t0) * 1e3
        self.trajectory = traj
        self.planned_path = path
        self.trajectory_snapshot = self.occupancy
        self.exec_t = 0.0
        self._emit_trajectory(report)
        self._emit({
            "type": "timing",
            "plan_ms": round(plan_ms, 3),
            "smooth_ms": round(smooth_ms, 3),
            "inference_ms": round(report.inference_ms, 3),
            "check_ms": round(report.check_ms, 3),
        })
        return True

    def step(self) -> list:
        """Advance one tick; returns the events it produced."""
        mark = len(self.events)
        self.sim_t += self.cfg.tick
        self._apply_commands()
        self._refresh_occupancy()

        if self.paused:
            self._emit_state()
            return self.events[mark:]

        if self.trajectory is None:
            self.status = "replanning"
            if not self._replan():
                self.status = "blocked"
            else:
                self.status = "executing"
        else:
            self.exec_t = min(self.exec_t + self.cfg.tick, self.trajectory.duration)
            q, _ = self.trajectory.evaluate(self.exec_t)
            self.q_current = q
            if self.exec_t >= self.trajectory.duration - 1e-12:
                # Arrived: swap targets and plan the next leg.
                self.target = next(k for k in self.points if k != self.target)
                self.trajectory = None
                self.status = "replanning"
                if self._replan():
                    self.status = "executing"
                else:
                    self.status = "blocked"
            else:
                bad = verify_trajectory(self.scene.robot, self.trajectory,
                                        self.scene.grid, self.occupancy,
                                        self.cfg.smoothing.dt_sample,
                                        t_start=self.exec_t)
                if bad is not None:
                    # Drop the invalidated trajectory and hold here; if the
                    # replan fails the robot stays put and retries next tick.
                    self.trajectory = None
                    self.status = "replanning"
                    self._emit({"type": "error",
                                "message": f"trajectory invalidated at t={bad:.3f}"})
                    if self._replan():
                        self.status = "executing"
                    else:
                        self.status = "blocked"
        self._emit_state()
        return self.events[mark:]

    def run(self, n_ticks: int):
        """Generator over per-tick event batches."""
        for _ in range(n_ticks):
            yield self.step()


def run_loop(scene: Scene, clearance_model, cfg: LoopConfig | None = None,
             n_ticks: int = 200):
    """Run the loop for a fixed number of ticks; yields events as they occur."""
    loop = RealtimeLoop(scene, clearance_model, cfg)
    loop.scene_message()
    yield from loop.events
    for batch in loop.run(n_ticks):
        yield from batch


def apply_obstacle_command(loop: RealtimeLoop, command: dict) -> None:
    """Queue an obstacle command; it takes effect at the next tick."""
    loop.submit(command)


# -- websocket front end ------------------------------------------------

def build_app(scene: Scene, clearance_model, cfg: LoopConfig | None = None):
    """FastAPI app exposing the loop over a websocket at /ws."""
    app = FastAPI(title="cfsmooth realtime service")
    app.state.loop_cfg = cfg or LoopConfig()

    @app.get("/health")
    def health():
        return {"ok": True, "scene": scene.name}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        loop = RealtimeLoop(scene, clearance_model, app.state.loop_cfg)
        loop.scene_message()
        for event in loop.events:
            await ws.send_json(event)

        async def reader():
            while True:
                msg = await ws.receive_json()
                loop.submit(msg)

        reader_task = asyncio.create_task(reader())
        try:
            while True:
                t0 = time.perf_counter()
                events = await asyncio.to_thread(loop.step)
                for event in events:
                    await ws.send_json(event)
                elapsed = time.perf_counter() - t0
                await asyncio.sleep(max(loop.cfg.tick - elapsed, 0.0))
        except (WebSocketDisconnect, RuntimeError):
            pass
        finally:
            reader_task.cancel()

    return app
