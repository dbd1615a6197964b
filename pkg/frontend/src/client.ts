// Session state assembled from server messages, with an event log whose
// replay rebuilds the same state. The UI is a pure view over this.

import { decodeOccupancy } from "./occupancy.js";
import {
  AckMsg, ClientCmd, ObstacleCmd, SceneMsg, SequenceGate, ServerMsg, StateMsg,
  TimingMsg, TrajectoryMsg, parseServerMsg,
} from "./protocol.js";
import { FrameState } from "./renderer.js";

export class SessionState {
  scene: SceneMsg | null = null;
  state: StateMsg | null = null;
  trajectory: TrajectoryMsg | null = null;
  occupancy: Uint8Array | null = null;
  timing: TimingMsg | null = null;
  lastError: string | null = null;
  obstacles = new Map<string, { center: number[]; half: number[] }>();
  log: ServerMsg[] = [];

  private gate = new SequenceGate();
  private pendingObstacles = new Map<string, ObstacleCmd>();

  /** Apply one server message; returns false if it was stale or unknown. */
  apply(msg: ServerMsg): boolean {
    if (!this.gate.accept(msg)) return false;
    this.log.push(msg);
    switch (msg.type) {
      case "scene":
        this.scene = msg;
        break;
      case "state":
        this.state = msg;
        break;
      case "trajectory":
        this.trajectory = msg;
        break;
      case "occupancy":
        this.occupancy = decodeOccupancy(msg.bits_b64,
                                         msg.dims[0] * msg.dims[1]);
        break;
      case "timing":
        this.timing = msg;
        break;
      case "error":
        this.lastError = msg.message;
        break;
      case "ack":
        this.handleAck(msg);
        break;
    }
    return true;
  }

  applyRaw(raw: string): boolean {
    const msg = parseServerMsg(raw);
    if (!msg) return false;
    return this.apply(msg);
  }

  /** Track sent obstacle commands so acks can update the local echo. */
  registerCommand(cmd: ClientCmd): void {
    if (cmd.type !== "obstacle") return;
    this.pendingObstacles.set(cmd.command_id, cmd);
  }

  private handleAck(msg: AckMsg): void {
    const cmd = msg.command_id
      ? this.pendingObstacles.get(msg.command_id)
      : undefined;
    if (!cmd) return;
    this.pendingObstacles.delete(cmd.command_id);
    if (!msg.ok) {
      this.lastError = msg.reason ?? "command rejected";
      return;
    }
    if (cmd.action === "add" && cmd.shape) {
      this.obstacles.set(cmd.id, { center: cmd.shape.center, half: cmd.shape.half });
    } else if (cmd.action === "move" && cmd.center) {
      const echo = this.obstacles.get(cmd.id);
      if (echo) echo.center = cmd.center;
    } else if (cmd.action === "remove") {
      this.obstacles.delete(cmd.id);
    }
  }

  frame(preview: { center: number[]; half: number[] } | null = null): FrameState {
    if (!this.scene) throw new Error("no scene received yet");
    return {
      scene: this.scene,
      state: this.state,
      occupancy: this.occupancy,
      trajectory: this.trajectory,
      timing: this.timing,
      preview,
      obstacles: this.obstacles,
    };
  }
}

/** Rebuild a session purely from a recorded server event log. */
export function replay(log: ServerMsg[]): SessionState {
  const session = new SessionState();
  for (const msg of log) {
    session.apply(msg);
  }
  return session;
}

export interface Socketish {
  send(data: string): void;
}

export class CommandSender {
  constructor(private socket: Socketish, private session: SessionState) {}

  send(cmd: ClientCmd): void {
    this.session.registerCommand(cmd);
    this.socket.send(JSON.stringify(cmd));
  }
}
