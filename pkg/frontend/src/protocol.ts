// Wire protocol spoken with the realtime smoothing service. Every server
// message carries a monotonically increasing sequence number; anything that
// arrives out of order is stale and must be dropped, never rendered.

export interface RobotInfo {
  dof: number;
  workspace_dim: number;
  link_lengths: number[];
  link_radii: number[];
  base: number[];
}

export interface GridInfo {
  origin: number[];
  edge: number;
  dims: number[];
}

export interface SceneMsg {
  type: "scene";
  seq: number;
  sim_t: number;
  robot: RobotInfo;
  grid: GridInfo;
  points: Record<string, number[]>;
  marks: Record<string, number[]>;
  tick: number;
}

export interface StateMsg {
  type: "state";
  seq: number;
  sim_t: number;
  q: number[];
  segments: [number[], number[], number][];
  target: string;
  status: string;
  exec_t: number;
}

export interface TrajectoryMsg {
  type: "trajectory";
  seq: number;
  sim_t: number;
  duration: number;
  planned_tips: number[][];
  smoothed_tips: number[][];
  target: string;
}

export interface OccupancyMsg {
  type: "occupancy";
  seq: number;
  sim_t: number;
  dims: number[];
  edge: number;
  origin: number[];
  bits_b64: string;
  count: number;
}

export interface TimingMsg {
  type: "timing";
  seq: number;
  sim_t: number;
  plan_ms: number;
  smooth_ms: number;
  inference_ms: number;
  check_ms: number;
}

export interface AckMsg {
  type: "ack";
  seq: number;
  sim_t: number;
  command_id?: string;
  ok: boolean;
  reason?: string;
}

export interface ErrorMsg {
  type: "error";
  seq: number;
  sim_t: number;
  message: string;
}

export type ServerMsg =
  | SceneMsg
  | StateMsg
  | TrajectoryMsg
  | OccupancyMsg
  | TimingMsg
  | AckMsg
  | ErrorMsg;

export interface BoxShape {
  kind: "box";
  center: number[];
  half: number[];
}

export interface ObstacleCmd {
  type: "obstacle";
  command_id: string;
  action: "add" | "move" | "remove";
  id: string;
  shape?: BoxShape;
  center?: number[];
}

export interface SetConfigCmd {
  type: "set-config";
  command_id: string;
  c?: number;
  threshold?: number;
}

export interface PauseResumeCmd {
  type: "pause" | "resume";
  command_id: string;
}

export type ClientCmd = ObstacleCmd | SetConfigCmd | PauseResumeCmd;

const KNOWN_TYPES = new Set([
  "scene", "state", "trajectory", "occupancy", "timing", "ack", "error",
]);

export function parseServerMsg(raw: string): ServerMsg | null {
  let data: unknown;
  try {
    data = JSON.parse(raw);
  } catch {
    return null;
  }
  if (typeof data !== "object" || data === null) return null;
  const msg = data as Record<string, unknown>;
  if (typeof msg.type !== "string" || !KNOWN_TYPES.has(msg.type)) return null;
  if (typeof msg.seq !== "number") return null;
  return msg as unknown as ServerMsg;
}

/** Drops stale messages: only strictly increasing sequence numbers pass. */
export class SequenceGate {
  private last = 0;

  accept(msg: ServerMsg): boolean {
    if (msg.seq <= this.last) return false;
    this.last = msg.seq;
    return true;
  }

  get lastSeq(): number {
    return this.last;
  }
}
