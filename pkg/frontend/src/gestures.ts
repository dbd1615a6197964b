// Pointer gestures over the workspace: dragging on empty space rubber-bands
// a new box obstacle (committed as a single add command on release); dragging
// an existing obstacle streams throttled move commands. Escape cancels the
// gesture without sending anything.

import { BoxShape, ObstacleCmd } from "./protocol.js";

export interface ObstacleEcho {
  center: number[];
  half: number[];
}

const MIN_HALF = 0.02;
export const MOVE_THROTTLE_MS = 50; // at most 20 move commands per second

export class GestureController {
  private dragStart: [number, number] | null = null;
  private dragCurrent: [number, number] | null = null;
  private movingId: string | null = null;
  private lastMoveSent = -Infinity;
  private counter = 0;

  constructor(
    private send: (cmd: ObstacleCmd) => void,
    private obstacles: Map<string, ObstacleEcho>,
    private now: () => number = () => Date.now(),
  ) {}

  private freshId(prefix: string): string {
    this.counter += 1;
    return `${prefix}-${this.counter}`;
  }

  private hitTest(x: number, y: number): string | null {
    for (const [id, box] of this.obstacles) {
      if (Math.abs(x - box.center[0]) <= box.half[0] &&
          Math.abs(y - box.center[1]) <= box.half[1]) {
        return id;
      }
    }
    return null;
  }

  pointerDown(x: number, y: number): void {
    this.dragStart = [x, y];
    this.dragCurrent = [x, y];
    this.movingId = this.hitTest(x, y);
  }

  pointerMove(x: number, y: number): void {
    if (!this.dragStart) return;
    this.dragCurrent = [x, y];
    if (this.movingId) {
      const t = this.now();
      if (t - this.lastMoveSent >= MOVE_THROTTLE_MS) {
        this.lastMoveSent = t;
        this.send({
          type: "obstacle",
          command_id: this.freshId("mv"),
          action: "move",
          id: this.movingId,
          center: [x, y],
        });
        const echo = this.obstacles.get(this.movingId);
        if (echo) echo.center = [x, y];
      }
    }
  }

  pointerUp(x: number, y: number): void {
    if (!this.dragStart) return;
    const start = this.dragStart;
    this.dragStart = null;
    this.dragCurrent = null;
    if (this.movingId) {
      this.movingId = null;
      return;
    }
    const shape = rubberBand(start, [x, y]);
    const id = this.freshId("ob");
    this.send({
      type: "obstacle",
      command_id: this.freshId("add"),
      action: "add",
      id,
      shape,
    });
  }

  cancel(): void {
    this.dragStart = null;
    this.dragCurrent = null;
    this.movingId = null;
  }

  /** Box under construction, for the renderer's preview layer. */
  preview(): { center: number[]; half: number[] } | null {
    if (!this.dragStart || !this.dragCurrent || this.movingId) return null;
    const shape = rubberBand(this.dragStart, this.dragCurrent);
    return { center: shape.center, half: shape.half };
  }

  get dragging(): boolean {
    return this.dragStart !== null;
  }
}

function rubberBand(a: [number, number], b: [number, number]): BoxShape {
  return {
    kind: "box",
    center: [(a[0] + b[0]) / 2, (a[1] + b[1]) / 2],
    half: [
      Math.max(Math.abs(b[0] - a[0]) / 2, MIN_HALF),
      Math.max(Math.abs(b[1] - a[1]) / 2, MIN_HALF),
    ],
  };
}
