// Pure canvas drawing. Everything here is a function of the received state;
// no planning or smoothing logic lives client-side, so replaying a server
// event log reproduces the pixels exactly.

import { GridInfo, SceneMsg, StateMsg, TimingMsg, TrajectoryMsg } from "./protocol.js";
import { cellCoords } from "./occupancy.js";

// Subset of CanvasRenderingContext2D the renderer touches; tests substitute
// a recording stub.
export interface Draw2D {
  fillStyle: string;
  strokeStyle: string;
  lineWidth: number;
  lineCap: string;
  font: string;
  clearRect(x: number, y: number, w: number, h: number): void;
  fillRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface Viewport {
  width: number;
  height: number;
  scale: number;      // pixels per meter
  worldX: number;     // world coordinate at the left edge
  worldY: number;     // world coordinate at the bottom edge
}

export const COLORS = {
  background: "#11151c",
  gridLine: "#1f2630",
  occupied: "#3b6ea5",
  arm: "#e8e3d3",
  planned: "#44c767",
  smoothed: "#ff5fa2",
  marker: "#f2c14e",
  text: "#c9d1d9",
  preview: "#f2c14e",
};

export function fitViewport(grid: GridInfo, width: number, height: number,
                            marginFrac = 0.3): Viewport {
  const spanX = grid.dims[0] * grid.edge;
  const spanY = grid.dims[1] * grid.edge;
  const margin = Math.max(spanX, spanY) * marginFrac;
  const worldW = spanX + 2 * margin;
  const worldH = spanY + 2 * margin;
  const scale = Math.min(width / worldW, height / worldH);
  return {
    width, height, scale,
    worldX: grid.origin[0] - margin,
    worldY: grid.origin[1] - margin,
  };
}

export function toScreen(view: Viewport, p: number[]): [number, number] {
  return [
    (p[0] - view.worldX) * view.scale,
    view.height - (p[1] - view.worldY) * view.scale,
  ];
}

export function toWorld(view: Viewport, x: number, y: number): [number, number] {
  return [
    x / view.scale + view.worldX,
    (view.height - y) / view.scale + view.worldY,
  ];
}

function polyline(draw: Draw2D, view: Viewport, pts: number[][],
                  color: string, width: number): void {
  if (pts.length < 2) return;
  draw.strokeStyle = color;
  draw.lineWidth = width;
  draw.lineCap = "round";
  draw.beginPath();
  const [x0, y0] = toScreen(view, pts[0]);
  draw.moveTo(x0, y0);
  for (let i = 1; i < pts.length; i++) {
    const [x, y] = toScreen(view, pts[i]);
    draw.lineTo(x, y);
  }
  draw.stroke();
}

export interface FrameState {
  scene: SceneMsg;
  state: StateMsg | null;
  occupancy: Uint8Array | null;
  trajectory: TrajectoryMsg | null;
  timing: TimingMsg | null;
  preview: { center: number[]; half: number[] } | null;
  obstacles: Map<string, { center: number[]; half: number[] }>;
}

export function renderFrame(draw: Draw2D, view: Viewport, frame: FrameState): void {
  const grid = frame.scene.grid;
  draw.fillStyle = COLORS.background;
  draw.clearRect(0, 0, view.width, view.height);
  draw.fillRect(0, 0, view.width, view.height);

  // Grid outline.
  const [gx, gy] = toScreen(view, grid.origin);
  const spanX = grid.dims[0] * grid.edge * view.scale;
  const spanY = grid.dims[1] * grid.edge * view.scale;
  draw.strokeStyle = COLORS.gridLine;
  draw.lineWidth = 1;
  draw.beginPath();
  draw.moveTo(gx, gy);
  draw.lineTo(gx + spanX, gy);
  draw.lineTo(gx + spanX, gy - spanY);
  draw.lineTo(gx, gy - spanY);
  draw.lineTo(gx, gy);
  draw.stroke();

  // Occupied cells.
  if (frame.occupancy) {
    draw.fillStyle = COLORS.occupied;
    const cellPx = grid.edge * view.scale;
    for (let i = 0; i < frame.occupancy.length; i++) {
      if (!frame.occupancy[i]) continue;
      const [cx, cy] = cellCoords(i, grid.dims);
      const world = [grid.origin[0] + cx * grid.edge,
                     grid.origin[1] + (cy + 1) * grid.edge];
      const [sx, sy] = toScreen(view, world);
      draw.fillRect(sx, sy, cellPx, cellPx);
    }
  }

  // Client-echoed obstacles plus any drag preview.
  for (const obstacle of frame.obstacles.values()) {
    drawBox(draw, view, obstacle.center, obstacle.half, COLORS.occupied);
  }
  if (frame.preview) {
    drawBox(draw, view, frame.preview.center, frame.preview.half, COLORS.preview);
  }

  // Planned path (piecewise linear) and smoothed trajectory tip traces.
  if (frame.trajectory) {
    polyline(draw, view, frame.trajectory.planned_tips, COLORS.planned, 2);
    polyline(draw, view, frame.trajectory.smoothed_tips, COLORS.smoothed, 3);
  }

  // Point markers.
  for (const [name, mark] of Object.entries(frame.scene.marks)) {
    const [mx, my] = toScreen(view, mark);
    draw.fillStyle = COLORS.marker;
    draw.beginPath();
    draw.arc(mx, my, 5, 0, 2 * Math.PI);
    draw.fill();
    draw.fillText(name, mx + 8, my - 8);
  }

  // The arm itself: one thick round-capped stroke per capsule link.
  if (frame.state) {
    for (const [a, b, radius] of frame.state.segments) {
      draw.strokeStyle = COLORS.arm;
      draw.lineWidth = Math.max(2 * radius * view.scale, 2);
      draw.lineCap = "round";
      draw.beginPath();
      const [ax, ay] = toScreen(view, a);
      const [bx, by] = toScreen(view, b);
      draw.moveTo(ax, ay);
      draw.lineTo(bx, by);
      draw.stroke();
    }
  }

  // Timing overlay.
  draw.fillStyle = COLORS.text;
  draw.font = "12px monospace";
  const status = frame.state ? frame.state.status : "connecting";
  const target = frame.state ? frame.state.target : "-";
  draw.fillText(`status ${status}  target ${target}`, 10, 16);
  if (frame.scene.robot.workspace_dim === 3) {
    draw.fillText("top-down projection of a 3D scene", 10, view.height - 10);
  }
  if (frame.timing) {
    draw.fillText(
      `plan ${frame.timing.plan_ms.toFixed(0)} ms  ` +
      `smooth ${frame.timing.smooth_ms.toFixed(0)} ms  ` +
      `(infer ${frame.timing.inference_ms.toFixed(0)} / ` +
      `check ${frame.timing.check_ms.toFixed(0)})`,
      10, 32);
  }
}

function drawBox(draw: Draw2D, view: Viewport, center: number[], half: number[],
                 color: string): void {
  const [sx, sy] = toScreen(view, [center[0] - half[0], center[1] + half[1]]);
  draw.strokeStyle = color;
  draw.lineWidth = 2;
  draw.beginPath();
  const w = 2 * half[0] * view.scale;
  const h = 2 * half[1] * view.scale;
  draw.moveTo(sx, sy);
  draw.lineTo(sx + w, sy);
  draw.lineTo(sx + w, sy + h);
  draw.lineTo(sx, sy + h);
  draw.lineTo(sx, sy);
  draw.stroke();
}
