// Browser entry point: canvas, websocket, pointer wiring.

import { CommandSender, SessionState } from "./client.js";
import { GestureController } from "./gestures.js";
import { fitViewport, renderFrame, toWorld, Viewport } from "./renderer.js";

function bootstrap(): void {
  const canvas = document.getElementById("workspace") as HTMLCanvasElement;
  const ctx = canvas.getContext("2d");
  if (!ctx) throw new Error("2d canvas unavailable");
  const statusEl = document.getElementById("status")!;
  const cInput = document.getElementById("c-value") as HTMLInputElement;
  const thrInput = document.getElementById("threshold") as HTMLInputElement;

  const url = new URLSearchParams(location.search).get("server")
    ?? `ws://${location.hostname || "127.0.0.1"}:8700/ws`;
  const socket = new WebSocket(url);
  const session = new SessionState();
  const sender = new CommandSender(socket, session);
  const gestures = new GestureController((cmd) => sender.send(cmd),
                                         session.obstacles);
  let view: Viewport | null = null;
  let cmdCounter = 0;

  socket.onopen = () => { statusEl.textContent = `connected to ${url}`; };
  socket.onclose = () => { statusEl.textContent = "disconnected"; };
  socket.onerror = () => { statusEl.textContent = "socket error"; };
  socket.onmessage = (ev: MessageEvent) => {
    if (typeof ev.data !== "string") return;
    if (session.applyRaw(ev.data) && session.scene && !view) {
      view = fitViewport(session.scene.grid, canvas.width, canvas.height);
    }
  };

  const pointerWorld = (ev: PointerEvent): [number, number] | null => {
    if (!view) return null;
    const rect = canvas.getBoundingClientRect();
    return toWorld(view, ev.clientX - rect.left, ev.clientY - rect.top);
  };

  canvas.addEventListener("pointerdown", (ev) => {
    const p = pointerWorld(ev);
    if (p) gestures.pointerDown(p[0], p[1]);
  });
  canvas.addEventListener("pointermove", (ev) => {
    const p = pointerWorld(ev);
    if (p) gestures.pointerMove(p[0], p[1]);
  });
  canvas.addEventListener("pointerup", (ev) => {
    const p = pointerWorld(ev);
    if (p) gestures.pointerUp(p[0], p[1]);
  });
  window.addEventListener("keydown", (ev) => {
    if (ev.key === "Escape") gestures.cancel();
  });

  const applyConfig = () => {
    cmdCounter += 1;
    sender.send({
      type: "set-config",
      command_id: `cfg-${cmdCounter}`,
      c: parseInt(cInput.value, 10),
      threshold: parseFloat(thrInput.value),
    });
  };
  cInput.addEventListener("change", applyConfig);
  thrInput.addEventListener("change", applyConfig);

  const draw = () => {
    if (view && session.scene) {
      renderFrame(ctx as never, view, session.frame(gestures.preview()));
      if (session.lastError) statusEl.textContent = session.lastError;
    }
    requestAnimationFrame(draw);
  };
  requestAnimationFrame(draw);
}

window.addEventListener("DOMContentLoaded", bootstrap);
