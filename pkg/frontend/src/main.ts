// Page assembly: one scene canvas, two strip charts, status badges, and the
// pointer-to-obstacle drag loop. All state lives in the ViewModel; this file
// is wiring only.

import { PlaygroundClient, serviceUrl } from "./client";
import { drawPsiChart, drawQdotChart } from "./charts";
import {
  ArmCamera,
  PlanarCamera,
  boundsForState,
  isPlanarScene,
  mergeBounds,
  type Bounds,
  type Camera,
} from "./projection";
import {
  encodeControl,
  encodeObstacleUpdate,
  type ServerState,
  type Vec3,
} from "./protocol";
import { drawScene, shellRadius, type Ctx } from "./render";
import { Throttle } from "./throttle";
import { ViewModel } from "./viewmodel";

const vm = new ViewModel();
const url = serviceUrl(location.search);
const client = new PlaygroundClient(url, vm, (u) => new WebSocket(u));
client.connect();

const scene = document.getElementById("scene") as HTMLCanvasElement;
const psiCanvas = document.getElementById("psi-chart") as HTMLCanvasElement;
const qdotCanvas = document.getElementById("qdot-chart") as HTMLCanvasElement;
const statusBadge = document.getElementById("status")!;
const solverBadge = document.getElementById("solver")!;
const safetyBadge = document.getElementById("safety")!;

for (const [id, action] of [
  ["btn-pause", "pause"],
  ["btn-resume", "resume"],
  ["btn-reset", "reset"],
] as const) {
  document.getElementById(id)?.addEventListener("click", () => {
    client.send(encodeControl(action));
  });
}

let bounds: Bounds | null = null;
let planar = true;

function cameraFor(state: ServerState): Camera {
  const fresh = boundsForState(state);
  bounds = bounds ? mergeBounds(bounds, fresh) : fresh; // expand-only: no jitter
  planar = isPlanarScene(state);
  const vp = { width: scene.width, height: scene.height };
  return planar ? new PlanarCamera(bounds, vp) : new ArmCamera(bounds, vp);
}

// --- dragging ---------------------------------------------------------------

const sendUpdate = new Throttle<{ id: string; center: Vec3 }>(
  1000 / 60,
  (u) => client.send(encodeObstacleUpdate(u.id, u.center)),
);

function canvasPoint(ev: PointerEvent): { x: number; y: number } {
  const rect = scene.getBoundingClientRect();
  return {
    x: ((ev.clientX - rect.left) / rect.width) * scene.width,
    y: ((ev.clientY - rect.top) / rect.height) * scene.height,
  };
}

function pointerToWorld(cam: Camera, p: { x: number; y: number }, planeZ: number): Vec3 {
  if (cam instanceof PlanarCamera) {
    const [x, y] = cam.screenToWorld(p);
    return [x, y, 0];
  }
  return (cam as ArmCamera).screenToWorldOnPlane(p, planeZ);
}

scene.addEventListener("pointerdown", (ev) => {
  const state = vm.latest;
  if (!state) return;
  const cam = cameraFor(state);
  const p = canvasPoint(ev);
  for (const o of state.obstacles) {
    const c = cam.worldToScreen(o.center);
    const grabPx = Math.max(shellRadius(o, state.epsilon) * cam.scale, 12);
    if (Math.hypot(p.x - c.x, p.y - c.y) <= grabPx) {
      vm.drag = { obstacleId: o.id, pointer: p };
      scene.setPointerCapture(ev.pointerId);
      return;
    }
  }
});

scene.addEventListener("pointermove", (ev) => {
  const state = vm.latest;
  if (!state || !vm.drag) return;
  const cam = cameraFor(state);
  const p = canvasPoint(ev);
  vm.drag.pointer = p;
  const grabbed = state.obstacles.find((o) => o.id === vm.drag!.obstacleId);
  const planeZ = grabbed ? grabbed.center[2] : 0;
  sendUpdate.update({ id: vm.drag.obstacleId, center: pointerToWorld(cam, p, planeZ) });
});

scene.addEventListener("pointerup", () => {
  sendUpdate.flush();
  vm.drag = null;
});

scene.addEventListener("dblclick", (ev) => {
  const state = vm.latest;
  if (!state) return;
  const cam = cameraFor(state);
  const p = canvasPoint(ev as unknown as PointerEvent);
  const goal = pointerToWorld(cam, p, state.goal[2]);
  client.send(encodeControl("set_goal", goal));
});

// --- render loop --------------------------------------------------------------

function badge(el: Element, text: string, cls: string): void {
  el.textContent = text;
  el.className = `badge ${cls}`;
}

function frame(): void {
  const state = vm.latest;
  const now = performance.now();
  const status = vm.status(now);
  badge(
    statusBadge,
    vm.droppedFrames > 0 ? `${status} (${vm.droppedFrames} dropped)` : status,
    status === "live" ? "ok" : "warn",
  );
  if (state) {
    badge(solverBadge, state.paused ? `${state.solver_status} (paused)` : state.solver_status,
      state.solver_status === "Optimal" ? "ok" : "warn");
    badge(safetyBadge, state.safety_ok ? "safe" : "margin!", state.safety_ok ? "ok" : "bad");
    const cam = cameraFor(state);
    drawScene(scene.getContext("2d") as unknown as Ctx, cam, state, {
      width: scene.width,
      height: scene.height,
    });
    drawPsiChart(psiCanvas.getContext("2d") as unknown as Ctx, vm, {
      width: psiCanvas.width,
      height: psiCanvas.height,
    });
    drawQdotChart(qdotCanvas.getContext("2d") as unknown as Ctx, vm, {
      width: qdotCanvas.width,
      height: qdotCanvas.height,
    });
  }
  requestAnimationFrame(frame);
}

requestAnimationFrame(frame);
