// World <-> screen mapping. Both cameras are orthographic with uniform
// scale, so the pointer mapping is the exact inverse of the render mapping
// (on the drag plane, for the 3-D view).

import type { ServerState, Vec3 } from "./protocol";

export interface Viewport {
  width: number;
  height: number;
}

export interface Bounds {
  xmin: number;
  xmax: number;
  ymin: number;
  ymax: number;
}

export interface ScreenPoint {
  x: number;
  y: number;
}

const MIN_SPAN = 0.05;

export function padBounds(b: Bounds, frac = 0.15): Bounds {
  const spanX = Math.max(b.xmax - b.xmin, MIN_SPAN);
  const spanY = Math.max(b.ymax - b.ymin, MIN_SPAN);
  const cx = (b.xmin + b.xmax) / 2;
  const cy = (b.ymin + b.ymax) / 2;
  return {
    xmin: cx - (spanX / 2) * (1 + frac),
    xmax: cx + (spanX / 2) * (1 + frac),
    ymin: cy - (spanY / 2) * (1 + frac),
    ymax: cy + (spanY / 2) * (1 + frac),
  };
}

export function mergeBounds(a: Bounds, b: Bounds): Bounds {
  return {
    xmin: Math.min(a.xmin, b.xmin),
    xmax: Math.max(a.xmax, b.xmax),
    ymin: Math.min(a.ymin, b.ymin),
    ymax: Math.max(a.ymax, b.ymax),
  };
}

/** Uniform-scale orthographic mapping; both cameras satisfy this. */
export interface Camera {
  readonly scale: number;
  worldToScreen(v: Vec3 | readonly number[]): ScreenPoint;
}

/** 2-D camera: world x right, world y up, uniform scale, centered. */
export class PlanarCamera implements Camera {
  readonly scale: number;
  private readonly cx: number;
  private readonly cy: number;

  constructor(
    bounds: Bounds,
    readonly vp: Viewport,
  ) {
    const b = padBounds(bounds);
    this.scale = Math.min(
      vp.width / (b.xmax - b.xmin),
      vp.height / (b.ymax - b.ymin),
    );
    this.cx = (b.xmin + b.xmax) / 2;
    this.cy = (b.ymin + b.ymax) / 2;
  }

  worldToScreen(w: readonly number[]): ScreenPoint {
    return {
      x: this.vp.width / 2 + ((w[0] ?? 0) - this.cx) * this.scale,
      y: this.vp.height / 2 - ((w[1] ?? 0) - this.cy) * this.scale,
    };
  }

  screenToWorld(s: ScreenPoint): [number, number] {
    return [
      this.cx + (s.x - this.vp.width / 2) / this.scale,
      this.cy - (s.y - this.vp.height / 2) / this.scale,
    ];
  }
}

function rotate(v: Vec3, yaw: number, pitch: number): Vec3 {
  // Rz(yaw) then Rx(pitch); screen axes are the rotated x (right) and z (up)
  const cy = Math.cos(yaw);
  const sy = Math.sin(yaw);
  const cp = Math.cos(pitch);
  const sp = Math.sin(pitch);
  const x = cy * v[0] - sy * v[1];
  const y = sy * v[0] + cy * v[1];
  const z = v[2];
  return [x, cp * y - sp * z, sp * y + cp * z];
}

/**
 * Fixed-angle orthographic view for spatial arms. Dragging happens on the
 * horizontal plane through the grabbed obstacle's current height, where the
 * projection is exactly invertible.
 */
export class ArmCamera implements Camera {
  private readonly planar: PlanarCamera;

  constructor(
    bounds: Bounds,
    vp: Viewport,
    readonly yaw = -0.6,
    readonly pitch = -1.05,
  ) {
    this.planar = new PlanarCamera(bounds, vp);
  }

  get scale(): number {
    return this.planar.scale;
  }

  project(v: Vec3): [number, number] {
    const r = rotate(v, this.yaw, this.pitch);
    return [r[0], r[2]];
  }

  worldToScreen(v: Vec3 | readonly number[]): ScreenPoint {
    const p: Vec3 = [v[0] ?? 0, v[1] ?? 0, v[2] ?? 0];
    return this.planar.worldToScreen(this.project(p));
  }

  screenToWorldOnPlane(s: ScreenPoint, planeZ: number): Vec3 {
    const [px, pz] = this.planar.screenToWorld(s);
    // preimage of (px, ·, pz) under the rotation, intersected with z = planeZ
    const cy = Math.cos(this.yaw);
    const sy = Math.sin(this.yaw);
    const cp = Math.cos(this.pitch);
    const sp = Math.sin(this.pitch);
    // rotated coords: rx = px, rz = pz, ry free; world z = sp*ry' ... solve:
    // world = Rz(-yaw) Rx(-pitch) [px, ry, pz] with world.z fixed
    // Rx(-pitch): y' = cp*ry + sp*pz ; z' = -sp*ry + cp*pz  (inverse rotation)
    // world.z = z' -> ry = (cp*pz - planeZ) / sp
    if (Math.abs(sp) < 1e-9) {
      throw new RangeError("top-down view cannot invert onto a z-plane");
    }
    const ry = (cp * pz - planeZ) / sp;
    const y1 = cp * ry + sp * pz;
    return [cy * px + sy * y1, -sy * px + cy * y1, planeZ];
  }
}

export function isPlanarScene(state: ServerState, tol = 1e-9): boolean {
  for (const link of state.link_segments) {
    for (const [p0, p1] of link) {
      if (Math.abs(p0[2]) > tol || Math.abs(p1[2]) > tol) return false;
    }
  }
  return state.obstacles.every((o) => Math.abs(o.center[2]) <= tol);
}

export function boundsForState(state: ServerState): Bounds {
  const planar = isPlanarScene(state);
  const pts: [number, number][] = [];
  const add = (v: Vec3) => {
    pts.push(planar ? [v[0], v[1]] : projectForBounds(v));
  };
  for (const link of state.link_segments) {
    for (const [p0, p1] of link) {
      add(p0);
      add(p1);
    }
  }
  add(state.ee);
  add(state.goal);
  for (const o of state.obstacles) {
    const r = o.radius + state.epsilon;
    add([o.center[0] - r, o.center[1] - r, o.center[2]]);
    add([o.center[0] + r, o.center[1] + r, o.center[2]]);
  }
  let b: Bounds = { xmin: Infinity, xmax: -Infinity, ymin: Infinity, ymax: -Infinity };
  for (const [x, y] of pts) {
    b = mergeBounds(b, { xmin: x, xmax: x, ymin: y, ymax: y });
  }
  return b;
}

const BOUNDS_CAMERA = new ArmCamera(
  { xmin: 0, xmax: 1, ymin: 0, ymax: 1 },
  { width: 1, height: 1 },
);

function projectForBounds(v: Vec3): [number, number] {
  return BOUNDS_CAMERA.project(v);
}
