// Canvas drawing. Functions take a minimal 2D-context interface so tests can
// record draw calls without a DOM; every drawn quantity comes straight off
// the latest server frame.

import type { ContactState, ObstacleState, ServerState, Vec3 } from "./protocol";
import type { Camera, ScreenPoint } from "./projection";

export interface Ctx {
  clearRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  moveTo(x: number, y: number): void;
  lineTo(x: number, y: number): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  stroke(): void;
  fill(): void;
  setLineDash(segments: number[]): void;
  lineWidth: number;
  lineCap: string;
  strokeStyle: string;
  fillStyle: string;
  globalAlpha: number;
}

export const COLORS = {
  link: "#2b6cb0",
  linkPad: "rgba(43, 108, 176, 0.18)",
  obstacle: "#c05621",
  shell: "#c05621",
  normal: "#c53030",
  goal: "#2f855a",
  ee: "#1a202c",
};

/** Detection shell drawn where the avoidance constraint switches on. */
export function shellRadius(obstacle: ObstacleState, epsilon: number): number {
  return obstacle.radius + epsilon;
}

/**
 * Repulsion arrow for an engaged contact, in world coordinates: anchored on
 * the obstacle surface, pointing along the sensed normal (obstacle -> link).
 */
export function normalArrow(
  contact: ContactState,
  obstacle: ObstacleState,
  epsilon: number,
): { from: Vec3; to: Vec3 } {
  const n = contact.normal;
  const len = obstacle.radius + Math.max(contact.psi, 0) + epsilon;
  return {
    from: [
      obstacle.center[0] + n[0] * obstacle.radius,
      obstacle.center[1] + n[1] * obstacle.radius,
      obstacle.center[2] + n[2] * obstacle.radius,
    ],
    to: [
      obstacle.center[0] + n[0] * len,
      obstacle.center[1] + n[1] * len,
      obstacle.center[2] + n[2] * len,
    ],
  };
}

function polyline(ctx: Ctx, pts: ScreenPoint[]): void {
  ctx.beginPath();
  pts.forEach((p, i) => (i === 0 ? ctx.moveTo(p.x, p.y) : ctx.lineTo(p.x, p.y)));
  ctx.stroke();
}

function circle(ctx: Ctx, c: ScreenPoint, r: number, filled: boolean): void {
  ctx.beginPath();
  ctx.arc(c.x, c.y, r, 0, 2 * Math.PI);
  if (filled) ctx.fill();
  else ctx.stroke();
}

export function drawScene(
  ctx: Ctx,
  cam: Camera,
  state: ServerState,
  vp: { width: number; height: number },
): void {
  ctx.clearRect(0, 0, vp.width, vp.height);
  ctx.setLineDash([]);
  ctx.globalAlpha = 1;
  const scale = cam.scale;

  // goal crosshair
  const g = cam.worldToScreen(state.goal);
  ctx.strokeStyle = COLORS.goal;
  ctx.lineWidth = 2;
  polyline(ctx, [
    { x: g.x - 6, y: g.y },
    { x: g.x + 6, y: g.y },
  ]);
  polyline(ctx, [
    { x: g.x, y: g.y - 6 },
    { x: g.x, y: g.y + 6 },
  ]);

  // links: padded silhouette underneath, solid centerline on top
  state.link_segments.forEach((link, i) => {
    const pad = state.link_radius_pad[i] ?? 0;
    for (const [p0, p1] of link) {
      const s0 = cam.worldToScreen(p0);
      const s1 = cam.worldToScreen(p1);
      if (pad > 0) {
        ctx.strokeStyle = COLORS.linkPad;
        ctx.lineCap = "round";
        ctx.lineWidth = Math.max(2 * pad * scale, 1);
        polyline(ctx, [s0, s1]);
      }
      ctx.strokeStyle = COLORS.link;
      ctx.lineCap = "round";
      ctx.lineWidth = 3;
      polyline(ctx, [s0, s1]);
    }
  });

  // obstacles with their detection shells
  for (const o of state.obstacles) {
    const c = cam.worldToScreen(o.center);
    ctx.fillStyle = COLORS.obstacle;
    ctx.globalAlpha = 0.85;
    circle(ctx, c, Math.max(o.radius * scale, 2), true);
    ctx.globalAlpha = 1;
    ctx.strokeStyle = COLORS.shell;
    ctx.lineWidth = 1;
    ctx.setLineDash([4, 4]);
    circle(ctx, c, shellRadius(o, state.epsilon) * scale, false);
    ctx.setLineDash([]);
  }

  // engaged contacts: repulsion normals
  const byId = new Map(state.obstacles.map((o) => [o.id, o]));
  for (const contact of state.contacts) {
    if (contact.lambda <= 0) continue;
    const obstacle = byId.get(contact.obstacle_id);
    if (!obstacle) continue;
    const arrow = normalArrow(contact, obstacle, state.epsilon);
    const a = cam.worldToScreen(arrow.from);
    const b = cam.worldToScreen(arrow.to);
    ctx.strokeStyle = COLORS.normal;
    ctx.lineWidth = 2;
    polyline(ctx, [a, b]);
    const ang = Math.atan2(b.y - a.y, b.x - a.x);
    polyline(ctx, [
      { x: b.x - 6 * Math.cos(ang - 0.4), y: b.y - 6 * Math.sin(ang - 0.4) },
      b,
      { x: b.x - 6 * Math.cos(ang + 0.4), y: b.y - 6 * Math.sin(ang + 0.4) },
    ]);
  }

  // end effector
  const ee = cam.worldToScreen(state.ee);
  ctx.fillStyle = COLORS.ee;
  circle(ctx, ee, 3, true);
}
