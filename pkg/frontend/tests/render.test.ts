import { describe, expect, it } from "vitest";

import { PlanarCamera } from "../src/projection";
import { COLORS, drawScene, normalArrow, shellRadius, type Ctx } from "../src/render";
import { makeState } from "./fixtures";

interface ArcCall {
  x: number;
  y: number;
  r: number;
  dashed: boolean;
  stroked: boolean;
  filled: boolean;
}

/** Records enough of the 2D API to assert what was drawn and how. */
function recordingCtx() {
  const arcs: ArcCall[] = [];
  const strokes: { color: string; width: number; dash: number[] }[] = [];
  let dash: number[] = [];
  let pendingArc: ArcCall | null = null;
  const ctx: Ctx = {
    lineWidth: 1,
    lineCap: "butt",
    strokeStyle: "",
    fillStyle: "",
    globalAlpha: 1,
    clearRect: () => {},
    beginPath: () => {
      pendingArc = null;
    },
    moveTo: () => {},
    lineTo: () => {},
    arc: (x, y, r) => {
      pendingArc = { x, y, r, dashed: dash.length > 0, stroked: false, filled: false };
      arcs.push(pendingArc);
    },
    stroke: () => {
      strokes.push({ color: ctx.strokeStyle, width: ctx.lineWidth, dash: [...dash] });
      if (pendingArc) pendingArc.stroked = true;
    },
    fill: () => {
      if (pendingArc) pendingArc.filled = true;
    },
    setLineDash: (segments) => {
      dash = segments;
    },
  };
  return { ctx, arcs, strokes };
}

const VP = { width: 720, height: 540 };

function testCamera() {
  return new PlanarCamera({ xmin: -0.12, xmax: 0.12, ymin: -0.02, ymax: 0.16 }, VP);
}

describe("geometry helpers", () => {
  it("shellRadius is the obstacle surface plus the safety margin", () => {
    expect(shellRadius({ id: "b", center: [0, 0, 0], radius: 0.03 }, 0.01)).toBeCloseTo(0.04, 12);
  });

  it("normalArrow starts on the surface and spans psi plus the margin", () => {
    const contact = { link: 1, obstacle_id: "b", psi: 0.02, lambda: 0.5, normal: [0, -1, 0] as [number, number, number] };
    const obstacle = { id: "b", center: [0.1, 0.2, 0] as [number, number, number], radius: 0.03 };
    const arrow = normalArrow(contact, obstacle, 0.01);
    expect(arrow.from).toEqual([0.1, 0.17, 0]);
    expect(arrow.to[1]).toBeCloseTo(0.2 - 0.06, 12);
  });
});

describe("drawScene", () => {
  it("draws the obstacle body filled and its shell dashed at (r + epsilon) * scale", () => {
    const state = makeState();
    const cam = testCamera();
    const { ctx, arcs } = recordingCtx();
    drawScene(ctx, cam, state, VP);

    const center = cam.worldToScreen(state.obstacles[0]!.center);
    const near = (a: ArcCall) =>
      Math.hypot(a.x - center.x, a.y - center.y) < 1e-6;
    const body = arcs.find((a) => near(a) && a.filled);
    const shell = arcs.find((a) => near(a) && a.stroked && a.dashed);
    expect(body).toBeDefined();
    expect(shell).toBeDefined();
    expect(body!.r).toBeCloseTo(state.obstacles[0]!.radius * cam.scale, 6);
    expect(shell!.r).toBeCloseTo(
      (state.obstacles[0]!.radius + state.epsilon) * cam.scale,
      6,
    );
  });

  it("draws a repulsion normal only for engaged contacts", () => {
    const idle = makeState();
    const rec1 = recordingCtx();
    drawScene(rec1.ctx, testCamera(), idle, VP);
    expect(rec1.strokes.filter((s) => s.color === COLORS.normal)).toHaveLength(0);

    const engaged = makeState({
      contacts: [
        { link: 1, obstacle_id: "ball", psi: 0.012, lambda: 0.7, normal: [0, -1, 0] },
      ],
    });
    const rec2 = recordingCtx();
    drawScene(rec2.ctx, testCamera(), engaged, VP);
    expect(rec2.strokes.filter((s) => s.color === COLORS.normal).length).toBeGreaterThan(0);
  });

  it("widens the link silhouette with the padded radius", () => {
    const state = makeState({ link_radius_pad: [0.02, 0.02] });
    const cam = testCamera();
    const { ctx, strokes } = recordingCtx();
    drawScene(ctx, cam, state, VP);
    const silhouettes = strokes.filter((s) => s.color === COLORS.linkPad);
    expect(silhouettes.length).toBe(2);
    for (const s of silhouettes) {
      expect(s.width).toBeCloseTo(2 * 0.02 * cam.scale, 6);
    }
  });
});
