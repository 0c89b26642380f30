// Rolling strip charts: sensed distances against the safety margin, and
// joint velocities against their bounds. Plain canvas polylines; the layout
// helpers are exported so tests can pin where the reference lines land.

import type { ServerState } from "./protocol";
import type { Ctx } from "./render";
import type { ViewModel } from "./viewmodel";

export interface ChartLayout {
  width: number;
  height: number;
  vmin: number;
  vmax: number;
  tmin: number;
  tmax: number;
}

export function valueToY(v: number, layout: ChartLayout): number {
  const f = (v - layout.vmin) / (layout.vmax - layout.vmin);
  return layout.height * (1 - f);
}

export function timeToX(t: number, layout: ChartLayout): number {
  const f = (t - layout.tmin) / (layout.tmax - layout.tmin || 1);
  return layout.width * f;
}

export function psiChartLayout(
  vm: ViewModel,
  state: ServerState,
  vp: { width: number; height: number },
  windowS = 4,
): ChartLayout {
  let vmax = 3 * state.epsilon;
  for (const series of vm.psiSeries.values()) {
    for (const s of series.toArray()) vmax = Math.max(vmax, s.psi * 1.1);
  }
  return {
    width: vp.width,
    height: vp.height,
    vmin: 0,
    vmax,
    tmin: state.t - windowS,
    tmax: state.t,
  };
}

export function qdotChartLayout(
  state: ServerState,
  vp: { width: number; height: number },
  windowS = 4,
): ChartLayout {
  const hi = Math.max(
    ...state.qdot_max.map(Math.abs),
    ...state.qdot_min.map(Math.abs),
    1e-9,
  );
  return {
    width: vp.width,
    height: vp.height,
    vmin: -1.2 * hi,
    vmax: 1.2 * hi,
    tmin: state.t - windowS,
    tmax: state.t,
  };
}

const SERIES_COLORS = [
  "#2b6cb0", "#c05621", "#2f855a", "#6b46c1",
  "#b83280", "#975a16", "#2c7a7b",
];

function hline(ctx: Ctx, layout: ChartLayout, v: number, color: string, dash: number[]): void {
  const y = valueToY(v, layout);
  ctx.strokeStyle = color;
  ctx.lineWidth = 1;
  ctx.setLineDash(dash);
  ctx.beginPath();
  ctx.moveTo(0, y);
  ctx.lineTo(layout.width, y);
  ctx.stroke();
  ctx.setLineDash([]);
}

function drawSeries(
  ctx: Ctx,
  layout: ChartLayout,
  points: { t: number; v: number }[],
  color: string,
): void {
  ctx.strokeStyle = color;
  ctx.lineWidth = 1.5;
  ctx.beginPath();
  let started = false;
  for (const p of points) {
    if (p.t < layout.tmin) continue;
    const x = timeToX(p.t, layout);
    const y = valueToY(p.v, layout);
    if (!started) {
      ctx.moveTo(x, y);
      started = true;
    } else {
      ctx.lineTo(x, y);
    }
  }
  if (started) ctx.stroke();
}

/** Per-contact distance traces with the safety margin as a dashed line. */
export function drawPsiChart(
  ctx: Ctx,
  vm: ViewModel,
  vp: { width: number; height: number },
): void {
  const state = vm.latest;
  if (!state) return;
  ctx.clearRect(0, 0, vp.width, vp.height);
  const layout = psiChartLayout(vm, state, vp);
  hline(ctx, layout, state.epsilon, "#c53030", [5, 3]);
  let k = 0;
  for (const series of vm.psiSeries.values()) {
    const pts = series.toArray().map((s) => ({ t: s.t, v: s.psi }));
    drawSeries(ctx, layout, pts, SERIES_COLORS[k % SERIES_COLORS.length]!);
    k += 1;
  }
}

/** Per-joint velocity traces between their bound lines. */
export function drawQdotChart(
  ctx: Ctx,
  vm: ViewModel,
  vp: { width: number; height: number },
): void {
  const state = vm.latest;
  if (!state) return;
  ctx.clearRect(0, 0, vp.width, vp.height);
  const layout = qdotChartLayout(state, vp);
  for (const v of new Set([...state.qdot_min, ...state.qdot_max])) {
    hline(ctx, layout, v, "#718096", [2, 3]);
  }
  const samples = vm.qdotSeries.toArray();
  const n = state.qdot.length;
  for (let j = 0; j < n; j += 1) {
    const pts = samples.map((s) => ({ t: s.t, v: s.qdot[j] ?? 0 }));
    drawSeries(ctx, layout, pts, SERIES_COLORS[j % SERIES_COLORS.length]!);
  }
}
