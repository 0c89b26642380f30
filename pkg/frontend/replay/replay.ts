// Headless stand-in for the page: connects like the UI, feeds every frame
// through the real ViewModel, replays a recorded drag, and reports whether
// the stream held up (tick delivery, per-frame safety, chart inputs sane).
// Node-only; never part of the page bundle.

import WebSocket from "ws";

import { psiChartLayout, qdotChartLayout, valueToY } from "../src/charts";
import { encodeObstacleUpdate, frameIsSafeOrFlagged, minPsi } from "../src/protocol";
import { ViewModel } from "../src/viewmodel";

export interface DragSample {
  at_ms: number;
  id: string;
  center: [number, number, number];
}

export interface ReplayReport {
  framesReceived: number;
  droppedFrames: number;
  /** frames / expected ticks between first and last frame */
  deliveryRatio: number;
  /** frames where psi < epsilon without a flagged solver status */
  safetyViolations: number;
  /** frames whose qdot escaped the frame's own bounds */
  qdotOutOfBounds: number;
  /** frames with some contact inside epsilon + margin-ish shell */
  engagedFrames: number;
  /** engaged frames where the arm was actually moving (it yields, not freezes) */
  yieldedFrames: number;
  /** frames whose chart layout failed to keep margin or bound lines in view */
  chartViolations: number;
  minPsiSeen: number;
  epsilons: number[];
  maxSeriesLength: number;
  capacity: number;
}

export interface ReplayOptions {
  tickRate?: number;
  tailMs?: number;
  capacity?: number;
}

export function runReplay(
  url: string,
  trajectory: DragSample[],
  opts: ReplayOptions = {},
): Promise<ReplayReport> {
  const tickRate = opts.tickRate ?? 250;
  const tailMs = opts.tailMs ?? 500;
  const vm = new ViewModel(opts.capacity ?? 4096);

  return new Promise((resolve, reject) => {
    const ws = new WebSocket(url);
    const timers: ReturnType<typeof setTimeout>[] = [];
    let firstFrameAt = 0;
    let lastFrameAt = 0;
    let safetyViolations = 0;
    let qdotOutOfBounds = 0;
    let engagedFrames = 0;
    let yieldedFrames = 0;
    let chartViolations = 0;
    let minPsiSeen = Infinity;
    const epsilons = new Set<number>();
    const chartVp = { width: 400, height: 150 };

    const finish = () => {
      ws.close();
      const span = lastFrameAt - firstFrameAt;
      const expected = span > 0 ? (span / 1000) * tickRate + 1 : 1;
      let maxSeriesLength = vm.qdotSeries.length;
      for (const s of vm.psiSeries.values()) {
        maxSeriesLength = Math.max(maxSeriesLength, s.length);
      }
      resolve({
        framesReceived: vm.framesReceived,
        droppedFrames: vm.droppedFrames,
        deliveryRatio: vm.framesReceived / expected,
        safetyViolations,
        qdotOutOfBounds,
        engagedFrames,
        yieldedFrames,
        chartViolations,
        minPsiSeen,
        epsilons: [...epsilons].sort(),
        maxSeriesLength,
        capacity: vm.capacity,
      });
    };

    ws.on("error", (err) => reject(err));
    ws.on("open", () => {
      for (const sample of trajectory) {
        timers.push(
          setTimeout(() => {
            ws.send(encodeObstacleUpdate(sample.id, sample.center));
          }, sample.at_ms),
        );
      }
      const lastAt = trajectory.length
        ? trajectory[trajectory.length - 1]!.at_ms
        : 0;
      timers.push(setTimeout(finish, lastAt + tailMs));
    });
    ws.on("message", (data) => {
      const now = performance.now();
      const state = vm.ingest(String(data), now);
      if (!state) return;
      if (firstFrameAt === 0) firstFrameAt = now;
      lastFrameAt = now;
      epsilons.add(state.epsilon);
      const psi = minPsi(state);
      minPsiSeen = Math.min(minPsiSeen, psi);
      if (!frameIsSafeOrFlagged(state)) safetyViolations += 1;
      const tol = 1e-9;
      const inBounds = state.qdot.every(
        (v, j) =>
          v >= (state.qdot_min[j] ?? -Infinity) - tol &&
          v <= (state.qdot_max[j] ?? Infinity) + tol,
      );
      if (!inBounds) qdotOutOfBounds += 1;
      if (psi <= state.epsilon * 3) {
        engagedFrames += 1;
        if (state.qdot.some((v) => Math.abs(v) > 1e-6)) yieldedFrames += 1;
      }
      // the same layout math the charts use must keep every reference line
      // and every stored sample on screen for this frame
      const psiLayout = psiChartLayout(vm, state, chartVp);
      const qdotLayout = qdotChartLayout(state, chartVp);
      let chartsOk = true;
      const yEps = valueToY(state.epsilon, psiLayout);
      if (!(yEps > 0 && yEps < chartVp.height)) chartsOk = false;
      for (const v of [...state.qdot_min, ...state.qdot_max]) {
        const y = valueToY(v, qdotLayout);
        if (!(y > 0 && y < chartVp.height)) chartsOk = false;
      }
      for (const series of vm.psiSeries.values()) {
        const newest = series.last();
        if (newest && valueToY(newest.psi, psiLayout) < -1e-9) chartsOk = false;
      }
      if (!chartsOk) chartViolations += 1;
    });
    ws.on("close", () => {
      for (const t of timers) clearTimeout(t);
    });
  });
}
