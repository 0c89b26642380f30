// Single mutable model between the socket and the renderer. The receive
// handler writes, the render loop reads; nothing here touches the DOM and
// nothing here computes physics — every number originates in a server frame.

import { FrameError, parseServerState, type ServerState } from "./protocol";
import { Ring } from "./ring";

export type ConnectionStatus = "connecting" | "live" | "stale" | "closed";

export interface PsiSample {
  t: number;
  psi: number;
  lambda: number;
}

export interface QdotSample {
  t: number;
  qdot: number[];
}

export interface DragState {
  obstacleId: string;
  pointer: { x: number; y: number };
}

export class ViewModel {
  latest: ServerState | null = null;
  framesReceived = 0;
  droppedFrames = 0;
  lastFrameAt = -Infinity;
  drag: DragState | null = null;

  /** keyed "link:obstacle_id", one rolling series per contact pair */
  readonly psiSeries = new Map<string, Ring<PsiSample>>();
  readonly qdotSeries: Ring<QdotSample>;

  private closed = false;

  constructor(
    readonly capacity = 512,
    readonly staleAfterMs = 300,
  ) {
    this.qdotSeries = new Ring(capacity);
  }

  /** Parse and absorb one frame; malformed input is counted, not thrown. */
  ingest(text: string, nowMs: number): ServerState | null {
    let state: ServerState;
    try {
      state = parseServerState(text);
    } catch (err) {
      if (err instanceof FrameError) {
        this.droppedFrames += 1;
        return null;
      }
      throw err;
    }
    this.latest = state;
    this.framesReceived += 1;
    this.lastFrameAt = nowMs;
    this.closed = false;
    this.qdotSeries.push({ t: state.t, qdot: state.qdot });
    for (const c of state.contacts) {
      const key = `${c.link}:${c.obstacle_id}`;
      let series = this.psiSeries.get(key);
      if (!series) {
        series = new Ring(this.capacity);
        this.psiSeries.set(key, series);
      }
      series.push({ t: state.t, psi: c.psi, lambda: c.lambda });
    }
    return state;
  }

  markClosed(): void {
    this.closed = true;
  }

  status(nowMs: number): ConnectionStatus {
    if (this.closed) return "closed";
    if (this.framesReceived === 0) return "connecting";
    return nowMs - this.lastFrameAt > this.staleAfterMs ? "stale" : "live";
  }
}
