// End-to-end: a real planner service, the recorded drag, and the same
// ViewModel the page uses. Requires the python package on PATH (fliqc).

import { type ChildProcess, spawn } from "node:child_process";
import { readFileSync } from "node:fs";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { runReplay, type DragSample } from "../replay/replay";

const PORT = 8923;
const BASE = `http://127.0.0.1:${PORT}`;

let server: ChildProcess;
let serverLog = "";

async function waitForHealth(timeoutMs = 20_000): Promise<void> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    try {
      const res = await fetch(`${BASE}/healthz`);
      if (res.ok) {
        const body = (await res.json()) as { status: string };
        if (body.status === "ok") return;
      }
    } catch {
      // not up yet
    }
    await new Promise((r) => setTimeout(r, 200));
  }
  throw new Error(`service never became healthy:\n${serverLog}`);
}

beforeAll(async () => {
  server = spawn(
    "fliqc",
    ["serve", "planar_2r_interactive", "--port", String(PORT)],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  server.stdout?.on("data", (d) => (serverLog += String(d)));
  server.stderr?.on("data", (d) => (serverLog += String(d)));
  await waitForHealth();
}, 30_000);

afterAll(() => {
  server?.kill("SIGTERM");
});

describe("recorded drag replay", () => {
  it("holds tick delivery, per-frame safety, and chart invariants", async () => {
    const trajectory = JSON.parse(
      readFileSync(new URL("../replay/drag_trajectory.json", import.meta.url), "utf8"),
    ) as DragSample[];
    expect(trajectory.length).toBeGreaterThan(100);

    const report = await runReplay(`ws://127.0.0.1:${PORT}/ws`, trajectory, {
      tickRate: 250,
      tailMs: 500,
    });

    // eslint-disable-next-line no-console
    console.log("replay report:", JSON.stringify(report));

    // a 250 Hz stream over localhost must arrive essentially intact
    expect(report.deliveryRatio).toBeGreaterThanOrEqual(0.95);
    expect(report.framesReceived).toBeGreaterThan(1000);
    expect(report.droppedFrames).toBe(0);

    // every frame kept the margin or carried an explanatory solver status
    expect(report.safetyViolations).toBe(0);

    // the drag genuinely stressed the margin (it reached below epsilon at its
    // worst) and the arm responded by moving rather than freezing there
    expect(report.minPsiSeen).toBeGreaterThanOrEqual(0);
    expect(report.minPsiSeen).toBeLessThan(report.epsilons[0] ?? Infinity);
    expect(report.engagedFrames).toBeGreaterThan(50);
    expect(report.yieldedFrames).toBeGreaterThan(10);

    // commanded velocities never escaped the advertised bounds
    expect(report.qdotOutOfBounds).toBe(0);

    // chart reference lines stayed in view on every single frame
    expect(report.chartViolations).toBe(0);

    // one constant margin for the whole session
    expect(report.epsilons).toEqual([0.01]);

    // rolling series stayed bounded under a multi-thousand-frame stream
    expect(report.maxSeriesLength).toBeLessThanOrEqual(report.capacity);
  }, 60_000);
});
