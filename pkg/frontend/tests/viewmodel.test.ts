import { describe, expect, it } from "vitest";

import { Ring } from "../src/ring";
import { ViewModel } from "../src/viewmodel";
import { makeState } from "./fixtures";

describe("Ring", () => {
  it("evicts oldest past capacity and keeps order", () => {
    const ring = new Ring<number>(3);
    for (const v of [1, 2, 3, 4, 5]) ring.push(v);
    expect(ring.length).toBe(3);
    expect(ring.toArray()).toEqual([3, 4, 5]);
    expect(ring.last()).toBe(5);
  });

  it("rejects nonsense capacities", () => {
    expect(() => new Ring(0)).toThrow(RangeError);
    expect(() => new Ring(2.5)).toThrow(RangeError);
  });
});

describe("ViewModel.ingest", () => {
  it("absorbs frames and keys series per contact pair", () => {
    const vm = new ViewModel();
    const state = makeState({
      contacts: [
        { link: 0, obstacle_id: "a", psi: 0.05, lambda: 0, normal: [1, 0, 0] },
        { link: 1, obstacle_id: "a", psi: 0.02, lambda: 0.3, normal: [0, 1, 0] },
      ],
    });
    expect(vm.ingest(JSON.stringify(state), 100)).not.toBeNull();
    expect(vm.framesReceived).toBe(1);
    expect(vm.latest?.t).toBe(state.t);
    expect([...vm.psiSeries.keys()].sort()).toEqual(["0:a", "1:a"]);
    expect(vm.psiSeries.get("1:a")?.last()).toEqual({ t: state.t, psi: 0.02, lambda: 0.3 });
    expect(vm.qdotSeries.last()).toEqual({ t: state.t, qdot: state.qdot });
  });

  it("counts malformed frames instead of throwing", () => {
    const vm = new ViewModel();
    expect(vm.ingest("not json", 0)).toBeNull();
    expect(vm.ingest(JSON.stringify({ type: "server_state" }), 1)).toBeNull();
    expect(vm.droppedFrames).toBe(2);
    expect(vm.framesReceived).toBe(0);
    expect(vm.latest).toBeNull();
  });

  it("keeps every series within capacity under a long stream", () => {
    const vm = new ViewModel(16);
    for (let i = 0; i < 200; i += 1) {
      vm.ingest(JSON.stringify(makeState({ t: i * 0.004 })), i);
    }
    expect(vm.framesReceived).toBe(200);
    expect(vm.qdotSeries.length).toBe(16);
    for (const series of vm.psiSeries.values()) {
      expect(series.length).toBeLessThanOrEqual(16);
    }
    expect(vm.qdotSeries.last()?.t).toBeCloseTo(199 * 0.004, 12);
  });
});

describe("ViewModel.status", () => {
  it("walks connecting -> live -> stale -> closed on a fake clock", () => {
    const vm = new ViewModel(64, 300);
    expect(vm.status(0)).toBe("connecting");
    vm.ingest(JSON.stringify(makeState()), 1000);
    expect(vm.status(1100)).toBe("live");
    expect(vm.status(1301)).toBe("stale");
    vm.markClosed();
    expect(vm.status(1302)).toBe("closed");
    vm.ingest(JSON.stringify(makeState()), 1400);
    expect(vm.status(1450)).toBe("live");
  });
});
