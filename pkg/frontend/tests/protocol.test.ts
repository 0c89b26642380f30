import { describe, expect, it } from "vitest";

import {
  FrameError,
  encodeControl,
  encodeObstacleUpdate,
  frameIsSafeOrFlagged,
  minPsi,
  parseServerState,
} from "../src/protocol";
import { makeState } from "./fixtures";

describe("parseServerState", () => {
  it("accepts a fully populated frame", () => {
    const state = makeState();
    const parsed = parseServerState(JSON.stringify(state));
    expect(parsed).toEqual(state);
  });

  it("rejects non-JSON input", () => {
    expect(() => parseServerState("{nope")).toThrow(FrameError);
  });

  it("rejects a frame missing a required field", () => {
    const bad: Record<string, unknown> = { ...makeState() };
    delete bad.epsilon;
    expect(() => parseServerState(JSON.stringify(bad))).toThrow(FrameError);
  });

  it("rejects a frame with an unknown field", () => {
    const bad = { ...makeState(), surprise: 1 };
    expect(() => parseServerState(JSON.stringify(bad))).toThrow(FrameError);
  });

  it("rejects the wrong message type", () => {
    const bad = { ...makeState(), type: "obstacle_update" };
    expect(() => parseServerState(JSON.stringify(bad))).toThrow(FrameError);
  });

  it("rejects malformed vectors", () => {
    const bad = { ...makeState(), ee: [0.05, 0.07] };
    expect(() => parseServerState(JSON.stringify(bad))).toThrow(FrameError);
  });

  it("rejects negative link padding", () => {
    const bad = { ...makeState(), link_radius_pad: [-0.01, 0.01] };
    expect(() => parseServerState(JSON.stringify(bad))).toThrow(FrameError);
  });
});

describe("client message encoding", () => {
  it("round-trips an obstacle update", () => {
    const msg = JSON.parse(encodeObstacleUpdate("ball", [0.1, 0.2, 0]));
    expect(msg).toEqual({ type: "obstacle_update", id: "ball", center: [0.1, 0.2, 0] });
  });

  it("encodes bare control actions without a goal field", () => {
    expect(JSON.parse(encodeControl("pause"))).toEqual({ type: "control", action: "pause" });
    expect(JSON.parse(encodeControl("reset"))).toEqual({ type: "control", action: "reset" });
  });

  it("encodes set_goal with its target", () => {
    const msg = JSON.parse(encodeControl("set_goal", [0, 0.1, 0]));
    expect(msg).toEqual({ type: "control", action: "set_goal", goal: [0, 0.1, 0] });
  });

  it("refuses set_goal without a target", () => {
    expect(() => encodeControl("set_goal")).toThrow(FrameError);
  });
});

describe("frame safety predicate", () => {
  it("reads the smallest sensed distance", () => {
    const state = makeState({
      contacts: [
        { link: 0, obstacle_id: "a", psi: 0.05, lambda: 0, normal: [1, 0, 0] },
        { link: 1, obstacle_id: "a", psi: 0.011, lambda: 0.2, normal: [0, 1, 0] },
      ],
    });
    expect(minPsi(state)).toBe(0.011);
    expect(minPsi(makeState({ contacts: [] }))).toBe(Infinity);
  });

  it("passes frames at or above the margin", () => {
    expect(frameIsSafeOrFlagged(makeState())).toBe(true);
    const atMargin = makeState({
      contacts: [
        { link: 1, obstacle_id: "ball", psi: 0.01, lambda: 0.4, normal: [0, -1, 0] },
      ],
    });
    expect(frameIsSafeOrFlagged(atMargin)).toBe(true);
  });

  it("tolerates the sensing trail behind the enforced predicted bound", () => {
    const trailing = makeState({
      contacts: [
        { link: 1, obstacle_id: "ball", psi: 0.01 - 2e-6, lambda: 0.8, normal: [0, -1, 0] },
      ],
    });
    expect(frameIsSafeOrFlagged(trailing)).toBe(true);
    expect(frameIsSafeOrFlagged(trailing, 1e-9)).toBe(false);
  });

  it("fails sub-margin frames unless the solver flagged itself", () => {
    const contacts = [
      { link: 1, obstacle_id: "ball", psi: 0.004, lambda: 0.9, normal: [0, -1, 0] as [number, number, number] },
    ];
    expect(frameIsSafeOrFlagged(makeState({ contacts }))).toBe(false);
    for (const status of ["TimeBudget", "MaxPenaltyReached", "InfeasibleLinear"]) {
      expect(
        frameIsSafeOrFlagged(makeState({ contacts, solver_status: status })),
      ).toBe(true);
    }
  });
});
