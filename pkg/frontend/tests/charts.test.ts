import { describe, expect, it } from "vitest";

import {
  psiChartLayout,
  qdotChartLayout,
  timeToX,
  valueToY,
} from "../src/charts";
import { ViewModel } from "../src/viewmodel";
import { makeState } from "./fixtures";

const VP = { width: 400, height: 150 };

describe("chart layout", () => {
  it("maps values top-down and times left-right", () => {
    const layout = { width: 400, height: 150, vmin: 0, vmax: 0.03, tmin: 6, tmax: 10 };
    expect(valueToY(0, layout)).toBe(150);
    expect(valueToY(0.03, layout)).toBe(0);
    expect(valueToY(0.015, layout)).toBeCloseTo(75, 9);
    expect(timeToX(6, layout)).toBe(0);
    expect(timeToX(10, layout)).toBe(400);
    expect(timeToX(8, layout)).toBeCloseTo(200, 9);
  });

  it("keeps the margin line strictly inside the distance chart", () => {
    const vm = new ViewModel();
    const state = makeState();
    vm.ingest(JSON.stringify(state), 0);
    const layout = psiChartLayout(vm, state, VP);
    expect(layout.vmin).toBe(0);
    expect(layout.vmax).toBeGreaterThanOrEqual(3 * state.epsilon);
    const yEps = valueToY(state.epsilon, layout);
    expect(yEps).toBeGreaterThan(0);
    expect(yEps).toBeLessThan(VP.height);
  });

  it("grows the distance scale to fit the tallest sample", () => {
    const vm = new ViewModel();
    const state = makeState({
      contacts: [
        { link: 0, obstacle_id: "ball", psi: 0.09, lambda: 0, normal: [1, 0, 0] },
      ],
    });
    vm.ingest(JSON.stringify(state), 0);
    const layout = psiChartLayout(vm, state, VP);
    expect(layout.vmax).toBeCloseTo(0.09 * 1.1, 12);
    expect(valueToY(0.09, layout)).toBeGreaterThan(0);
  });

  it("windows the time axis to the latest frame", () => {
    const vm = new ViewModel();
    const state = makeState({ t: 12.5 });
    vm.ingest(JSON.stringify(state), 0);
    const layout = psiChartLayout(vm, state, VP, 4);
    expect(layout.tmax).toBe(12.5);
    expect(layout.tmin).toBe(8.5);
  });

  it("centers the velocity chart and keeps every bound line visible", () => {
    const state = makeState({ qdot_min: [-2.5, -1.0], qdot_max: [2.5, 1.0] });
    const layout = qdotChartLayout(state, VP);
    expect(layout.vmax).toBeCloseTo(3.0, 12);
    expect(layout.vmin).toBeCloseTo(-3.0, 12);
    expect(valueToY(0, layout)).toBeCloseTo(VP.height / 2, 9);
    for (const v of [...state.qdot_min, ...state.qdot_max]) {
      const y = valueToY(v, layout);
      expect(y).toBeGreaterThan(0);
      expect(y).toBeLessThan(VP.height);
    }
  });
});
