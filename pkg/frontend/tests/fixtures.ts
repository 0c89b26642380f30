import type { ServerState } from "../src/protocol";

/** A small planar frame with every field populated; override what a test pins. */
export function makeState(overrides: Partial<ServerState> = {}): ServerState {
  return {
    type: "server_state",
    t: 0.25,
    q: [0.4, -0.9],
    qdot: [0.1, -0.05],
    ee: [0.05, 0.07, 0],
    goal: [-0.04, 0.06, 0],
    link_segments: [
      [[[0, 0, 0], [0.05, 0, 0]]],
      [[[0.05, 0, 0], [0.05, 0.05, 0]]],
    ],
    obstacles: [{ id: "ball", center: [0.02, 0.09, 0], radius: 0.03 }],
    contacts: [
      { link: 1, obstacle_id: "ball", psi: 0.04, lambda: 0, normal: [0, -1, 0] },
    ],
    solver_status: "Optimal",
    step_time_us: 350,
    paused: false,
    safety_ok: true,
    epsilon: 0.01,
    qdot_min: [-2.5, -2.5],
    qdot_max: [2.5, 2.5],
    link_radius_pad: [0.012, 0.012],
    ...overrides,
  };
}
