// Wire protocol: typed, validated JSON frames. The server rejects anything
// off-schema, so the client validates symmetrically and drops bad frames
// instead of rendering garbage.

import { z } from "zod";

const vec3 = z.tuple([z.number(), z.number(), z.number()]);
const segment = z.tuple([vec3, vec3]);

export const serverStateSchema = z.strictObject({
  type: z.literal("server_state"),
  t: z.number(),
  q: z.array(z.number()),
  qdot: z.array(z.number()),
  ee: vec3,
  goal: vec3,
  link_segments: z.array(z.array(segment)),
  obstacles: z.array(
    z.strictObject({ id: z.string(), center: vec3, radius: z.number() }),
  ),
  contacts: z.array(
    z.strictObject({
      link: z.number().int(),
      obstacle_id: z.string(),
      psi: z.number(),
      lambda: z.number(),
      normal: vec3,
    }),
  ),
  solver_status: z.string(),
  step_time_us: z.number(),
  paused: z.boolean(),
  safety_ok: z.boolean(),
  epsilon: z.number(),
  qdot_min: z.array(z.number()),
  qdot_max: z.array(z.number()),
  link_radius_pad: z.array(z.number().nonnegative()),
});

export type Vec3 = z.infer<typeof vec3>;
export type ServerState = z.infer<typeof serverStateSchema>;
export type ObstacleState = ServerState["obstacles"][number];
export type ContactState = ServerState["contacts"][number];

// solver statuses that excuse a sub-margin frame: the solve was cut short or
// had no feasible velocity, and the server says so instead of lying
export const FLAGGED_STATUSES = new Set([
  "TimeBudget",
  "MaxPenaltyReached",
  "InfeasibleLinear",
]);

export class FrameError extends Error {}

export function parseServerState(text: string): ServerState {
  let raw: unknown;
  try {
    raw = JSON.parse(text);
  } catch {
    throw new FrameError("frame is not JSON");
  }
  const res = serverStateSchema.safeParse(raw);
  if (!res.success) {
    throw new FrameError(`bad server_state: ${res.error.issues[0]?.message}`);
  }
  return res.data;
}

export function encodeObstacleUpdate(id: string, center: Vec3): string {
  return JSON.stringify({ type: "obstacle_update", id, center });
}

export type ControlAction = "pause" | "resume" | "reset" | "set_goal";

export function encodeControl(action: ControlAction, goal?: Vec3): string {
  if (action === "set_goal") {
    if (!goal) throw new FrameError("set_goal requires a goal");
    return JSON.stringify({ type: "control", action, goal });
  }
  return JSON.stringify({ type: "control", action });
}

/** Smallest sensed distance in a frame, +Infinity with no contacts. */
export function minPsi(state: ServerState): number {
  let m = Infinity;
  for (const c of state.contacts) m = Math.min(m, c.psi);
  return m;
}

/**
 * The safety contract every broadcast frame must satisfy. The server enforces
 * the predicted next-step distance at epsilon; the sensed value in a frame can
 * trail it by one step of linearization error while an obstacle presses in, so
 * the default slack covers that trail (~1e-6 measured) and nothing more.
 */
export function frameIsSafeOrFlagged(state: ServerState, slack = 1e-4): boolean {
  return (
    minPsi(state) >= state.epsilon - slack ||
    FLAGGED_STATUSES.has(state.solver_status)
  );
}
