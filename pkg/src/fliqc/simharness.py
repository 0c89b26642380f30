"""Batch execution, run metrics, obstacle input filtering, and trace export."""

from __future__ import annotations

import csv
import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ScenarioValidationError
from .geometry import advance_obstacles, collect_contacts  # noqa: F401  (re-export)
from .kinematics import JointState
from .planner import PlanOutcome, plan
from .scenario import (  # noqa: F401  (re-export: harness is the CLI-facing surface)
    Scenario,
    bundled_scene_path,
    load_scenario,
    save_scenario,
)

_SAMPLE_ATTEMPTS = 500


@dataclass(frozen=True)
class MetricsRow:
    scenario_id: str
    success: bool
    path_length: float
    avg_joint_movement: float
    steps: int
    wall_time_median: float
    wall_time_p99: float


@dataclass(frozen=True)
class FilterState:
    x_prev: np.ndarray = field(default_factory=lambda: np.zeros(3))
    a: float = 0.9

    def __post_init__(self):
        if not 0.0 <= self.a < 1.0:
            raise ScenarioValidationError("a", "smoothing coefficient must be in [0, 1)")
        object.__setattr__(self, "x_prev", np.asarray(self.x_prev, dtype=float))


def iir_filter(fs, u):
    """First-order low-pass x[t] = a x[t-1] + (1 - a) u; returns (state, x[t])."""
    x = fs.a * fs.x_prev + (1.0 - fs.a) * np.asarray(u, dtype=float)
    return FilterState(x_prev=x, a=fs.a), x


def metrics(trajectory, scenario_id=""):
    """Per-run summary of a finished trajectory."""
    if not trajectory.states:
        raise ScenarioValidationError("trajectory", "cannot summarize an empty trajectory")
    ee = trajectory.ee_path
    path_length = float(np.sum(np.linalg.norm(np.diff(ee, axis=0), axis=1)))
    qs = trajectory.q_path
    if len(qs) > 1:
        n = qs.shape[1]
        avg_joint_movement = float(np.abs(np.diff(qs, axis=0)).sum() / (n * (len(qs) - 1)))
    else:
        avg_joint_movement = 0.0
    walls = sorted(res.wall_time for res in trajectory.steps)
    return MetricsRow(
        scenario_id=scenario_id,
        success=trajectory.outcome == PlanOutcome.REACHED_GOAL,
        path_length=path_length,
        avg_joint_movement=avg_joint_movement,
        steps=len(trajectory.steps),
        wall_time_median=float(np.median(walls)) if walls else 0.0,
        wall_time_p99=float(np.percentile(walls, 99)) if walls else 0.0,
    )


def _start_is_clear(sc, q):
    state = JointState(q=q)
    contacts = collect_contacts(sc.robot_model, state, sc.obstacles, sc.contact_cfg)
    return all(c.psi > c.epsilon for c in contacts)


def _goal_is_clear(sc, goal):
    g = np.zeros(3)
    g[: goal.shape[0]] = goal
    pad = sc.contact_cfg.padding + float(sc.robot_model.radius_per_link[-1])
    for obs in sc.obstacles:
        if np.linalg.norm(g - obs.center) - obs.radius - pad <= sc.contact_cfg.epsilon:
            return False
    return True


def _sample_run(sc, rng):
    """Scenario copy with start/goal drawn from the configured boxes; samples
    that start inside an obstacle's threshold shell are rejected."""
    if sc.q_start_box is None and sc.goal_box is None:
        return sc
    for _ in range(_SAMPLE_ATTEMPTS):
        q = sc.q_start if sc.q_start_box is None else rng.uniform(*sc.q_start_box)
        goal = sc.goal if sc.goal_box is None else rng.uniform(*sc.goal_box)
        if _start_is_clear(sc, q) and _goal_is_clear(sc, goal):
            return dataclasses.replace(sc, q_start=q, goal=goal)
    raise ScenarioValidationError(
        "q_start_box", "could not draw a collision-free start/goal pair"
    )


def run_batch(scenario_template, n_runs, seed=None):
    """Plan n_runs sampled instances of the template; returns (rows, aggregate).

    Sampling is driven by a generator seeded from `seed` (template seed when
    None), so a batch is reproducible end to end. Failed runs are rows with
    success=False, never exceptions.
    """
    if n_runs < 1:
        raise ScenarioValidationError("n_runs", "must be >= 1")
    sc = load_scenario(scenario_template)
    rng = np.random.default_rng(sc.seed if seed is None else seed)
    rows = []
    for k in range(n_runs):
        run_sc = _sample_run(sc, rng)
        traj = plan(run_sc)
        rows.append(metrics(traj, scenario_id=f"{sc.name or 'scenario'}#{k}"))
    ok = [r for r in rows if r.success]
    aggregate = {
        "runs": n_runs,
        "success_rate": len(ok) / n_runs,
        "mean_path_length": float(np.mean([r.path_length for r in ok])) if ok else float("nan"),
        "mean_avg_joint_movement": (
            float(np.mean([r.avg_joint_movement for r in ok])) if ok else float("nan")
        ),
        "mean_steps": float(np.mean([r.steps for r in ok])) if ok else float("nan"),
    }
    return rows, aggregate


# ---------------------------------------------------------------------------
# trace export

def _trace_rows(trajectory):
    """One row per state; the last row has no outgoing step (zero qdot)."""
    n = trajectory.states[0].q.shape[0]
    rows = []
    for i, state in enumerate(trajectory.states):
        if i < len(trajectory.steps):
            res = trajectory.steps[i]
            contacts = [
                {
                    "link": c.link_index,
                    "obstacle_id": c.obstacle_id,
                    "psi": c.psi,
                    "predicted": float(res.predicted_distances[j]),
                    "lambda": float(res.lambdas[j]),
                }
                for j, c in enumerate(res.contacts)
            ]
            rows.append({
                "t": state.t,
                "q": state.q.tolist(),
                "qdot": res.qdot.tolist(),
                "status": res.solver.status.value,
                "wall_time_us": res.wall_time * 1e6,
                "contacts": contacts,
            })
        else:
            rows.append({
                "t": state.t,
                "q": state.q.tolist(),
                "qdot": [0.0] * n,
                "status": "",
                "wall_time_us": 0.0,
                "contacts": [],
            })
    return rows


def _pack_contacts(contacts):
    return ";".join(
        "%s|%s|%.17g|%.17g|%.17g"
        % (c["link"], c["obstacle_id"], c["psi"], c["predicted"], c["lambda"])
        for c in contacts
    )


def export_trace(trajectory, path, format="csv"):
    """Write the trajectory out, one row per state (steps + 1 rows).

    csv columns: t, q_0..q_{n-1}, qdot_0..qdot_{n-1}, status, wall_time_us,
    n_contacts, contacts — the last packs per-contact
    link|obstacle_id|psi|predicted|lambda quintuples separated by ';'.
    json carries the same rows unpacked plus a small meta block.
    """
    if format not in ("csv", "json"):
        raise ScenarioValidationError("format", "expected 'csv' or 'json'")
    rows = _trace_rows(trajectory)
    n = trajectory.states[0].q.shape[0]
    path = Path(path)
    if format == "json":
        doc = {
            "meta": {"n": n, "rows": len(rows), "outcome": trajectory.outcome.value},
            "rows": rows,
        }
        path.write_text(json.dumps(doc))
        return
    header = (
        ["t"]
        + [f"q_{j}" for j in range(n)]
        + [f"qdot_{j}" for j in range(n)]
        + ["status", "wall_time_us", "n_contacts", "contacts"]
    )
    with path.open("w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for r in rows:
            w.writerow(
                ["%.17g" % r["t"]]
                + ["%.17g" % v for v in r["q"]]
                + ["%.17g" % v for v in r["qdot"]]
                + [r["status"], "%.3f" % r["wall_time_us"], len(r["contacts"]),
                   _pack_contacts(r["contacts"])]
            )


def load_trace(path):
    """Rows back from an exported trace (either format), as plain dicts."""
    path = Path(path)
    text = path.read_text()
    if path.suffix == ".json" or text.lstrip().startswith("{"):
        return json.loads(text)["rows"]
    rows = []
    with path.open(newline="") as fh:
        reader = csv.DictReader(fh)
        qcols = [c for c in reader.fieldnames if c.startswith("q_")]
        dcols = [c for c in reader.fieldnames if c.startswith("qdot_")]
        for rec in reader:
            contacts = []
            if rec["contacts"]:
                for part in rec["contacts"].split(";"):
                    link, obs, psi, pred, lam = part.split("|")
                    contacts.append({
                        "link": int(link), "obstacle_id": obs, "psi": float(psi),
                        "predicted": float(pred), "lambda": float(lam),
                    })
            rows.append({
                "t": float(rec["t"]),
                "q": [float(rec[c]) for c in qcols],
                "qdot": [float(rec[c]) for c in dcols],
                "status": rec["status"],
                "wall_time_us": float(rec["wall_time_us"]),
                "contacts": contacts,
            })
    return rows
