"""Scenario files: robot + start / goal / obstacles / all configs, JSON round-trip."""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import ScenarioValidationError
from .geometry import ContactConfig, SphereObstacle
from .kinematics import RobotModel, load_robot_model
from .lcqp import SolverOptions
from .planner import CostSpec, PlannerConfig


@dataclass(frozen=True)
class Scenario:
    robot_model: RobotModel
    q_start: np.ndarray
    goal: np.ndarray
    obstacles: tuple
    contact_cfg: ContactConfig
    planner_cfg: PlannerConfig
    solver_opts: SolverOptions
    seed: int = 0
    name: str = ""
    # obstacle_id -> waypoint at which the velocity reverses (one-shot)
    reversal_scripts: dict = field(default_factory=dict)
    # optional uniform-sampling boxes for batch runs
    q_start_box: tuple = None  # (lo, hi) arrays in joint space
    goal_box: tuple = None  # (lo, hi) arrays in task space

    def __post_init__(self):
        n = self.robot_model.n
        if self.q_start.shape != (n,):
            raise ScenarioValidationError("q_start", f"expected {n} joint values")
        if self.goal.shape != (self.robot_model.task_dim,):
            raise ScenarioValidationError(
                "goal", f"expected task-space point of dimension {self.robot_model.task_dim}"
            )
        for link in self.contact_cfg.tracked_links:
            if not 1 <= link <= n:
                raise ScenarioValidationError("contact.tracked_links", f"link {link} out of range")
        ids = [o.id for o in self.obstacles]
        if len(set(ids)) != len(ids):
            raise ScenarioValidationError("obstacles", "obstacle ids must be unique")
        for oid in self.reversal_scripts:
            if oid not in ids:
                raise ScenarioValidationError("obstacles", f"reverse_at refers to unknown id {oid!r}")


# ---------------------------------------------------------------------------
# JSON loading

def _get(doc, key, path, required=True, default=None):
    if key not in doc:
        if required:
            raise ScenarioValidationError(f"{path}{key}", "missing required field")
        return default
    return doc[key]


def _vec(value, path, length=None):
    arr = np.asarray(value, dtype=float)
    if arr.ndim != 1 or (length is not None and arr.shape != (length,)):
        raise ScenarioValidationError(path, f"expected a vector{f' of length {length}' if length else ''}")
    if not np.all(np.isfinite(arr)):
        raise ScenarioValidationError(path, "values must be finite")
    return arr


def bundled_scene_path(name):
    """Path of a scene shipped with the package (e.g. 'planar_2r_example')."""
    if not name.endswith(".json"):
        name = name + ".json"
    return Path(str(resources.files("fliqc").joinpath("scenes", name)))


def _parse_box(doc, path, dim):
    if doc is None:
        return None
    lo = _vec(_get(doc, "min", path + "."), f"{path}.min", dim)
    hi = _vec(_get(doc, "max", path + "."), f"{path}.max", dim)
    if np.any(lo > hi):
        raise ScenarioValidationError(path, "box min must be <= max")
    return (lo, hi)


def scenario_from_dict(doc, name=""):
    model = load_robot_model(_get(doc, "robot_model", ""))
    n = model.n

    contact_doc = _get(doc, "contact", "", required=False, default={})
    contact = ContactConfig(
        epsilon=float(_get(contact_doc, "epsilon", "contact.")),
        padding=float(contact_doc.get("padding", 0.15)),
        influence_margin=float(contact_doc.get("influence_margin", 0.02)),
        tracked_links=tuple(contact_doc.get("tracked_links", range(1, n + 1))),
    )

    planner_doc = _get(doc, "planner", "", required=False, default={})
    cost_doc = planner_doc.get("cost", {})
    cost = CostSpec(
        Q=np.asarray(cost_doc["Q"], dtype=float) if "Q" in cost_doc else None,
        c=_vec(cost_doc["c"], "planner.cost.c", n) if "c" in cost_doc else None,
    )
    planner = PlannerConfig(
        h=float(planner_doc.get("h", 0.001)),
        k_d=float(planner_doc.get("k_d", 0.2)),
        k_q=float(planner_doc.get("k_q", 0.2)),
        k_c=float(planner_doc.get("k_c", 0.05)),
        mu=float(planner_doc.get("mu", 0.001)),
        goal_tol=float(planner_doc.get("goal_tol", 0.005)),
        max_iters=int(planner_doc.get("max_iters", 1500)),
        cost=cost,
    )

    solver_doc = _get(doc, "solver", "", required=False, default={})
    solver = SolverOptions(
        rho0=float(solver_doc.get("rho0", 0.01)),
        beta=float(solver_doc.get("beta", 2.0)),
        comp_tol=float(solver_doc.get("comp_tol", 1e-8)),
        stat_tol=float(solver_doc.get("stat_tol", 1e-8)),
        max_outer=int(solver_doc.get("max_outer", 40)),
        max_inner=int(solver_doc.get("max_inner", 1000)),
        time_budget=solver_doc.get("time_budget"),
    )

    obstacles = []
    scripts = {}
    for k, odoc in enumerate(_get(doc, "obstacles", "", required=False, default=[])):
        oid = str(_get(odoc, "id", f"obstacles[{k}].", required=False, default=f"obstacle_{k}"))
        obstacles.append(SphereObstacle(
            id=oid,
            center=_vec(_get(odoc, "center", f"obstacles[{k}]."), f"obstacles[{k}].center", 3),
            radius=float(_get(odoc, "radius", f"obstacles[{k}].")),
            velocity=_vec(odoc.get("velocity", [0, 0, 0]), f"obstacles[{k}].velocity", 3),
        ))
        if odoc.get("reverse_at") is not None:
            scripts[oid] = _vec(odoc["reverse_at"], f"obstacles[{k}].reverse_at", 3)

    return Scenario(
        robot_model=model,
        q_start=_vec(_get(doc, "q_start", ""), "q_start", n),
        goal=_vec(_get(doc, "goal", ""), "goal", model.task_dim),
        obstacles=tuple(obstacles),
        contact_cfg=contact,
        planner_cfg=planner,
        solver_opts=solver,
        seed=int(doc.get("seed", 0)),
        name=name or str(doc.get("name", "")),
        reversal_scripts=scripts,
        q_start_box=_parse_box(doc.get("q_start_box"), "q_start_box", n),
        goal_box=_parse_box(doc.get("goal_box"), "goal_box", model.task_dim),
    )


def load_scenario(source):
    """Scenario from a JSON file path, a bundled scene name, or a dict."""
    if isinstance(source, Scenario):
        return source
    if isinstance(source, dict):
        return scenario_from_dict(source)
    path = Path(source)
    if not path.exists():
        candidate = bundled_scene_path(str(source))
        if candidate.exists():
            path = candidate
        else:
            raise ScenarioValidationError("scenario", f"no such scenario file: {source}")
    try:
        doc = json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ScenarioValidationError("scenario", f"invalid JSON: {exc}") from None
    return scenario_from_dict(doc, name=path.stem)


def scenario_to_dict(sc):
    model = sc.robot_model
    doc = {
        "name": sc.name,
        "robot_model": {
            "name": model.name,
            "n": model.n,
            "task_dim": model.task_dim,
            "joints": [
                {
                    "axis": j.axis.tolist(),
                    "offset_position": j.offset_position.tolist(),
                    "offset_rotation_quat": j.offset_rotation.tolist(),
                }
                for j in model.joints
            ],
            "link_segments": [
                [[a.tolist(), b.tolist()] for a, b in segs] for segs in model.link_segments
            ],
            "radius_per_link": model.radius_per_link.tolist(),
            "qdot_min": model.qdot_min.tolist(),
            "qdot_max": model.qdot_max.tolist(),
            "tool_offset": {
                "position": model.tool_offset_position.tolist(),
                "rotation_quat": model.tool_offset_rotation.tolist(),
            },
        },
        "q_start": sc.q_start.tolist(),
        "goal": sc.goal.tolist(),
        "obstacles": [
            {
                "id": o.id,
                "center": o.center.tolist(),
                "radius": o.radius,
                "velocity": o.velocity.tolist(),
                **({"reverse_at": sc.reversal_scripts[o.id].tolist()} if o.id in sc.reversal_scripts else {}),
            }
            for o in sc.obstacles
        ],
        "contact": {
            "epsilon": sc.contact_cfg.epsilon,
            "padding": sc.contact_cfg.padding,
            "influence_margin": sc.contact_cfg.influence_margin,
            "tracked_links": list(sc.contact_cfg.tracked_links),
        },
        "planner": {
            "h": sc.planner_cfg.h,
            "k_d": sc.planner_cfg.k_d,
            "k_q": sc.planner_cfg.k_q,
            "k_c": sc.planner_cfg.k_c,
            "mu": sc.planner_cfg.mu,
            "goal_tol": sc.planner_cfg.goal_tol,
            "max_iters": sc.planner_cfg.max_iters,
        },
        "solver": {
            "rho0": sc.solver_opts.rho0,
            "beta": sc.solver_opts.beta,
            "comp_tol": sc.solver_opts.comp_tol,
            "stat_tol": sc.solver_opts.stat_tol,
            "max_outer": sc.solver_opts.max_outer,
            "max_inner": sc.solver_opts.max_inner,
            "time_budget": sc.solver_opts.time_budget,
        },
        "seed": sc.seed,
    }
    if sc.planner_cfg.cost.Q is not None or sc.planner_cfg.cost.c is not None:
        doc["planner"]["cost"] = {}
        if sc.planner_cfg.cost.Q is not None:
            doc["planner"]["cost"]["Q"] = sc.planner_cfg.cost.Q.tolist()
        if sc.planner_cfg.cost.c is not None:
            doc["planner"]["cost"]["c"] = sc.planner_cfg.cost.c.tolist()
    if sc.q_start_box is not None:
        doc["q_start_box"] = {"min": sc.q_start_box[0].tolist(), "max": sc.q_start_box[1].tolist()}
    if sc.goal_box is not None:
        doc["goal_box"] = {"min": sc.goal_box[0].tolist(), "max": sc.goal_box[1].tolist()}
    return doc


def save_scenario(sc, path):
    Path(path).write_text(json.dumps(scenario_to_dict(sc), indent=1))
