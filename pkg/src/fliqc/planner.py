"""Velocity-level reactive planner: one LCQP per control step.

Decision variable y = [qdot; lambda]. Joint velocity tracks a task-space
pull toward the goal while contact forces lambda_i, complementarity-coupled
to the predicted surface distances, push the arm off nearby obstacles. Every
iterate the solver returns is feasible for the linear constraints, so a step
remains safe even when the solve stops early.
"""

from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ScenarioValidationError
from .geometry import advance_obstacles, collect_contacts
from .kinematics import JointState, damped_pinv, ee_position, integrate, jacobian
from .lcqp import LCQProblem, LCQPStatus, SolveResult, SolverOptions, solve_lcqp

# Tikhonov weight on the lambda block; keeps the Hessian positive definite
# without measurably biasing qdot.
_LAMBDA_REG = 1e-8
_SAFETY_SLACK = 1e-8


@dataclass(frozen=True)
class CostSpec:
    """Quadratic velocity cost 0.5 qdot'Q qdot + c'qdot; None means I / 0."""

    Q: np.ndarray = None
    c: np.ndarray = None

    def __post_init__(self):
        if self.Q is not None:
            Q = np.asarray(self.Q, dtype=float)
            if Q.ndim != 2 or Q.shape[0] != Q.shape[1]:
                raise ScenarioValidationError("cost.Q", "must be a square matrix")
            object.__setattr__(self, "Q", Q)
        if self.c is not None:
            c = np.asarray(self.c, dtype=float)
            if c.ndim != 1 or not np.all(np.isfinite(c)):
                raise ScenarioValidationError("cost.c", "must be a finite vector")
            object.__setattr__(self, "c", c)

    def weights_for(self, n):
        Q = np.eye(n) if self.Q is None else self.Q
        c = np.zeros(n) if self.c is None else self.c
        if Q.shape != (n, n):
            raise ScenarioValidationError("cost.Q", f"expected shape ({n}, {n})")
        if c.shape != (n,):
            raise ScenarioValidationError("cost.c", f"expected length {n}")
        return Q, c


@dataclass(frozen=True)
class PlannerConfig:
    h: float = 0.001
    k_d: float = 0.2
    k_q: float = 0.2
    k_c: float = 0.05
    mu: float = 0.001
    goal_tol: float = 0.005
    max_iters: int = 1500
    cost: CostSpec = field(default_factory=CostSpec)

    def __post_init__(self):
        for name in ("h", "k_d", "k_q", "mu", "goal_tol"):
            if getattr(self, name) <= 0:
                raise ScenarioValidationError(name, "must be > 0")
        if self.k_c < 0:
            raise ScenarioValidationError("k_c", "must be >= 0")
        if self.max_iters < 1:
            raise ScenarioValidationError("max_iters", "must be >= 1")


class PlanOutcome(str, Enum):
    REACHED_GOAL = "ReachedGoal"
    ITER_BUDGET = "IterBudget"
    INFEASIBLE = "Infeasible"


@dataclass(frozen=True)
class StepResult:
    qdot: np.ndarray  # commanded joint velocity, already k_q-scaled
    lambdas: np.ndarray
    contacts: tuple
    solver: SolveResult
    safety_ok: bool
    predicted_distances: np.ndarray  # psi_i + h n_i'J_ci qdot_raw per contact
    h: float = 0.001  # horizon the predictions were built with
    wall_time: float = 0.0  # sense + assemble + solve, seconds


@dataclass(frozen=True)
class Trajectory:
    states: tuple
    ee_path: np.ndarray
    steps: tuple
    outcome: PlanOutcome

    @property
    def q_path(self):
        return np.array([s.q for s in self.states])


@dataclass
class PlannerSession:
    """Mutable per-run caches: previous solution for warm starts, last good
    contact normals for degenerate witness points."""

    qdot_raw: np.ndarray = None
    lambda_map: dict = field(default_factory=dict)
    normal_cache: dict = field(default_factory=dict)

    def warm_vector(self, n, contacts):
        if self.qdot_raw is None or self.qdot_raw.shape != (n,):
            return None
        lam = [self.lambda_map.get((c.link_index, c.obstacle_id), 0.0) for c in contacts]
        return np.concatenate([self.qdot_raw, np.asarray(lam)])

    def store(self, qdot_raw, contacts, lambdas):
        self.qdot_raw = qdot_raw.copy()
        self.lambda_map = {
            (c.link_index, c.obstacle_id): float(lam) for c, lam in zip(contacts, lambdas)
        }


def task_velocity(p_goal, p_current, k_d, goal_tol):
    """Constant-speed pull toward the goal, zero once inside goal_tol."""
    delta = np.asarray(p_goal, dtype=float) - np.asarray(p_current, dtype=float)
    dist = float(np.linalg.norm(delta))
    if dist <= goal_tol:
        return np.zeros_like(delta)
    return (k_d / dist) * delta


def assemble_fliqc(model, state, contacts, xdot_task, cfg):
    """Build the per-step LCQP over y = [qdot; lambda].

    Equality rows couple qdot to the task pull plus per-contact escape
    directions; the complementarity pairs are lambda_i >= 0 against the
    predicted distance margin psi_i - eps_i + h n_i'J_ci qdot >= 0.
    """
    n = model.n
    n_c = len(contacts)
    Q_cost, c_cost = cfg.cost.weights_for(n)

    Q = np.zeros((n + n_c, n + n_c))
    Q[:n, :n] = Q_cost
    Q[n:, n:] = _LAMBDA_REG * np.eye(n_c)
    g = np.concatenate([c_cost, np.zeros(n_c)])

    J = jacobian(model, state)
    b = damped_pinv(J, cfg.mu) @ np.asarray(xdot_task, dtype=float)

    A = np.zeros((n, n + n_c))
    A[:, :n] = np.eye(n)
    R = np.zeros((n_c, n + n_c))
    r_const = np.zeros(n_c)
    L = np.zeros((n_c, n + n_c))
    for i, c in enumerate(contacts):
        A[:, n + i] = -cfg.k_c * (damped_pinv(c.J_c, cfg.mu) @ c.normal)
        R[i, :n] = cfg.h * (c.normal @ c.J_c)
        r_const[i] = c.psi - c.epsilon
        L[i, n + i] = 1.0

    lb = np.concatenate([model.qdot_min, np.zeros(n_c)])
    ub = np.concatenate([model.qdot_max, np.full(n_c, np.inf)])
    return LCQProblem(
        Q=Q, g=g, A=A, b=b, eq_rows=tuple(range(n)), L=L, R=R,
        lb=lb, ub=ub, r_const=r_const,
    )


def _predicted_distances(contacts, qdot_raw, h):
    if not contacts:
        return np.zeros(0)
    return np.array([c.psi + h * float(c.normal @ (c.J_c @ qdot_raw)) for c in contacts])


def step(model, state, obstacles, goal, cfg, contact_cfg, solver_opts=None, session=None):
    """One control step: sense contacts, solve the LCQP, command k_q * qdot.

    A linearly infeasible problem commands zero velocity. With a session the
    previous solution warm-starts the solve (new contacts start at lambda 0)
    and degenerate contact normals fall back to the last good direction.
    """
    t0 = time.perf_counter()
    opts = solver_opts if solver_opts is not None else SolverOptions()
    cache = session.normal_cache if session is not None else None
    contacts = collect_contacts(model, state, obstacles, contact_cfg, normal_cache=cache)

    xdot = task_velocity(goal, ee_position(model, state), cfg.k_d, cfg.goal_tol)
    problem = assemble_fliqc(model, state, contacts, xdot, cfg)

    warm = session.warm_vector(model.n, contacts) if session is not None else None
    result = solve_lcqp(problem, dataclasses.replace(opts, warm_start=warm))

    if result.status == LCQPStatus.INFEASIBLE_LINEAR:
        qdot_raw = np.zeros(model.n)
        lambdas = np.zeros(len(contacts))
    else:
        qdot_raw = result.y[: model.n]
        lambdas = result.y[model.n :]
        if session is not None:
            session.store(qdot_raw, contacts, lambdas)

    predicted = _predicted_distances(contacts, qdot_raw, cfg.h)
    safety_ok = bool(
        np.all(predicted >= np.array([c.epsilon for c in contacts]) - _SAFETY_SLACK)
    ) if contacts else True
    return StepResult(
        qdot=cfg.k_q * qdot_raw,
        lambdas=lambdas,
        contacts=tuple(contacts),
        solver=result,
        safety_ok=safety_ok,
        predicted_distances=predicted,
        h=cfg.h,
        wall_time=time.perf_counter() - t0,
    )


def verify_safety(result, contacts):
    """Recompute the predicted-distance bound from the raw solver iterate.

    True iff psi_i + h n_i'J_ci qdot_raw >= eps_i - 1e-8 for every contact,
    evaluated fresh from the contacts rather than trusting safety_ok.
    """
    if not contacts:
        return True
    n = result.qdot.shape[0]
    qdot_raw = result.solver.y[:n]
    for c in contacts:
        predicted = c.psi + result.h * float(c.normal @ (c.J_c @ qdot_raw))
        if predicted < c.epsilon - _SAFETY_SLACK:
            return False
    return True


def plan(scenario):
    """Run the closed loop: step, integrate q_{t+1} = q_t + h qdot_t, advance
    obstacles; stop on goal, linear infeasibility, or the iteration budget."""
    model = scenario.robot_model
    cfg = scenario.planner_cfg
    state = JointState(q=np.array(scenario.q_start, dtype=float), t=0.0)
    obstacles = list(scenario.obstacles)
    scripts = dict(scenario.reversal_scripts)
    session = PlannerSession()

    states = [state]
    ee = [ee_position(model, state)]
    steps = []
    outcome = PlanOutcome.ITER_BUDGET
    for _ in range(scenario.planner_cfg.max_iters):
        if np.linalg.norm(scenario.goal - ee[-1]) <= cfg.goal_tol:
            outcome = PlanOutcome.REACHED_GOAL
            break
        res = step(
            model, state, obstacles, scenario.goal, cfg,
            scenario.contact_cfg, scenario.solver_opts, session,
        )
        steps.append(res)
        state = integrate(state, res.qdot, cfg.h)
        states.append(state)
        ee.append(ee_position(model, state))
        if res.solver.status == LCQPStatus.INFEASIBLE_LINEAR:
            outcome = PlanOutcome.INFEASIBLE
            break
        obstacles = advance_obstacles(obstacles, cfg.h, scripts)
    else:
        if np.linalg.norm(scenario.goal - ee[-1]) <= cfg.goal_tol:
            outcome = PlanOutcome.REACHED_GOAL
    return Trajectory(
        states=tuple(states), ee_path=np.array(ee), steps=tuple(steps), outcome=outcome,
    )
