"""Interactive websocket service: fixed-rate simulation loop with live obstacle input.

One asyncio task owns the session and advances it tick by tick; websocket
handlers only append client messages to a mailbox that the tick drains.
Obstacle drags arrive as raw target positions and are low-pass filtered so a
teleported marker cannot slam the constraint set discontinuously.
"""

import asyncio
import json
import time
from collections import deque
from contextlib import asynccontextmanager
from dataclasses import replace
from importlib import resources

import jsonschema
import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .errors import ProtocolError
from .geometry import advance_obstacles, collect_contacts
from .kinematics import JointState, ee_position, integrate, link_segments_world
from .lcqp import LCQPStatus
from .planner import PlannerSession, step
from .simharness import FilterState, iir_filter

# The constraint pins the PREDICTED next-step distance at epsilon; the sensed
# distance in a broadcast trails it by one step of linearization error while an
# obstacle presses in (measured ~1e-6 under interactive drags). Real escapes
# are orders of magnitude deeper and arrive flagged.
_PSI_SLACK = 1e-4

_SCHEMA = json.loads(
    resources.files("fliqc").joinpath("schemas", "wire_v1.json").read_text()
)
_VALIDATOR = jsonschema.Draft7Validator(_SCHEMA)
_CLIENT_TAGS = ("obstacle_update", "control")


def encode_message(msg):
    """WireMessage dict -> JSON text frame."""
    return json.dumps(msg)


def decode_message(text):
    """JSON text frame -> validated WireMessage dict.

    Raises ProtocolError for malformed JSON, unknown tags, and schema
    violations; the caller decides whether that closes the client.
    """
    try:
        msg = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise ProtocolError(f"frame is not valid JSON: {exc}") from None
    if not isinstance(msg, dict) or "type" not in msg:
        raise ProtocolError("frame must be a JSON object with a 'type' tag")
    tag = msg["type"]
    if tag not in ("server_state",) + _CLIENT_TAGS:
        raise ProtocolError(f"unknown message tag {tag!r}")
    err = jsonschema.exceptions.best_match(_VALIDATOR.iter_errors(msg))
    if err is not None:
        raise ProtocolError(f"invalid {tag} frame: {err.message}")
    if tag == "control" and msg["action"] == "set_goal" and "goal" not in msg:
        raise ProtocolError("set_goal requires a goal")
    return msg


class SimulationSession:
    """All mutable state of one served scenario; never touched off the tick loop.

    tick() drains the mailbox, applies the freshest filtered obstacle targets,
    runs the planner sub-steps that fit in one broadcast interval, and leaves
    a self-consistent snapshot. Planner infeasibility pauses the session
    rather than crashing it.
    """

    def __init__(self, scenario, tick_rate=250.0, filter_a=0.9):
        if tick_rate <= 0:
            raise ValueError("tick_rate must be positive")
        self.scenario = scenario
        self.tick_rate = float(tick_rate)
        self.filter_a = float(filter_a)
        h = scenario.planner_cfg.h
        self.steps_per_tick = max(1, round(1.0 / (self.tick_rate * h)))
        self.paused = False
        self.mailbox = []
        self.broadcast_times = deque(maxlen=4000)
        self._restore()

    def _restore(self):
        sc = self.scenario
        self.state = JointState(q=np.array(sc.q_start, dtype=float), t=0.0)
        self.obstacles = list(sc.obstacles)
        self.scripts = dict(sc.reversal_scripts)
        self.goal = np.array(sc.goal, dtype=float)
        self.filters = {
            obs.id: FilterState(x_prev=np.array(obs.center), a=self.filter_a)
            for obs in self.obstacles
        }
        self.targets = {}
        self.planner_session = PlannerSession()
        self.last_result = None

    def submit(self, msg):
        """Queue one decoded client message for the next tick."""
        self.mailbox.append(msg)

    def _apply(self, msg):
        if msg["type"] == "obstacle_update":
            if msg["id"] in self.filters:
                self.targets[msg["id"]] = np.asarray(msg["center"], dtype=float)
            return
        action = msg["action"]
        if action == "pause":
            self.paused = True
        elif action == "resume":
            self.paused = False
        elif action == "reset":
            self._restore()
        elif action == "set_goal":
            goal = np.asarray(msg["goal"], dtype=float)
            self.goal = goal[: self.scenario.robot_model.task_dim].copy()

    def tick(self):
        for msg in self.mailbox:
            self._apply(msg)
        self.mailbox = []

        # one filter update per tick toward the latest target (latest wins)
        for k, obs in enumerate(self.obstacles):
            target = self.targets.get(obs.id)
            if target is None:
                continue
            self.filters[obs.id], center = iir_filter(self.filters[obs.id], target)
            self.obstacles[k] = replace(obs, center=center)

        if self.paused:
            return
        sc = self.scenario
        cfg = sc.planner_cfg
        for _ in range(self.steps_per_tick):
            res = step(sc.robot_model, self.state, self.obstacles, self.goal,
                       cfg, sc.contact_cfg, sc.solver_opts, self.planner_session)
            self.last_result = res
            if res.solver.status == LCQPStatus.INFEASIBLE_LINEAR:
                self.paused = True
                break
            self.state = integrate(self.state, res.qdot, cfg.h)
            self.obstacles = advance_obstacles(self.obstacles, cfg.h, self.scripts)

    def snapshot(self):
        """Current state as a server_state WireMessage dict.

        Contacts are re-sensed at the post-step configuration so psi and the
        normals in a frame match the broadcast q; multipliers come from the
        step that produced it.
        """
        sc = self.scenario
        model = sc.robot_model
        contacts = collect_contacts(model, self.state, self.obstacles, sc.contact_cfg)
        lam = self.planner_session.lambda_map
        eps = sc.contact_cfg.epsilon
        res = self.last_result
        status = "Idle" if res is None else res.solver.status.value
        safety_ok = all(c.psi >= eps - _PSI_SLACK for c in contacts) and (
            res is None or res.safety_ok or status == LCQPStatus.INFEASIBLE_LINEAR.value
        )
        ee = np.zeros(3)
        ee[: model.task_dim] = ee_position(model, self.state)
        goal = np.zeros(3)
        goal[: self.goal.shape[0]] = self.goal
        segments = [
            [[p0.tolist(), p1.tolist()] for p0, p1 in link]
            for link in link_segments_world(model, self.state)
        ]
        return {
            "type": "server_state",
            "t": float(self.state.t),
            "q": self.state.q.tolist(),
            "qdot": [0.0] * model.n if res is None else res.qdot.tolist(),
            "ee": ee.tolist(),
            "goal": goal.tolist(),
            "link_segments": segments,
            "obstacles": [
                {"id": o.id, "center": o.center.tolist(), "radius": float(o.radius)}
                for o in self.obstacles
            ],
            "contacts": [
                {
                    "link": int(c.link_index),
                    "obstacle_id": c.obstacle_id,
                    "psi": float(c.psi),
                    "lambda": float(lam.get((c.link_index, c.obstacle_id), 0.0)),
                    "normal": c.normal.tolist(),
                }
                for c in contacts
            ],
            "solver_status": status,
            "step_time_us": 0.0 if res is None else res.wall_time * 1e6,
            "paused": self.paused,
            "safety_ok": bool(safety_ok),
            "epsilon": float(eps),
            "qdot_min": (sc.planner_cfg.k_q * model.qdot_min).tolist(),
            "qdot_max": (sc.planner_cfg.k_q * model.qdot_max).tolist(),
            "link_radius_pad": [
                float(r + sc.contact_cfg.padding) for r in model.radius_per_link
            ],
        }


async def _tick_loop(session, clients):
    interval = 1.0 / session.tick_rate
    loop = asyncio.get_running_loop()
    deadline = loop.time()
    while True:
        session.tick()
        text = encode_message(session.snapshot())
        session.broadcast_times.append(time.perf_counter())
        for ws in list(clients):
            try:
                await ws.send_text(text)
            except Exception:
                clients.discard(ws)
        deadline += interval
        lag = loop.time() - deadline
        if lag > 1.0:  # fell far behind; resynchronize instead of bursting
            deadline = loop.time()
        await asyncio.sleep(max(0.0, deadline - loop.time()))


def create_app(session):
    """FastAPI app serving /ws and /healthz around one SimulationSession."""
    clients = set()

    @asynccontextmanager
    async def lifespan(app):
        task = asyncio.create_task(_tick_loop(session, clients))
        try:
            yield
        finally:
            task.cancel()
            try:
                await task
            except asyncio.CancelledError:
                pass

    app = FastAPI(lifespan=lifespan)
    app.state.session = session

    @app.get("/healthz")
    def healthz():
        return {"status": "ok", "tick_rate": session.tick_rate}

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        # late joiners get the current state before the next tick lands
        await ws.send_text(encode_message(session.snapshot()))
        clients.add(ws)
        try:
            while True:
                text = await ws.receive_text()
                try:
                    msg = decode_message(text)
                except ProtocolError:
                    await ws.close(code=1003)
                    break
                if msg["type"] == "server_state":
                    await ws.close(code=1003)  # clients must not impersonate the server
                    break
                session.submit(msg)
        except WebSocketDisconnect:
            pass
        finally:
            clients.discard(ws)

    return app


def run_server(scenario, port=8000, tick_rate=250.0, filter_a=0.9):
    """Serve one scenario until shutdown (blocking)."""
    import uvicorn

    session = SimulationSession(scenario, tick_rate=tick_rate, filter_a=filter_a)
    uvicorn.run(create_app(session), host="0.0.0.0", port=port, log_level="warning")
