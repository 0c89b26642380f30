"""Serial-chain kinematics: forward transforms, Jacobians, damped pseudo-inverse.

All chains are revolute-only. Frames follow the usual convention: joint j's
frame is reached from joint j-1's frame by a fixed offset transform followed
by a rotation of q_j about the joint axis. Link j is rigidly attached to
joint j's frame; its collision segments are expressed there.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import RankDeficiencyError, ScenarioValidationError

_UNIT_TOL = 1e-9


# ---------------------------------------------------------------------------
# quaternion helpers ([w, x, y, z] convention)

def quat_multiply(a, b):
    w1, x1, y1, z1 = a
    w2, x2, y2, z2 = b
    return np.array([
        w1 * w2 - x1 * x2 - y1 * y2 - z1 * z2,
        w1 * x2 + x1 * w2 + y1 * z2 - z1 * y2,
        w1 * y2 - x1 * z2 + y1 * w2 + z1 * x2,
        w1 * z2 + x1 * y2 - y1 * x2 + z1 * w2,
    ])


def quat_from_axis_angle(axis, angle):
    half = 0.5 * angle
    q = np.empty(4)
    q[0] = np.cos(half)
    q[1:] = np.sin(half) * np.asarray(axis, dtype=float)
    return q


def quat_rotate(q, v):
    """Rotate 3-vector v by unit quaternion q.

    Expanded v + 2 u x (u x v + w v); np.cross costs microseconds of
    dispatch per call, far too much for the per-step FK loop.
    """
    w = q[0]
    ux, uy, uz = q[1], q[2], q[3]
    vx, vy, vz = v[0], v[1], v[2]
    tx = (uy * vz - uz * vy) + w * vx
    ty = (uz * vx - ux * vz) + w * vy
    tz = (ux * vy - uy * vx) + w * vz
    out = np.empty(3)
    out[0] = vx + 2.0 * (uy * tz - uz * ty)
    out[1] = vy + 2.0 * (uz * tx - ux * tz)
    out[2] = vz + 2.0 * (ux * ty - uy * tx)
    return out


def quat_to_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


# ---------------------------------------------------------------------------
# model / state types

@dataclass(frozen=True)
class Joint:
    """One revolute joint: fixed offset transform, then rotation about axis."""

    axis: np.ndarray
    offset_position: np.ndarray
    offset_rotation: np.ndarray  # quaternion [w, x, y, z]


@dataclass(frozen=True)
class RobotModel:
    """Serial chain description.

    link_segments[j] is a tuple of (p0, p1) segment endpoints in link j's
    frame; these are the cylinder axes used for collision queries.
    radius_per_link[j] is the cylinder radius of link j.
    task_dim selects the task-space size: 2 (planar x,y) or 3 (position).
    """

    joints: tuple
    link_segments: tuple
    qdot_min: np.ndarray
    qdot_max: np.ndarray
    radius_per_link: np.ndarray
    tool_offset_position: np.ndarray
    tool_offset_rotation: np.ndarray
    task_dim: int = 3
    name: str = ""

    @property
    def n(self):
        return len(self.joints)

    def __post_init__(self):
        if self.n < 1:
            raise ScenarioValidationError("joints", "at least one joint required")
        if not np.all(self.qdot_min < self.qdot_max):
            raise ScenarioValidationError("qdot_min", "qdot_min must be < qdot_max componentwise")
        for j, joint in enumerate(self.joints):
            if abs(np.linalg.norm(joint.axis) - 1.0) > _UNIT_TOL:
                raise ScenarioValidationError(f"joints[{j}].axis", "axis must be a unit vector")
        if self.task_dim not in (2, 3):
            raise ScenarioValidationError("task_dim", "task_dim must be 2 or 3")


@dataclass(frozen=True)
class JointState:
    q: np.ndarray
    t: float = 0.0

    def __post_init__(self):
        if not np.all(np.isfinite(self.q)):
            raise ScenarioValidationError("q", "joint displacements must be finite")


@dataclass(frozen=True)
class LinkPose:
    position: np.ndarray
    rotation: np.ndarray  # unit quaternion [w, x, y, z]


# ---------------------------------------------------------------------------
# model loading

def _as_vec(value, field, length):
    arr = np.asarray(value, dtype=float)
    if arr.shape != (length,):
        raise ScenarioValidationError(field, f"expected {length} numbers, got shape {arr.shape}")
    return arr


def _parse_segments(raw, field):
    """Accept either one [p0, p1] pair or a list of pairs per link."""
    def is_pair(item):
        return (
            isinstance(item, (list, tuple)) and len(item) == 2
            and all(isinstance(p, (list, tuple)) and len(p) == 3 for p in item)
        )

    if is_pair(raw):
        raw = [raw]
    segs = []
    for k, pair in enumerate(raw):
        if not is_pair(pair):
            raise ScenarioValidationError(f"{field}[{k}]", "expected [[x,y,z],[x,y,z]]")
        segs.append((np.asarray(pair[0], dtype=float), np.asarray(pair[1], dtype=float)))
    return tuple(segs)


def bundled_model_path(name):
    """Path of a model shipped with the package (e.g. 'planar_2r')."""
    if not name.endswith(".json"):
        name = name + ".json"
    return Path(str(resources.files("fliqc").joinpath("models", name)))


def load_robot_model(source):
    """Build a RobotModel from a dict, a JSON file path, or a bundled name."""
    if isinstance(source, RobotModel):
        return source
    if isinstance(source, dict):
        doc = source
        name = doc.get("name", "")
    else:
        path = Path(source)
        if not path.exists():
            candidate = bundled_model_path(str(source))
            if candidate.exists():
                path = candidate
            else:
                raise ScenarioValidationError("robot_model", f"no such model file: {source}")
        doc = json.loads(path.read_text())
        name = doc.get("name", path.stem)

    for key in ("n", "joints", "link_segments", "qdot_min", "qdot_max"):
        if key not in doc:
            raise ScenarioValidationError(key, "missing required robot model field")
    n = int(doc["n"])
    if len(doc["joints"]) != n:
        raise ScenarioValidationError("joints", f"expected {n} joints, got {len(doc['joints'])}")
    if len(doc["link_segments"]) != n:
        raise ScenarioValidationError("link_segments", f"expected {n} per-link entries")

    joints = []
    for j, jd in enumerate(doc["joints"]):
        axis = _as_vec(jd["axis"], f"joints[{j}].axis", 3)
        pos = _as_vec(jd.get("offset_position", [0, 0, 0]), f"joints[{j}].offset_position", 3)
        rot = _as_vec(jd.get("offset_rotation_quat", [1, 0, 0, 0]), f"joints[{j}].offset_rotation_quat", 4)
        joints.append(Joint(axis=axis, offset_position=pos, offset_rotation=rot))

    segments = tuple(
        _parse_segments(raw, f"link_segments[{j}]") for j, raw in enumerate(doc["link_segments"])
    )
    radius = np.asarray(doc.get("radius_per_link", np.zeros(n)), dtype=float)
    if radius.shape != (n,):
        raise ScenarioValidationError("radius_per_link", f"expected {n} radii")
    tool = doc.get("tool_offset", {})
    return RobotModel(
        joints=tuple(joints),
        link_segments=segments,
        qdot_min=_as_vec(doc["qdot_min"], "qdot_min", n),
        qdot_max=_as_vec(doc["qdot_max"], "qdot_max", n),
        radius_per_link=radius,
        tool_offset_position=_as_vec(tool.get("position", [0, 0, 0]), "tool_offset.position", 3),
        tool_offset_rotation=_as_vec(tool.get("rotation_quat", [1, 0, 0, 0]), "tool_offset.rotation_quat", 4),
        task_dim=int(doc.get("task_dim", 3)),
        name=name,
    )


# ---------------------------------------------------------------------------
# forward kinematics

def _check_state(model, state):
    if state.q.shape != (model.n,):
        raise ScenarioValidationError("q", f"expected {model.n} joint values, got {state.q.shape}")


_chain_memo = None


def frame_chain(model, q):
    """World frames of every joint: (positions (n,3), rotations (n,4), axes (n,3)).

    positions[j] is the origin of joint j's frame (unmoved by q_j itself);
    axes[j] is joint j's rotation axis in world coordinates.

    The most recent (model, q) result is memoized since one control step
    asks for the same chain several times; treat the arrays as read-only.
    """
    global _chain_memo
    qb = q.tobytes()
    memo = _chain_memo
    if memo is not None and memo[0] is model and memo[1] == qb:
        return memo[2]
    n = model.n
    positions = np.empty((n, 3))
    rotations = np.empty((n, 4))
    axes = np.empty((n, 3))
    p = np.zeros(3)
    r = np.array([1.0, 0.0, 0.0, 0.0])
    for j, joint in enumerate(model.joints):
        p = p + quat_rotate(r, joint.offset_position)
        r = quat_multiply(r, joint.offset_rotation)
        axes[j] = quat_rotate(r, joint.axis)
        r = quat_multiply(r, quat_from_axis_angle(joint.axis, q[j]))
        positions[j] = p
        rotations[j] = r
    result = (positions, rotations, axes)
    _chain_memo = (model, qb, result)
    return result


def forward_kinematics(model, state):
    """Poses of every link frame plus the end-effector (n+1 entries)."""
    _check_state(model, state)
    positions, rotations, _ = frame_chain(model, state.q)
    poses = [
        LinkPose(position=positions[j].copy(), rotation=rotations[j] / np.linalg.norm(rotations[j]))
        for j in range(model.n)
    ]
    ee_pos = positions[-1] + quat_rotate(rotations[-1], model.tool_offset_position)
    ee_rot = quat_multiply(rotations[-1], model.tool_offset_rotation)
    poses.append(LinkPose(position=ee_pos, rotation=ee_rot / np.linalg.norm(ee_rot)))
    return poses


def ee_position(model, state):
    """End-effector position, trimmed to the model's task dimension."""
    _check_state(model, state)
    positions, rotations, _ = frame_chain(model, state.q)
    ee = positions[-1] + quat_rotate(rotations[-1], model.tool_offset_position)
    return ee[: model.task_dim].copy()


def link_segments_world(model, state):
    """Collision segments of every link posed in the world frame.

    Returns a list (per link) of (p0, p1) world-coordinate pairs.
    """
    _check_state(model, state)
    positions, rotations, _ = frame_chain(model, state.q)
    out = []
    for j in range(model.n):
        segs = [
            (positions[j] + quat_rotate(rotations[j], a), positions[j] + quat_rotate(rotations[j], b))
            for a, b in model.link_segments[j]
        ]
        out.append(segs)
    return out


# ---------------------------------------------------------------------------
# Jacobians

def _cross_into(J, col, a, b):
    J[0, col] = a[1] * b[2] - a[2] * b[1]
    J[1, col] = a[2] * b[0] - a[0] * b[2]
    J[2, col] = a[0] * b[1] - a[1] * b[0]


def point_jacobian_full(model, state, link_index, point_world):
    """3xn positional Jacobian of a material point attached to a link.

    Columns for joints beyond link_index are exactly zero: distal joints do
    not move the point.
    """
    _check_state(model, state)
    if not 0 <= link_index < model.n:
        raise ScenarioValidationError("link_index", f"out of range [0, {model.n})")
    positions, _, axes = frame_chain(model, state.q)
    J = np.zeros((3, model.n))
    p = np.asarray(point_world, dtype=float)
    for j in range(link_index + 1):
        _cross_into(J, j, axes[j], p - positions[j])
    return J


def jacobian(model, state):
    """Task Jacobian (task_dim x n) of the end-effector position."""
    _check_state(model, state)
    positions, rotations, axes = frame_chain(model, state.q)
    ee = positions[-1] + quat_rotate(rotations[-1], model.tool_offset_position)
    J = np.empty((3, model.n))
    for j in range(model.n):
        _cross_into(J, j, axes[j], ee - positions[j])
    return J[: model.task_dim].copy()


def damped_pinv(J, damping=0.0):
    """Damped pseudo-inverse J^T (J J^T + damping^2 I)^-1.

    With damping = 0 a rank-deficient J raises RankDeficiencyError instead
    of returning garbage.
    """
    J = np.asarray(J, dtype=float)
    m = J.shape[0]
    JJt = J @ J.T + (damping * damping) * np.eye(m)
    if damping == 0.0:
        try:
            c = np.linalg.cholesky(JJt)
        except np.linalg.LinAlgError:
            raise RankDeficiencyError(
                "J J^T is singular with zero damping; pass damping > 0"
            ) from None
        y = np.linalg.solve(c, np.eye(m))
        return J.T @ np.linalg.solve(c.T, y)
    return J.T @ np.linalg.solve(JJt, np.eye(m))


def integrate(state, qdot, h):
    """Explicit Euler update: q' = q + h qdot, t' = t + h."""
    if h <= 0:
        raise ScenarioValidationError("h", "step size must be positive")
    qdot = np.asarray(qdot, dtype=float)
    return JointState(q=state.q + h * qdot, t=state.t + h)
