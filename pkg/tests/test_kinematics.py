"""Kinematics checks against a naive homogeneous-transform oracle and finite differences."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from fliqc.errors import RankDeficiencyError, ScenarioValidationError
from fliqc.kinematics import (
    JointState,
    damped_pinv,
    ee_position,
    forward_kinematics,
    integrate,
    jacobian,
    link_segments_world,
    load_robot_model,
    point_jacobian_full,
)


def rodrigues(axis, angle):
    axis = np.asarray(axis, dtype=float)
    K = np.array([
        [0, -axis[2], axis[1]],
        [axis[2], 0, -axis[0]],
        [-axis[1], axis[0], 0],
    ])
    return np.eye(3) + np.sin(angle) * K + (1 - np.cos(angle)) * (K @ K)


def quat_matrix(q):
    w, x, y, z = q
    return np.array([
        [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
        [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
        [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
    ])


def homogeneous_chain(model, q):
    """Oracle: 4x4 matrix products, no quaternions."""
    frames = []
    T = np.eye(4)
    for j, joint in enumerate(model.joints):
        off = np.eye(4)
        off[:3, :3] = quat_matrix(joint.offset_rotation)
        off[:3, 3] = joint.offset_position
        rot = np.eye(4)
        rot[:3, :3] = rodrigues(joint.axis, q[j])
        T = T @ off @ rot
        frames.append(T.copy())
    tool = np.eye(4)
    tool[:3, :3] = quat_matrix(model.tool_offset_rotation)
    tool[:3, 3] = model.tool_offset_position
    frames.append(T @ tool)
    return frames


def random_model(rng, n):
    joints = []
    for _ in range(n):
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        rot_axis = rng.normal(size=3)
        rot_axis /= np.linalg.norm(rot_axis)
        half = 0.5 * rng.uniform(-np.pi, np.pi)
        quat = np.concatenate([[np.cos(half)], np.sin(half) * rot_axis])
        joints.append({
            "axis": axis.tolist(),
            "offset_position": rng.uniform(-0.3, 0.3, size=3).tolist(),
            "offset_rotation_quat": quat.tolist(),
        })
    return load_robot_model({
        "n": n,
        "joints": joints,
        "link_segments": [[[[0, 0, 0], [0.1, 0, 0]]] for _ in range(n)],
        "qdot_min": (-np.ones(n)).tolist(),
        "qdot_max": np.ones(n).tolist(),
        "tool_offset": {"position": [0.02, -0.01, 0.04]},
    })


@pytest.fixture(scope="module")
def planar2r():
    return load_robot_model("planar_2r")


def test_forward_kinematics_matches_matrix_oracle():
    rng = np.random.default_rng(7)
    for n in (1, 3, 6):
        model = random_model(rng, n)
        for _ in range(20):
            q = rng.uniform(-np.pi, np.pi, size=n)
            poses = forward_kinematics(model, JointState(q=q))
            frames = homogeneous_chain(model, q)
            assert len(poses) == n + 1
            for pose, T in zip(poses, frames):
                np.testing.assert_allclose(pose.position, T[:3, 3], atol=1e-12)
                np.testing.assert_allclose(quat_matrix(pose.rotation), T[:3, :3], atol=1e-12)
                assert abs(np.linalg.norm(pose.rotation) - 1.0) < 1e-9


def test_planar_2r_spot_values(planar2r):
    state = JointState(q=np.array([0.523, 0.785]))
    ee = ee_position(planar2r, state)
    np.testing.assert_allclose(ee, [0.0563, 0.0733], atol=5e-4)

    J = jacobian(planar2r, JointState(q=np.zeros(2)))
    np.testing.assert_allclose(J, [[0.0, 0.0], [0.10, 0.05]], atol=1e-12)


def test_jacobian_matches_finite_differences():
    rng = np.random.default_rng(11)
    h = 1e-6
    for n in (2, 4, 7):
        model = random_model(rng, n)
        for _ in range(10):
            q = rng.uniform(-np.pi, np.pi, size=n)
            J = jacobian(model, JointState(q=q))
            for j in range(n):
                dq = np.zeros(n)
                dq[j] = h
                hi = forward_kinematics(model, JointState(q=q + dq))[-1].position
                lo = forward_kinematics(model, JointState(q=q - dq))[-1].position
                np.testing.assert_allclose(J[:, j], (hi - lo) / (2 * h), atol=1e-6)


def test_point_jacobian_distal_columns_exactly_zero():
    rng = np.random.default_rng(3)
    model = random_model(rng, 5)
    q = rng.uniform(-1, 1, size=5)
    state = JointState(q=q)
    world = link_segments_world(model, state)
    for link in range(5):
        point = world[link][0][1]
        J = point_jacobian_full(model, state, link, point)
        assert np.all(J[:, link + 1:] == 0.0)


def test_point_jacobian_matches_finite_differences():
    rng = np.random.default_rng(5)
    model = random_model(rng, 4)
    q = rng.uniform(-1, 1, size=4)
    h = 1e-6
    for link in range(4):
        # track the material point at a fixed local coordinate on the link
        local = np.array([0.07, 0.0, 0.0])

        def point_at(qv):
            poses = forward_kinematics(model, JointState(q=qv))
            pose = poses[link]
            return pose.position + quat_matrix(pose.rotation) @ local

        J = point_jacobian_full(model, JointState(q=q), link, point_at(q))
        for j in range(4):
            dq = np.zeros(4)
            dq[j] = h
            fd = (point_at(q + dq) - point_at(q - dq)) / (2 * h)
            np.testing.assert_allclose(J[:, j], fd, atol=1e-6)


def test_point_jacobian_elbow_example(planar2r):
    # end of link 1 on the 2R arm: the second joint cannot move it
    state = JointState(q=np.array([0.3, -0.4]))
    elbow = link_segments_world(planar2r, state)[0][0][1]
    J = point_jacobian_full(planar2r, state, 0, elbow)
    assert np.all(J[:, 1] == 0.0)
    assert np.linalg.norm(J[:, 0]) > 0


def test_damped_pinv_identity():
    J = np.eye(3)
    np.testing.assert_allclose(damped_pinv(J) @ J, np.eye(3), atol=1e-12)


def test_damped_pinv_full_rank_right_inverse():
    rng = np.random.default_rng(2)
    J = rng.normal(size=(3, 6))
    np.testing.assert_allclose(J @ damped_pinv(J), np.eye(3), atol=1e-9)


def test_damped_pinv_rank_deficient_bounded():
    # two identical rows: singular; damping keeps the result finite and small
    J = np.array([[1.0, 0.0], [1.0, 0.0]])
    mu = 0.001
    pinv = damped_pinv(J, damping=mu)
    assert np.all(np.isfinite(pinv))
    assert np.linalg.norm(pinv, 2) <= 1.0 / (2 * mu) + 1e-9


def test_damped_pinv_rank_deficient_raises_without_damping():
    J = np.array([[1.0, 0.0], [1.0, 0.0]])
    with pytest.raises(RankDeficiencyError):
        damped_pinv(J)


def test_damped_pinv_gain_bound_randomized():
    rng = np.random.default_rng(9)
    mu = 0.05
    for _ in range(50):
        J = rng.normal(size=(3, 5)) * rng.choice([1e-4, 1.0, 10.0])
        assert np.linalg.norm(damped_pinv(J, damping=mu), 2) <= 1.0 / (2 * mu) + 1e-9


def test_integrate():
    state = JointState(q=np.array([0.1, 0.2]), t=1.0)
    nxt = integrate(state, np.array([1.0, -2.0]), 0.001)
    np.testing.assert_allclose(nxt.q, [0.101, 0.198], atol=1e-15)
    assert nxt.t == pytest.approx(1.001)
    with pytest.raises(ScenarioValidationError):
        integrate(state, np.zeros(2), 0.0)


@settings(max_examples=30, deadline=None)
@given(
    q1=st.floats(-3, 3, allow_nan=False),
    q2=st.floats(-3, 3, allow_nan=False),
)
def test_fk_is_deterministic(q1, q2):
    model = load_robot_model("planar_2r")
    q = np.array([q1, q2])
    a = forward_kinematics(model, JointState(q=q))
    b = forward_kinematics(model, JointState(q=q))
    for pa, pb in zip(a, b):
        assert np.array_equal(pa.position, pb.position)
        assert np.array_equal(pa.rotation, pb.rotation)


def test_model_validation_errors():
    with pytest.raises(ScenarioValidationError):
        load_robot_model({"n": 1, "joints": [], "link_segments": [], "qdot_min": [], "qdot_max": []})
    bad_axis = {
        "n": 1,
        "joints": [{"axis": [0, 0, 2]}],
        "link_segments": [[[[0, 0, 0], [0.1, 0, 0]]]],
        "qdot_min": [-1], "qdot_max": [1],
    }
    with pytest.raises(ScenarioValidationError):
        load_robot_model(bad_axis)
    bad_bounds = {
        "n": 1,
        "joints": [{"axis": [0, 0, 1]}],
        "link_segments": [[[[0, 0, 0], [0.1, 0, 0]]]],
        "qdot_min": [1], "qdot_max": [-1],
    }
    with pytest.raises(ScenarioValidationError):
        load_robot_model(bad_bounds)
