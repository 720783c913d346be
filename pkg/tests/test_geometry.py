import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from railfuse.geometry import (
    BODY,
    WORLD,
    FrameMismatchError,
    Pose,
    compose,
    lidar_frame,
    quat_error_vec,
    quat_exp,
    quat_identity,
    quat_log,
    quat_multiply,
    quat_normalize,
    quat_to_matrix,
    quat_from_matrix,
)


def random_quat(rng):
    return quat_normalize(rng.standard_normal(4))


def random_pose(rng, src=None, dst=None):
    return Pose(quat_to_matrix(random_quat(rng)), rng.standard_normal(3), src=src, dst=dst)


# ---------------------------------------------------------------- quat_exp


def test_quat_exp_zero_is_identity():
    np.testing.assert_allclose(quat_exp(np.zeros(3)), quat_identity())


def test_quat_exp_axis_angle_closed_form():
    q = quat_exp(np.array([0.0, 0.0, np.pi / 2]))
    np.testing.assert_allclose(q, [np.cos(np.pi / 4), 0, 0, np.sin(np.pi / 4)], atol=1e-12)


def euler_quat_ode(omega, total, n_steps):
    """Oracle: explicit Euler of the quaternion kinematics q' = ½ Ω(ω) q,
    renormalized each substep."""
    wx, wy, wz = omega
    big_omega = np.array(
        [
            [0.0, -wx, -wy, -wz],
            [wx, 0.0, wz, -wy],
            [wy, -wz, 0.0, wx],
            [wz, wy, -wx, 0.0],
        ]
    )
    q = quat_identity()
    h = total / n_steps
    for _ in range(n_steps):
        q = q + 0.5 * h * big_omega @ q
        q = quat_normalize(q)
    return q


def test_quat_exp_matches_euler_ode_oracle():
    # Oracle phase error is θ³/(12 n²), so keep total angle below ~0.4 rad
    # for 100 substeps to resolve 1e-6.
    rng = np.random.default_rng(7)
    for _ in range(20):
        omega = rng.standard_normal(3)
        omega *= rng.uniform(0.05, 0.4) / np.linalg.norm(omega)
        q_oracle = euler_quat_ode(omega, 1.0, 100)
        q = quat_exp(omega)
        assert np.linalg.norm(q - q_oracle) < 1e-6


def test_quat_exp_continuous_at_taylor_switch():
    # Straddle the branch point with a 1e-6-relative gap: any discontinuity
    # would dwarf the ~1e-14 derivative contribution.
    v = np.array([1.0, 0.0, 0.0])
    lo = quat_exp(v * 1e-8 * (1 - 1e-6))
    hi = quat_exp(v * 1e-8 * (1 + 1e-6))
    assert np.linalg.norm(lo - hi) < 1e-13


def test_quat_exp_rejects_non_finite():
    with pytest.raises(ValueError):
        quat_exp(np.array([np.nan, 0, 0]))


def test_quat_exp_parallel_additivity():
    axis = np.array([0.3, -0.4, 0.5])
    a, b = 0.7 * axis, 1.3 * axis
    lhs = quat_multiply(quat_exp(a), quat_exp(b))
    rhs = quat_exp(a + b)
    assert np.linalg.norm(quat_normalize(lhs) - rhs) < 1e-9


def test_quat_norm_preserved():
    rng = np.random.default_rng(3)
    q = random_quat(rng)
    for _ in range(100):
        q = quat_normalize(quat_multiply(q, random_quat(rng)))
        assert abs(np.linalg.norm(q) - 1.0) < 1e-9
        assert q[0] >= 0.0


# ---------------------------------------------------------------- compose


def test_compose_identity():
    rng = np.random.default_rng(1)
    p = random_pose(rng)
    out = compose(Pose.identity(), p)
    np.testing.assert_allclose(out.rot, p.rot, atol=1e-12)
    np.testing.assert_allclose(out.trans, p.trans, atol=1e-12)


def test_compose_with_inverse_is_identity():
    rng = np.random.default_rng(2)
    p = random_pose(rng)
    out = compose(p, p.inverse())
    np.testing.assert_allclose(out.rot, np.eye(3), atol=1e-9)
    np.testing.assert_allclose(out.trans, np.zeros(3), atol=1e-9)


def test_compose_matches_homogeneous_matrix_oracle():
    rng = np.random.default_rng(4)
    for _ in range(20):
        a, b = random_pose(rng), random_pose(rng)
        out = compose(a, b)
        m = b.matrix() @ a.matrix()
        np.testing.assert_allclose(out.matrix(), m, atol=1e-10)


def test_compose_checks_frames():
    rng = np.random.default_rng(5)
    a = random_pose(rng, src=WORLD, dst=BODY)
    b = random_pose(rng, src=BODY, dst=lidar_frame(0))
    out = compose(a, b)
    assert out.src == WORLD and out.dst == lidar_frame(0)
    bad = random_pose(rng, src=lidar_frame(1), dst=WORLD)
    with pytest.raises(FrameMismatchError):
        compose(a, bad)


@settings(max_examples=60, deadline=None)
@given(
    st.integers(min_value=0, max_value=4),
    st.integers(min_value=0, max_value=4),
    st.integers(min_value=0, max_value=4),
    st.randoms(use_true_random=False),
)
def test_mismatched_chains_rejected_fuzz(f_a, f_b, f_c, pyrandom):
    frames = [WORLD, BODY, lidar_frame(0), lidar_frame(1), "odometer"]
    rng = np.random.default_rng(pyrandom.randrange(2**31))
    a = random_pose(rng, src=frames[f_a], dst=frames[f_b])
    b = random_pose(rng, src=frames[f_c], dst=frames[f_a])
    if frames[f_b] != frames[f_c]:
        with pytest.raises(FrameMismatchError):
            compose(a, b)
    else:
        assert compose(a, b).src == frames[f_a]


# ---------------------------------------------------------------- quat_error_vec


def test_error_vec_identity_case():
    rng = np.random.default_rng(6)
    q = random_quat(rng)
    np.testing.assert_allclose(quat_error_vec(q, q), np.zeros(3), atol=1e-12)
    np.testing.assert_allclose(quat_error_vec(-q, q), np.zeros(3), atol=1e-12)


def test_error_vec_first_order():
    dtheta = np.array([1e-3, -0.4e-3, 0.2e-3])
    e = quat_error_vec(quat_exp(dtheta), quat_identity())
    assert np.linalg.norm(e - dtheta) < 1e-6


def test_error_vec_matches_log_map_oracle():
    rng = np.random.default_rng(8)
    for _ in range(30):
        q_ref = random_quat(rng)
        dtheta = rng.standard_normal(3)
        dtheta *= rng.uniform(0.01, 0.5) / np.linalg.norm(dtheta)
        q_est = quat_normalize(quat_multiply(q_ref, quat_exp(dtheta)))
        e = quat_error_vec(q_est, q_ref)
        log = quat_log(quat_normalize(quat_multiply(quat_conj(q_ref), q_est)))
        # third-order agreement: |2 sin(θ/2) - θ| = θ³/24
        theta = np.linalg.norm(log)
        assert np.linalg.norm(e - log) < theta**3 / 20


def quat_conj(q):
    return np.array([q[0], -q[1], -q[2], -q[3]])


def test_round_trip_matrix_quat():
    rng = np.random.default_rng(9)
    for _ in range(50):
        q = random_quat(rng)
        q2 = quat_from_matrix(quat_to_matrix(q))
        assert min(np.linalg.norm(q - q2), np.linalg.norm(q + q2)) < 1e-9
