import numpy as np
import pytest
from conftest import make_random_stream, numeric_jacobian, oracle_preintegrate

from railfuse.geometry import GRAVITY, GRAVITY_W, quat_error_vec, quat_exp, quat_identity, rot_z
from railfuse.preintegration import (
    BiasState,
    ImuOdomExtrinsics,
    ImuSample,
    InertialNoiseSpec,
    OdometerSample,
    PreintegratedIncrement,
    bias_delta_requires_repropagation,
    correct_for_bias,
    inertial_residual,
    inertial_residual_jacobians,
    integrate_sequence,
    integrate_step,
    interpolate_odometer,
    odometer_velocity,
    predict_state,
)
from railfuse.state import NavState, boxplus

NOISE = InertialNoiseSpec()


def constant_stream(accel, gyro, duration, rate=100.0):
    n = int(round(duration * rate)) + 1
    return [ImuSample(t=i / rate, accel=accel, gyro=gyro) for i in range(n)]


# ------------------------------------------------------------ odometer model


def test_odometer_velocity_zero():
    s = OdometerSample(t=0.0, pulse_rate=0.0, pulses_per_turn=1000, wheel_diameter=0.9)
    assert odometer_velocity(s) == 0.0


def test_odometer_velocity_constructed_cancel():
    s = OdometerSample(t=0.0, pulse_rate=1000, pulses_per_turn=1000, wheel_diameter=1 / np.pi)
    assert abs(odometer_velocity(s) - 1.0) < 1e-12


def test_odometer_velocity_hand_evaluated():
    s = OdometerSample(t=0.0, pulse_rate=100, pulses_per_turn=1024, wheel_diameter=0.86)
    assert abs(odometer_velocity(s) - 0.26385) < 1e-5


def test_odometer_sample_validation():
    with pytest.raises(ValueError):
        OdometerSample(t=0.0, pulse_rate=1.0, pulses_per_turn=0, wheel_diameter=0.9)
    with pytest.raises(ValueError):
        OdometerSample(t=0.0, pulse_rate=1.0, pulses_per_turn=100, wheel_diameter=-1.0)


def test_interpolate_odometer_linear():
    samples = [
        OdometerSample(t=0.0, pulse_rate=0.0, pulses_per_turn=1000, wheel_diameter=1 / np.pi),
        OdometerSample(t=1.0, pulse_rate=1000.0, pulses_per_turn=1000, wheel_diameter=1 / np.pi),
    ]
    speeds = interpolate_odometer(samples, np.array([0.0, 0.5, 1.0, 2.0]))
    np.testing.assert_allclose(speeds, [0.0, 0.5, 1.0, 1.0], atol=1e-12)


# ------------------------------------------------------------ integrate_step


def test_stationary_increments():
    # At rest the accelerometer reads the upward gravity reaction, so the
    # increments accumulate +g in z.
    samples = constant_stream(np.array([0, 0, GRAVITY]), np.zeros(3), 1.0)
    inc = integrate_sequence(BiasState(), samples, np.zeros(len(samples)), NOISE)
    np.testing.assert_allclose(inc.delta_p, [0, 0, 0.5 * GRAVITY], atol=1e-9)
    np.testing.assert_allclose(inc.delta_v, [0, 0, GRAVITY], atol=1e-9)
    np.testing.assert_allclose(inc.delta_q, quat_identity(), atol=1e-12)
    np.testing.assert_allclose(inc.odo_delta_p, np.zeros(3), atol=1e-12)


def test_constant_speed_odometer_track():
    samples = constant_stream(np.array([0, 0, GRAVITY]), np.zeros(3), 3.0)
    inc = integrate_sequence(BiasState(), samples, np.full(len(samples), 2.0), NOISE)
    np.testing.assert_allclose(inc.odo_delta_p, [6.0, 0, 0], atol=1e-9)


def test_step_guards():
    inc = PreintegratedIncrement(lin_bias=BiasState())
    imu = ImuSample(t=0.0, accel=np.zeros(3), gyro=np.zeros(3))
    with pytest.raises(ValueError):
        integrate_step(inc, imu, 0.0, 0.2, NOISE)
    with pytest.raises(ValueError):
        integrate_step(inc, imu, 0.0, -0.01, NOISE)
    with pytest.raises(ValueError):
        integrate_step(inc, imu, np.nan, 0.01, NOISE)


def test_random_stream_matches_highrate_oracle():
    rng = np.random.default_rng(42)
    for _ in range(5):
        samples, speeds = make_random_stream(rng)
        bias = BiasState(b_a=rng.uniform(-0.05, 0.05, 3), b_g=rng.uniform(-1e-4, 1e-4, 3), c=1.01)
        inc = integrate_sequence(bias, samples, speeds, NOISE)
        a_o, b_o, q_o, f_o = oracle_preintegrate(samples, speeds, bias)
        assert np.linalg.norm(inc.delta_p - a_o) < 1e-4
        assert np.linalg.norm(inc.delta_v - b_o) < 1e-4
        assert np.linalg.norm(inc.odo_delta_p - f_o) < 1e-4
        assert np.linalg.norm(quat_error_vec(inc.delta_q, q_o)) < 1e-5


def test_covariance_psd_through_many_steps():
    rng = np.random.default_rng(0)
    inc = PreintegratedIncrement(lin_bias=BiasState())
    imu_t = 0.0
    for _ in range(10_000):
        imu = ImuSample(t=imu_t, accel=rng.uniform(-3, 3, 3), gyro=rng.uniform(-0.2, 0.2, 3))
        inc = integrate_step(inc, imu, rng.uniform(0, 3), 0.01, NOISE)
        imu_t += 0.01
    eig = np.linalg.eigvalsh(inc.cov)
    assert eig.min() >= -1e-10
    np.testing.assert_allclose(inc.cov, inc.cov.T, atol=1e-12)


# ------------------------------------------------------------ bias correction


def test_bias_correction_identity():
    rng = np.random.default_rng(1)
    samples, speeds = make_random_stream(rng, duration=1.0)
    bias = BiasState()
    inc = integrate_sequence(bias, samples, speeds, NOISE)
    dp, dv, dq, dod = correct_for_bias(inc, bias)
    np.testing.assert_allclose(dp, inc.delta_p, atol=1e-12)
    np.testing.assert_allclose(dv, inc.delta_v, atol=1e-12)
    np.testing.assert_allclose(dq, inc.delta_q, atol=1e-12)
    np.testing.assert_allclose(dod, inc.odo_delta_p, atol=1e-12)


def test_bias_correction_accel_matches_repropagation():
    rng = np.random.default_rng(2)
    samples, speeds = make_random_stream(rng, duration=1.0)
    bias0 = BiasState()
    inc = integrate_sequence(bias0, samples, speeds, NOISE)
    db = np.array([1e-3, 0, 0])
    bias1 = BiasState(b_a=db)
    dp, _, _, _ = correct_for_bias(inc, bias1)
    inc_re = integrate_sequence(bias1, samples, speeds, NOISE)
    predicted_change = dp - inc.delta_p
    actual_change = inc_re.delta_p - inc.delta_p
    assert np.linalg.norm(predicted_change - actual_change) < 0.05 * np.linalg.norm(actual_change)


def test_bias_correction_scale_change():
    samples = constant_stream(np.array([0, 0, GRAVITY]), np.zeros(3), 3.0)
    inc = integrate_sequence(BiasState(), samples, np.full(len(samples), 2.0), NOISE)
    _, _, _, dod = correct_for_bias(inc, BiasState(c=1.01))
    np.testing.assert_allclose(dod - inc.odo_delta_p, [0.06, 0, 0], atol=1e-6)


def test_bias_correction_quadratic_convergence():
    # First-order correction error must shrink quadratically with the bias
    # delta: err(s·db)/s² stays constant across decades.
    rng = np.random.default_rng(3)
    samples, speeds = make_random_stream(rng, duration=1.0, max_gyro=0.05)
    bias0 = BiasState()
    inc = integrate_sequence(bias0, samples, speeds, NOISE)
    direction = np.concatenate([rng.uniform(-1, 1, 3), rng.uniform(-1, 1, 3), [rng.uniform(-1, 1)]])
    direction /= np.linalg.norm(direction)
    cs = []
    for scale in (1e-1, 1e-2, 1e-3):
        d = direction * scale
        bias1 = BiasState(b_a=d[0:3], b_g=d[3:6], c=1.0 + d[6])
        dp, dv, dq, dod = correct_for_bias(inc, bias1)
        re = integrate_sequence(bias1, samples, speeds, NOISE)
        err = np.sqrt(
            np.linalg.norm(dp - re.delta_p) ** 2
            + np.linalg.norm(dv - re.delta_v) ** 2
            + np.linalg.norm(dod - re.odo_delta_p) ** 2
            + np.linalg.norm(quat_error_vec(dq, re.delta_q)) ** 2
        )
        cs.append(err / scale**2)
    assert abs(cs[0] - cs[1]) < 0.1 * cs[1]
    assert abs(cs[1] - cs[2]) < 0.1 * cs[2]


def test_repropagation_trigger():
    inc = PreintegratedIncrement(lin_bias=BiasState())
    assert not bias_delta_requires_repropagation(inc, BiasState(b_a=[0.05, 0, 0]))
    assert bias_delta_requires_repropagation(inc, BiasState(b_a=[0.2, 0, 0]))


# ------------------------------------------------------------ residual


def integrate_consistent_pair(samples, speeds, bias, extr=ImuOdomExtrinsics()):
    inc = integrate_sequence(bias, samples, speeds, NOISE, extr)
    state_k = NavState(t=0.0, p=np.array([3.0, -2.0, 1.0]), v=np.array([2.0, 0, 0]), bias=bias)
    state_k1 = predict_state(state_k, inc, GRAVITY_W)
    return inc, state_k, state_k1


def test_residual_zero_on_consistent_states():
    samples = constant_stream(np.array([0, 0, GRAVITY]), np.zeros(3), 1.0)
    inc, sk, sk1 = integrate_consistent_pair(samples, np.full(len(samples), 2.0), BiasState())
    e = inertial_residual(inc, sk, sk1, GRAVITY_W)
    assert np.linalg.norm(e) < 1e-6


def test_residual_zero_invariant_under_world_yaw_shift():
    # Increments are built purely from body-frame data, so re-expressing the
    # trajectory in a yawed/translated world must not break consistency.
    samples = constant_stream(np.array([0, 0, GRAVITY]), np.zeros(3), 1.0)
    inc, sk, sk1 = integrate_consistent_pair(samples, np.full(len(samples), 2.0), BiasState())
    from railfuse.geometry import quat_multiply, quat_normalize

    rot = rot_z(0.83)
    q_yaw = quat_exp(np.array([0.0, 0.0, 0.83]))
    shift = np.array([100.0, -40.0, 3.0])
    for s in (sk, sk1):
        s.p = rot @ s.p + shift
        s.v = rot @ s.v
        s.q = quat_normalize(quat_multiply(q_yaw, s.q))
    e = inertial_residual(inc, sk, sk1, GRAVITY_W)
    assert np.linalg.norm(e) < 1e-6


def test_residual_position_row_linear():
    samples = constant_stream(np.array([0, 0, GRAVITY]), np.array([0.0, 0.0, 3e-4]), 1.0)
    inc, sk, sk1 = integrate_consistent_pair(samples, np.full(len(samples), 2.0), BiasState())
    e0 = inertial_residual(inc, sk, sk1, GRAVITY_W)
    sk1b = sk1.copy()
    sk1b.p = sk1.p + np.array([0.1, 0, 0])
    e1 = inertial_residual(inc, sk, sk1b, GRAVITY_W)
    from railfuse.geometry import quat_to_matrix

    expected = quat_to_matrix(sk.q).T @ np.array([0.1, 0, 0])
    np.testing.assert_allclose(e1[0:3] - e0[0:3], expected, atol=1e-12)


def test_residual_bias_rows_are_differences():
    rng = np.random.default_rng(5)
    samples, speeds = make_random_stream(rng, duration=0.5)
    bias = BiasState(b_a=[0.01, 0, 0])
    inc, sk, sk1 = integrate_consistent_pair(samples, speeds, bias)
    sk1.bias = BiasState(b_a=[0.02, 0.01, 0], b_g=[1e-4, 0, 0], c=1.02)
    e = inertial_residual(inc, sk, sk1, GRAVITY_W)
    np.testing.assert_allclose(e[9:12], sk1.bias.b_a - sk.bias.b_a, atol=1e-12)
    np.testing.assert_allclose(e[12:15], sk1.bias.b_g - sk.bias.b_g, atol=1e-12)
    assert abs(e[18] - (sk1.bias.c - sk.bias.c)) < 1e-12


def random_state(rng, t=0.0):
    return NavState(
        t=t,
        p=rng.uniform(-5, 5, 3),
        v=rng.uniform(-3, 3, 3),
        q=quat_exp(rng.uniform(-0.5, 0.5, 3)),
        bias=BiasState(
            b_a=rng.uniform(-0.05, 0.05, 3), b_g=rng.uniform(-0.005, 0.005, 3), c=rng.uniform(0.95, 1.05)
        ),
    )


def test_residual_jacobians_match_finite_differences():
    rng = np.random.default_rng(6)
    extr = ImuOdomExtrinsics(rot=np.eye(3), trans=np.array([0.8, 0.0, -1.2]))
    worst = 0.0
    for _ in range(20):
        samples, speeds = make_random_stream(rng, duration=0.4, max_gyro=0.05)
        bias = BiasState(b_a=rng.uniform(-0.02, 0.02, 3), b_g=rng.uniform(-0.002, 0.002, 3))
        inc = integrate_sequence(bias, samples, speeds, NOISE, extr)
        sk, sk1 = random_state(rng), random_state(rng, t=0.4)
        e, jk, jk1 = inertial_residual_jacobians(inc, sk, sk1, GRAVITY_W, extr)

        fd_k = numeric_jacobian(
            lambda d: inertial_residual(inc, boxplus(sk, d), sk1, GRAVITY_W, extr), np.zeros(16)
        )
        fd_k1 = numeric_jacobian(
            lambda d: inertial_residual(inc, sk, boxplus(sk1, d), GRAVITY_W, extr), np.zeros(16)
        )
        worst = max(worst, np.abs(jk - fd_k).max(), np.abs(jk1 - fd_k1).max())
    assert worst < 1e-4
