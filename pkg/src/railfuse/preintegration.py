"""IMU + wheel-odometer measurement models and keyframe-to-keyframe
preintegration.

Between two keyframes the high-rate inertial stream is summarized into four
increments, all expressed in the body frame of the interval start:

  delta_p      double integral of bias-corrected specific force,
  delta_v      single integral of bias-corrected specific force,
  delta_q      integrated body rotation,
  odo_delta_p  integral of the scaled wheel-odometer velocity rotated into
               the start frame.

Gravity is *not* removed inside the increments; it re-enters in the
residual, which makes the increments independent of the absolute start
pose. The error state is 19-dimensional and ordered

  [δp(3), δv(3), δθ(3), δb_a(3), δb_g(3), δp_odo(3), δc(1)]

with a 19x19 covariance propagated alongside a 19x19 state-transition
Jacobian product from which the bias-correction blocks are read.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import (
    quat_conjugate,
    quat_exp,
    quat_identity,
    quat_left_mat,
    quat_multiply,
    quat_normalize,
    quat_right_mat,
    quat_to_matrix,
    skew,
    so3_right_jacobian,
)

# Error-state block slices.
I_P = slice(0, 3)
I_V = slice(3, 6)
I_TH = slice(6, 9)
I_BA = slice(9, 12)
I_BG = slice(12, 15)
I_OD = slice(15, 18)
I_C = slice(18, 19)
ERR_DIM = 19

# Integration steps longer than this indicate a sensor gap.
MAX_STEP = 0.1

# Bias deltas beyond this invalidate the first-order correction; callers
# should repropagate instead.
REPROPAGATE_THRESHOLD = 0.1


@dataclass(frozen=True)
class ImuSample:
    """One accelerometer + gyroscope reading, body frame, SI units."""

    t: float
    accel: np.ndarray
    gyro: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "accel", np.asarray(self.accel, dtype=float).reshape(3))
        object.__setattr__(self, "gyro", np.asarray(self.gyro, dtype=float).reshape(3))
        if not (np.isfinite(self.t) and np.all(np.isfinite(self.accel)) and np.all(np.isfinite(self.gyro))):
            raise ValueError("non-finite IMU sample")


@dataclass(frozen=True)
class OdometerSample:
    """Wheel-encoder reading: pulse rate plus the wheel constants."""

    t: float
    pulse_rate: float
    pulses_per_turn: float
    wheel_diameter: float

    def __post_init__(self):
        if self.pulses_per_turn <= 0:
            raise ValueError("pulses_per_turn must be positive")
        if self.wheel_diameter <= 0:
            raise ValueError("wheel_diameter must be positive")


def odometer_velocity(sample: OdometerSample) -> float:
    """Longitudinal speed in m/s along the odometer forward axis.

    pulse_rate / pulses_per_turn is wheel turns per second; one turn covers
    the wheel circumference pi * d.
    """
    return sample.pulse_rate / sample.pulses_per_turn * math.pi * sample.wheel_diameter


@dataclass(frozen=True)
class InertialNoiseSpec:
    """Continuous-time noise densities driving the error-state propagation.

    sigma_a / sigma_g: accelerometer / gyro white noise.
    sigma_ba / sigma_bg: accelerometer / gyro bias random walk.
    sigma_c: odometer scale-factor random walk.
    sigma_v: odometer velocity white noise, applied isotropically in the
    odometer frame (the lateral/vertical components encode how strongly
    the no-slip assumption is trusted).
    """

    sigma_a: float = 0.05
    sigma_g: float = 0.005
    sigma_ba: float = 1e-4
    sigma_bg: float = 1e-5
    sigma_c: float = 1e-4
    sigma_v: float = 0.05

    def __post_init__(self):
        for name in ("sigma_a", "sigma_g", "sigma_ba", "sigma_bg", "sigma_c", "sigma_v"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be strictly positive")

    def q_matrix(self) -> np.ndarray:
        """Block-diagonal continuous-time driving-noise covariance (16x16):
        [accel(3), gyro(3), ba walk(3), bg walk(3), odo vel(3), scale walk(1)].
        """
        d = np.concatenate(
            [
                np.full(3, self.sigma_a**2),
                np.full(3, self.sigma_g**2),
                np.full(3, self.sigma_ba**2),
                np.full(3, self.sigma_bg**2),
                np.full(3, self.sigma_v**2),
                [self.sigma_c**2],
            ]
        )
        return np.diag(d)


@dataclass(frozen=True)
class BiasState:
    """Accelerometer bias, gyro bias and odometer scale factor."""

    b_a: np.ndarray = field(default_factory=lambda: np.zeros(3))
    b_g: np.ndarray = field(default_factory=lambda: np.zeros(3))
    c: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "b_a", np.asarray(self.b_a, dtype=float).reshape(3))
        object.__setattr__(self, "b_g", np.asarray(self.b_g, dtype=float).reshape(3))
        if self.c <= 0 or not np.isfinite(self.c):
            raise ValueError("odometer scale must be positive and finite")
        if not (np.all(np.isfinite(self.b_a)) and np.all(np.isfinite(self.b_g))):
            raise ValueError("non-finite bias")

    def delta(self, other: "BiasState") -> np.ndarray:
        """self - other stacked as [db_a, db_g, dc] (7,)."""
        return np.concatenate([self.b_a - other.b_a, self.b_g - other.b_g, [self.c - other.c]])


@dataclass(frozen=True)
class ImuOdomExtrinsics:
    """Odometer frame expressed in the body (IMU) frame."""

    rot: np.ndarray = field(default_factory=lambda: np.eye(3))
    trans: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def __post_init__(self):
        object.__setattr__(self, "rot", np.asarray(self.rot, dtype=float))
        object.__setattr__(self, "trans", np.asarray(self.trans, dtype=float).reshape(3))


@dataclass
class PreintegratedIncrement:
    """Accumulated inertial pseudo-measurement between two keyframes.

    ``jac`` is the product of per-step discrete transition matrices; the
    bias-correction blocks (d increment / d bias at the linearization
    point) are slices of it. ``cov`` is the propagated error covariance.
    """

    lin_bias: BiasState
    delta_p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    delta_v: np.ndarray = field(default_factory=lambda: np.zeros(3))
    delta_q: np.ndarray = field(default_factory=quat_identity)
    odo_delta_p: np.ndarray = field(default_factory=lambda: np.zeros(3))
    dt: float = 0.0
    cov: np.ndarray = field(default_factory=lambda: np.zeros((ERR_DIM, ERR_DIM)))
    jac: np.ndarray = field(default_factory=lambda: np.eye(ERR_DIM))

    # Bias-correction blocks, read off the accumulated Jacobian.
    @property
    def j_p_ba(self) -> np.ndarray:
        return self.jac[I_P, I_BA]

    @property
    def j_p_bg(self) -> np.ndarray:
        return self.jac[I_P, I_BG]

    @property
    def j_v_ba(self) -> np.ndarray:
        return self.jac[I_V, I_BA]

    @property
    def j_v_bg(self) -> np.ndarray:
        return self.jac[I_V, I_BG]

    @property
    def j_q_bg(self) -> np.ndarray:
        return self.jac[I_TH, I_BG]

    @property
    def j_od_bg(self) -> np.ndarray:
        return self.jac[I_OD, I_BG]

    @property
    def j_od_c(self) -> np.ndarray:
        return self.jac[I_OD, I_C]

    def copy(self) -> "PreintegratedIncrement":
        return PreintegratedIncrement(
            lin_bias=self.lin_bias,
            delta_p=self.delta_p.copy(),
            delta_v=self.delta_v.copy(),
            delta_q=self.delta_q.copy(),
            odo_delta_p=self.odo_delta_p.copy(),
            dt=self.dt,
            cov=self.cov.copy(),
            jac=self.jac.copy(),
        )


def integrate_step(
    inc: PreintegratedIncrement,
    imu: ImuSample,
    odo_speed: float,
    dt: float,
    noise: InertialNoiseSpec,
    extrinsics: ImuOdomExtrinsics = ImuOdomExtrinsics(),
) -> PreintegratedIncrement:
    """Advance the increment by one forward-Euler step of length dt.

    ``odo_speed`` is the raw odometer speed at the sample time (already
    converted from pulse rate). Covariance and the bias Jacobian are
    advanced with the first-order discretized error-state transition.
    """
    if not (0.0 < dt <= MAX_STEP):
        raise ValueError(f"step {dt} outside (0, {MAX_STEP}]")
    if not np.isfinite(odo_speed):
        raise ValueError("non-finite odometer speed")

    b = inc.lin_bias
    a = imu.accel - b.b_a
    w = imu.gyro - b.b_g
    rot = quat_to_matrix(inc.delta_q)
    r_ob = extrinsics.rot
    v_odo = np.array([odo_speed, 0.0, 0.0])

    new = inc.copy()
    new.delta_p = inc.delta_p + inc.delta_v * dt + 0.5 * (rot @ a) * dt * dt
    new.delta_v = inc.delta_v + (rot @ a) * dt
    new.delta_q = quat_normalize(quat_multiply(inc.delta_q, quat_exp(w * dt)))
    new.odo_delta_p = inc.odo_delta_p + rot @ r_ob @ (b.c * v_odo) * dt
    new.dt = inc.dt + dt

    # Exact first-order transition of the discrete recursion above, so the
    # accumulated Jacobian is the true derivative of the increments w.r.t.
    # the linearization biases (bias corrections stay quadratic).
    r_a = rot @ skew(a)
    f_d = np.eye(ERR_DIM)
    f_d[I_P, I_V] = np.eye(3) * dt
    f_d[I_P, I_TH] = -0.5 * r_a * dt * dt
    f_d[I_P, I_BA] = -0.5 * rot * dt * dt
    f_d[I_V, I_TH] = -r_a * dt
    f_d[I_V, I_BA] = -rot * dt
    f_d[I_TH, I_TH] = quat_to_matrix(quat_exp(w * dt)).T
    f_d[I_TH, I_BG] = -so3_right_jacobian(w * dt) * dt
    f_d[I_OD, I_TH] = -rot @ skew(r_ob @ (b.c * v_odo)) * dt
    f_d[I_OD, I_C] = (rot @ r_ob @ v_odo).reshape(3, 1) * dt

    g = np.zeros((ERR_DIM, 16))
    g[I_V, 0:3] = -rot
    g[I_TH, 3:6] = -np.eye(3)
    g[I_BA, 6:9] = np.eye(3)
    g[I_BG, 9:12] = np.eye(3)
    g[I_OD, 12:15] = -rot @ r_ob
    g[I_C, 15:16] = np.array([[1.0]])

    new.jac = f_d @ inc.jac
    new.cov = f_d @ inc.cov @ f_d.T + g @ noise.q_matrix() @ g.T * dt
    # Symmetrize to suppress drift from the non-symmetric products.
    new.cov = 0.5 * (new.cov + new.cov.T)
    return new


def integrate_sequence(
    lin_bias: BiasState,
    imu_samples: list[ImuSample],
    odo_speeds: np.ndarray,
    noise: InertialNoiseSpec,
    extrinsics: ImuOdomExtrinsics = ImuOdomExtrinsics(),
) -> PreintegratedIncrement:
    """Integrate a whole interval. ``odo_speeds[i]`` must already be
    interpolated to the timestamp of ``imu_samples[i]``; each sample is held
    until the next one, so the final sample only terminates the interval.
    """
    if len(imu_samples) < 2:
        raise ValueError("need at least two IMU samples to span an interval")
    inc = PreintegratedIncrement(lin_bias=lin_bias)
    for i in range(len(imu_samples) - 1):
        dt = imu_samples[i + 1].t - imu_samples[i].t
        inc = integrate_step(inc, imu_samples[i], float(odo_speeds[i]), dt, noise, extrinsics)
    return inc


def correct_for_bias(
    inc: PreintegratedIncrement, new_bias: BiasState
) -> tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """First-order bias correction of the increments.

    Returns (delta_p, delta_v, delta_q, odo_delta_p) adjusted from the
    linearization bias to ``new_bias``. Deltas larger than
    REPROPAGATE_THRESHOLD in any component are outside the first-order
    regime; this function still evaluates, the caller decides whether to
    repropagate.
    """
    d = new_bias.delta(inc.lin_bias)
    dba, dbg, dc = d[0:3], d[3:6], d[6]
    delta_p = inc.delta_p + inc.j_p_ba @ dba + inc.j_p_bg @ dbg
    delta_v = inc.delta_v + inc.j_v_ba @ dba + inc.j_v_bg @ dbg
    dq_vec = inc.j_q_bg @ dbg
    delta_q = quat_normalize(quat_multiply(inc.delta_q, np.array([1.0, *(0.5 * dq_vec)])))
    odo_delta_p = inc.odo_delta_p + inc.j_od_bg @ dbg + (inc.j_od_c @ [dc]).reshape(3)
    return delta_p, delta_v, delta_q, odo_delta_p


def bias_delta_requires_repropagation(inc: PreintegratedIncrement, new_bias: BiasState) -> bool:
    return bool(np.max(np.abs(new_bias.delta(inc.lin_bias))) > REPROPAGATE_THRESHOLD)


def interpolate_odometer(odo_samples: list[OdometerSample], times: np.ndarray) -> np.ndarray:
    """Linearly interpolate odometer speeds onto the given timestamps.

    The two streams are not synchronous in practice; values outside the
    odometer span are held at the nearest sample.
    """
    if not odo_samples:
        return np.zeros(len(times))
    ts = np.array([s.t for s in odo_samples])
    vs = np.array([odometer_velocity(s) for s in odo_samples])
    return np.interp(np.asarray(times, dtype=float), ts, vs)


def predict_state(state_k, inc: PreintegratedIncrement, gravity_w: np.ndarray):
    """Dead-reckon the next state from the increment (biases carried over).

    Inverse of the position/velocity/attitude residual rows: predicted
    states give a zero residual by construction.
    """
    from .state import NavState

    g = np.asarray(gravity_w, dtype=float).reshape(3)
    dp_c, dv_c, dq_c, _ = correct_for_bias(inc, state_k.bias)
    rot_k = quat_to_matrix(state_k.q)
    dt = inc.dt
    return NavState(
        t=state_k.t + dt,
        p=state_k.p + state_k.v * dt - 0.5 * g * dt * dt + rot_k @ dp_c,
        v=state_k.v - g * dt + rot_k @ dv_c,
        q=quat_normalize(quat_multiply(state_k.q, dq_c)),
        bias=state_k.bias,
    )


def inertial_residual(
    inc: PreintegratedIncrement,
    state_k,
    state_k1,
    gravity_w: np.ndarray,
    extrinsics: ImuOdomExtrinsics = ImuOdomExtrinsics(),
) -> np.ndarray:
    """19-dim residual between two navigation states and the preintegrated
    pseudo-measurement, ordered like the error state.

    The increments are bias-corrected to ``state_k.bias`` internally. The
    odometer row compares the displacement of the odometer mount point,
    which brings in the lever arm at both endpoint attitudes; it vanishes
    on states generated by exact noise-free integration.
    """
    e, _, _ = inertial_residual_jacobians(
        inc, state_k, state_k1, gravity_w, extrinsics, with_jacobians=False
    )
    return e


def inertial_residual_jacobians(
    inc: PreintegratedIncrement,
    state_k,
    state_k1,
    gravity_w: np.ndarray,
    extrinsics: ImuOdomExtrinsics = ImuOdomExtrinsics(),
    with_jacobians: bool = True,
):
    """Residual plus exact Jacobians w.r.t. the 16-dim error states of the
    two endpoint states. Returns (e, J_k, J_k1); the Jacobians are None
    when with_jacobians is False.
    """
    g = np.asarray(gravity_w, dtype=float).reshape(3)
    dt = inc.dt
    rot_k = quat_to_matrix(state_k.q)
    rot_k1 = quat_to_matrix(state_k1.q)
    p_ob = extrinsics.trans

    d = state_k.bias.delta(inc.lin_bias)
    dbg = d[3:6]
    dp_c, dv_c, dq_c, dod_c = correct_for_bias(inc, state_k.bias)

    y_p = state_k1.p - state_k.p + 0.5 * g * dt * dt - state_k.v * dt
    y_v = state_k1.v + g * dt - state_k.v
    y_od = state_k1.p - state_k.p + rot_k1 @ p_ob - rot_k @ p_ob

    q_rel = quat_multiply(quat_conjugate(state_k.q), state_k1.q)
    e_q = quat_multiply(q_rel, quat_conjugate(dq_c))
    sign = 1.0
    if e_q[0] < 0.0:
        e_q = -e_q
        sign = -1.0

    e = np.zeros(ERR_DIM)
    e[I_P] = rot_k.T @ y_p - dp_c
    e[I_V] = rot_k.T @ y_v - dv_c
    e[I_TH] = 2.0 * e_q[1:]
    e[I_BA] = state_k1.bias.b_a - state_k.bias.b_a
    e[I_BG] = state_k1.bias.b_g - state_k.bias.b_g
    e[I_OD] = rot_k.T @ y_od - dod_c
    e[I_C] = state_k1.bias.c - state_k.bias.c

    if not with_jacobians:
        return e, None, None

    # Per-state error layout: [δp, δv, δθ, δb_a, δb_g, δc].
    jk = np.zeros((ERR_DIM, 16))
    jk1 = np.zeros((ERR_DIM, 16))

    jk[I_P, 0:3] = -rot_k.T
    jk[I_P, 3:6] = -rot_k.T * dt
    jk[I_P, 6:9] = skew(rot_k.T @ y_p)
    jk[I_P, 9:12] = -inc.j_p_ba
    jk[I_P, 12:15] = -inc.j_p_bg
    jk1[I_P, 0:3] = rot_k.T

    jk[I_V, 3:6] = -rot_k.T
    jk[I_V, 6:9] = skew(rot_k.T @ y_v)
    jk[I_V, 9:12] = -inc.j_v_ba
    jk[I_V, 12:15] = -inc.j_v_bg
    jk1[I_V, 3:6] = rot_k.T

    # Attitude row. Perturbing q_k on the right gives
    # e_q(δθ) = exp(-δθ) ⊗ e_q0; perturbing q_k1 gives
    # e_q(δθ) = q_rel ⊗ exp(δθ) ⊗ dq_c⁻¹.
    jk[I_TH, 6:9] = -sign * quat_right_mat(e_q * sign)[1:4, 1:4]
    jk1[I_TH, 6:9] = sign * (quat_left_mat(q_rel) @ quat_right_mat(quat_conjugate(dq_c)))[1:4, 1:4]
    # Gyro-bias dependence flows through the exact normalized correction
    # quaternion n(v) = [1, v]/sqrt(1+|v|²) with v = ½ J_q_bg δb_g.
    v = 0.5 * inc.j_q_bg @ dbg
    s2 = 1.0 + float(v @ v)
    s = np.sqrt(s2)
    n_inv = np.concatenate([[1.0], -v]) / s
    d_ninv = np.zeros((4, 3))
    d_ninv[1:4, :] = -np.eye(3) / s
    d_ninv -= np.outer(n_inv / s2, v)
    a_mat = quat_left_mat(q_rel) @ quat_right_mat(quat_conjugate(inc.delta_q))
    jk[I_TH, 12:15] = sign * (a_mat @ d_ninv)[1:4, :] @ inc.j_q_bg

    jk[I_BA, 9:12] = -np.eye(3)
    jk1[I_BA, 9:12] = np.eye(3)
    jk[I_BG, 12:15] = -np.eye(3)
    jk1[I_BG, 12:15] = np.eye(3)

    jk[I_OD, 0:3] = -rot_k.T
    jk[I_OD, 6:9] = skew(rot_k.T @ y_od) + skew(p_ob)
    jk[I_OD, 12:15] = -inc.j_od_bg
    jk[I_OD, 15:16] = -inc.j_od_c
    jk1[I_OD, 0:3] = rot_k.T
    jk1[I_OD, 6:9] = -rot_k.T @ rot_k1 @ skew(p_ob)

    jk[I_C, 15] = -1.0
    jk1[I_C, 15] = 1.0

    return e, jk, jk1
