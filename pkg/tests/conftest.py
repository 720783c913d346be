"""Shared test helpers: independent oracles kept deliberately separate from
the implementation paths they check."""

import numpy as np

from railfuse.geometry import quat_identity, quat_normalize, quat_to_matrix
from railfuse.preintegration import BiasState, ImuOdomExtrinsics, ImuSample


def omega_matrix(w):
    wx, wy, wz = w
    return np.array(
        [
            [0.0, -wx, -wy, -wz],
            [wx, 0.0, wz, -wy],
            [wy, -wz, 0.0, wx],
            [wz, wy, -wx, 0.0],
        ]
    )


def oracle_preintegrate(imu_samples, odo_speeds, bias, extrinsics=None, substeps=100):
    """Sub-stepped explicit-Euler integration of the continuous increment
    definitions, with measurements held between samples. At `substeps` per
    100 Hz interval this runs at 10 kHz.
    """
    if extrinsics is None:
        extrinsics = ImuOdomExtrinsics()
    alpha = np.zeros(3)
    beta = np.zeros(3)
    phi = np.zeros(3)
    q = quat_identity()
    for i in range(len(imu_samples) - 1):
        dt = imu_samples[i + 1].t - imu_samples[i].t
        h = dt / substeps
        acc = imu_samples[i].accel - bias.b_a
        w = imu_samples[i].gyro - bias.b_g
        v = extrinsics.rot @ np.array([bias.c * odo_speeds[i], 0.0, 0.0])
        om = omega_matrix(w)
        for _ in range(substeps):
            rot = quat_to_matrix(q)
            alpha = alpha + beta * h + 0.5 * rot @ acc * h * h
            beta = beta + rot @ acc * h
            phi = phi + rot @ v * h
            q = quat_normalize(q + 0.5 * h * om @ q)
    return alpha, beta, q, phi


def make_random_stream(rng, duration=2.0, rate=100.0, max_gyro=5e-4, accel_scale=3.0):
    """Rail-style random stream: arbitrary per-sample accelerations but slow
    rotation, so the forward-Euler scheme stays within the oracle tolerance.
    """
    n = int(duration * rate) + 1
    ts = np.arange(n) / rate
    gyro = rng.uniform(-max_gyro, max_gyro, size=3)
    samples = [
        ImuSample(t=t, accel=rng.uniform(-accel_scale, accel_scale, size=3), gyro=gyro)
        for t in ts
    ]
    speeds = rng.uniform(0.0, 5.0, size=n)
    return samples, speeds


def numeric_jacobian(f, x0, h=1e-6):
    """Central finite differences of a vector function."""
    x0 = np.asarray(x0, dtype=float)
    f0 = np.asarray(f(x0))
    jac = np.zeros((f0.size, x0.size))
    for j in range(x0.size):
        dx = np.zeros_like(x0)
        dx[j] = h
        jac[:, j] = (np.asarray(f(x0 + dx)) - np.asarray(f(x0 - dx))) / (2 * h)
    return jac
