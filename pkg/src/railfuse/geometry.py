"""Rotation and rigid-transform primitives shared by the whole stack.

Quaternions are Hamilton convention, stored as length-4 numpy arrays
``(w, x, y, z)`` with the scalar part first. A body attitude quaternion
maps body-frame vectors into the world frame: ``v_W = R(q_WB) v_B``.
Normalization enforces the ``w >= 0`` hemisphere so a rotation has one
canonical representative.

World frame is z-up with gravity magnitude ``GRAVITY``; the accelerometer
model adds the upward reaction ``(0, 0, +g)`` in the world frame.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

GRAVITY = 9.81
GRAVITY_W = np.array([0.0, 0.0, GRAVITY])

# Frame tags. Poses may carry (src, dst) tags; composition checks them
# when both sides are tagged.
WORLD = "world"
BODY = "body"
CAMERA = "camera"
ODOMETER = "odometer"
LOCAL_PLANE = "w0"

# Angle below which quat_exp switches to its Taylor expansion.
SMALL_ANGLE = 1e-8


class FrameMismatchError(ValueError):
    """Raised when pose composition chains incompatible frames."""


def lidar_frame(index: int = 0) -> str:
    return f"lidar{index}"


def skew(v: np.ndarray) -> np.ndarray:
    """Cross-product matrix: skew(a) @ b == cross(a, b)."""
    x, y, z = v
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


def quat_identity() -> np.ndarray:
    return np.array([1.0, 0.0, 0.0, 0.0])


def quat_normalize(q: np.ndarray) -> np.ndarray:
    """Unit-normalize and pick the w >= 0 representative."""
    q = np.asarray(q, dtype=float)
    n = np.linalg.norm(q)
    if n == 0.0 or not np.isfinite(n):
        raise ValueError("cannot normalize a zero or non-finite quaternion")
    q = q / n
    if q[0] < 0.0:
        q = -q
    return q

def quat_conjugate(q: np.ndarray) -> np.ndarray:
    return np.array([q[0], -q[1], -q[2], -q[3]])


def quat_multiply(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Hamilton product a ⊗ b (no renormalization)."""
    aw, ax, ay, az = a
    bw, bx, by, bz = b
    return np.array(
        [
            aw * bw - ax * bx - ay * by - az * bz,
            aw * bx + ax * bw + ay * bz - az * by,
            aw * by - ax * bz + ay * bw + az * bx,
            aw * bz + ax * by - ay * bx + az * bw,
        ]
    )


def quat_exp(omega_dt: np.ndarray) -> np.ndarray:
    """Rotation-vector exponential: unit quaternion for a rotation of
    ``||omega_dt||`` radians about ``omega_dt``.

    Below SMALL_ANGLE the half-angle sine/cosine are replaced by their
    second-order Taylor expansions, continuous at the switch point.
    """
    omega_dt = np.asarray(omega_dt, dtype=float)
    if not np.all(np.isfinite(omega_dt)):
        raise ValueError("non-finite rotation vector")
    angle = float(np.linalg.norm(omega_dt))
    if angle < SMALL_ANGLE:
        w = 1.0 - angle * angle / 8.0
        s = 0.5 - angle * angle / 48.0
    else:
        w = np.cos(0.5 * angle)
        s = np.sin(0.5 * angle) / angle
    return quat_normalize(np.array([w, s * omega_dt[0], s * omega_dt[1], s * omega_dt[2]]))


def quat_log(q: np.ndarray) -> np.ndarray:
    """Rotation vector of a unit quaternion (inverse of quat_exp)."""
    q = quat_normalize(q)
    vn = float(np.linalg.norm(q[1:]))
    if vn < SMALL_ANGLE:
        # sin(θ/2) ≈ θ/2 regime
        return 2.0 * q[1:]
    angle = 2.0 * np.arctan2(vn, q[0])
    return q[1:] * (angle / vn)


def quat_to_matrix(q: np.ndarray) -> np.ndarray:
    w, x, y, z = q
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y)],
            [2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x)],
            [2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y)],
        ]
    )


def quat_from_matrix(m: np.ndarray) -> np.ndarray:
    """Shepperd's method, canonical sign."""
    m = np.asarray(m, dtype=float)
    t = np.trace(m)
    if t > 0:
        s = np.sqrt(t + 1.0) * 2.0
        q = np.array(
            [0.25 * s, (m[2, 1] - m[1, 2]) / s, (m[0, 2] - m[2, 0]) / s, (m[1, 0] - m[0, 1]) / s]
        )
    elif m[0, 0] > m[1, 1] and m[0, 0] > m[2, 2]:
        s = np.sqrt(1.0 + m[0, 0] - m[1, 1] - m[2, 2]) * 2.0
        q = np.array(
            [(m[2, 1] - m[1, 2]) / s, 0.25 * s, (m[0, 1] + m[1, 0]) / s, (m[0, 2] + m[2, 0]) / s]
        )
    elif m[1, 1] > m[2, 2]:
        s = np.sqrt(1.0 + m[1, 1] - m[0, 0] - m[2, 2]) * 2.0
        q = np.array(
            [(m[0, 2] - m[2, 0]) / s, (m[0, 1] + m[1, 0]) / s, 0.25 * s, (m[1, 2] + m[2, 1]) / s]
        )
    else:
        s = np.sqrt(1.0 + m[2, 2] - m[0, 0] - m[1, 1]) * 2.0
        q = np.array(
            [(m[1, 0] - m[0, 1]) / s, (m[0, 2] + m[2, 0]) / s, (m[1, 2] + m[2, 1]) / s, 0.25 * s]
        )
    return quat_normalize(q)


def quat_error_vec(q_est: np.ndarray, q_ref: np.ndarray) -> np.ndarray:
    """Attitude residual: twice the vector part of q_ref⁻¹ ⊗ q_est.

    Zero iff q_est equals ±q_ref; equal to the rotation vector of the
    relative rotation to first order.
    """
    e = quat_multiply(quat_conjugate(q_ref), q_est)
    if e[0] < 0.0:
        e = -e
    return 2.0 * e[1:]


def quat_left_mat(q: np.ndarray) -> np.ndarray:
    """4x4 matrix L(q) with q ⊗ p == L(q) @ p."""
    w, x, y, z = q
    return np.array(
        [
            [w, -x, -y, -z],
            [x, w, -z, y],
            [y, z, w, -x],
            [z, -y, x, w],
        ]
    )


def quat_right_mat(q: np.ndarray) -> np.ndarray:
    """4x4 matrix R(q) with p ⊗ q == R(q) @ p."""
    w, x, y, z = q
    return np.array(
        [
            [w, -x, -y, -z],
            [x, w, z, -y],
            [y, -z, w, x],
            [z, y, -x, w],
        ]
    )


def so3_right_jacobian(phi: np.ndarray) -> np.ndarray:
    """Right Jacobian of SO(3): exp(phi + J_r(phi) ε) ≈ exp(phi) exp(ε)."""
    phi = np.asarray(phi, dtype=float)
    theta = float(np.linalg.norm(phi))
    k = skew(phi)
    if theta < 1e-5:
        a = 0.5 - theta * theta / 24.0
        b = 1.0 / 6.0 - theta * theta / 120.0
    else:
        a = (1.0 - np.cos(theta)) / (theta * theta)
        b = (theta - np.sin(theta)) / (theta**3)
    return np.eye(3) - a * k + b * (k @ k)


def rot_z(yaw: float) -> np.ndarray:
    c, s = np.cos(yaw), np.sin(yaw)
    return np.array([[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]])


def _check_rotation(m: np.ndarray) -> None:
    if m.shape != (3, 3):
        raise ValueError("rotation must be 3x3")
    if not np.allclose(m.T @ m, np.eye(3), atol=1e-7) or abs(np.linalg.det(m) - 1.0) > 1e-7:
        raise ValueError("matrix is not a proper rotation")


@dataclass(frozen=True)
class Pose:
    """Rigid transform mapping frame ``src`` into frame ``dst``:
    ``p_dst = rot @ p_src + trans``.

    Frame tags are optional strings; composition validates them whenever
    both sides carry a tag.
    """

    rot: np.ndarray
    trans: np.ndarray
    src: str | None = None
    dst: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "rot", np.asarray(self.rot, dtype=float))
        object.__setattr__(self, "trans", np.asarray(self.trans, dtype=float).reshape(3))
        _check_rotation(self.rot)
        if not np.all(np.isfinite(self.trans)):
            raise ValueError("non-finite translation")

    @staticmethod
    def identity(frame: str | None = None) -> "Pose":
        return Pose(np.eye(3), np.zeros(3), src=frame, dst=frame)

    @staticmethod
    def from_quat(q: np.ndarray, t: np.ndarray, src: str | None = None, dst: str | None = None) -> "Pose":
        return Pose(quat_to_matrix(quat_normalize(q)), t, src=src, dst=dst)

    @property
    def quat(self) -> np.ndarray:
        return quat_from_matrix(self.rot)

    def apply(self, points: np.ndarray) -> np.ndarray:
        """Transform one point (3,) or a stack of points (N, 3)."""
        p = np.asarray(points, dtype=float)
        if p.ndim == 1:
            return self.rot @ p + self.trans
        return p @ self.rot.T + self.trans

    def inverse(self) -> "Pose":
        return Pose(self.rot.T, -self.rot.T @ self.trans, src=self.dst, dst=self.src)

    def matrix(self) -> np.ndarray:
        m = np.eye(4)
        m[:3, :3] = self.rot
        m[:3, 3] = self.trans
        return m


def compose(a: Pose, b: Pose) -> Pose:
    """Chain a: X→Y with b: Y→Z into X→Z.

    Equivalent to the homogeneous-matrix product ``b.matrix() @ a.matrix()``.
    """
    if a.dst is not None and b.src is not None and a.dst != b.src:
        raise FrameMismatchError(f"cannot chain {a.src}→{a.dst} with {b.src}→{b.dst}")
    return Pose(b.rot @ a.rot, b.rot @ a.trans + b.trans, src=a.src, dst=b.dst)


def interpolate_pose(a: Pose, b: Pose, fraction: float) -> Pose:
    """Screw-free interpolation: linear in translation, geodesic in rotation.

    fraction 0 returns a, fraction 1 returns b.
    """
    dq = quat_log(quat_from_matrix(a.rot.T @ b.rot))
    rot = a.rot @ quat_to_matrix(quat_exp(fraction * dq))
    trans = (1.0 - fraction) * a.trans + fraction * b.trans
    return Pose(rot, trans, src=a.src, dst=a.dst)
