"""Ground-truth trajectory evaluation and rolling-shutter scan synthesis."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import GRAVITY_W, Pose
from ..lidar.cloud import PointCloud
from .world import RailWorld

FD_STEP = 5e-3  # seconds; differentiation step for vehicle kinematics


class TruthTrajectory:
    """Exact vehicle poses along the layout under a motion profile.

    The body origin rides ``body_height`` above the railhead plane along
    the banked normal. Body rates and accelerations come from central
    differences of the closed-form pose functions, which is exact for
    straight runs and accurate to O(h²) elsewhere.
    """

    def __init__(self, layout, profile, body_height: float = 2.0):
        self.layout = layout
        self.profile = profile
        self.body_height = body_height

    def pose_arrays(self, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        s = self.profile.arclength(times)
        data, rot = self.layout.frames(s)
        pos = data["position"] + self.body_height * rot[:, :, 2]
        return pos, rot

    def pose(self, t: float) -> Pose:
        pos, rot = self.pose_arrays([t])
        return Pose(rot[0], pos[0], src="body", dst="world")

    def velocities(self, times):
        times = np.atleast_1d(np.asarray(times, dtype=float))
        p_plus, _ = self.pose_arrays(times + FD_STEP)
        p_minus, _ = self.pose_arrays(times - FD_STEP)
        return (p_plus - p_minus) / (2 * FD_STEP)

    def body_rates(self, times):
        """Gyro truth: body angular velocity, and body-frame specific force
        (what an ideal accelerometer reads, gravity reaction included)."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        pos_0, rot_0 = self.pose_arrays(times)
        pos_p, rot_p = self.pose_arrays(times + FD_STEP)
        pos_m, rot_m = self.pose_arrays(times - FD_STEP)

        # ω from the relative rotation over 2h: vee(log(R(t-h)ᵀ R(t+h))) / 2h.
        rel = np.einsum("nij,nik->njk", rot_m, rot_p)  # R_mᵀ R_p
        trace = np.clip((np.trace(rel, axis1=1, axis2=2) - 1.0) / 2.0, -1.0, 1.0)
        angle = np.arccos(trace)
        vee = 0.5 * np.stack(
            [rel[:, 2, 1] - rel[:, 1, 2], rel[:, 0, 2] - rel[:, 2, 0], rel[:, 1, 0] - rel[:, 0, 1]],
            axis=1,
        )
        small = angle < 1e-9
        factor = np.where(small, 1.0, angle / np.where(small, 1.0, np.sin(angle)))
        omega = vee * factor[:, None] / (2 * FD_STEP)

        accel_w = (pos_p - 2 * pos_0 + pos_m) / FD_STEP**2
        specific = np.einsum("nij,nj->ni", rot_0.transpose(0, 2, 1), accel_w + GRAVITY_W)
        return omega, specific

    def odometer_speed(self, times, extr_rot=None, extr_trans=None):
        """Longitudinal speed of the odometer mount point in its own frame."""
        times = np.atleast_1d(np.asarray(times, dtype=float))
        r_ob = np.eye(3) if extr_rot is None else extr_rot
        p_ob = np.zeros(3) if extr_trans is None else extr_trans
        pos_p, rot_p = self.pose_arrays(times + FD_STEP)
        pos_m, rot_m = self.pose_arrays(times - FD_STEP)
        point_p = pos_p + np.einsum("nij,j->ni", rot_p, p_ob)
        point_m = pos_m + np.einsum("nij,j->ni", rot_m, p_ob)
        vel = (point_p - point_m) / (2 * FD_STEP)
        _, rot_0 = self.pose_arrays(times)
        forward = np.einsum("nij,j->ni", rot_0, r_ob[:, 0])
        return np.einsum("ni,ni->n", vel, forward)


@dataclass(frozen=True)
class LidarSpec:
    """Scanner model: spinning 360° or forward-limited sweep."""

    kind: str = "forward"            # "spinning" | "forward"
    rings: tuple = tuple(np.degrees(np.linspace(-0.30, 0.15, 12)))
    cols: int = 240
    rate: float = 5.0
    horizontal_fov: float = 70.0     # degrees, forward kind only
    range_noise: float = 0.01
    max_range: float = 80.0
    min_range: float = 0.5
    mount_trans: tuple = (0.0, 0.0, 0.3)
    mount_pitch: float = 0.0         # downward pitch of the sensor, radians

    @property
    def period(self) -> float:
        return 1.0 / self.rate

    def mount_pose(self) -> Pose:
        c, s = np.cos(self.mount_pitch), np.sin(self.mount_pitch)
        rot = np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
        return Pose(rot, np.array(self.mount_trans), src="lidar0", dst="body")

    def column_azimuths(self) -> np.ndarray:
        if self.kind == "spinning":
            return -np.pi + 2 * np.pi * (np.arange(self.cols) + 0.5) / self.cols
        half = np.radians(self.horizontal_fov) / 2.0
        return np.linspace(-half, half, self.cols)


def synthesize_scan(
    world: RailWorld,
    truth: TruthTrajectory,
    spec: LidarSpec,
    t_start: float,
    rng: np.random.Generator,
) -> tuple[PointCloud, np.ndarray]:
    """Ray-cast one rolling scan. Points land in the sensor frame at their
    own capture time, so raw scans carry genuine motion distortion."""
    azimuths = spec.column_azimuths()
    n_cols = len(azimuths)
    elevations = np.radians(np.asarray(spec.rings, dtype=float))
    n_rings = len(elevations)
    col_times = t_start + spec.period * np.arange(n_cols) / n_cols

    body_pos, body_rot = truth.pose_arrays(col_times)
    mount = spec.mount_pose()

    # Sensor-frame ray directions: one per (ring, col).
    ce, se = np.cos(elevations), np.sin(elevations)
    dirs_sensor = np.zeros((n_rings, n_cols, 3))
    dirs_sensor[:, :, 0] = ce[:, None] * np.cos(azimuths)[None, :]
    dirs_sensor[:, :, 1] = ce[:, None] * np.sin(azimuths)[None, :]
    dirs_sensor[:, :, 2] = se[:, None]

    sensor_rot = np.einsum("nij,jk->nik", body_rot, mount.rot)          # (C,3,3)
    sensor_pos = body_pos + np.einsum("nij,j->ni", body_rot, mount.trans)

    # dirs_world[c, r, :] = sensor_rot[c] @ dirs_sensor[r, c]
    dirs_world = np.einsum("cij,crj->cri", sensor_rot, dirs_sensor.transpose(1, 0, 2))
    origins = np.repeat(sensor_pos[:, None, :], n_rings, axis=1)

    flat_origins = origins.reshape(-1, 3)
    flat_dirs = dirs_world.reshape(-1, 3)
    s_center = float(truth.profile.arclength([t_start + 0.5 * spec.period])[0])
    ranges, labels = world.cast(flat_origins, flat_dirs, s_center,
                                max_range=spec.max_range, min_range=spec.min_range)

    hit = np.isfinite(ranges)
    if spec.range_noise > 0:
        ranges = ranges + rng.normal(0.0, spec.range_noise, size=ranges.shape)

    col_idx = np.repeat(np.arange(n_cols), n_rings)
    ring_idx = np.tile(np.arange(n_rings), n_cols)
    keep = hit
    pts_sensor = dirs_sensor.transpose(1, 0, 2).reshape(-1, 3)[keep] * ranges[keep, None]
    intensity = {0: 0, 1: 30, 2: 200, 3: 150, 4: 50, 5: 120, 6: 90}
    inten = np.array([intensity[l] for l in labels[keep]], dtype=float)
    t_offsets = (col_times[col_idx[keep]] - t_start)

    return PointCloud(
        xyz=pts_sensor,
        intensity=inten,
        ring=ring_idx[keep],
        t_offset=t_offsets,
        period=spec.period,
        frame="lidar0",
    ), labels[keep]
