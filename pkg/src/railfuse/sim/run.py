"""Full sensor-suite simulation: IMU, wheel odometer, LiDAR, GNSS."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..calibration import GeodeticFix, utm_inverse, utm_project, utm_zone
from ..geometry import quat_from_matrix
from ..preintegration import BiasState, ImuOdomExtrinsics, ImuSample, InertialNoiseSpec, OdometerSample
from .lidarsim import LidarSpec, TruthTrajectory, synthesize_scan
from .metrics import Trajectory
from .world import RailWorld


@dataclass
class SensorSuite:
    """Sensor rates, noise and fault schedule for one run.

    ``true_bias`` holds the ground-truth accelerometer/gyro biases; its
    scale entry is the raw-odometer multiplier (raw speed = scale × true
    speed + noise). Outages are [start, end) time intervals during which
    the stream simply emits nothing.
    """

    imu_rate: float = 100.0
    noise: InertialNoiseSpec = field(default_factory=InertialNoiseSpec)
    true_bias: BiasState = field(default_factory=BiasState)
    odometer_rate: float = 20.0
    pulses_per_turn: float = 1024.0
    wheel_diameter: float = 0.9
    odometer_noise: float = 0.02
    odom_extrinsics: ImuOdomExtrinsics = field(default_factory=ImuOdomExtrinsics)
    lidar: LidarSpec | None = field(default_factory=LidarSpec)
    gnss_rate: float = 1.0
    gnss_sigma: float = 1.5
    gnss_outages: list = field(default_factory=list)
    lidar_outages: list = field(default_factory=list)
    body_height: float = 2.0
    geo_anchor: tuple = (31.80, 117.20, 30.0)  # lat, lon, alt of the world origin


@dataclass
class SimStreams:
    """Everything one run produces, plus ground truth."""

    imu: list
    odometer: list
    gnss: list
    lidar_scans: list          # (t_start, PointCloud, labels)
    truth: Trajectory
    suite: SensorSuite
    layout: object
    profile: object

    @property
    def lidar_mount_height(self) -> float:
        mount_z = self.suite.lidar.mount_trans[2] if self.suite.lidar else 0.0
        return self.suite.body_height + mount_z


def _in_outage(t: float, outages) -> bool:
    return any(t0 <= t < t1 for t0, t1 in outages)


def world_to_geodetic(pos, anchor):
    """Local-plane world coordinates → WGS-84 via the anchor's UTM cell."""
    lat0, lon0, alt0 = anchor
    zone = utm_zone(lon0)
    e0, n0, _, _ = utm_project(GeodeticFix(t=0.0, lat=lat0, lon=lon0), zone=zone)
    fix = utm_inverse(e0 + pos[0], n0 + pos[1], zone, southern=lat0 < 0, alt=alt0 + pos[2])
    return fix.lat, fix.lon, fix.alt


def geodetic_to_world(fix: GeodeticFix, anchor):
    lat0, lon0, alt0 = anchor
    zone = utm_zone(lon0)
    e0, n0, _, _ = utm_project(GeodeticFix(t=0.0, lat=lat0, lon=lon0), zone=zone)
    e, n, alt, _ = utm_project(fix, zone=zone)
    return np.array([e - e0, n - n0, alt - alt0])


def simulate_run(layout, profile, suite: SensorSuite, seed: int) -> SimStreams:
    """Generate all sensor streams plus the ground-truth trajectory.

    Deterministic per (layout, profile, suite, seed): each stream draws
    from its own child generator, so changing one stream's parameters
    never shifts another stream's noise.
    """
    rng = np.random.default_rng(seed)
    rng_imu, rng_odo, rng_gnss, rng_lidar = rng.spawn(4)
    truth = TruthTrajectory(layout, profile, body_height=suite.body_height)
    duration = profile.duration

    # IMU stream.
    n_imu = int(np.floor(duration * suite.imu_rate)) + 1
    imu_times = np.arange(n_imu) / suite.imu_rate
    omega, specific = truth.body_rates(imu_times)
    sqrt_rate = np.sqrt(suite.imu_rate)
    accel_meas = (specific + suite.true_bias.b_a
                  + rng_imu.normal(0.0, suite.noise.sigma_a * sqrt_rate, size=(n_imu, 3)))
    gyro_meas = (omega + suite.true_bias.b_g
                 + rng_imu.normal(0.0, suite.noise.sigma_g * sqrt_rate, size=(n_imu, 3)))
    imu = [ImuSample(t=float(t), accel=a, gyro=g) for t, a, g in zip(imu_times, accel_meas, gyro_meas)]

    # Odometer stream: raw speed = scale × true longitudinal speed + noise.
    n_odo = int(np.floor(duration * suite.odometer_rate)) + 1
    odo_times = np.arange(n_odo) / suite.odometer_rate
    v_long = truth.odometer_speed(odo_times, suite.odom_extrinsics.rot, suite.odom_extrinsics.trans)
    raw = suite.true_bias.c * v_long + rng_odo.normal(0.0, suite.odometer_noise, size=n_odo)
    pulse_rate = raw * suite.pulses_per_turn / (np.pi * suite.wheel_diameter)
    odometer = [
        OdometerSample(t=float(t), pulse_rate=float(p),
                       pulses_per_turn=suite.pulses_per_turn, wheel_diameter=suite.wheel_diameter)
        for t, p in zip(odo_times, pulse_rate)
    ]

    # GNSS stream (world positions → geodetic fixes through the anchor).
    gnss = []
    if suite.gnss_rate > 0:
        n_gnss = int(np.floor(duration * suite.gnss_rate)) + 1
        gnss_times = np.arange(n_gnss) / suite.gnss_rate
        pos, _ = truth.pose_arrays(gnss_times)
        noise = rng_gnss.normal(0.0, suite.gnss_sigma, size=(n_gnss, 3))
        for t, p, e in zip(gnss_times, pos, noise):
            if _in_outage(t, suite.gnss_outages):
                continue
            lat, lon, alt = world_to_geodetic(p + e, suite.geo_anchor)
            gnss.append(GeodeticFix(t=float(t), lat=lat, lon=lon, alt=alt, quality="SPP"))

    # LiDAR scans.
    lidar_scans = []
    if suite.lidar is not None:
        world = RailWorld(layout)
        n_scans = int(np.floor(duration / suite.lidar.period))
        for k in range(n_scans):
            t0 = k * suite.lidar.period
            if _in_outage(t0, suite.lidar_outages):
                continue
            cloud, labels = synthesize_scan(world, truth, suite.lidar, t0, rng_lidar)
            lidar_scans.append((t0, cloud, labels))

    pos, rot = truth.pose_arrays(imu_times)
    quats = np.array([quat_from_matrix(r) for r in rot])
    truth_traj = Trajectory(t=imu_times, pos=pos, quat=quats)

    return SimStreams(
        imu=imu,
        odometer=odometer,
        gnss=gnss,
        lidar_scans=lidar_scans,
        truth=truth_traj,
        suite=suite,
        layout=layout,
        profile=profile,
    )
