"""Structured point clouds and motion-distortion correction."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import Pose, compose, interpolate_pose


@dataclass
class PointCloud:
    """Scan points with per-point metadata.

    xyz: (N, 3) coordinates in the sensor frame.
    intensity: (N,) unitless return strength.
    ring: (N,) integer row index of the emitting channel.
    t_offset: (N,) seconds since scan start, within [0, period].
    """

    xyz: np.ndarray
    intensity: np.ndarray = None
    ring: np.ndarray = None
    t_offset: np.ndarray = None
    period: float = 0.1
    frame: str | None = None

    def __post_init__(self):
        self.xyz = np.asarray(self.xyz, dtype=float).reshape(-1, 3)
        n = len(self.xyz)
        if self.intensity is None:
            self.intensity = np.zeros(n)
        if self.ring is None:
            self.ring = np.zeros(n, dtype=int)
        if self.t_offset is None:
            self.t_offset = np.zeros(n)
        self.intensity = np.asarray(self.intensity, dtype=float).reshape(n)
        self.ring = np.asarray(self.ring, dtype=int).reshape(n)
        self.t_offset = np.asarray(self.t_offset, dtype=float).reshape(n)
        if not np.all(np.isfinite(self.xyz)):
            raise ValueError("non-finite point coordinates")

    def __len__(self) -> int:
        return len(self.xyz)

    def select(self, mask_or_idx) -> "PointCloud":
        return PointCloud(
            xyz=self.xyz[mask_or_idx],
            intensity=self.intensity[mask_or_idx],
            ring=self.ring[mask_or_idx],
            t_offset=self.t_offset[mask_or_idx],
            period=self.period,
            frame=self.frame,
        )

    def ranges(self) -> np.ndarray:
        return np.linalg.norm(self.xyz, axis=1)


def deskew(cloud: PointCloud, motion: Pose) -> PointCloud:
    """Re-express every point at the scan-end sensor pose.

    ``motion`` is the sensor motion over one scan period: the pose of the
    scan-start sensor frame expressed in the scan-end frame. Each point is
    carried through the fraction of the motion matching its timestamp
    (linear in translation, geodesic in rotation); zero motion returns an
    identical cloud.
    """
    if np.any(cloud.t_offset < -1e-12) or np.any(cloud.t_offset > cloud.period + 1e-12):
        raise ValueError("point timestamps outside the scan period")
    if len(cloud) == 0:
        return cloud
    end = Pose.identity()
    xyz = np.empty_like(cloud.xyz)
    fractions = 1.0 - cloud.t_offset / cloud.period if cloud.period > 0 else np.zeros(len(cloud))
    # Points sampled at fraction f of the scan need the remaining (1-f)
    # share of the motion; group by quantized fraction to vectorize.
    keys = np.round(fractions * 4096).astype(int)
    for key in np.unique(keys):
        mask = keys == key
        pose_t = interpolate_pose(end, motion, key / 4096.0)
        xyz[mask] = pose_t.apply(cloud.xyz[mask])
    return PointCloud(
        xyz=xyz,
        intensity=cloud.intensity.copy(),
        ring=cloud.ring.copy(),
        t_offset=cloud.t_offset.copy(),
        period=cloud.period,
        frame=cloud.frame,
    )
