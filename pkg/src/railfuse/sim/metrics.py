"""Trajectory containers and accuracy metrics."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..geometry import quat_error_vec, quat_normalize

ALIGN_WINDOW = 0.010  # seconds; nearest-neighbor association window


@dataclass
class Trajectory:
    """Timestamped poses: positions (N, 3) and body→world quaternions (N, 4)."""

    t: np.ndarray
    pos: np.ndarray
    quat: np.ndarray

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float).reshape(-1)
        self.pos = np.asarray(self.pos, dtype=float).reshape(-1, 3)
        self.quat = np.asarray(self.quat, dtype=float).reshape(-1, 4)
        if not (len(self.t) == len(self.pos) == len(self.quat)):
            raise ValueError("trajectory arrays must share a length")

    def __len__(self) -> int:
        return len(self.t)


@dataclass
class TrajectoryMetrics:
    rmse: float
    max_error: float
    t: np.ndarray = field(repr=False)
    per_axis_error: np.ndarray = field(repr=False)   # (N, 3) signed estimate - truth
    roll_pitch_error: np.ndarray = field(repr=False)  # (N, 2) radians
    horizontal_rmse: float = 0.0
    vertical_rmse: float = 0.0
    final_roll_error: float = 0.0

    def summary(self) -> dict:
        return {
            "ate_rmse_m": self.rmse,
            "ate_max_m": self.max_error,
            "horizontal_rmse_m": self.horizontal_rmse,
            "vertical_rmse_m": self.vertical_rmse,
            "final_roll_error_rad": self.final_roll_error,
        }


def evaluate(estimate: Trajectory, truth: Trajectory) -> TrajectoryMetrics:
    """Absolute trajectory error after nearest-neighbor time alignment.

    Estimate samples with no truth sample within 10 ms are dropped; if
    nothing overlaps, that is an error.
    """
    if len(estimate) == 0 or len(truth) == 0:
        raise ValueError("empty trajectory")
    idx = np.searchsorted(truth.t, estimate.t)
    idx = np.clip(idx, 1, len(truth.t) - 1)
    left = truth.t[idx - 1]
    right = truth.t[idx]
    nearest = np.where(np.abs(estimate.t - left) <= np.abs(right - estimate.t), idx - 1, idx)
    ok = np.abs(truth.t[nearest] - estimate.t) <= ALIGN_WINDOW
    if not np.any(ok):
        raise ValueError("no overlapping timestamps within the alignment window")

    est_pos = estimate.pos[ok]
    est_quat = estimate.quat[ok]
    ref_pos = truth.pos[nearest[ok]]
    ref_quat = truth.quat[nearest[ok]]
    diff = est_pos - ref_pos
    norms = np.linalg.norm(diff, axis=1)

    att = np.array(
        [quat_error_vec(quat_normalize(q_e), quat_normalize(q_r)) for q_e, q_r in zip(est_quat, ref_quat)]
    )
    return TrajectoryMetrics(
        rmse=float(np.sqrt(np.mean(norms**2))),
        max_error=float(norms.max()),
        t=estimate.t[ok],
        per_axis_error=diff,
        roll_pitch_error=att[:, :2],
        horizontal_rmse=float(np.sqrt(np.mean(np.sum(diff[:, :2] ** 2, axis=1)))),
        vertical_rmse=float(np.sqrt(np.mean(diff[:, 2] ** 2))),
        final_roll_error=float(abs(att[-1, 0])),
    )
