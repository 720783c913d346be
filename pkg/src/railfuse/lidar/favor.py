"""Reliability weights applied to per-LiDAR registration residuals.

Three multiplicative factors describe how much a frame's registration can
be trusted: feature starvation (counts against calibrated floors),
geometric degeneracy (smallest information-matrix eigenvalue against a
calibrated floor), and consistency of the LiDAR displacement against the
short-term inertial displacement. The combined weight divides the
registration residual, so larger factors mean less trust.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

CONSISTENCY_CLAMP = (0.01, 1.0)


@dataclass(frozen=True)
class FavorFactors:
    failure: float          # 1 (healthy), 50 (one family starved), 100 (both)
    degeneracy: float       # 1 (well-conditioned) or 10 (degenerate)
    consistency: float      # 1 - ((|p_imu| - |p_lidar|)/|p_imu|)², clamped
    consistency_flagged: bool = False

    @property
    def combined_weight(self) -> float:
        """Multiplier on the residual: 1 / (κ_f κ_d κ_p)."""
        return 1.0 / (self.failure * self.degeneracy * self.consistency)


def favor_factors(
    n_edge: int,
    n_planar: int,
    edge_floor: float,
    planar_floor: float,
    lambda_min: float,
    lambda_floor: float,
    imu_displacement: float,
    lidar_displacement: float,
) -> FavorFactors:
    """Evaluate the three reliability factors for one frame.

    Counts equal to their floor count as healthy. A zero inertial
    displacement makes the consistency factor undefined; it is substituted
    with 1 and flagged.
    """
    if edge_floor <= 0 or planar_floor <= 0:
        raise ValueError("feature-count floors must be positive")
    edge_ok = n_edge >= edge_floor
    planar_ok = n_planar >= planar_floor
    if edge_ok and planar_ok:
        failure = 1.0
    elif not edge_ok and not planar_ok:
        failure = 100.0
    else:
        failure = 50.0

    degeneracy = 10.0 if lambda_min <= lambda_floor else 1.0

    flagged = False
    if imu_displacement <= 0.0:
        consistency = 1.0
        flagged = True
    else:
        rel = (imu_displacement - lidar_displacement) / imu_displacement
        consistency = float(np.clip(1.0 - rel * rel, *CONSISTENCY_CLAMP))
    return FavorFactors(failure, degeneracy, consistency, consistency_flagged=flagged)


def calibrate_degeneracy_threshold(
    well_conditioned: np.ndarray, degenerate: np.ndarray
) -> float:
    """Mid-point of the margin between the two labeled eigenvalue samples."""
    well_conditioned = np.asarray(well_conditioned, dtype=float)
    degenerate = np.asarray(degenerate, dtype=float)
    lo = float(degenerate.max())
    hi = float(well_conditioned.min())
    if lo >= hi:
        raise ValueError("eigenvalue distributions overlap; cannot separate")
    return 0.5 * (lo + hi)
