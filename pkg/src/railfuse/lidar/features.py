"""Curvature-style feature extraction from structured scans.

Follows the classic edge/planar split: a per-point smoothness score from
the local neighborhood on the same ring, then per-sector selection of the
sharpest points as edges and the flattest as planars.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .cloud import PointCloud


@dataclass
class FeatureSet:
    edges: PointCloud
    planars: PointCloud

    @property
    def n_edge(self) -> int:
        return len(self.edges)

    @property
    def n_planar(self) -> int:
        return len(self.planars)


def smoothness(cloud: PointCloud, half_window: int = 5) -> np.ndarray:
    """Per-point smoothness c = ||Σ_j (p_i - p_j)|| / (|S| · ||p_i||) over the
    same-ring neighborhood S of ``half_window`` points on each side.

    Border points without a full window and points at the origin get NaN
    (skipped by selection). |S| = 2 * half_window must be at least 4.
    """
    if 2 * half_window < 4:
        raise ValueError("window must span at least 4 neighbors")
    c = np.full(len(cloud), np.nan)
    for ring in np.unique(cloud.ring):
        idx = np.flatnonzero(cloud.ring == ring)
        if len(idx) < 2 * half_window + 1:
            continue
        pts = cloud.xyz[idx]
        norms = np.linalg.norm(pts, axis=1)
        # Σ_{j∈S}(p_i - p_j) = |S| p_i - Σ_{j∈S} p_j via a sliding window sum.
        window = 2 * half_window + 1
        csum = np.cumsum(np.vstack([np.zeros(3), pts]), axis=0)
        sums = csum[window:] - csum[:-window]  # sum over the full window incl. center
        centers = np.arange(half_window, len(idx) - half_window)
        neigh_sum = sums - pts[centers]
        diff = 2 * half_window * pts[centers] - neigh_sum
        denom = 2 * half_window * norms[centers]
        valid = denom > 0
        vals = np.full(len(centers), np.nan)
        vals[valid] = np.linalg.norm(diff[valid], axis=1) / denom[valid]
        c[idx[centers]] = vals
    return c


def _dedup(cloud: PointCloud) -> PointCloud:
    _, first = np.unique(np.round(cloud.xyz, 9), axis=0, return_index=True)
    if len(first) == len(cloud):
        return cloud
    return cloud.select(np.sort(first))


def extract_features(
    cloud: PointCloud,
    edge_thresh: float = 0.2,
    planar_thresh: float = 0.05,
    sectors: int = 6,
    max_edge_per_sector: int = 20,
    max_planar_per_sector: int = 60,
    half_window: int = 5,
) -> FeatureSet:
    """Split a deskewed cloud into edge and planar feature points.

    Within each azimuth sector the highest-smoothness points above
    ``edge_thresh`` become edges and the lowest below ``planar_thresh``
    become planars, capped per sector. Exact duplicate points are dropped
    first so a doubled cloud selects identical features. An empty cloud
    yields an empty set; the health layer decides what to do about it.
    """
    cloud = _dedup(cloud)
    if len(cloud) == 0:
        empty = cloud.select(np.zeros(0, dtype=int))
        return FeatureSet(edges=empty, planars=empty)
    c = smoothness(cloud, half_window=half_window)
    azimuth = np.arctan2(cloud.xyz[:, 1], cloud.xyz[:, 0])
    sector_of = np.clip(((azimuth + np.pi) / (2 * np.pi) * sectors).astype(int), 0, sectors - 1)

    edge_idx: list[int] = []
    planar_idx: list[int] = []
    for s in range(sectors):
        in_sector = np.flatnonzero((sector_of == s) & np.isfinite(c))
        if len(in_sector) == 0:
            continue
        cands = in_sector[c[in_sector] > edge_thresh]
        order = cands[np.argsort(-c[cands], kind="stable")]
        edge_idx.extend(order[:max_edge_per_sector])
        cands = in_sector[c[in_sector] < planar_thresh]
        order = cands[np.argsort(c[cands], kind="stable")]
        planar_idx.extend(order[:max_planar_per_sector])

    edge_idx = sorted(set(edge_idx))
    planar_idx = sorted(set(planar_idx) - set(edge_idx))
    return FeatureSet(edges=cloud.select(np.array(edge_idx, dtype=int)),
                      planars=cloud.select(np.array(planar_idx, dtype=int)))
