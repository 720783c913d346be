"""Pole-like landmark extraction from a range-image projection.

Poles (catenary masts, signal posts, overhead supports) are the one class
of object whose relative position keeps changing in otherwise repetitive
rail corridors, so their centroids anchor the longitudinal and lateral
translation. Clusters qualify when they are vertically elongated,
laterally isolated from the background and large enough.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ..geometry import Pose
from .cloud import PointCloud

RANGE_CONTINUITY = 0.4
DEFAULT_ROWS = 64


@dataclass
class PoleSet:
    """Per-pole centroid (mean x, y, z) and member count."""

    centroids: np.ndarray
    counts: np.ndarray

    def __len__(self) -> int:
        return len(self.centroids)

    @staticmethod
    def empty() -> "PoleSet":
        return PoleSet(centroids=np.zeros((0, 3)), counts=np.zeros(0, dtype=int))


def extract_poles(
    cloud: PointCloud,
    cols: int = 900,
    min_points: int = 10,
    min_elongation: float = 3.0,
    isolation_gap: float = 0.5,
) -> PoleSet:
    """Cluster the range image and keep pole-like clusters.

    Rows come from the ring index when present, otherwise from binned
    elevation. Neighboring cells merge when their ranges are continuous;
    a cluster is a pole when height/width >= min_elongation, it has at
    least min_points members, and the columns next to it are at least
    isolation_gap farther away (or empty).
    """
    n = len(cloud)
    if n == 0:
        return PoleSet.empty()
    rng_xy = np.linalg.norm(cloud.xyz[:, :2], axis=1)
    ranges = cloud.ranges()
    azimuth = np.arctan2(cloud.xyz[:, 1], cloud.xyz[:, 0])
    col = np.clip(((azimuth + np.pi) / (2 * np.pi) * cols).astype(int), 0, cols - 1)
    rings = cloud.ring
    if len(np.unique(rings)) > 1:
        row = rings - rings.min()
        rows = int(row.max()) + 1
    else:
        elev = np.arctan2(cloud.xyz[:, 2], rng_xy)
        lo, hi = elev.min(), elev.max() + 1e-9
        rows = DEFAULT_ROWS
        row = np.clip(((elev - lo) / (hi - lo) * rows).astype(int), 0, rows - 1)

    depth = np.full((rows, cols), np.inf)
    index = np.full((rows, cols), -1, dtype=int)
    for i in range(n):
        r, c = row[i], col[i]
        if ranges[i] < depth[r, c]:
            depth[r, c] = ranges[i]
            index[r, c] = i

    visited = np.zeros((rows, cols), dtype=bool)
    poles: list[np.ndarray] = []
    counts: list[int] = []
    for r0 in range(rows):
        for c0 in range(cols):
            if index[r0, c0] < 0 or visited[r0, c0]:
                continue
            # BFS over range-continuous 4-neighborhoods (azimuth wraps).
            members = []
            queue = deque([(r0, c0)])
            visited[r0, c0] = True
            while queue:
                r, c = queue.popleft()
                members.append((r, c))
                for dr, dc in ((1, 0), (-1, 0), (0, 1), (0, -1)):
                    rn, cn = r + dr, (c + dc) % cols
                    if 0 <= rn < rows and not visited[rn, cn] and index[rn, cn] >= 0:
                        if abs(depth[rn, cn] - depth[r, c]) < RANGE_CONTINUITY:
                            visited[rn, cn] = True
                            queue.append((rn, cn))
            if len(members) < min_points:
                continue
            pts = cloud.xyz[[index[r, c] for r, c in members]]
            z_extent = pts[:, 2].max() - pts[:, 2].min()
            horiz = pts[:, :2]
            horiz_extent = max(horiz[:, 0].max() - horiz[:, 0].min(),
                               horiz[:, 1].max() - horiz[:, 1].min(), 1e-6)
            if z_extent / horiz_extent < min_elongation:
                continue
            cluster_cols = {c for _, c in members}
            cluster_rows = {r for r, _ in members}
            near = np.median([depth[r, c] for r, c in members])
            isolated = True
            for c_adj in (min(cluster_cols) - 1, max(cluster_cols) + 1):
                c_adj %= cols
                if c_adj in cluster_cols:
                    continue
                for r in cluster_rows:
                    d_adj = depth[r, c_adj]
                    if np.isfinite(d_adj) and d_adj < near + isolation_gap:
                        isolated = False
                        break
                if not isolated:
                    break
            if not isolated:
                continue
            poles.append(pts.mean(axis=0))
            counts.append(len(pts))
    if not poles:
        return PoleSet.empty()
    order = np.argsort([p[0] for p in poles], kind="stable")
    return PoleSet(centroids=np.array(poles)[order], counts=np.array(counts, dtype=int)[order])


def match_poles(
    prev: PoleSet,
    curr: PoleSet,
    prediction: Pose,
    match_radius: float = 1.5,
    forward_jump_gate: float = 2.0,
) -> list[tuple[int, int]]:
    """Nearest-centroid association of poles across frames.

    ``prediction`` maps previous-frame coordinates into the current frame.
    A pair whose raw forward coordinate jumps ahead by more than
    ``forward_jump_gate`` is a mismatch onto the next pole down the line
    and is rejected.
    """
    if len(prev) == 0 or len(curr) == 0:
        return []
    mapped = prediction.apply(prev.centroids)
    pairs: list[tuple[int, int]] = []
    used: set[int] = set()
    for j in range(len(curr)):
        d = np.linalg.norm(mapped[:, :2] - curr.centroids[j, :2], axis=1)
        i = int(np.argmin(d))
        if i in used or d[i] > match_radius:
            continue
        if curr.centroids[j, 0] - prev.centroids[i, 0] > forward_jump_gate:
            continue
        used.add(i)
        pairs.append((i, j))
    return pairs


def pole_residual(
    matched: list[tuple[np.ndarray, np.ndarray]], transform: Pose
) -> float:
    """Total horizontal mismatch of matched centroid pairs.

    Each pair is (current-frame centroid, previous-frame centroid); the
    previous centroid is carried through ``transform`` before comparing
    x/y. Zero for a perfect transform.
    """
    if not matched:
        raise ValueError("no matched pole pairs")
    total = 0.0
    for curr_c, prev_c in matched:
        mapped = transform.apply(np.asarray(prev_c, dtype=float))
        total += float(np.linalg.norm((np.asarray(curr_c)[:2] - mapped[:2])))
    return total
