"""Rail-track extraction and the virtual track plane.

The two running rails are the most stable geometry in any rail corridor:
their heads stick out ~0.2 m above the track bed, are 0.07 m wide, and
always sit one gauge apart. Extraction finds locally-maximal-height points
over the bed, fits two RANSAC lines, refines them by region growing with
a 0.07 m corridor, and fits the virtual ground plane through both rails.
That plane pins roll, pitch and height, which limited-FOV LiDAR odometry
cannot observe on its own.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

RAIL_CORRIDOR = 0.07        # region-growing distance to the fitted line (railhead width)
RAIL_MAX_LENGTH = 20.0      # longitudinal extent kept per frame
SEED_AHEAD = 3.0            # seeds must start within this distance ahead
LINE_INLIER = 0.03
PLANE_INLIER = 0.05
RANSAC_ITERS = 200
RAIL_HEIGHT_BAND = (0.10, 0.35)   # candidate height above the bed plane
GROWTH_GAP = 1.5            # longitudinal continuity for region growing


class NoTrackFound(Exception):
    """Fewer than two rail lines survive; the frame gets no plane factor."""


@dataclass
class TrackExtraction:
    left_rail: np.ndarray    # (N, 3) accepted railhead points
    right_rail: np.ndarray   # (M, 3)
    plane: np.ndarray        # (4,) unit normal + signed offset, n·x + d = 0
    gauge_estimate: float


def ransac_plane(points: np.ndarray, threshold: float, rng, iters: int = RANSAC_ITERS):
    """Best plane (n, d) with n·x + d = 0, plus inlier mask."""
    n_pts = len(points)
    if n_pts < 3:
        raise ValueError("need at least 3 points for a plane")
    best_mask = None
    best_count = -1
    for _ in range(iters):
        idx = rng.choice(n_pts, size=3, replace=False)
        p1, p2, p3 = points[idx]
        normal = np.cross(p2 - p1, p3 - p1)
        norm = np.linalg.norm(normal)
        if norm < 1e-9:
            continue
        normal = normal / norm
        dist = np.abs((points - p1) @ normal)
        mask = dist < threshold
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best_mask = mask
    if best_mask is None or best_count < 3:
        raise ValueError("plane RANSAC failed")
    # Least-squares refit on the inliers.
    sel = points[best_mask]
    centroid = sel.mean(axis=0)
    _, _, vt = np.linalg.svd(sel - centroid, full_matrices=False)
    normal = vt[2]
    if normal[2] < 0:
        normal = -normal
    d = -float(normal @ centroid)
    dist = np.abs(points @ normal + d)
    mask = dist < threshold
    return np.concatenate([normal, [d]]), mask


def ransac_line_2d(uv: np.ndarray, threshold: float, rng, iters: int = RANSAC_ITERS):
    """Best 2D line through projected candidates; returns (point, direction,
    inlier mask)."""
    n_pts = len(uv)
    if n_pts < 2:
        raise ValueError("need at least 2 points for a line")
    best = None
    best_count = -1
    for _ in range(iters):
        idx = rng.choice(n_pts, size=2, replace=False)
        p1, p2 = uv[idx]
        d = p2 - p1
        norm = np.linalg.norm(d)
        if norm < 1e-6:
            continue
        d = d / norm
        normal = np.array([-d[1], d[0]])
        dist = np.abs((uv - p1) @ normal)
        mask = dist < threshold
        count = int(mask.sum())
        if count > best_count:
            best_count = count
            best = (p1, d, mask)
    if best is None:
        raise ValueError("line RANSAC failed")
    p0, d, mask = best
    # Refit with PCA over the inliers.
    sel = uv[mask]
    centroid = sel.mean(axis=0)
    _, _, vt = np.linalg.svd(sel - centroid, full_matrices=False)
    d = vt[0]
    if d[0] < 0:
        d = -d
    normal = np.array([-d[1], d[0]])
    dist = np.abs((uv - centroid) @ normal)
    return centroid, d, dist < threshold


def _grow_along_line(pts_uv: np.ndarray, order_coord: np.ndarray, line_pt, line_dir, mask_near):
    """Region growing: walk outward from the seed span, keeping longitudinal
    continuity below GROWTH_GAP."""
    near_idx = np.flatnonzero(mask_near)
    if len(near_idx) == 0:
        return near_idx
    seeds = near_idx[(order_coord[near_idx] >= -0.5) & (order_coord[near_idx] <= SEED_AHEAD)]
    if len(seeds) == 0:
        seeds = near_idx[np.argsort(np.abs(order_coord[near_idx]))[:1]]
    ordered = near_idx[np.argsort(order_coord[near_idx], kind="stable")]
    pos = order_coord[ordered]
    accepted = np.zeros(len(ordered), dtype=bool)
    seed_positions = order_coord[seeds]
    start = int(np.argmin(np.abs(pos - seed_positions.min())))
    accepted[start] = True
    for i in range(start + 1, len(ordered)):
        if pos[i] - pos[i - 1] <= GROWTH_GAP and accepted[i - 1]:
            accepted[i] = True
        else:
            break
    for i in range(start - 1, -1, -1):
        if pos[i + 1] - pos[i] <= GROWTH_GAP and accepted[i + 1]:
            accepted[i] = True
        else:
            break
    kept = ordered[accepted]
    lo = order_coord[kept].min()
    kept = kept[order_coord[kept] <= lo + RAIL_MAX_LENGTH]
    return kept


def extract_rail_tracks(
    cloud,
    mount_height: float,
    mount_angle: float = 0.0,
    gauge: float = 1.435,
    gauge_tolerance: float = 0.25,
    seed: int = 0,
) -> TrackExtraction:
    """Find the two running rails and the virtual track plane.

    ``mount_height`` is the sensor height above the railheads and
    ``mount_angle`` its downward pitch; both come from the mounting
    geometry and bound the search band. Raises NoTrackFound when fewer
    than two rail lines survive.
    """
    rng = np.random.default_rng(seed)
    xyz = cloud.xyz if hasattr(cloud, "xyz") else np.asarray(cloud, dtype=float)
    if mount_angle != 0.0:
        c, s = np.cos(mount_angle), np.sin(mount_angle)
        level = np.array([[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]])
        xyz = xyz @ level.T
    if len(xyz) < 20:
        raise NoTrackFound("too few points")

    # Track-bed band from mounting geometry: a window around z = -mount_height.
    band = (
        (xyz[:, 2] > -mount_height - 0.6)
        & (xyz[:, 2] < -mount_height + 0.45)
        & (np.abs(xyz[:, 1]) < 4.0)
        & (xyz[:, 0] > -5.0)
        & (xyz[:, 0] < SEED_AHEAD + RAIL_MAX_LENGTH)
    )
    bed_pts = xyz[band]
    if len(bed_pts) < 30:
        raise NoTrackFound("empty track-bed band")
    try:
        bed_plane, _ = ransac_plane(bed_pts, PLANE_INLIER, rng)
    except ValueError as exc:
        raise NoTrackFound(str(exc)) from exc

    height = bed_pts @ bed_plane[:3] + bed_plane[3]
    cand_mask = (height > RAIL_HEIGHT_BAND[0]) & (height < RAIL_HEIGHT_BAND[1])
    candidates = bed_pts[cand_mask]
    if len(candidates) < 20:
        raise NoTrackFound("no raised railhead candidates")

    # Work in bed-plane coordinates: u along x, v lateral.
    normal = bed_plane[:3]
    u_axis = np.array([1.0, 0.0, 0.0]) - normal[0] * normal
    u_axis /= np.linalg.norm(u_axis)
    v_axis = np.cross(normal, u_axis)
    uv = np.column_stack([candidates @ u_axis, candidates @ v_axis])

    try:
        _, dir1, mask1 = ransac_line_2d(uv, LINE_INLIER, rng)
        remaining = np.flatnonzero(~mask1)
        if len(remaining) < 10:
            raise NoTrackFound("second rail line has too few candidates")
        _, dir2, mask2_local = ransac_line_2d(uv[remaining], LINE_INLIER, rng)
    except ValueError as exc:
        raise NoTrackFound(str(exc)) from exc
    mask2 = np.zeros(len(uv), dtype=bool)
    mask2[remaining[mask2_local]] = True

    lat1 = np.median(uv[mask1, 1])
    lat2 = np.median(uv[mask2, 1])
    separation = abs(lat1 - lat2)
    if abs(separation - gauge) > gauge_tolerance:
        raise NoTrackFound(f"line separation {separation:.3f} m does not match gauge")

    rails = []
    for mask, lat in ((mask1, lat1), (mask2, lat2)):
        sel = np.flatnonzero(mask)
        sel_uv = uv[sel]
        centroid = sel_uv.mean(axis=0)
        _, _, vt = np.linalg.svd(sel_uv - centroid, full_matrices=False)
        d = vt[0]
        if d[0] < 0:
            d = -d
        line_normal = np.array([-d[1], d[0]])
        dist = np.abs((uv - centroid) @ line_normal)
        near = dist < RAIL_CORRIDOR
        kept = _grow_along_line(uv, uv[:, 0], centroid, d, near)
        if len(kept) < 10:
            raise NoTrackFound("rail too short after region growing")
        rails.append((lat, candidates[kept]))

    rails.sort(key=lambda r: -r[0])  # +v is the left side
    left, right = rails[0][1], rails[1][1]

    union = np.vstack([left, right])
    try:
        plane, plane_mask = ransac_plane(union, PLANE_INLIER, rng)
    except ValueError as exc:
        raise NoTrackFound(str(exc)) from exc
    if plane_mask.mean() < 0.5:
        raise NoTrackFound("track plane inlier ratio below 0.5")

    if mount_angle != 0.0:
        # Report everything back in the original sensor frame.
        c, s = np.cos(mount_angle), np.sin(mount_angle)
        unlevel = np.array([[c, 0.0, -s], [0.0, 1.0, 0.0], [s, 0.0, c]])
        left = left @ unlevel.T
        right = right @ unlevel.T
        plane = np.concatenate([unlevel @ plane[:3], [plane[3]]])

    return TrackExtraction(
        left_rail=left,
        right_rail=right,
        plane=plane,
        gauge_estimate=float(separation),
    )
