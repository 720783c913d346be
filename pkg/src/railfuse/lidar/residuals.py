"""Point, plane and pole residuals with their pose Jacobians.

All Jacobians are taken w.r.t. a 6-dim pose perturbation [δt(3), δθ(3)]
applied as ``t += δt``, ``R ← R (I + [δθ]×)`` (right multiplicative), the
same convention as the estimator's error state.
"""

from __future__ import annotations

import numpy as np

from ..geometry import skew

DEGENERATE_LINE = 1e-6
DEGENERATE_PLANE = 1e-8


def point_to_line_residual(p: np.ndarray, p1: np.ndarray, p2: np.ndarray) -> float:
    """Distance from p to the infinite line through p1, p2."""
    line = np.asarray(p1, dtype=float) - np.asarray(p2, dtype=float)
    norm = np.linalg.norm(line)
    if norm <= DEGENERATE_LINE:
        raise ValueError("line support points are degenerate")
    cross = np.cross(p - p1, p - p2)
    return float(np.linalg.norm(cross) / norm)


def point_to_line_gradient(p, p1, p2) -> np.ndarray:
    """d(distance)/dp, shape (3,)."""
    line = np.asarray(p1, dtype=float) - np.asarray(p2, dtype=float)
    norm = np.linalg.norm(line)
    if norm <= DEGENERATE_LINE:
        raise ValueError("line support points are degenerate")
    cross = np.cross(p - p1, p - p2)
    c_norm = np.linalg.norm(cross)
    if c_norm < 1e-12:
        return np.zeros(3)
    # d||u||/dp with du/dp = -[p1-p2]x
    return -(cross / c_norm) @ skew(line) / norm


def point_to_plane_residual(p, p1, p2, p3) -> float:
    """Unsigned distance from p to the plane through p1, p2, p3."""
    normal = np.cross(np.asarray(p1, dtype=float) - p2, np.asarray(p1, dtype=float) - p3)
    n_norm = np.linalg.norm(normal)
    if n_norm <= DEGENERATE_PLANE:
        raise ValueError("plane support points are collinear")
    return float(abs((p - p1) @ normal) / n_norm)


def point_to_plane_gradient(p, p1, p2, p3) -> np.ndarray:
    normal = np.cross(np.asarray(p1, dtype=float) - p2, np.asarray(p1, dtype=float) - p3)
    n_norm = np.linalg.norm(normal)
    if n_norm <= DEGENERATE_PLANE:
        raise ValueError("plane support points are collinear")
    unit = normal / n_norm
    return unit * np.sign((p - p1) @ unit)


def plane_transform(plane: np.ndarray, rot: np.ndarray, trans: np.ndarray) -> np.ndarray:
    """Re-express plane parameters (n, d) under the point map p' = R p + t.

    Points satisfy n·x + d = 0; substituting x = Rᵀ(x' - t) gives
    n' = R n and d' = d - (R n)·t.
    """
    n = np.asarray(plane[:3], dtype=float)
    d = float(plane[3])
    n_new = rot @ n
    return np.concatenate([n_new, [d - n_new @ trans]])


def plane_residual(plane_k: np.ndarray, plane_k1: np.ndarray, rot: np.ndarray, trans: np.ndarray) -> np.ndarray:
    """4-vector plane mismatch: plane_k carried through the frame-k→k+1
    transform, compared against the plane observed in frame k+1."""
    return np.asarray(plane_k1, dtype=float) - plane_transform(plane_k, rot, trans)


def plane_residual_jacobian(plane_k, rot, trans) -> np.ndarray:
    """d(residual)/d[δt, δθ], shape (4, 6)."""
    n = np.asarray(plane_k[:3], dtype=float)
    n_w = rot @ n
    jac = np.zeros((4, 6))
    # normal rows: -d(R n)/dθ = R [n]x
    jac[0:3, 3:6] = rot @ skew(n)
    # d row: residual d-part = d_k1 - d_k + (R n)·t
    jac[3, 0:3] = n_w
    jac[3, 3:6] = trans @ (-rot @ skew(n))
    return jac


def pole_pair_residuals(prev_centroids: np.ndarray, curr_centroids: np.ndarray, rot, trans):
    """Per-match horizontal (x, y) mismatch after mapping previous-frame
    centroids into the current frame; stacked (2N,) with (2N, 6) Jacobian."""
    prev_centroids = np.atleast_2d(prev_centroids)
    curr_centroids = np.atleast_2d(curr_centroids)
    n = len(prev_centroids)
    res = np.zeros(2 * n)
    jac = np.zeros((2 * n, 6))
    for i in range(n):
        mapped = rot @ prev_centroids[i] + trans
        res[2 * i : 2 * i + 2] = (curr_centroids[i] - mapped)[:2]
        jac[2 * i : 2 * i + 2, 0:3] = -np.eye(3)[:2]
        jac[2 * i : 2 * i + 2, 3:6] = (rot @ skew(prev_centroids[i]))[:2]
    return res, jac
