"""Geodetic projection and GNSS-to-odometry frame alignment.

UTM here is the standard transverse-Mercator realization on WGS-84 using
the Krüger flattening series truncated at n⁴, good to well under a
millimeter inside a zone. Frame alignment recovers the 4-DoF (yaw +
translation) transform between an odometry trajectory and projected GNSS
positions; gravity alignment is assumed handled upstream, so roll/pitch
never enter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import rot_z

WGS84_A = 6378137.0
WGS84_F = 1.0 / 298.257223563
K0 = 0.9996
FALSE_EASTING = 500_000.0
FALSE_NORTHING_SOUTH = 10_000_000.0

_N = WGS84_F / (2.0 - WGS84_F)
_A_BAR = WGS84_A / (1.0 + _N) * (1.0 + _N**2 / 4.0 + _N**4 / 64.0)
_ALPHA = (
    _N / 2.0 - 2.0 * _N**2 / 3.0 + 5.0 * _N**3 / 16.0 + 41.0 * _N**4 / 180.0,
    13.0 * _N**2 / 48.0 - 3.0 * _N**3 / 5.0 + 557.0 * _N**4 / 1440.0,
    61.0 * _N**3 / 240.0 - 103.0 * _N**4 / 140.0,
    49561.0 * _N**4 / 161280.0,
)
_BETA = (
    _N / 2.0 - 2.0 * _N**2 / 3.0 + 37.0 * _N**3 / 96.0 - _N**4 / 360.0,
    _N**2 / 48.0 + _N**3 / 15.0 - 437.0 * _N**4 / 1440.0,
    17.0 * _N**3 / 480.0 - 37.0 * _N**4 / 840.0,
    4397.0 * _N**4 / 161280.0,
)
_DELTA = (
    2.0 * _N - 2.0 * _N**2 / 3.0 - 2.0 * _N**3 + 116.0 * _N**4 / 45.0,
    7.0 * _N**2 / 3.0 - 8.0 * _N**3 / 5.0 - 227.0 * _N**4 / 45.0,
    56.0 * _N**3 / 15.0 + 136.0 * _N**4 / 35.0,
    4279.0 * _N**4 / 630.0,
)
_E2SQRT = 2.0 * math.sqrt(_N) / (1.0 + _N)


class UnsupportedZoneError(ValueError):
    """Latitude outside the UTM band (|lat| > 84°)."""


class UnobservableAlignmentError(ValueError):
    """Trajectory extent too small to determine yaw."""


@dataclass(frozen=True)
class GeodeticFix:
    """One GNSS solution in WGS-84."""

    t: float
    lat: float
    lon: float
    alt: float = 0.0
    quality: str = "SPP"

    def __post_init__(self):
        if abs(self.lat) > 90.0 or abs(self.lon) > 180.0:
            raise ValueError("latitude/longitude out of range")


@dataclass(frozen=True)
class AlignmentResult:
    yaw: float                 # radians, odometry frame → local plane
    rotation: np.ndarray       # the z-rotation built from yaw
    translation: np.ndarray    # meters
    rms: float

    @property
    def yaw_deg(self) -> float:
        return math.degrees(self.yaw)


def utm_zone(lon: float) -> int:
    return int((lon + 180.0) // 6.0) + 1


def utm_central_meridian(zone: int) -> float:
    return zone * 6.0 - 183.0


def utm_project(fix: GeodeticFix, zone: int | None = None):
    """Forward UTM: returns (easting, northing, alt, zone).

    ``zone`` may be forced so neighboring fixes project consistently near
    a zone boundary.
    """
    if abs(fix.lat) > 84.0:
        raise UnsupportedZoneError(f"latitude {fix.lat} outside UTM coverage")
    if zone is None:
        zone = utm_zone(fix.lon)
    lam = math.radians(fix.lon - utm_central_meridian(zone))
    phi = math.radians(fix.lat)

    sin_phi = math.sin(phi)
    t = math.sinh(math.atanh(sin_phi) - _E2SQRT * math.atanh(_E2SQRT * sin_phi))
    xi = math.atan2(t, math.cos(lam))
    eta = math.asinh(math.sin(lam) / math.hypot(t, math.cos(lam)))

    easting = eta
    northing = xi
    for j, (a_j) in enumerate(_ALPHA, start=1):
        easting += a_j * math.cos(2 * j * xi) * math.sinh(2 * j * eta)
        northing += a_j * math.sin(2 * j * xi) * math.cosh(2 * j * eta)
    easting = FALSE_EASTING + K0 * _A_BAR * easting
    northing = K0 * _A_BAR * northing
    if fix.lat < 0:
        northing += FALSE_NORTHING_SOUTH
    return easting, northing, fix.alt, zone


def utm_inverse(easting: float, northing: float, zone: int, southern: bool = False,
                alt: float = 0.0, t: float = 0.0) -> GeodeticFix:
    """Inverse UTM back to a geodetic fix."""
    if southern:
        northing = northing - FALSE_NORTHING_SOUTH
    xi = northing / (K0 * _A_BAR)
    eta = (easting - FALSE_EASTING) / (K0 * _A_BAR)
    xi_p = xi
    eta_p = eta
    for j, b_j in enumerate(_BETA, start=1):
        xi_p -= b_j * math.sin(2 * j * xi) * math.cosh(2 * j * eta)
        eta_p -= b_j * math.cos(2 * j * xi) * math.sinh(2 * j * eta)
    chi = math.asin(math.sin(xi_p) / math.cosh(eta_p))
    phi = chi
    for j, d_j in enumerate(_DELTA, start=1):
        phi += d_j * math.sin(2 * j * chi)
    lam = math.atan2(math.sinh(eta_p), math.cos(xi_p))
    lon = math.degrees(lam) + utm_central_meridian(zone)
    return GeodeticFix(t=t, lat=math.degrees(phi), lon=lon, alt=alt)


def align_trajectories(positions_plane: np.ndarray, positions_odom: np.ndarray) -> AlignmentResult:
    """Best 4-DoF alignment p_plane ≈ R(yaw) p_odom + translation.

    Yaw comes from the centered horizontal correspondence (closed form);
    translation is the residual mean. Requires at least 10 pairs and 5 m
    of horizontal extent, otherwise yaw is unobservable.
    """
    a = np.asarray(positions_plane, dtype=float)
    b = np.asarray(positions_odom, dtype=float)
    if a.shape != b.shape or a.ndim != 2 or a.shape[1] != 3:
        raise ValueError("need matching (N, 3) position sets")
    n = len(a)
    if n < 10:
        raise UnobservableAlignmentError(f"only {n} pairs, need at least 10")
    extent = np.linalg.norm(np.ptp(b[:, :2], axis=0))
    if extent < 5.0:
        raise UnobservableAlignmentError(f"horizontal extent {extent:.2f} m below 5 m")
    ca = a[:, :2] - a[:, :2].mean(axis=0)
    cb = b[:, :2] - b[:, :2].mean(axis=0)
    # Closed-form restricted Procrustes: yaw maximizing Σ ca·R(yaw) cb.
    num = np.sum(cb[:, 0] * ca[:, 1] - cb[:, 1] * ca[:, 0])
    den = np.sum(cb[:, 0] * ca[:, 0] + cb[:, 1] * ca[:, 1])
    yaw = math.atan2(num, den)
    rotation = rot_z(yaw)
    translation = (a - b @ rotation.T).mean(axis=0)
    residuals = a - (b @ rotation.T + translation)
    rms = float(np.sqrt(np.mean(np.sum(residuals**2, axis=1))))
    return AlignmentResult(yaw=yaw, rotation=rotation, translation=translation, rms=rms)
