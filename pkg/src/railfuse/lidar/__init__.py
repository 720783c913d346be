"""LiDAR feature extraction and geometric residuals."""

from .cloud import PointCloud, deskew
from .features import FeatureSet, extract_features, smoothness
from .favor import FavorFactors, calibrate_degeneracy_threshold, favor_factors
from .poles import PoleSet, extract_poles, match_poles, pole_residual
from .rails import NoTrackFound, TrackExtraction, extract_rail_tracks
from .residuals import (
    plane_residual,
    plane_transform,
    point_to_line_residual,
    point_to_plane_residual,
)

__all__ = [
    "PointCloud",
    "deskew",
    "FeatureSet",
    "extract_features",
    "smoothness",
    "FavorFactors",
    "favor_factors",
    "calibrate_degeneracy_threshold",
    "PoleSet",
    "extract_poles",
    "match_poles",
    "pole_residual",
    "NoTrackFound",
    "TrackExtraction",
    "extract_rail_tracks",
    "plane_residual",
    "plane_transform",
    "point_to_line_residual",
    "point_to_plane_residual",
]
