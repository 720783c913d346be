"""Synthetic rail world and sensor simulator."""

from .layout import FurnitureSpec, MotionProfile, PoleSchedule, Segment, TrackLayout, TunnelSpec
from .metrics import TrajectoryMetrics, evaluate
from .run import SensorSuite, SimStreams, simulate_run
from .world import generate_world

__all__ = [
    "FurnitureSpec",
    "MotionProfile",
    "PoleSchedule",
    "Segment",
    "TrackLayout",
    "TunnelSpec",
    "TrajectoryMetrics",
    "evaluate",
    "SensorSuite",
    "SimStreams",
    "simulate_run",
    "generate_world",
]
