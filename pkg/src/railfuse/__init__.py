"""Inertial-centric multi-sensor odometry for rail vehicles.

Library layout:

  geometry          rotation / pose algebra and frame tags
  preintegration    IMU + wheel-odometer preintegration
  state             navigation state and error-state algebra
  lidar             feature extraction, rail/pole geometry, residuals
  fusion            sliding-window factor-graph estimator
  calibration       UTM projection and GNSS/odometry yaw alignment
  health            stream health monitoring and sanity gates
  mapreg            NDT map registration, submaps, ICP fallback
  sim               synthetic rail world and sensor simulator
  pipeline          end-to-end estimator over recorded streams
  cli               `railfuse run` / `railfuse replay`
"""

__version__ = "0.1.0"
