"""Trajectory smoothing with batched learned clearance inference."""

__version__ = "0.1.0"

from .robot import RobotModel, forward_kinematics, surface_signed_distance
from .voxelgrid import Box, OccupancyVector, Sphere, VoxelGrid
from .trajectory import ParabolicTrajectory, PiecewiseLinearPath
from .smoother import SmoothingConfig, smooth

__all__ = [
    "RobotModel", "forward_kinematics", "surface_signed_distance",
    "Box", "OccupancyVector", "Sphere", "VoxelGrid",
    "ParabolicTrajectory", "PiecewiseLinearPath",
    "SmoothingConfig", "smooth", "__version__",
]
