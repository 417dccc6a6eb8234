"""Hierarchical towing of a caster-wheeled object.

A global SE(2) roadmap planner hands waypoints to a short-horizon,
goal-relative diffusion policy; a surrogate 2D simulator provides the
hard-to-model towing dynamics, and an evaluation harness compares the
hierarchy against planning-only and diffusion-only baselines.
"""

from .geometry import (
    Pose2,
    compose,
    inverse,
    pose_distance,
    transform_to_frame,
    wrap_angle,
)
from .worldmap import FootprintModel, OccupancyMap, load_map, point_occupied, save_map, system_collides

__all__ = [
    "Pose2",
    "compose",
    "inverse",
    "pose_distance",
    "transform_to_frame",
    "wrap_angle",
    "FootprintModel",
    "OccupancyMap",
    "load_map",
    "save_map",
    "point_occupied",
    "system_collides",
]

__version__ = "0.1.0"
