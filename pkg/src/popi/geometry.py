"""SE(2) pose algebra: composition, inversion, frame changes, pose distance.

Everything downstream (planner, simulator, policy, executor) passes poses
around as `Pose2` values; the numeric encoding used by the learned policy
lives elsewhere so this module stays free of learning concerns.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

DEFAULT_ANGULAR_WEIGHT = 0.5  # meters per radian


def wrap_angle(theta: float) -> float:
    """Wrap an angle to (-pi, pi]."""
    a = math.remainder(theta, math.tau)
    if a <= -math.pi:
        a += math.tau
    return a


@dataclass(frozen=True, slots=True)
class Pose2:
    """A rigid 2D pose: position in meters, heading in radians.

    `theta` is wrapped to (-pi, pi] on construction, so any pose obtained
    through this class satisfies the normalization invariant.
    """

    x: float
    y: float
    theta: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "x", float(self.x))
        object.__setattr__(self, "y", float(self.y))
        object.__setattr__(self, "theta", wrap_angle(float(self.theta)))

    @staticmethod
    def identity() -> "Pose2":
        return Pose2(0.0, 0.0, 0.0)

    def as_tuple(self) -> tuple[float, float, float]:
        return (self.x, self.y, self.theta)

    def almost_equal(self, other: "Pose2", tol: float = 1e-9) -> bool:
        return (
            abs(self.x - other.x) <= tol
            and abs(self.y - other.y) <= tol
            and abs(wrap_angle(self.theta - other.theta)) <= tol
        )


def compose(a: Pose2, b: Pose2) -> Pose2:
    """Rigid motion `a` followed by `b`, expressed in a's parent frame."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose2(
        a.x + c * b.x - s * b.y,
        a.y + s * b.x + c * b.y,
        a.theta + b.theta,
    )


def inverse(a: Pose2) -> Pose2:
    """The pose `q` with compose(a, q) == identity."""
    c, s = math.cos(a.theta), math.sin(a.theta)
    return Pose2(-(c * a.x + s * a.y), s * a.x - c * a.y, -a.theta)


def transform_to_frame(poses: Iterable[Pose2], goal: Pose2) -> list[Pose2]:
    """Express each pose relative to `goal`: compose(goal, out[i]) == poses[i]."""
    inv = inverse(goal)
    return [compose(inv, p) for p in poses]


def transform_point(frame: Pose2, x: float, y: float) -> tuple[float, float]:
    """Map a point given in `frame` coordinates into the parent frame."""
    c, s = math.cos(frame.theta), math.sin(frame.theta)
    return (frame.x + c * x - s * y, frame.y + s * x + c * y)


def point_to_frame(frame: Pose2, x: float, y: float) -> tuple[float, float]:
    """Map a parent-frame point into `frame` coordinates."""
    c, s = math.cos(frame.theta), math.sin(frame.theta)
    dx, dy = x - frame.x, y - frame.y
    return (c * dx + s * dy, -s * dx + c * dy)


def position_distance(a: Pose2, b: Pose2) -> float:
    return math.hypot(a.x - b.x, a.y - b.y)


def pose_distance(a: Pose2, b: Pose2, angular_weight: float = DEFAULT_ANGULAR_WEIGHT) -> float:
    """Weighted pose metric: Euclidean distance plus angular_weight * |wrapped dtheta|.

    Symmetric, zero iff a == b when angular_weight > 0, and satisfies the
    triangle inequality (both terms do individually).
    """
    if angular_weight < 0:
        raise ValueError("angular_weight must be >= 0")
    return position_distance(a, b) + angular_weight * abs(wrap_angle(a.theta - b.theta))


def poses_to_array(poses: Sequence[Pose2]):
    """Stack poses into an (n, 3) float array of (x, y, theta) rows."""
    import numpy as np

    return np.array([(p.x, p.y, p.theta) for p in poses], dtype=float).reshape(len(poses), 3)


def poses_from_array(arr) -> list[Pose2]:
    return [Pose2(float(r[0]), float(r[1]), float(r[2])) for r in arr]
