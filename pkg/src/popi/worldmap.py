"""Occupancy map, footprint geometry, and the collision predicates shared by
the planner, the simulator, and constrained trajectory sampling.

Map file format (text):
    line 1:  width height resolution origin_x origin_y origin_theta
    then `height` lines of `width` characters, '.' free, '#' obstacle.
Row 0 of the body is the minimum-y row. Load followed by save reproduces the
file (modulo trailing whitespace).
"""
from __future__ import annotations

import hashlib
import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .geometry import Pose2, compose, point_to_frame

FREE_CHAR = "."
OBSTACLE_CHAR = "#"


class MapFormatError(ValueError):
    """Raised when a map file fails to parse or is internally inconsistent."""


@dataclass
class OccupancyMap:
    """Rasterized obstacle map. `cells[row, col]` is True where blocked;
    row 0 is the minimum-y row and `origin` is the pose of the corner of
    cell (0, 0) in the world frame."""

    width: int
    height: int
    resolution: float
    origin: Pose2
    cells: np.ndarray

    def __post_init__(self) -> None:
        if self.resolution <= 0:
            raise MapFormatError("resolution must be > 0")
        self.cells = np.asarray(self.cells, dtype=bool).reshape(self.height, self.width)
        if self.cells.size != self.width * self.height:
            raise MapFormatError("cell count does not match width*height")

    @property
    def extent_x(self) -> float:
        return self.width * self.resolution

    @property
    def extent_y(self) -> float:
        return self.height * self.resolution

    def world_to_cell(self, x: float, y: float) -> tuple[int, int]:
        """Map a world point to (row, col); may fall outside the grid."""
        mx, my = point_to_frame(self.origin, x, y)
        return (math.floor(my / self.resolution), math.floor(mx / self.resolution))

    def cell_center(self, row: int, col: int) -> tuple[float, float]:
        from .geometry import transform_point

        return transform_point(
            self.origin, (col + 0.5) * self.resolution, (row + 0.5) * self.resolution
        )

    def content_hash(self) -> str:
        h = hashlib.sha256()
        h.update(f"{self.width} {self.height} {self.resolution!r} "
                 f"{self.origin.x!r} {self.origin.y!r} {self.origin.theta!r}".encode())
        h.update(np.packbits(self.cells).tobytes())
        return h.hexdigest()


@dataclass(frozen=True)
class FootprintModel:
    """Rigid system footprint: a rectangular robot placed `center_offset`
    meters behind a circular object, both aligned with the object heading."""

    robot_length: float = 1.1
    robot_width: float = 0.5
    chair_radius: float = 0.3
    center_offset: float = 0.7

    def __post_init__(self) -> None:
        for name in ("robot_length", "robot_width", "chair_radius", "center_offset"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")

    def robot_pose_for(self, chair_pose: Pose2) -> Pose2:
        return compose(chair_pose, Pose2(-self.center_offset, 0.0, 0.0))


def load_map(path) -> OccupancyMap:
    with open(path, "r", encoding="ascii") as f:
        text = f.read()
    return parse_map(text)


def parse_map(text: str) -> OccupancyMap:
    lines = text.splitlines()
    if not lines:
        raise MapFormatError("empty map file")
    header = lines[0].split()
    if len(header) != 6:
        raise MapFormatError(f"header needs 6 fields, got {len(header)}")
    try:
        width, height = int(header[0]), int(header[1])
        resolution, ox, oy, oth = (float(v) for v in header[2:6])
    except ValueError as e:
        raise MapFormatError(f"bad header value: {e}") from e
    body = lines[1:]
    if len(body) < height:
        raise MapFormatError(f"expected {height} rows, got {len(body)}")
    cells = np.zeros((height, width), dtype=bool)
    for r in range(height):
        row = body[r].rstrip()
        if len(row) != width:
            raise MapFormatError(f"row {r} has {len(row)} columns, expected {width}")
        for c, ch in enumerate(row):
            if ch == OBSTACLE_CHAR:
                cells[r, c] = True
            elif ch != FREE_CHAR:
                raise MapFormatError(f"unknown cell character {ch!r} at row {r}")
    return OccupancyMap(width, height, resolution, Pose2(ox, oy, oth), cells)


def format_map(m: OccupancyMap) -> str:
    header = (f"{m.width} {m.height} {m.resolution!r} "
              f"{m.origin.x!r} {m.origin.y!r} {m.origin.theta!r}")
    rows = [
        "".join(OBSTACLE_CHAR if m.cells[r, c] else FREE_CHAR for c in range(m.width))
        for r in range(m.height)
    ]
    return "\n".join([header] + rows) + "\n"


def save_map(m: OccupancyMap, path) -> None:
    with open(path, "w", encoding="ascii") as f:
        f.write(format_map(m))


def point_occupied(m: OccupancyMap, x: float, y: float) -> bool:
    """True if (x, y) lies in an obstacle cell or outside the map bounds."""
    row, col = m.world_to_cell(x, y)
    if row < 0 or row >= m.height or col < 0 or col >= m.width:
        return True
    return bool(m.cells[row, col])


def points_occupied(m: OccupancyMap, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Vectorized point_occupied; out-of-bounds counts as occupied."""
    c, s = math.cos(m.origin.theta), math.sin(m.origin.theta)
    dx, dy = xs - m.origin.x, ys - m.origin.y
    mx = c * dx + s * dy
    my = -s * dx + c * dy
    cols = np.floor(mx / m.resolution).astype(np.int64)
    rows = np.floor(my / m.resolution).astype(np.int64)
    out = (rows < 0) | (rows >= m.height) | (cols < 0) | (cols >= m.width)
    res = np.array(out)
    inside = ~out
    res[inside] = m.cells[rows[inside], cols[inside]]
    return res


@lru_cache(maxsize=64)
def _disc_offsets(radius: float, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    # Sample points on a grid of `spacing` multiples clipped to the disc.
    # Shrinking the radius keeps a subset of the points, which makes the
    # collision test monotone under footprint shrinkage.
    n = math.floor(radius / spacing)
    ks = np.arange(-n, n + 1) * spacing
    gx, gy = np.meshgrid(ks, ks, indexing="ij")
    keep = gx**2 + gy**2 <= radius**2 + 1e-12
    return gx[keep], gy[keep]


@lru_cache(maxsize=64)
def _rect_offsets(half_len: float, half_wid: float, spacing: float) -> tuple[np.ndarray, np.ndarray]:
    nx = math.floor(half_len / spacing)
    ny = math.floor(half_wid / spacing)
    gx, gy = np.meshgrid(np.arange(-nx, nx + 1) * spacing,
                         np.arange(-ny, ny + 1) * spacing, indexing="ij")
    return gx.ravel(), gy.ravel()


def disc_collides(m: OccupancyMap, cx: float, cy: float, radius: float) -> bool:
    ox, oy = _disc_offsets(radius, m.resolution / 2.0)
    return bool(points_occupied(m, cx + ox, cy + oy).any())


def rect_collides(m: OccupancyMap, pose: Pose2, length: float, width: float) -> bool:
    ox, oy = _rect_offsets(length / 2.0, width / 2.0, m.resolution / 2.0)
    c, s = math.cos(pose.theta), math.sin(pose.theta)
    return bool(points_occupied(m, pose.x + c * ox - s * oy, pose.y + s * ox + c * oy).any())


def system_collides(m: OccupancyMap, fp: FootprintModel, chair_pose: Pose2) -> bool:
    """True iff the chair disc or the rigidly-attached robot rectangle
    overlaps an obstacle cell (interiors sampled at half-resolution)."""
    if disc_collides(m, chair_pose.x, chair_pose.y, fp.chair_radius):
        return True
    return rect_collides(m, fp.robot_pose_for(chair_pose), fp.robot_length, fp.robot_width)


def system_collides_with_offset(
    m: OccupancyMap, fp: FootprintModel, robot_pose: Pose2, object_in_robot: Pose2
) -> bool:
    """Collision check using an explicit (possibly non-nominal) robot-to-object
    offset; used by the local replanner, which trusts the observed offset."""
    obj = compose(robot_pose, object_in_robot)
    if disc_collides(m, obj.x, obj.y, fp.chair_radius):
        return True
    return rect_collides(m, robot_pose, fp.robot_length, fp.robot_width)
