"""SE(2) lattice roadmap over object poses, A* shortest paths, and waypoint
downsampling.

The roadmap treats the robot+object system as rigid (robot directly behind
the object, sharing its heading): deliberately ignorant of the real towing
dynamics. Nodes sit on an evenly spaced grid (default 10 cm / 10 degrees),
edges connect single-step neighbors in x, y, or heading (heading wraps).
"""
from __future__ import annotations

import hashlib
import heapq
import math
import os
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .geometry import Pose2, pose_distance, wrap_angle
from .worldmap import FootprintModel, OccupancyMap, _disc_offsets, _rect_offsets

DEFAULT_XY_STEP = 0.10
DEFAULT_THETA_STEP = math.radians(10.0)
DEFAULT_ROTATION_WEIGHT = 0.3  # meters per radian of edge rotation


class SnapError(RuntimeError):
    """Start or goal pose does not snap to a collision-free roadmap node."""


class NoPathError(RuntimeError):
    """Start and goal lie in different connected components."""


@dataclass
class Roadmap:
    """Collision-free lattice of object poses with implicit grid adjacency."""

    xs: np.ndarray              # grid x coordinates (world frame)
    ys: np.ndarray
    thetas: np.ndarray          # wrapped grid headings, ascending grid index
    free: np.ndarray            # bool (nx, ny, nt), True where system fits
    node_id: np.ndarray         # int32 (nx, ny, nt), -1 where blocked
    poses: np.ndarray           # (n_nodes, 3) pose per node
    grid_index: np.ndarray      # (n_nodes, 3) int (ix, iy, it) per node
    xy_step: float
    theta_step: float
    rotation_weight: float = DEFAULT_ROTATION_WEIGHT
    footprint: FootprintModel = field(default_factory=FootprintModel)

    @property
    def n_nodes(self) -> int:
        return self.poses.shape[0]

    def node_pose(self, idx: int) -> Pose2:
        x, y, t = self.poses[idx]
        return Pose2(float(x), float(y), float(t))

    def neighbors(self, idx: int):
        """Yield (neighbor_id, is_rotation) over the 6-connected lattice."""
        ix, iy, it = self.grid_index[idx]
        nt = len(self.thetas)
        for dx, dy in ((1, 0), (-1, 0), (0, 1), (0, -1)):
            jx, jy = ix + dx, iy + dy
            if 0 <= jx < len(self.xs) and 0 <= jy < len(self.ys):
                j = self.node_id[jx, jy, it]
                if j >= 0:
                    yield int(j), False
        for dt in (1, -1):
            j = self.node_id[ix, iy, (it + dt) % nt]
            if j >= 0:
                yield int(j), True

    def edge_cost(self, is_rotation: bool) -> float:
        return self.rotation_weight * self.theta_step if is_rotation else self.xy_step

    def adjacency(self) -> list[list[int]]:
        """Materialized per-node neighbor lists (mostly for tests/inspection)."""
        return [[j for j, _ in self.neighbors(i)] for i in range(self.n_nodes)]

    def canonical_path_cost(self, node_ids) -> float:
        """Path cost recomputed from edge-type counts so that equal paths
        compare exactly equal regardless of accumulation order."""
        n_rot = 0
        n_trans = 0
        for a, b in zip(node_ids, node_ids[1:]):
            if tuple(self.grid_index[a][:2]) == tuple(self.grid_index[b][:2]):
                n_rot += 1
            else:
                n_trans += 1
        return n_trans * self.xy_step + n_rot * (self.rotation_weight * self.theta_step)


@dataclass
class PlannedPath:
    """A* result: object poses with rigidly derived robot poses."""

    poses: list[tuple[Pose2, Pose2]]    # (robot, object) pairs
    total_length: float                  # translated meters along the path
    cost: float                          # canonical edge-cost total

    def __len__(self) -> int:
        return len(self.poses)

    def object_poses(self) -> list[Pose2]:
        return [o for _, o in self.poses]

    def robot_poses(self) -> list[Pose2]:
        return [r for r, _ in self.poses]


def _grid_axes(world: OccupancyMap, xy_step: float, theta_step: float):
    nx = int(math.floor(world.extent_x / xy_step + 1e-9))
    ny = int(math.floor(world.extent_y / xy_step + 1e-9))
    nt = int(round(2.0 * math.pi / theta_step))
    xs = world.origin.x + (np.arange(nx) + 0.5) * xy_step
    ys = world.origin.y + (np.arange(ny) + 0.5) * xy_step
    thetas = np.array([wrap_angle(j * theta_step) for j in range(nt)])
    return xs, ys, thetas


def build_roadmap(
    world: OccupancyMap,
    fp: FootprintModel,
    xy_step: float = DEFAULT_XY_STEP,
    theta_step: float = DEFAULT_THETA_STEP,
    rotation_weight: float = DEFAULT_ROTATION_WEIGHT,
) -> Roadmap:
    """Filter an evenly spaced SE(2) grid by the system collision predicate.

    Grid positions sit at cell centers of the xy_step lattice anchored at the
    map origin (axis-aligned maps only); headings are wrap-distinct multiples
    of theta_step. An empty roadmap (fully blocked map) is valid output.
    """
    if abs(world.origin.theta) > 1e-12:
        raise ValueError("roadmap construction expects an axis-aligned map")
    xs, ys, thetas = _grid_axes(world, xy_step, theta_step)
    nx, ny, nt = len(xs), len(ys), len(thetas)
    free = np.zeros((nx, ny, nt), dtype=bool)
    if nx and ny:
        spacing = world.resolution / 2.0
        gx, gy = np.meshgrid(xs, ys, indexing="ij")
        pos_x, pos_y = gx.ravel(), gy.ravel()

        dox, doy = _disc_offsets(fp.chair_radius, spacing)
        disc_hit = _any_occupied(world, pos_x[:, None] + dox[None, :],
                                 pos_y[:, None] + doy[None, :])

        rox, roy = _rect_offsets(fp.robot_length / 2.0, fp.robot_width / 2.0, spacing)
        for it, theta in enumerate(thetas):
            c, s = math.cos(theta), math.sin(theta)
            # robot center sits center_offset behind the chair along its heading
            rcx = pos_x - c * fp.center_offset
            rcy = pos_y - s * fp.center_offset
            rect_hit = _any_occupied(world,
                                     rcx[:, None] + (c * rox - s * roy)[None, :],
                                     rcy[:, None] + (s * rox + c * roy)[None, :])
            free[:, :, it] = (~disc_hit & ~rect_hit).reshape(nx, ny)

    node_id = np.full((nx, ny, nt), -1, dtype=np.int32)
    idx = np.argwhere(free)
    node_id[free] = np.arange(len(idx), dtype=np.int32)
    poses = np.empty((len(idx), 3))
    if len(idx):
        poses[:, 0] = xs[idx[:, 0]]
        poses[:, 1] = ys[idx[:, 1]]
        poses[:, 2] = thetas[idx[:, 2]]
    return Roadmap(xs, ys, thetas, free, node_id, poses, idx.astype(np.int32),
                   xy_step, theta_step, rotation_weight, fp)


def _any_occupied(world: OccupancyMap, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    from .worldmap import points_occupied

    return points_occupied(world, px.ravel(), py.ravel()).reshape(px.shape).any(axis=1)


def snap_to_node(roadmap: Roadmap, pose: Pose2) -> int:
    """Nearest collision-free node within one grid cell in each dimension."""
    if roadmap.n_nodes == 0:
        raise SnapError("roadmap is empty")
    xs, ys, thetas = roadmap.xs, roadmap.ys, roadmap.thetas
    nt = len(thetas)
    ix = int(np.clip(np.round((pose.x - xs[0]) / roadmap.xy_step), 0, len(xs) - 1))
    iy = int(np.clip(np.round((pose.y - ys[0]) / roadmap.xy_step), 0, len(ys) - 1))
    it = int(round(wrap_angle(pose.theta) / roadmap.theta_step)) % nt
    best = -1
    best_d = math.inf
    for jx in range(max(0, ix - 1), min(len(xs), ix + 2)):
        if abs(xs[jx] - pose.x) > roadmap.xy_step + 1e-9:
            continue
        for jy in range(max(0, iy - 1), min(len(ys), iy + 2)):
            if abs(ys[jy] - pose.y) > roadmap.xy_step + 1e-9:
                continue
            for dt in (-1, 0, 1):
                jt = (it + dt) % nt
                if abs(wrap_angle(thetas[jt] - pose.theta)) > roadmap.theta_step + 1e-9:
                    continue
                node = roadmap.node_id[jx, jy, jt]
                if node < 0:
                    continue
                d = pose_distance(roadmap.node_pose(int(node)), pose, roadmap.rotation_weight)
                if d < best_d - 1e-15 or (abs(d - best_d) <= 1e-15 and node < best):
                    best, best_d = int(node), d
    if best < 0:
        raise SnapError(f"no collision-free node within one grid cell of {pose}")
    return best


def plan_astar(roadmap: Roadmap, start: Pose2, goal: Pose2) -> PlannedPath:
    """Minimum-cost lattice path between the snapped start and goal nodes.

    Heuristic: pose_distance with the rotation weight, which is admissible and
    consistent under the edge costs. Ties break toward lower node index.
    """
    s = snap_to_node(roadmap, start)
    g = snap_to_node(roadmap, goal)
    goal_pose = roadmap.node_pose(g)

    dist = {s: 0.0}
    parent = {s: -1}
    h0 = pose_distance(roadmap.node_pose(s), goal_pose, roadmap.rotation_weight)
    heap = [(h0, s)]
    closed = set()
    while heap:
        f, u = heapq.heappop(heap)
        if u in closed:
            continue
        if u == g:
            break
        closed.add(u)
        du = dist[u]
        for v, is_rot in roadmap.neighbors(u):
            if v in closed:
                continue
            nd = du + roadmap.edge_cost(is_rot)
            if nd < dist.get(v, math.inf) - 1e-15:
                dist[v] = nd
                parent[v] = u
                hv = pose_distance(roadmap.node_pose(v), goal_pose, roadmap.rotation_weight)
                heapq.heappush(heap, (nd + hv, v))
    if g not in parent:
        raise NoPathError("goal not reachable from start on the roadmap")

    node_ids = []
    u = g
    while u != -1:
        node_ids.append(u)
        u = parent[u]
    node_ids.reverse()
    fp = roadmap.footprint
    pairs = []
    for nid in node_ids:
        obj = roadmap.node_pose(nid)
        pairs.append((fp.robot_pose_for(obj), obj))
    total_len = sum(
        math.hypot(b.x - a.x, b.y - a.y)
        for (_, a), (_, b) in zip(pairs, pairs[1:])
    )
    return PlannedPath(pairs, total_len, roadmap.canonical_path_cost(node_ids))


def sample_intermediate_goals(path: PlannedPath, f: int) -> list[tuple[Pose2, Pose2]]:
    """Every f-th pose pair of the path, always ending with the final pair."""
    if f < 1:
        raise ValueError("downsampling factor must be >= 1")
    if len(path) == 0:
        raise ValueError("cannot downsample an empty path")
    out = [path.poses[i] for i in range(f - 1, len(path), f)]
    if not out or out[-1] is not path.poses[-1]:
        out.append(path.poses[-1])
    return out


# --- disk cache -------------------------------------------------------------


def roadmap_cache_key(world: OccupancyMap, fp: FootprintModel,
                      xy_step: float, theta_step: float, rotation_weight: float) -> str:
    h = hashlib.sha256()
    h.update(world.content_hash().encode())
    h.update(f"{fp.robot_length!r} {fp.robot_width!r} {fp.chair_radius!r} "
             f"{fp.center_offset!r} {xy_step!r} {theta_step!r} {rotation_weight!r}".encode())
    return h.hexdigest()


def cache_dir() -> Path:
    return Path(os.environ.get("POPI_CACHE_DIR", Path.home() / ".cache" / "popi"))


def load_or_build_roadmap(
    world: OccupancyMap,
    fp: FootprintModel,
    xy_step: float = DEFAULT_XY_STEP,
    theta_step: float = DEFAULT_THETA_STEP,
    rotation_weight: float = DEFAULT_ROTATION_WEIGHT,
    use_cache: bool = True,
) -> Roadmap:
    key = roadmap_cache_key(world, fp, xy_step, theta_step, rotation_weight)
    path = cache_dir() / f"roadmap-{key}.npz"
    if use_cache and path.exists():
        with np.load(path) as z:
            return Roadmap(z["xs"], z["ys"], z["thetas"], z["free"], z["node_id"],
                           z["poses"], z["grid_index"], float(z["xy_step"]),
                           float(z["theta_step"]), float(z["rotation_weight"]), fp)
    rm = build_roadmap(world, fp, xy_step, theta_step, rotation_weight)
    if use_cache:
        path.parent.mkdir(parents=True, exist_ok=True)
        tmp = path.with_suffix(".tmp")
        np.savez_compressed(
            tmp, xs=rm.xs, ys=rm.ys, thetas=rm.thetas, free=rm.free,
            node_id=rm.node_id, poses=rm.poses, grid_index=rm.grid_index,
            xy_step=rm.xy_step, theta_step=rm.theta_step,
            rotation_weight=rm.rotation_weight,
        )
        os.replace(tmp, path)
    return rm
