"""Deterministic surrogate simulator for a robot towing a caster-wheeled
object.

The object is dragged toward the pose it would occupy if rigidly attached
to the robot. Casters resist motion that is misaligned with their swivel
direction and relax toward the actual motion direction, so the dynamics are
history dependent through the unobserved swivel angles. Strain that the
object cannot relieve accumulates as grasp stress; past a threshold the
grasp breaks permanently. Contact with obstacles zeroes the penetrating
motion component while stress keeps accumulating.

All parameter defaults are calibration constants (see popi.config), chosen
so that smooth towing is easy, aggressive turning breaks the grasp, and
obstacle contact produces a detectable "stuck" plateau.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

from .geometry import Pose2, compose, inverse, wrap_angle
from .worldmap import OccupancyMap, disc_collides, rect_collides


class InitialCollisionError(RuntimeError):
    """Reset was attempted with the robot or object footprint in collision."""


@dataclass(frozen=True)
class SimParams:
    n_casters: int = 5
    caster_relax_rate: float = 2.0        # 1/s, swivel alignment rate
    caster_ring_radius: float = 0.22      # m, caster mount circle on the object
    friction_coeff: float = 0.3           # 0.3 hard floor, 0.8 carpet
    drag_gain: float = 6.0                # maps caster resistance to motion loss
    grasp_break_stress: float = 0.75      # abstract force units
    stress_gain: float = 2.5              # strain growth -> stress rate
    stress_decay: float = 0.8             # 1/s, stress relief when smooth
    stress_torque_arm: float = 0.5        # m/rad, heading strain weighting
    grasp_offset: Pose2 = field(default_factory=lambda: Pose2(-0.25, 0.0, 0.0))
    gripper_point: tuple[float, float] = (0.45, 0.0)  # grasp target in robot frame
    object_radius: float = 0.3            # m, object footprint for contact
    robot_max_lin_vel: float = 0.5        # m/s
    robot_max_ang_vel: float = 1.5        # rad/s
    object_speed_factor: float = 1.2      # object catch-up speed / robot speed
    dt: float = 0.1                       # s

    def __post_init__(self) -> None:
        positive = (
            "caster_relax_rate", "caster_ring_radius", "friction_coeff", "drag_gain",
            "grasp_break_stress", "stress_gain", "stress_decay",
            "robot_max_lin_vel", "robot_max_ang_vel", "object_speed_factor", "dt",
        )
        for name in positive:
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be > 0")
        if self.n_casters < 1:
            raise ValueError("n_casters must be >= 1")

    def rigid_attach(self) -> Pose2:
        """Object pose in the robot frame when the grasp is unstrained."""
        grip = Pose2(self.gripper_point[0], self.gripper_point[1], 0.0)
        return compose(grip, inverse(self.grasp_offset))

    def caster_positions(self) -> np.ndarray:
        """(n, 2) caster mount points in the object frame."""
        ang = 2.0 * math.pi * np.arange(self.n_casters) / self.n_casters
        return self.caster_ring_radius * np.stack([np.cos(ang), np.sin(ang)], axis=1)


@dataclass
class SimState:
    robot: Pose2
    object: Pose2
    caster_angles: np.ndarray   # swivel of each caster, object frame, radians
    grasp_stress: float = 0.0
    grasp_held: bool = True
    time: float = 0.0

    def copy(self) -> "SimState":
        return SimState(self.robot, self.object, self.caster_angles.copy(),
                        self.grasp_stress, self.grasp_held, self.time)


def sim_reset(
    params: SimParams,
    robot: Pose2,
    object_pose: Pose2,
    rng_seed: int,
    world: OccupancyMap | None = None,
    footprint=None,
) -> SimState:
    """Fresh episode state with randomized caster swivel angles.

    When a map is supplied the initial footprints are validated and an
    InitialCollisionError is raised if either is blocked.
    """
    if world is not None:
        from .worldmap import FootprintModel

        fp = footprint if footprint is not None else FootprintModel()
        if disc_collides(world, object_pose.x, object_pose.y, params.object_radius):
            raise InitialCollisionError("object starts in collision")
        if rect_collides(world, robot, fp.robot_length, fp.robot_width):
            raise InitialCollisionError("robot starts in collision")
    rng = np.random.default_rng(rng_seed)
    angles = rng.uniform(-math.pi, math.pi, params.n_casters)
    return SimState(robot=robot, object=object_pose, caster_angles=angles)


def check_lost_grasp(state: SimState) -> bool:
    return not state.grasp_held


def _clip_robot_motion(robot: Pose2, command: Pose2, params: SimParams) -> Pose2:
    dx, dy = command.x - robot.x, command.y - robot.y
    dist = math.hypot(dx, dy)
    max_step = params.robot_max_lin_vel * params.dt
    if dist > max_step:
        scale = max_step / dist
        dx, dy = dx * scale, dy * scale
    dth = wrap_angle(command.theta - robot.theta)
    max_turn = params.robot_max_ang_vel * params.dt
    dth = max(-max_turn, min(max_turn, dth))
    return Pose2(robot.x + dx, robot.y + dy, robot.theta + dth)


def _strain(target: Pose2, obj: Pose2, arm: float) -> float:
    return math.hypot(target.x - obj.x, target.y - obj.y) + arm * abs(
        wrap_angle(target.theta - obj.theta)
    )


def _misalignment(angles: np.ndarray, direction: float) -> float:
    """Mean |sin| misalignment of casters relative to a motion direction
    (pi-periodic: a caster rolls equally well forward and backward)."""
    return float(np.mean(np.abs(np.sin(angles - direction))))


@lru_cache(maxsize=8)
def _caster_tangents(n: int) -> np.ndarray:
    # direction each ring-mounted caster sweeps under positive object rotation
    return 2.0 * math.pi * np.arange(n) / n + math.pi / 2.0


def _apply_contact(world: OccupancyMap | None, params: SimParams,
                   obj: Pose2, dx: float, dy: float) -> tuple[float, float]:
    """Zero the translation components that would push the object footprint
    into an obstacle cell."""
    if world is None:
        return dx, dy
    if not disc_collides(world, obj.x + dx, obj.y + dy, params.object_radius):
        return dx, dy
    if not disc_collides(world, obj.x + dx, obj.y, params.object_radius):
        return dx, 0.0
    if not disc_collides(world, obj.x, obj.y + dy, params.object_radius):
        return 0.0, dy
    return 0.0, 0.0


def sim_step(
    state: SimState,
    params: SimParams,
    world: OccupancyMap | None,
    command: Pose2,
) -> SimState:
    """Advance one control period. Pure function of its arguments; failures
    (grasp loss, contact) are recorded in the returned state, never raised."""
    robot = _clip_robot_motion(state.robot, command, params)
    obj = state.object
    angles = state.caster_angles.copy()
    stress = state.grasp_stress
    held = state.grasp_held

    if held:
        target = compose(robot, params.rigid_attach())
        strain_before = _strain(compose(state.robot, params.rigid_attach()),
                                state.object, params.stress_torque_arm)

        gap_x, gap_y = target.x - obj.x, target.y - obj.y
        gap = math.hypot(gap_x, gap_y)
        c, s = math.cos(obj.theta), math.sin(obj.theta)
        dx = dy = 0.0
        if gap > 1e-12:
            # direction of attempted motion in the object frame
            psi = math.atan2(-s * gap_x + c * gap_y, c * gap_x + s * gap_y)
            resist = params.friction_coeff * _misalignment(angles, psi)
            eta = 1.0 / (1.0 + params.drag_gain * resist)
            step = min(eta * gap,
                       params.object_speed_factor * params.robot_max_lin_vel * params.dt)
            dx, dy = step * gap_x / gap, step * gap_y / gap

        gap_th = wrap_angle(target.theta - obj.theta)
        dth = 0.0
        if abs(gap_th) > 1e-12:
            # rotation drags each caster tangentially around the object center
            tangents = _caster_tangents(params.n_casters)
            resist_rot = params.friction_coeff * float(
                np.mean(np.abs(np.sin(angles - tangents)))
            )
            eta_rot = 1.0 / (1.0 + params.drag_gain * resist_rot)
            cap = params.object_speed_factor * params.robot_max_ang_vel * params.dt
            dth = max(-cap, min(cap, eta_rot * gap_th))

        dx, dy = _apply_contact(world, params, obj, dx, dy)
        obj = Pose2(obj.x + dx, obj.y + dy, obj.theta + dth)

        moved = math.hypot(dx, dy)
        if moved > 1e-12:
            psi_applied = math.atan2(-s * dx + c * dy, c * dx + s * dy)
            # relax each caster toward the realized motion direction (mod pi)
            blend = 1.0 - math.exp(-params.caster_relax_rate * params.dt)
            delta = np.remainder(psi_applied - angles + math.pi / 2.0, math.pi) - math.pi / 2.0
            angles = angles + blend * delta

        strain_after = _strain(target, obj, params.stress_torque_arm)
        growth = max(0.0, strain_after - strain_before) / params.dt
        stress = stress * math.exp(-params.stress_decay * params.dt) \
            + params.stress_gain * growth * params.dt
        if stress > params.grasp_break_stress:
            held = False
    else:
        stress = stress * math.exp(-params.stress_decay * params.dt)

    return SimState(
        robot=robot,
        object=obj,
        caster_angles=angles,
        grasp_stress=stress,
        grasp_held=held,
        time=state.time + params.dt,
    )
