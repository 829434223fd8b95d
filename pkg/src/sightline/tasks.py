"""The four prioritized behaviors the auxiliary UAVs run.

1. collision avoidance     repulsive potential around obstacles and vehicles
2. formation distance      hold a fixed range to the main UAV
3. sightline clearance     keep obstacles out of the viewing cone, PID on e3
4. goal seeking            fly to the assigned viewpoint (controller-supplied)

Each returns a TaskOutput for the null-space composition in :mod:`thc`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .geometry import (
    AxialObstacle,
    LosCase,
    LosGeometry,
    closest_point_on_segment,
    los_clearance,
    los_geometry,
)
from .thc import TaskOutput, damped_pseudo_inverse, inactive_task
from .world import Obstacle, SimParams, UavState, clamp_norm

INTEGRAL_LIMIT = 5.0   # anti-windup bound on the task-3 error integral
FD_STEP = 1e-5         # central-difference step for the clearance Jacobian
WORLD_UP = np.array([0.0, 0.0, 1.0])


class SingularField(ValueError):
    """Evaluation point sits on a potential-field singularity."""


@dataclass(frozen=True)
class PotentialField:
    """Repulsive potential shell around a point or a sphere.

    ``hard_radius`` is the physical radius (0 for point obstacles such as
    other vehicles); the field acts on the surface distance and fades to zero
    at ``influence_radius`` away from the surface.
    """

    center: np.ndarray
    influence_radius: float
    gain: float
    hard_radius: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "center", np.asarray(self.center, dtype=float))


def repulsive_accel(point: np.ndarray, field: PotentialField,
                    accel_limit: float = np.inf) -> np.ndarray:
    """Gradient-derived repulsion:  gain * (1/d - 1/d0) / d^2  away from the field.

    ``d`` is the distance to the field surface; the push vanishes smoothly at
    the influence boundary and diverges on the surface itself, where
    SingularField is raised instead of returning an unusable direction.
    """
    point = np.asarray(point, dtype=float)
    offset = point - field.center
    center_dist = float(np.linalg.norm(offset))
    d = center_dist - field.hard_radius
    if d >= field.influence_radius:
        return np.zeros(3)
    if d <= 0.0 or center_dist == 0.0:
        raise SingularField(f"point on/inside potential field surface (d={d:.3g})")
    magnitude = field.gain * (1.0 / d - 1.0 / field.influence_radius) / (d * d)
    return clamp_norm((offset / center_dist) * magnitude, accel_limit)


def task1_collision(aux: UavState, obstacles: Sequence[Obstacle],
                    other_positions: Sequence[np.ndarray],
                    params: SimParams) -> TaskOutput:
    """Highest priority: stay away from obstacle surfaces and other vehicles."""
    d0 = params.collision_influence_radius
    eta = params.gains.repulsion_gain
    fields = [
        PotentialField(ob.center, d0, eta, hard_radius=ob.radius) for ob in obstacles
    ] + [
        PotentialField(np.asarray(p, dtype=float), d0, eta) for p in other_positions
    ]

    accel = np.zeros(3)
    nearest_d = math.inf
    nearest_dir = np.zeros(3)
    active = False
    for f in fields:
        offset = aux.position - f.center
        d = float(np.linalg.norm(offset)) - f.hard_radius
        if d >= d0:
            continue
        active = True
        accel += repulsive_accel(aux.position, f, params.accel_limit)
        if d < nearest_d:
            nearest_d = d
            nearest_dir = offset / np.linalg.norm(offset)

    if not active:
        return inactive_task(1)
    return TaskOutput(
        task_id=1,
        active=True,
        error=np.array([d0 - nearest_d]),
        jacobian=nearest_dir.reshape(1, 3),
        accel_cmd=clamp_norm(accel, params.accel_limit),
    )


def task2_distance(aux: UavState, main: UavState, distance: float,
                   params: SimParams) -> TaskOutput:
    """Hold ||q_aux - q_main|| at the formation distance (attractive shell).

    The error is the scalar range surplus; the command is a radial PD that
    pushes outward when too close and inward when too far, damping only the
    radial relative velocity so tangential orbiting is left to lower tasks.
    """
    offset = aux.position - main.position
    r = float(np.linalg.norm(offset))
    if r == 0.0:
        raise SingularField("aux and main coincide; range direction undefined")
    u = offset / r
    err = r - distance
    radial_rate = float(np.dot(aux.velocity - main.velocity, u))
    g = params.gains
    accel = -(g.k_p * err + g.k_d * radial_rate) * u
    return TaskOutput(
        task_id=2,
        active=True,
        error=np.array([err]),
        jacobian=u.reshape(1, 3),
        accel_cmd=clamp_norm(accel, params.accel_limit),
    )


@dataclass(frozen=True)
class LosControlState:
    """PID memory for the sightline task; owned by the engine, one per aux."""

    integral: float = 0.0
    prev_error: float | None = None


def _clearance_safe(aux_pos: np.ndarray, main_pos: np.ndarray,
                    obstacle: Obstacle, apex_angle: float) -> float:
    """los_clearance with the axial degrade: a centered obstacle scores -radius."""
    try:
        return los_clearance(aux_pos, main_pos, obstacle.center, obstacle.radius, apex_angle)
    except AxialObstacle:
        p1 = closest_point_on_segment(aux_pos, main_pos, obstacle.center)
        cone_radius = float(np.linalg.norm(p1 - aux_pos)) * math.tan(apex_angle / 2.0)
        return -obstacle.radius - cone_radius


def los_geometry_checked(aux_pos: np.ndarray, main_pos: np.ndarray, obstacle: Obstacle,
                         apex_angle: float, margin: float) -> LosGeometry:
    """los_geometry with a deterministic tie-break for on-axis obstacles.

    When the obstacle center lies on the sightline the offset direction is
    taken as the world-up component orthogonal to the sightline (x-axis when
    the sightline is vertical), which keeps the construction defined without
    making the error any less severe.
    """
    try:
        return los_geometry(aux_pos, main_pos, obstacle.center, obstacle.radius,
                            apex_angle, margin)
    except AxialObstacle:
        axis = main_pos - aux_pos
        axis = axis / np.linalg.norm(axis)
        d = WORLD_UP - np.dot(WORLD_UP, axis) * axis
        if np.linalg.norm(d) < 1e-6:
            d = np.array([1.0, 0.0, 0.0]) - axis[0] * axis
        d = d / np.linalg.norm(d)
        p1 = closest_point_on_segment(aux_pos, main_pos, obstacle.center)
        cone_radius = float(np.linalg.norm(p1 - aux_pos)) * math.tan(apex_angle / 2.0)
        gap = -obstacle.radius
        return LosGeometry(
            p1=p1,
            p2=p1 + d * cone_radius,
            p3=obstacle.center - d * obstacle.radius,
            e3=(gap - cone_radius) - margin,
            case=LosCase.BLOCKED,
        )


def _clearance_branch(aux_pos: np.ndarray, main_pos: np.ndarray,
                      obstacle: Obstacle) -> int:
    """Which piece of the clamped p1 construction the configuration is on.

    -1: center projects behind the apex, p1 pinned to the aux position.
     0: interior projection.
    +1: center projects past the target, p1 pinned to the main position.
    """
    seg = main_pos - aux_pos
    length = float(np.linalg.norm(seg))
    t = float(np.dot(obstacle.center - aux_pos, seg)) / length
    if t <= 0.0:
        return -1
    if t >= length:
        return 1
    return 0


def _clearance_on_branch(aux_pos: np.ndarray, main_pos: np.ndarray, obstacle: Obstacle,
                         apex_angle: float, branch: int) -> float:
    """Signed clearance evaluated on one fixed piece of the construction.

    The pinned pieces are smooth in the aux position, so differencing within
    a piece never mixes formulas across the clamp boundary.  The interior
    formula extends continuously to an on-axis center (rho -> 0).
    """
    tan_half = math.tan(apex_angle / 2.0)
    if branch == 1:
        range_to_main = float(np.linalg.norm(main_pos - aux_pos))
        gap = float(np.linalg.norm(obstacle.center - main_pos)) - obstacle.radius
        return gap - range_to_main * tan_half
    if branch == -1:
        return float(np.linalg.norm(obstacle.center - aux_pos)) - obstacle.radius
    seg = main_pos - aux_pos
    length = float(np.linalg.norm(seg))
    axis = seg / length
    rel = obstacle.center - aux_pos
    t = float(np.dot(rel, axis))
    rho = float(np.linalg.norm(rel - t * axis))
    return (rho - obstacle.radius) - t * tan_half


def violation_jacobian(aux_pos: np.ndarray, main_pos: np.ndarray, obstacle: Obstacle,
                       apex_angle: float, step: float = FD_STEP) -> np.ndarray:
    """Row gradient of the occlusion violation depth w.r.t. the aux position.

    Central finite differences of -clearance; positive direction means the
    perturbation worsens the violation, so the pseudo-inverse of this row
    maps a negative e3 onto an acceleration that opens the gap.  Both probes
    are evaluated on the branch of the clamped construction that the base
    point occupies: differencing across the clamp boundary injects a spurious
    gradient component, and a saturated controller turns that into a steady
    drift in a direction the model never asked for.
    """
    branch = _clearance_branch(aux_pos, main_pos, obstacle)
    row = np.zeros((1, 3))
    for axis in range(3):
        delta = np.zeros(3)
        delta[axis] = step
        hi = _clearance_on_branch(aux_pos + delta, main_pos, obstacle, apex_angle, branch)
        lo = _clearance_on_branch(aux_pos - delta, main_pos, obstacle, apex_angle, branch)
        row[0, axis] = -(hi - lo) / (2.0 * step)
    return row


def task3_los(aux: UavState, main: UavState, obstacles: Sequence[Obstacle],
              params: SimParams, state: LosControlState,
              damping: float = 1e-3) -> tuple[TaskOutput, LosControlState]:
    """Sightline clearance: PID on the worst obstacle's e3 through J^+.

    Only the single worst offender drives the command each step; the PID
    memory resets whenever the task deactivates so stale windup cannot kick
    the vehicle on re-entry.
    """
    worst: LosGeometry | None = None
    worst_obstacle: Obstacle | None = None
    for ob in obstacles:
        geom = los_geometry_checked(aux.position, main.position, ob,
                                    params.fov_apex_angle, params.los_margin)
        if geom.case is LosCase.CLEAR:
            continue
        if worst is None or geom.e3 < worst.e3:
            worst = geom
            worst_obstacle = ob

    if worst is None:
        return inactive_task(3), LosControlState()

    e3 = worst.e3
    dt = params.sampling_time
    integral = float(np.clip(state.integral + e3 * dt, -INTEGRAL_LIMIT, INTEGRAL_LIMIT))
    derivative = 0.0 if state.prev_error is None else (e3 - state.prev_error) / dt

    g = params.gains
    command = g.k_p * e3 + g.k_d * derivative + g.k_i * integral
    jac = violation_jacobian(aux.position, main.position, worst_obstacle,
                             params.fov_apex_angle)
    accel = (damped_pseudo_inverse(jac, damping) @ np.array([command])).reshape(3)
    out = TaskOutput(
        task_id=3,
        active=True,
        error=np.array([e3]),
        jacobian=jac,
        accel_cmd=clamp_norm(accel, params.accel_limit),
    )
    return out, LosControlState(integral=integral, prev_error=e3)


def task4_goto(aux: UavState, goal: np.ndarray, controller_accel: np.ndarray,
               accel_limit: float = np.inf) -> TaskOutput:
    """Lowest priority: track the assigned viewpoint with whatever controller output."""
    return TaskOutput(
        task_id=4,
        active=True,
        error=np.asarray(goal, dtype=float) - aux.position,
        jacobian=np.eye(3),
        accel_cmd=clamp_norm(np.asarray(controller_accel, dtype=float), accel_limit),
    )
