"""Simulation engine: fixed-step integration of the full escort stack.

Per step and per auxiliary UAV the engine computes the viewpoint goal, runs
the four tasks (honoring the ablation toggles), composes them with strict
priority, and integrates.  Everything observable lands in a SimHistory whose
series all have ``step_count + 1`` entries (index 0 is the initial state; the
entry at the final step holds the last diagnostic evaluation with no further
integration).
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .geometry import LosCase, ViewCone, occludes
from .pic import pic_step, pid_step
from .tasks import (
    LosControlState,
    los_geometry_checked,
    task1_collision,
    task2_distance,
    task3_los,
    task4_goto,
)
from .thc import compose, inactive_task
from .viewpoints import heading_of, viewpoint_goal
from .world import MainActivity, ScenarioConfig, UavState, validate_config

log = logging.getLogger(__name__)

WAYPOINT_RADIUS = 0.3  # m; a scheduled waypoint counts as reached inside this


def integrate(state: UavState, accel: np.ndarray, sampling_time: float,
              speed_limit: float = np.inf) -> UavState:
    """Semi-implicit Euler step: velocity first (speed-clamped), then position."""
    v = state.velocity + np.asarray(accel, dtype=float) * sampling_time
    speed = float(np.linalg.norm(v))
    if speed > speed_limit:
        v = v * (speed_limit / speed)
    return UavState(state.position + v * sampling_time, v)


def _pic_seed(seed: int, aux_index: int, step: int) -> int:
    """Stable per-(run, aux, step) stream key for the sampling controller."""
    ss = np.random.SeedSequence([int(seed), int(aux_index), int(step)])
    return int(ss.generate_state(1, np.uint64)[0])


@dataclass(eq=False)
class SimHistory:
    """Everything a run produced, as dense arrays over steps.

    UAV axis 0 is the main vehicle, 1..n_aux the escorts.  Per-aux fields
    drop the main UAV.
    """

    cfg: ScenarioConfig
    positions: np.ndarray       # (N+1, 1+n_aux, 3)
    velocities: np.ndarray      # (N+1, 1+n_aux, 3)
    accels: np.ndarray          # (N+1, n_aux, 3) composed commands
    goals: np.ndarray           # (N+1, n_aux, 3)
    task_active: np.ndarray     # (N+1, n_aux, 4) bool
    e3: np.ndarray              # (N+1, n_aux, n_obs)
    case: np.ndarray            # (N+1, n_aux, n_obs) int8, LosCase values
    occluded: np.ndarray        # (N+1, n_aux, n_obs) bool
    waypoint_index: np.ndarray  # (N+1, n_aux) int32
    activity: np.ndarray        # (N+1,) int8; 0 reachability, 1 manipulability

    @property
    def n_steps(self) -> int:
        return self.positions.shape[0] - 1

    @property
    def n_aux(self) -> int:
        return self.positions.shape[1] - 1

    @property
    def n_obstacles(self) -> int:
        return self.e3.shape[2]


def run(cfg: ScenarioConfig) -> SimHistory:
    """Simulate one scenario to completion.

    Raises ValueError when the config fails validation, so broken setups die
    loudly instead of producing plausible-looking garbage.
    """
    violations = validate_config(cfg)
    if violations:
        raise ValueError(
            "config failed validation:\n" + "\n".join(str(v) for v in violations)
        )

    p = cfg.params
    n_steps = p.step_count
    n_aux = cfg.n_aux
    n_obs = len(cfg.obstacles)
    dt = p.sampling_time
    pic_cfg = p.gains.pic

    hist = SimHistory(
        cfg=cfg,
        positions=np.zeros((n_steps + 1, 1 + n_aux, 3)),
        velocities=np.zeros((n_steps + 1, 1 + n_aux, 3)),
        accels=np.zeros((n_steps + 1, n_aux, 3)),
        goals=np.zeros((n_steps + 1, n_aux, 3)),
        task_active=np.zeros((n_steps + 1, n_aux, 4), dtype=bool),
        e3=np.zeros((n_steps + 1, n_aux, n_obs)),
        case=np.ones((n_steps + 1, n_aux, n_obs), dtype=np.int8),
        occluded=np.zeros((n_steps + 1, n_aux, n_obs), dtype=bool),
        waypoint_index=np.zeros((n_steps + 1, n_aux), dtype=np.int32),
        activity=np.zeros(n_steps + 1, dtype=np.int8),
    )

    aux_states = [UavState(s, np.zeros(3)) for s in cfg.aux_start]
    multi_block_warned = [False] * n_aux
    los_memory = [LosControlState() for _ in range(n_aux)]
    nominals = [np.zeros((pic_cfg.horizon, 3)) for _ in range(n_aux)]
    wp_index = [0] * n_aux
    heading = np.array([1.0, 0.0, 0.0])

    schedule_steps = [s for s, _ in cfg.main_task_schedule]
    schedule_acts = [a for _, a in cfg.main_task_schedule]

    for k in range(n_steps + 1):
        main = cfg.main_trajectory.state(k * dt)
        heading = heading_of(main, heading)
        act_idx = int(np.searchsorted(schedule_steps, k, side="right") - 1)
        activity = schedule_acts[max(act_idx, 0)]

        hist.positions[k, 0] = main.position
        hist.velocities[k, 0] = main.velocity
        hist.activity[k] = int(activity is MainActivity.MANIPULABILITY)

        new_states: list[UavState] = []
        for u in range(n_aux):
            aux = aux_states[u]
            goal = viewpoint_goal(main, activity, p.viewpoint_distance, u,
                                  heading=heading, bounds=cfg.bounds)

            schedule = cfg.waypoint_schedule[u]
            while (wp_index[u] < len(schedule)
                   and np.linalg.norm(aux.position - schedule[wp_index[u]]) <= WAYPOINT_RADIUS):
                wp_index[u] += 1
                nominals[u] = np.zeros((pic_cfg.horizon, 3))

            blocked = 0
            for j, ob in enumerate(cfg.obstacles):
                geom = los_geometry_checked(aux.position, main.position, ob,
                                            p.fov_apex_angle, p.los_margin)
                hist.e3[k, u, j] = geom.e3
                hist.case[k, u, j] = int(geom.case)
                cone = ViewCone(aux.position, main.position, p.fov_apex_angle)
                hist.occluded[k, u, j] = occludes(cone, ob.center, ob.radius)
                blocked += geom.case is LosCase.BLOCKED
            if blocked >= 2 and not multi_block_warned[u]:
                multi_block_warned[u] = True
                log.warning(
                    "step %d aux %d: %d obstacles block the sightline at once; "
                    "single-offender avoidance may not clear them all "
                    "(warned once per run)", k, u, blocked,
                )

            others = [main.position] + [
                aux_states[v].position for v in range(n_aux) if v != u
            ]
            t1 = (task1_collision(aux, cfg.obstacles, others, p)
                  if cfg.ablation.task1 else inactive_task(1))
            t2 = (task2_distance(aux, main, p.viewpoint_distance, p)
                  if cfg.ablation.task2 else inactive_task(2))
            if cfg.ablation.task3:
                t3, los_memory[u] = task3_los(aux, main, cfg.obstacles, p, los_memory[u])
            else:
                t3 = inactive_task(3)

            if cfg.ablation.controller == "pic":
                ctrl_accel, nominals[u] = pic_step(
                    aux, nominals[u], goal.position, cfg.obstacles, p,
                    _pic_seed(cfg.seed, u, k),
                )
            else:
                ctrl_accel = pid_step(aux, goal.position, p.gains.pid_goal, p.accel_limit)
            t4 = task4_goto(aux, goal.position, ctrl_accel, p.accel_limit)

            command = compose([t1, t2, t3, t4], accel_limit=p.accel_limit)

            hist.goals[k, u] = goal.position
            hist.task_active[k, u] = [t.active for t in (t1, t2, t3, t4)]
            hist.accels[k, u] = command
            hist.waypoint_index[k, u] = wp_index[u]
            hist.positions[k, 1 + u] = aux.position
            hist.velocities[k, 1 + u] = aux.velocity

            if k < n_steps:
                nxt = integrate(aux, command, dt, p.speed_limit)
                pos = cfg.bounds.clip(nxt.position)
                if not np.array_equal(pos, nxt.position):
                    vel = np.where(pos == nxt.position, nxt.velocity, 0.0)
                    nxt = UavState(pos, vel)
                new_states.append(nxt)

        if k < n_steps:
            aux_states = new_states

    return hist


def history_to_csv(hist: SimHistory) -> str:
    """Flatten a run into CSV, one row per (step, vehicle), stable column order."""
    n_obs = hist.n_obstacles
    cols = [
        "step", "time", "uav",
        "px", "py", "pz", "vx", "vy", "vz",
        "ax", "ay", "az", "goal_x", "goal_y", "goal_z",
        "task1", "task2", "task3", "task4", "waypoint_index", "occluded_any",
    ]
    for j in range(n_obs):
        cols += [f"e3_obs{j}", f"case_obs{j}", f"occluded_obs{j}"]

    dt = hist.cfg.params.sampling_time
    lines = [",".join(cols)]
    for k in range(hist.n_steps + 1):
        t = repr(k * dt)
        for i in range(1 + hist.n_aux):
            name = "main" if i == 0 else f"aux{i}"
            row = [str(k), t, name]
            row += [repr(float(x)) for x in hist.positions[k, i]]
            row += [repr(float(x)) for x in hist.velocities[k, i]]
            if i == 0:
                row += [""] * (12 + 3 * n_obs)
            else:
                u = i - 1
                row += [repr(float(x)) for x in hist.accels[k, u]]
                row += [repr(float(x)) for x in hist.goals[k, u]]
                row += [str(int(b)) for b in hist.task_active[k, u]]
                row.append(str(int(hist.waypoint_index[k, u])))
                row.append(str(int(hist.occluded[k, u].any())))
                for j in range(n_obs):
                    row += [
                        repr(float(hist.e3[k, u, j])),
                        str(int(hist.case[k, u, j])),
                        str(int(hist.occluded[k, u, j])),
                    ]
            lines.append(",".join(row))
    return "\n".join(lines) + "\n"
