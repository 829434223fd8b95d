"""World model: value types, tunable parameters, and scenario configuration.

Everything the simulator consumes is defined here as plain dataclasses over
numpy arrays.  Scenario configurations round-trip through a stable JSON form
(see ``scenarios/scenario.schema.json``) so that canonical setups are fixed
in versioned files rather than in code.
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Iterable, Sequence, Union

import numpy as np

Vec3 = np.ndarray

BUILTIN_SCENARIO_IDS = (1, 2, 3, 4, 5)


def vec3(x: float, y: float, z: float) -> Vec3:
    """Build a finite 3-vector, raising ValueError on NaN or infinity."""
    v = np.array([x, y, z], dtype=float)
    if not np.all(np.isfinite(v)):
        raise ValueError(f"vector components must be finite, got {v}")
    return v


def _as_vec3(value, what: str = "vector") -> Vec3:
    v = np.asarray(value, dtype=float)
    if v.shape != (3,):
        raise ValueError(f"{what} must have shape (3,), got {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError(f"{what} must be finite, got {v}")
    return v.copy()


def clamp_norm(v: np.ndarray, limit: float) -> np.ndarray:
    """Scale ``v`` down so its Euclidean norm does not exceed ``limit``."""
    n = float(np.linalg.norm(v))
    if n > limit:
        return v * (limit / n)
    return np.asarray(v, dtype=float)


@dataclass(frozen=True, eq=False)
class UavState:
    """Position and velocity of one vehicle at one instant."""

    position: Vec3
    velocity: Vec3

    def __post_init__(self):
        object.__setattr__(self, "position", _as_vec3(self.position, "position"))
        object.__setattr__(self, "velocity", _as_vec3(self.velocity, "velocity"))
        self.position.flags.writeable = False
        self.velocity.flags.writeable = False

    @property
    def speed(self) -> float:
        return float(np.linalg.norm(self.velocity))


@dataclass(frozen=True, eq=False)
class Obstacle:
    """Static spherical obstacle (tree canopy, parked drone, ...)."""

    center: Vec3
    radius: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center, "obstacle center"))
        object.__setattr__(self, "radius", float(self.radius))
        if not (math.isfinite(self.radius) and self.radius > 0):
            raise ValueError(f"obstacle radius must be positive, got {self.radius}")
        self.center.flags.writeable = False

    def surface_distance(self, point: np.ndarray) -> float:
        """Signed distance from ``point`` to the sphere surface (negative inside)."""
        return float(np.linalg.norm(np.asarray(point, dtype=float) - self.center)) - self.radius


@dataclass(frozen=True)
class Bounds:
    """Axis-aligned box the vehicles must stay inside."""

    lo: Vec3
    hi: Vec3

    def __post_init__(self):
        object.__setattr__(self, "lo", _as_vec3(self.lo, "bounds lo"))
        object.__setattr__(self, "hi", _as_vec3(self.hi, "bounds hi"))
        if not np.all(self.hi > self.lo):
            raise ValueError("bounds hi must exceed lo on every axis")

    def contains(self, point: np.ndarray, margin: float = 0.0) -> bool:
        p = np.asarray(point, dtype=float)
        return bool(np.all(p >= self.lo + margin) and np.all(p <= self.hi - margin))

    def clip(self, point: np.ndarray, margin: float = 0.0) -> np.ndarray:
        return np.clip(np.asarray(point, dtype=float), self.lo + margin, self.hi - margin)


@dataclass(frozen=True)
class PidGains:
    k_p: float = 1.2
    k_d: float = 0.9


@dataclass(frozen=True)
class PicParams:
    """Sampling-based trajectory optimizer knobs.

    horizon          number of lookahead steps H
    samples          number of perturbed control sequences M
    noise_sigma      std-dev of the control perturbations (per axis, m/s^2)
    temperature      softmax temperature applied to rollout costs
    control_cost     quadratic effort weight R
    obstacle_penalty weight on squared influence-zone penetration
    goal_weight      weight on squared terminal goal distance
    """

    horizon: int = 25
    samples: int = 64
    noise_sigma: float = 0.4
    temperature: float = 0.08
    control_cost: float = 0.05
    obstacle_penalty: float = 8.0
    goal_weight: float = 6.0


@dataclass(frozen=True)
class ControllerGains:
    """Gains shared by the error-space task controllers plus goal-seeking knobs."""

    k_p: float = 1.5
    k_d: float = 1.6
    k_i: float = 0.2
    repulsion_gain: float = 1.0
    pid_goal: PidGains = field(default_factory=PidGains)
    pic: PicParams = field(default_factory=PicParams)


@dataclass(frozen=True)
class SimParams:
    """Physical and controller parameters for one run."""

    sampling_time: float = 0.1
    step_count: int = 400
    fov_apex_angle: float = math.pi / 3.0
    los_margin: float = 0.5
    viewpoint_distance: float = 5.0
    collision_influence_radius: float = 2.0
    accel_limit: float = 2.5
    speed_limit: float = 2.5
    gains: ControllerGains = field(default_factory=ControllerGains)


class MainActivity(Enum):
    """What the main UAV is currently doing; selects the preferred vantage set."""

    REACHABILITY = "reachability"
    MANIPULABILITY = "manipulability"


@dataclass(frozen=True)
class PolylineScript:
    """Main-UAV trajectory: constant speed along a waypoint polyline, then hold."""

    waypoints: np.ndarray  # (n, 3)
    speed: float

    def __post_init__(self):
        wp = np.asarray(self.waypoints, dtype=float)
        if wp.ndim != 2 or wp.shape[1] != 3 or wp.shape[0] < 1:
            raise ValueError("polyline needs at least one 3d waypoint")
        if not np.all(np.isfinite(wp)):
            raise ValueError("polyline waypoints must be finite")
        object.__setattr__(self, "waypoints", wp)
        object.__setattr__(self, "speed", float(self.speed))
        if self.speed < 0:
            raise ValueError("polyline speed must be non-negative")
        seg = np.diff(wp, axis=0)
        lengths = np.linalg.norm(seg, axis=1) if len(seg) else np.zeros(0)
        object.__setattr__(self, "_cumlen", np.concatenate([[0.0], np.cumsum(lengths)]))

    def state(self, t: float) -> UavState:
        wp = self.waypoints
        if len(wp) == 1 or self.speed == 0.0:
            return UavState(wp[0], np.zeros(3))
        s = self.speed * max(t, 0.0)
        cum = self._cumlen
        if s >= cum[-1]:
            return UavState(wp[-1], np.zeros(3))
        i = int(np.searchsorted(cum, s, side="right") - 1)
        seg = wp[i + 1] - wp[i]
        seg_len = cum[i + 1] - cum[i]
        direction = seg / seg_len
        return UavState(wp[i] + direction * (s - cum[i]), direction * self.speed)


@dataclass(frozen=True)
class FigureEightScript:
    """Main-UAV trajectory: planar Lissajous eight at constant altitude."""

    center: Vec3
    x_radius: float
    y_radius: float
    period: float

    def __post_init__(self):
        object.__setattr__(self, "center", _as_vec3(self.center, "figure-eight center"))
        for name in ("x_radius", "y_radius", "period"):
            val = float(getattr(self, name))
            object.__setattr__(self, name, val)
            if not (math.isfinite(val) and val > 0):
                raise ValueError(f"figure-eight {name} must be positive")

    def state(self, t: float) -> UavState:
        w = 2.0 * math.pi / self.period
        pos = self.center + np.array(
            [self.x_radius * math.sin(w * t), self.y_radius * math.sin(2.0 * w * t), 0.0]
        )
        vel = np.array(
            [self.x_radius * w * math.cos(w * t), 2.0 * self.y_radius * w * math.cos(2.0 * w * t), 0.0]
        )
        return UavState(pos, vel)


TrajectoryScript = Union[PolylineScript, FigureEightScript]


@dataclass(frozen=True)
class AblationToggles:
    """Which tasks run; collision avoidance stays on unless tests force it off."""

    task1: bool = True
    task2: bool = True
    task3: bool = True
    controller: str = "pic"  # "pic" | "pid"

    def __post_init__(self):
        if self.controller not in ("pic", "pid"):
            raise ValueError(f"controller must be 'pic' or 'pid', got {self.controller!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Complete, serializable description of one simulation run."""

    id: str
    seed: int
    bounds: Bounds
    obstacles: tuple[Obstacle, ...]
    n_aux: int
    aux_start: tuple[Vec3, ...]
    main_trajectory: TrajectoryScript
    waypoint_schedule: tuple[tuple[Vec3, ...], ...]
    main_task_schedule: tuple[tuple[int, MainActivity], ...]
    params: SimParams = field(default_factory=SimParams)
    ablation: AblationToggles = field(default_factory=AblationToggles)


@dataclass(frozen=True)
class Violation:
    """One reason a config cannot run."""

    code: str
    path: str
    message: str

    def __str__(self):
        return f"[{self.code}] {self.path}: {self.message}"


def validate_config(cfg: ScenarioConfig) -> list[Violation]:
    """Check the semantic invariants a parseable config can still break.

    Returns an empty list when the config is runnable.  Violations carry a
    machine-readable code, the offending field path, and a human message.
    """
    out: list[Violation] = []

    def bad(code, path, message):
        out.append(Violation(code, path, message))

    p = cfg.params
    if p.sampling_time <= 0:
        bad("nonpositive_sampling_time", "params.sampling_time", f"must be > 0, got {p.sampling_time}")
    if p.step_count < 1:
        bad("nonpositive_step_count", "params.step_count", f"must be >= 1, got {p.step_count}")
    if not (0.0 < p.fov_apex_angle < math.pi):
        bad("bad_apex_angle", "params.fov_apex_angle", f"must be in (0, pi), got {p.fov_apex_angle}")
    if p.los_margin <= 0:
        bad("nonpositive_los_margin", "params.los_margin", f"must be > 0, got {p.los_margin}")
    if p.viewpoint_distance <= 0:
        bad("nonpositive_viewpoint_distance", "params.viewpoint_distance", f"must be > 0, got {p.viewpoint_distance}")
    if p.collision_influence_radius <= 0:
        bad("nonpositive_influence_radius", "params.collision_influence_radius", "must be > 0")
    if p.accel_limit <= 0:
        bad("nonpositive_accel_limit", "params.accel_limit", "must be > 0")
    if p.speed_limit <= 0:
        bad("nonpositive_speed_limit", "params.speed_limit", "must be > 0")
    pic = p.gains.pic
    if pic.horizon < 1:
        bad("bad_pic_horizon", "params.gains.pic.horizon", "must be >= 1")
    if pic.samples < 1:
        bad("bad_pic_samples", "params.gains.pic.samples", "must be >= 1")
    if pic.noise_sigma < 0:
        bad("bad_pic_sigma", "params.gains.pic.noise_sigma", "must be >= 0")
    if pic.temperature <= 0:
        bad("bad_pic_temperature", "params.gains.pic.temperature", "must be > 0")

    if cfg.n_aux < 1:
        bad("no_aux", "n_aux", "need at least one auxiliary UAV")
    if len(cfg.aux_start) != cfg.n_aux:
        bad("aux_start_count", "aux_start", f"expected {cfg.n_aux} start positions, got {len(cfg.aux_start)}")
    if len(cfg.waypoint_schedule) != cfg.n_aux:
        bad("schedule_count", "waypoint_schedule", f"expected {cfg.n_aux} schedules, got {len(cfg.waypoint_schedule)}")

    for i, ob in enumerate(cfg.obstacles):
        if ob.radius <= 0:
            bad("obstacle_radius", f"obstacles[{i}].radius", "must be > 0")
        if not cfg.bounds.contains(ob.center):
            bad("obstacle_out_of_bounds", f"obstacles[{i}].center", f"{ob.center} outside bounds")

    for i, start in enumerate(cfg.aux_start):
        if not cfg.bounds.contains(start):
            bad("aux_start_out_of_bounds", f"aux_start[{i}]", f"{start} outside bounds")
        for j, ob in enumerate(cfg.obstacles):
            if ob.surface_distance(start) <= 0:
                bad("aux_start_inside_obstacle", f"aux_start[{i}]", f"inside obstacles[{j}]")

    for u, schedule in enumerate(cfg.waypoint_schedule):
        for i, wp in enumerate(schedule):
            if not cfg.bounds.contains(wp):
                bad("waypoint_out_of_bounds", f"waypoint_schedule[{u}][{i}]", f"{wp} outside bounds")

    if isinstance(cfg.main_trajectory, PolylineScript):
        for i, wp in enumerate(cfg.main_trajectory.waypoints):
            if not cfg.bounds.contains(wp):
                bad("main_waypoint_out_of_bounds", f"main_trajectory.waypoints[{i}]", f"{wp} outside bounds")
        if cfg.main_trajectory.speed > p.speed_limit:
            bad("main_too_fast", "main_trajectory.speed", "exceeds params.speed_limit")
    else:
        traj = cfg.main_trajectory
        w = 2.0 * math.pi / traj.period
        peak = math.hypot(traj.x_radius * w, 2.0 * traj.y_radius * w)
        if peak > p.speed_limit:
            bad("main_too_fast", "main_trajectory", f"peak speed {peak:.3f} exceeds params.speed_limit")
        for sx in (-1.0, 1.0):
            for sy in (-1.0, 1.0):
                corner = traj.center + np.array([sx * traj.x_radius, sy * traj.y_radius, 0.0])
                if not cfg.bounds.contains(corner):
                    bad("main_out_of_bounds", "main_trajectory", "figure-eight envelope leaves bounds")
                    break

    steps = [s for s, _ in cfg.main_task_schedule]
    if not cfg.main_task_schedule or cfg.main_task_schedule[0][0] != 0:
        bad("schedule_missing_start", "main_task_schedule", "first entry must be at step 0")
    if steps != sorted(steps) or len(set(steps)) != len(steps):
        bad("schedule_not_sorted", "main_task_schedule", "entries must have strictly increasing steps")

    return out


# ---------------------------------------------------------------------------
# JSON round-trip


def _script_to_dict(script: TrajectoryScript) -> dict:
    if isinstance(script, PolylineScript):
        return {
            "kind": "polyline",
            "waypoints": [list(map(float, w)) for w in script.waypoints],
            "speed": script.speed,
        }
    return {
        "kind": "figure_eight",
        "center": list(map(float, script.center)),
        "x_radius": script.x_radius,
        "y_radius": script.y_radius,
        "period": script.period,
    }


def _script_from_dict(d: dict) -> TrajectoryScript:
    kind = d.get("kind")
    if kind == "polyline":
        return PolylineScript(np.asarray(d["waypoints"], dtype=float), float(d["speed"]))
    if kind == "figure_eight":
        return FigureEightScript(
            _as_vec3(d["center"], "figure-eight center"),
            float(d["x_radius"]),
            float(d["y_radius"]),
            float(d["period"]),
        )
    raise ValueError(f"unknown trajectory kind {kind!r}")


def config_to_dict(cfg: ScenarioConfig) -> dict:
    g = cfg.params.gains
    return {
        "id": cfg.id,
        "seed": cfg.seed,
        "bounds": {"lo": list(map(float, cfg.bounds.lo)), "hi": list(map(float, cfg.bounds.hi))},
        "obstacles": [
            {"center": list(map(float, ob.center)), "radius": ob.radius} for ob in cfg.obstacles
        ],
        "n_aux": cfg.n_aux,
        "aux_start": [list(map(float, s)) for s in cfg.aux_start],
        "main_trajectory": _script_to_dict(cfg.main_trajectory),
        "waypoint_schedule": [
            [list(map(float, wp)) for wp in schedule] for schedule in cfg.waypoint_schedule
        ],
        "main_task_schedule": [[step, act.value] for step, act in cfg.main_task_schedule],
        "params": {
            "sampling_time": cfg.params.sampling_time,
            "step_count": cfg.params.step_count,
            "fov_apex_angle": cfg.params.fov_apex_angle,
            "los_margin": cfg.params.los_margin,
            "viewpoint_distance": cfg.params.viewpoint_distance,
            "collision_influence_radius": cfg.params.collision_influence_radius,
            "accel_limit": cfg.params.accel_limit,
            "speed_limit": cfg.params.speed_limit,
            "gains": {
                "k_p": g.k_p,
                "k_d": g.k_d,
                "k_i": g.k_i,
                "repulsion_gain": g.repulsion_gain,
                "pid_goal": {"k_p": g.pid_goal.k_p, "k_d": g.pid_goal.k_d},
                "pic": {
                    "horizon": g.pic.horizon,
                    "samples": g.pic.samples,
                    "noise_sigma": g.pic.noise_sigma,
                    "temperature": g.pic.temperature,
                    "control_cost": g.pic.control_cost,
                    "obstacle_penalty": g.pic.obstacle_penalty,
                    "goal_weight": g.pic.goal_weight,
                },
            },
        },
        "ablation": {
            "task1": cfg.ablation.task1,
            "task2": cfg.ablation.task2,
            "task3": cfg.ablation.task3,
            "controller": cfg.ablation.controller,
        },
    }


def config_from_dict(d: dict) -> ScenarioConfig:
    try:
        pd = d["params"]
        gd = pd["gains"]
        gains = ControllerGains(
            k_p=float(gd["k_p"]),
            k_d=float(gd["k_d"]),
            k_i=float(gd["k_i"]),
            repulsion_gain=float(gd["repulsion_gain"]),
            pid_goal=PidGains(float(gd["pid_goal"]["k_p"]), float(gd["pid_goal"]["k_d"])),
            pic=PicParams(
                horizon=int(gd["pic"]["horizon"]),
                samples=int(gd["pic"]["samples"]),
                noise_sigma=float(gd["pic"]["noise_sigma"]),
                temperature=float(gd["pic"]["temperature"]),
                control_cost=float(gd["pic"]["control_cost"]),
                obstacle_penalty=float(gd["pic"]["obstacle_penalty"]),
                goal_weight=float(gd["pic"]["goal_weight"]),
            ),
        )
        params = SimParams(
            sampling_time=float(pd["sampling_time"]),
            step_count=int(pd["step_count"]),
            fov_apex_angle=float(pd["fov_apex_angle"]),
            los_margin=float(pd["los_margin"]),
            viewpoint_distance=float(pd["viewpoint_distance"]),
            collision_influence_radius=float(pd["collision_influence_radius"]),
            accel_limit=float(pd["accel_limit"]),
            speed_limit=float(pd["speed_limit"]),
            gains=gains,
        )
        ab = d.get("ablation", {})
        return ScenarioConfig(
            id=str(d["id"]),
            seed=int(d["seed"]),
            bounds=Bounds(_as_vec3(d["bounds"]["lo"], "bounds lo"), _as_vec3(d["bounds"]["hi"], "bounds hi")),
            obstacles=tuple(
                Obstacle(_as_vec3(ob["center"], "obstacle center"), float(ob["radius"]))
                for ob in d["obstacles"]
            ),
            n_aux=int(d["n_aux"]),
            aux_start=tuple(_as_vec3(s, "aux start") for s in d["aux_start"]),
            main_trajectory=_script_from_dict(d["main_trajectory"]),
            waypoint_schedule=tuple(
                tuple(_as_vec3(wp, "waypoint") for wp in schedule) for schedule in d["waypoint_schedule"]
            ),
            main_task_schedule=tuple(
                (int(step), MainActivity(act)) for step, act in d["main_task_schedule"]
            ),
            params=params,
            ablation=AblationToggles(
                task1=bool(ab.get("task1", True)),
                task2=bool(ab.get("task2", True)),
                task3=bool(ab.get("task3", True)),
                controller=str(ab.get("controller", "pic")),
            ),
        )
    except (KeyError, TypeError, IndexError) as exc:
        raise ValueError(f"malformed scenario config: {exc!r}") from exc


def config_to_json(cfg: ScenarioConfig) -> str:
    """Serialize to the canonical JSON form (stable key order, 2-space indent)."""
    return json.dumps(config_to_dict(cfg), indent=2) + "\n"


def parse_config(source: Union[str, Path, dict]) -> ScenarioConfig:
    """Load a ScenarioConfig from a JSON file path, JSON text, or a dict."""
    if isinstance(source, dict):
        return config_from_dict(source)
    try:
        is_file = Path(str(source)).exists()
    except (OSError, ValueError):  # raw JSON text can exceed path-name limits
        is_file = False
    text = Path(source).read_text() if is_file else str(source)
    return config_from_dict(json.loads(text))


def save_config(cfg: ScenarioConfig, path: Union[str, Path]) -> None:
    Path(path).write_text(config_to_json(cfg))


def config_hash(cfg: ScenarioConfig) -> str:
    """Stable content hash of the canonical JSON form."""
    return hashlib.sha256(config_to_json(cfg).encode()).hexdigest()[:16]


def builtin_scenario(scenario_id: int) -> ScenarioConfig:
    """Load one of the five canonical scenarios shipped with the package.

    1  ground 'tree' spheres beside the straight survey leg
    2  hovering obstacles at flight altitude close to the leg
    3  like 1 but taller: obstacle clearance to the leg altitude halved
    4  like 1 plus a vantage-set switch halfway through the run
    5  figure-eight main trajectory over the scenario-1 obstacles
    """
    if scenario_id not in BUILTIN_SCENARIO_IDS:
        raise ValueError(f"scenario_id must be one of {BUILTIN_SCENARIO_IDS}, got {scenario_id}")
    ref = resources.files("sightline").joinpath(f"scenarios/scenario{scenario_id}.json")
    return parse_config(json.loads(ref.read_text()))
