"""Multi-UAV viewpoint escort simulator.

A small deterministic library for studying camera-equipped escort drones that
keep an unobstructed view of a working main drone: sightline geometry against
spherical obstacles, strict-priority task composition, a sampling-based goal
controller with a PD baseline, canned scenarios, and ablation metrics.
"""

from .engine import SimHistory, history_to_csv, integrate, run
from .geometry import (
    AxialObstacle,
    DegenerateSegment,
    LosCase,
    LosGeometry,
    ViewCone,
    closest_point_on_segment,
    cone_sphere_margin,
    e3_error,
    fov_obstacle_intersection_volume,
    los_geometry,
    occludes,
)
from .metrics import (
    AblationReport,
    build_report,
    distance_error_stats,
    intersection_volume_series,
    occlusion_time_pct,
    path_length,
)
from .pic import DivergentRollouts, Rollout, pic_step, pid_step, rollout_cost
from .tasks import (
    LosControlState,
    PotentialField,
    SingularField,
    repulsive_accel,
    task1_collision,
    task2_distance,
    task3_los,
    task4_goto,
)
from .thc import PriorityStack, TaskOutput, compose, damped_pseudo_inverse, null_space_projector
from .viewpoints import ViewpointGoal, best_viewpoint_offsets, viewpoint_goal
from .world import (
    AblationToggles,
    Bounds,
    ControllerGains,
    FigureEightScript,
    MainActivity,
    Obstacle,
    PicParams,
    PidGains,
    PolylineScript,
    ScenarioConfig,
    SimParams,
    UavState,
    builtin_scenario,
    config_hash,
    config_to_json,
    parse_config,
    save_config,
    validate_config,
    vec3,
)

__version__ = "0.1.0"
