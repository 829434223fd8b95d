"""Run metrics and the ablation report.

All percentages are over the ``step_count + 1`` recorded instants, so a run
that is occluded at exactly half of them scores 50.0 regardless of scenario
length.
"""

from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .engine import SimHistory
from .geometry import ViewCone, fov_obstacle_intersection_volume
from .world import config_hash


def occlusion_time_pct(hist: SimHistory) -> float:
    """Percent of recorded instants where any escort's view cone hits any obstacle."""
    any_occ = hist.occluded.any(axis=(1, 2))
    return 100.0 * float(np.count_nonzero(any_occ)) / any_occ.shape[0]


def occlusion_time_pct_per_aux(hist: SimHistory) -> np.ndarray:
    occ = hist.occluded.any(axis=2)
    return 100.0 * occ.sum(axis=0) / occ.shape[0]


def intersection_volume_series(hist: SimHistory, resolution: float = 20.0) -> np.ndarray:
    """Per-step cone/obstacle overlap volume in m^3, per aux, summed over obstacles.

    Instants whose exact intersection test is negative contribute exactly
    zero without being voxelized, which keeps long unoccluded runs cheap.
    """
    n = hist.n_steps + 1
    out = np.zeros((n, hist.n_aux))
    apex_angle = hist.cfg.params.fov_apex_angle
    for k, u, j in zip(*np.nonzero(hist.occluded)):
        cone = ViewCone(hist.positions[k, 1 + u], hist.positions[k, 0], apex_angle)
        ob = hist.cfg.obstacles[j]
        out[k, u] += fov_obstacle_intersection_volume(cone, ob.center, ob.radius,
                                                      resolution)
    return out


def distance_error_stats(hist: SimHistory, distance: float | None = None) -> list[dict]:
    """Max and mean |range - formation distance| per aux over the whole run."""
    if distance is None:
        distance = hist.cfg.params.viewpoint_distance
    out = []
    for u in range(hist.n_aux):
        rng = np.linalg.norm(hist.positions[:, 1 + u] - hist.positions[:, 0], axis=1)
        err = np.abs(rng - distance)
        out.append({"max": float(err.max()), "mean": float(err.mean())})
    return out


def path_length(hist: SimHistory, uav_index: int) -> float:
    """Total distance flown by one vehicle (0 = main, 1.. = escorts)."""
    steps = np.diff(hist.positions[:, uav_index], axis=0)
    return float(np.linalg.norm(steps, axis=1).sum())


@dataclass(frozen=True)
class AblationReport:
    """Summary of one run under one toggle combination."""

    scenario_id: str
    seed: int
    toggles: dict
    cfg_hash: str
    occlusion_time_pct: float
    occlusion_time_pct_per_aux: list[float]
    distance_error_stats: list[dict]
    path_length: list[float]
    intersection_volume_series: np.ndarray  # (N+1, n_aux)

    def total_volume_series(self) -> np.ndarray:
        return self.intersection_volume_series.sum(axis=1)


def build_report(hist: SimHistory, volume_resolution: float = 20.0) -> AblationReport:
    cfg = hist.cfg
    return AblationReport(
        scenario_id=cfg.id,
        seed=cfg.seed,
        toggles={
            "task1": cfg.ablation.task1,
            "task2": cfg.ablation.task2,
            "task3": cfg.ablation.task3,
            "controller": cfg.ablation.controller,
        },
        cfg_hash=config_hash(cfg),
        occlusion_time_pct=occlusion_time_pct(hist),
        occlusion_time_pct_per_aux=[float(x) for x in occlusion_time_pct_per_aux(hist)],
        distance_error_stats=distance_error_stats(hist),
        path_length=[path_length(hist, i) for i in range(1 + hist.n_aux)],
        intersection_volume_series=intersection_volume_series(hist, volume_resolution),
    )


def report_to_json(report: AblationReport) -> str:
    payload = {
        "scenario_id": report.scenario_id,
        "seed": report.seed,
        "toggles": report.toggles,
        "cfg_hash": report.cfg_hash,
        "occlusion_time_pct": report.occlusion_time_pct,
        "occlusion_time_pct_per_aux": report.occlusion_time_pct_per_aux,
        "distance_error_stats": report.distance_error_stats,
        "path_length": report.path_length,
        "intersection_volume_series": [
            [float(v) for v in row] for row in report.intersection_volume_series
        ],
    }
    return json.dumps(payload, indent=2) + "\n"


def volume_series_csv(hist: SimHistory, series: np.ndarray) -> str:
    dt = hist.cfg.params.sampling_time
    cols = ["step", "time"] + [f"volume_aux{u + 1}" for u in range(hist.n_aux)] + ["volume_total"]
    lines = [",".join(cols)]
    for k in range(series.shape[0]):
        row = [str(k), repr(k * dt)]
        row += [repr(float(v)) for v in series[k]]
        row.append(repr(float(series[k].sum())))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def distance_series_csv(hist: SimHistory) -> str:
    dt = hist.cfg.params.sampling_time
    alpha = hist.cfg.params.viewpoint_distance
    cols = ["step", "time"]
    for u in range(hist.n_aux):
        cols += [f"range_aux{u + 1}", f"range_error_aux{u + 1}"]
    lines = [",".join(cols)]
    rng = np.linalg.norm(
        hist.positions[:, 1:] - hist.positions[:, :1], axis=2
    )  # (N+1, n_aux)
    for k in range(rng.shape[0]):
        row = [str(k), repr(k * dt)]
        for u in range(hist.n_aux):
            row += [repr(float(rng[k, u])), repr(float(abs(rng[k, u] - alpha)))]
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"
