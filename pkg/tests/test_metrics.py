"""Metrics tests: occlusion percentages, volumes, distance stats, reports."""

import dataclasses
import json

import numpy as np
import pytest

from sightline.engine import run
from sightline.geometry import ViewCone, fov_obstacle_intersection_volume
from sightline.metrics import (
    build_report,
    distance_error_stats,
    distance_series_csv,
    intersection_volume_series,
    occlusion_time_pct,
    occlusion_time_pct_per_aux,
    path_length,
    report_to_json,
    volume_series_csv,
)
from sightline.world import AblationToggles, builtin_scenario, config_hash


@pytest.fixture(scope="module")
def tiny_run():
    """Scenario 2 cut short, goal controller, sightline task off: cheap and occluded."""
    cfg = builtin_scenario(2)
    cfg = dataclasses.replace(
        cfg,
        params=dataclasses.replace(cfg.params, step_count=120),
        ablation=AblationToggles(task3=False, controller="pid"),
    )
    return run(cfg)


def _with_occlusion_pattern(hist, pattern):
    """Copy of a history with occluded[k, u, j] = pattern[k] for u=j=0."""
    occ = np.zeros_like(hist.occluded)
    occ[:, 0, 0] = pattern
    return dataclasses.replace(hist, occluded=occ)


def test_occlusion_pct_counts_instants(tiny_run):
    n_instants = tiny_run.n_steps + 1  # 121
    pattern = np.zeros(n_instants, dtype=bool)
    pattern[:10] = True
    hist = _with_occlusion_pattern(tiny_run, pattern)
    assert occlusion_time_pct(hist) == pytest.approx(100.0 * 10 / 121, abs=1e-12)

    none = _with_occlusion_pattern(tiny_run, np.zeros(n_instants, dtype=bool))
    assert occlusion_time_pct(none) == 0.0
    full = _with_occlusion_pattern(tiny_run, np.ones(n_instants, dtype=bool))
    assert occlusion_time_pct(full) == 100.0


def test_occlusion_pct_random_recount(tiny_run):
    rng = np.random.default_rng(3)
    n_instants = tiny_run.n_steps + 1
    for _ in range(100):
        occ = rng.random(tiny_run.occluded.shape) < 0.3
        hist = dataclasses.replace(tiny_run, occluded=occ)
        expected = 100.0 * occ.any(axis=(1, 2)).sum() / n_instants
        assert occlusion_time_pct(hist) == pytest.approx(expected, abs=1e-12)


def test_per_aux_occlusion_is_a_union_bound(tiny_run):
    rng = np.random.default_rng(4)
    occ = rng.random(tiny_run.occluded.shape) < 0.4
    hist = dataclasses.replace(tiny_run, occluded=occ)
    per_aux = occlusion_time_pct_per_aux(hist)
    total = occlusion_time_pct(hist)
    assert per_aux.shape == (hist.n_aux,)
    for u in range(hist.n_aux):
        expected = 100.0 * occ[:, u].any(axis=1).sum() / occ.shape[0]
        assert per_aux[u] == pytest.approx(expected, abs=1e-12)
        assert per_aux[u] <= total + 1e-12
    assert total <= per_aux.sum() + 1e-12


def test_volume_series_zero_when_never_occluded(tiny_run):
    hist = dataclasses.replace(tiny_run, occluded=np.zeros_like(tiny_run.occluded))
    series = intersection_volume_series(hist, resolution=5.0)
    assert series.shape == (hist.n_steps + 1, hist.n_aux)
    assert np.all(series == 0.0)


def test_volume_series_matches_direct_voxelization(tiny_run):
    hist = tiny_run
    assert hist.occluded.any(), "fixture must contain occluded instants"
    series = intersection_volume_series(hist, resolution=5.0)
    apex = hist.cfg.params.fov_apex_angle
    expected = np.zeros_like(series)
    for k, u, j in zip(*np.nonzero(hist.occluded)):
        cone = ViewCone(hist.positions[k, 1 + u], hist.positions[k, 0], apex)
        ob = hist.cfg.obstacles[j]
        expected[k, u] += fov_obstacle_intersection_volume(
            cone, ob.center, ob.radius, 5.0)
    np.testing.assert_array_equal(series, expected)
    occupied = hist.occluded.any(axis=2)
    # grazing overlaps thinner than a voxel can round to zero volume
    assert (series[occupied] > 0.0).mean() > 0.5
    assert np.all(series[~occupied] == 0.0)


def test_volume_series_resolution_refines(tiny_run):
    coarse = intersection_volume_series(tiny_run, resolution=4.0)
    fine = intersection_volume_series(tiny_run, resolution=8.0)
    mask = (coarse > 1e-4) & (fine > 1e-4)
    assert mask.any()
    rel = np.abs(coarse[mask] - fine[mask]) / fine[mask]
    assert np.median(rel) < 0.25


def test_distance_error_stats_exact(tiny_run):
    hist = tiny_run
    n = hist.n_steps + 1
    positions = np.zeros((n, 1 + hist.n_aux, 3))
    offsets = np.linspace(-0.5, 1.5, n)
    alpha = hist.cfg.params.viewpoint_distance
    positions[:, 1, 0] = alpha + offsets     # aux1 range err = |offsets|
    positions[:, 2, 1] = alpha               # aux2 parked exactly on the shell
    synthetic = dataclasses.replace(hist, positions=positions)
    stats = distance_error_stats(synthetic)
    assert stats[0]["max"] == pytest.approx(np.abs(offsets).max(), abs=1e-12)
    assert stats[0]["mean"] == pytest.approx(np.abs(offsets).mean(), abs=1e-12)
    assert stats[1]["max"] == 0.0 and stats[1]["mean"] == 0.0

    override = distance_error_stats(synthetic, distance=alpha + 1.0)
    assert override[1]["max"] == pytest.approx(1.0, abs=1e-12)
    assert override[1]["mean"] == pytest.approx(1.0, abs=1e-12)


def test_path_length_straight_line(tiny_run):
    hist = tiny_run
    n = hist.n_steps + 1
    positions = np.zeros((n, 1 + hist.n_aux, 3))
    positions[:, 1] = np.linspace([0, 0, 0], [3.0, 4.0, 0.0], n)
    synthetic = dataclasses.replace(hist, positions=positions)
    assert path_length(synthetic, 0) == 0.0
    assert path_length(synthetic, 1) == pytest.approx(5.0, abs=1e-12)
    segs = np.linalg.norm(np.diff(hist.positions[:, 2], axis=0), axis=1)
    assert path_length(hist, 2) == pytest.approx(segs.sum(), abs=1e-12)


def test_scenario1_main_path_length_band(ablation_grid):
    histories, _ = ablation_grid
    hist = histories[(1, True, True, "pic")]
    assert 15.0 <= path_length(hist, 0) <= 20.0


def test_build_report_fields(tiny_run):
    report = build_report(tiny_run, volume_resolution=5.0)
    cfg = tiny_run.cfg
    assert report.scenario_id == cfg.id
    assert report.seed == cfg.seed
    assert report.toggles == {"task1": True, "task2": True, "task3": False,
                              "controller": "pid"}
    assert report.cfg_hash == config_hash(cfg)
    assert report.occlusion_time_pct == pytest.approx(occlusion_time_pct(tiny_run))
    assert len(report.occlusion_time_pct_per_aux) == tiny_run.n_aux
    assert len(report.distance_error_stats) == tiny_run.n_aux
    assert len(report.path_length) == 1 + tiny_run.n_aux
    np.testing.assert_array_equal(
        report.total_volume_series(), report.intersection_volume_series.sum(axis=1))


def test_report_json_round_trip(tiny_run):
    report = build_report(tiny_run, volume_resolution=5.0)
    text = report_to_json(report)
    assert text.endswith("\n")
    payload = json.loads(text)
    assert payload["scenario_id"] == report.scenario_id
    assert payload["cfg_hash"] == report.cfg_hash
    assert payload["occlusion_time_pct"] == report.occlusion_time_pct
    rows = np.asarray(payload["intersection_volume_series"])
    np.testing.assert_array_equal(rows, report.intersection_volume_series)


def test_volume_series_csv_layout(tiny_run):
    series = intersection_volume_series(tiny_run, resolution=5.0)
    text = volume_series_csv(tiny_run, series)
    lines = text[:-1].split("\n")
    assert lines[0] == "step,time,volume_aux1,volume_aux2,volume_total"
    assert len(lines) == 1 + series.shape[0]
    k = 7
    row = lines[1 + k].split(",")
    assert row[0] == str(k)
    assert float(row[1]) == pytest.approx(k * tiny_run.cfg.params.sampling_time)
    np.testing.assert_array_equal([float(x) for x in row[2:4]], series[k])
    assert float(row[4]) == float(series[k].sum())


def test_distance_series_csv_layout(tiny_run):
    text = distance_series_csv(tiny_run)
    lines = text[:-1].split("\n")
    assert lines[0] == "step,time,range_aux1,range_error_aux1,range_aux2,range_error_aux2"
    assert len(lines) == 1 + tiny_run.n_steps + 1
    alpha = tiny_run.cfg.params.viewpoint_distance
    k = 11
    row = [float(x) for x in lines[1 + k].split(",")[2:]]
    for u in range(tiny_run.n_aux):
        expected = np.linalg.norm(
            tiny_run.positions[k, 1 + u] - tiny_run.positions[k, 0])
        assert row[2 * u] == pytest.approx(expected, abs=0)
        assert row[2 * u + 1] == pytest.approx(abs(expected - alpha), abs=0)
