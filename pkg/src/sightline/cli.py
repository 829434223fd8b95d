"""Command-line front end.

``sightline run`` simulates one scenario and writes history.csv, report.json,
volume_series.csv, and distance_series.csv.  ``sightline ablate`` sweeps the
toggle grid {task2 on/off} x {task3 on/off} x {pic,pid} over scenarios and
seeds, writing summary.csv plus a pass/fail file with the directional checks.

Exit codes: 0 success, 2 unusable configuration/arguments, 3 the sampling
controller diverged.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from .engine import history_to_csv, run
from .metrics import (
    build_report,
    distance_series_csv,
    report_to_json,
    volume_series_csv,
)
from .pic import DivergentRollouts
from .world import (
    BUILTIN_SCENARIO_IDS,
    AblationToggles,
    ScenarioConfig,
    builtin_scenario,
    parse_config,
    validate_config,
)

EXIT_OK = 0
EXIT_BAD_CONFIG = 2
EXIT_DIVERGED = 3


def _load_config(args) -> ScenarioConfig:
    if (args.scenario is None) == (args.config is None):
        raise ValueError("exactly one of --scenario or --config is required")
    if args.scenario is not None:
        cfg = builtin_scenario(args.scenario)
    else:
        cfg = parse_config(Path(args.config))
    if args.seed is not None:
        cfg = dataclasses.replace(cfg, seed=args.seed)
    toggles = cfg.ablation
    if args.disable_task2 or args.disable_task3 or args.controller:
        toggles = AblationToggles(
            task1=toggles.task1,
            task2=toggles.task2 and not args.disable_task2,
            task3=toggles.task3 and not args.disable_task3,
            controller=args.controller or toggles.controller,
        )
        cfg = dataclasses.replace(cfg, ablation=toggles)
    return cfg


def _check_or_die(cfg: ScenarioConfig) -> None:
    violations = validate_config(cfg)
    if violations:
        for v in violations:
            print(f"config error: {v}", file=sys.stderr)
        raise SystemExit(EXIT_BAD_CONFIG)


def cmd_run(args) -> int:
    try:
        cfg = _load_config(args)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG
    _check_or_die(cfg)

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        hist = run(cfg)
    except DivergentRollouts as exc:
        print(f"controller diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED

    report = build_report(hist, volume_resolution=args.volume_resolution)
    (out / "history.csv").write_text(history_to_csv(hist))
    (out / "report.json").write_text(report_to_json(report))
    (out / "volume_series.csv").write_text(
        volume_series_csv(hist, report.intersection_volume_series)
    )
    (out / "distance_series.csv").write_text(distance_series_csv(hist))

    print(f"scenario {cfg.id} seed {cfg.seed}: "
          f"occlusion {report.occlusion_time_pct:.2f}% of steps, "
          f"aux path {sum(report.path_length[1:]):.2f} m -> {out}")
    return EXIT_OK


def _grid_rows(scenario_ids, seeds, volume_resolution):
    rows = []
    for sid in scenario_ids:
        base = builtin_scenario(sid)
        for seed in seeds:
            for task3 in (True, False):
                for task2 in (True, False):
                    for controller in ("pic", "pid"):
                        cfg = dataclasses.replace(
                            base,
                            seed=seed,
                            ablation=AblationToggles(True, task2, task3, controller),
                        )
                        hist = run(cfg)
                        report = build_report(hist, volume_resolution=volume_resolution)
                        rows.append((sid, seed, task2, task3, controller, report))
    return rows


def _summary_csv(rows) -> str:
    n_aux = len(rows[0][5].occlusion_time_pct_per_aux)
    cols = ["scenario", "seed", "task1", "task2", "task3", "controller", "occlusion_pct"]
    cols += [f"occlusion_pct_aux{u + 1}" for u in range(n_aux)]
    for u in range(n_aux):
        cols += [f"dist_err_mean_aux{u + 1}", f"dist_err_max_aux{u + 1}"]
    cols += ["path_main"] + [f"path_aux{u + 1}" for u in range(n_aux)] + ["path_aux_sum"]
    lines = [",".join(cols)]
    for sid, seed, task2, task3, controller, rep in rows:
        row = [str(sid), str(seed), "1", str(int(task2)), str(int(task3)), controller,
               repr(rep.occlusion_time_pct)]
        row += [repr(v) for v in rep.occlusion_time_pct_per_aux]
        for st in rep.distance_error_stats:
            row += [repr(st["mean"]), repr(st["max"])]
        row += [repr(v) for v in rep.path_length]
        row.append(repr(sum(rep.path_length[1:])))
        lines.append(",".join(row))
    return "\n".join(lines) + "\n"


def _directional_checks(rows) -> list[str]:
    """PASS/FAIL lines mirroring the headline claims, computed from the grid."""
    by_key = {(sid, seed, t2, t3, c): rep for sid, seed, t2, t3, c, rep in rows}
    scenario_seeds = sorted({(sid, seed) for sid, seed, *_ in rows})
    out = []

    pic_wins = 0
    best_reduction = 0.0
    for sid, seed in scenario_seeds:
        full = by_key[(sid, seed, True, True, "pic")]
        no3 = by_key[(sid, seed, True, False, "pic")]
        ok = full.occlusion_time_pct <= no3.occlusion_time_pct
        out.append(f"{'PASS' if ok else 'FAIL'} occlusion_direction scenario={sid} seed={seed} "
                   f"active={full.occlusion_time_pct:.2f}% inactive={no3.occlusion_time_pct:.2f}%")
        if str(sid) == "2":
            ok = full.occlusion_time_pct <= 1.0 and no3.occlusion_time_pct >= 20.0
            out.append(f"{'PASS' if ok else 'FAIL'} occlusion_bounds scenario=2 seed={seed} "
                       f"active={full.occlusion_time_pct:.2f}%<=1.0 "
                       f"inactive={no3.occlusion_time_pct:.2f}%>=20.0")

        no2 = by_key[(sid, seed, False, True, "pic")]
        for u, (on, off) in enumerate(zip(full.distance_error_stats,
                                          no2.distance_error_stats)):
            ok = on["mean"] <= off["mean"] + 1e-6
            out.append(f"{'PASS' if ok else 'FAIL'} distance_direction scenario={sid} "
                       f"seed={seed} aux={u + 1} on={on['mean']:.4f} off={off['mean']:.4f}")

        pid = by_key[(sid, seed, True, True, "pid")]
        pic_sum = sum(full.path_length[1:])
        pid_sum = sum(pid.path_length[1:])
        if pic_sum < pid_sum:
            pic_wins += 1
        for a, b in zip(full.path_length[1:], pid.path_length[1:]):
            if b > 0:
                best_reduction = max(best_reduction, (b - a) / b)
        out.append(f"INFO path_length scenario={sid} seed={seed} "
                   f"pic={pic_sum:.2f}m pid={pid_sum:.2f}m")

    n = len(scenario_seeds)
    need = min(3, n) if n else 0
    ok = pic_wins >= need and (n == 0 or best_reduction >= 0.10)
    out.append(f"{'PASS' if ok else 'FAIL'} path_direction pic_wins={pic_wins}/{n} "
               f"best_uav_reduction={100 * best_reduction:.1f}%")
    return out


def cmd_ablate(args) -> int:
    try:
        scenario_ids = [int(s) for s in args.scenarios.split(",") if s]
        seeds = [int(s) for s in args.seeds.split(",") if s]
        for sid in scenario_ids:
            if sid not in BUILTIN_SCENARIO_IDS:
                raise ValueError(f"unknown scenario {sid}")
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_BAD_CONFIG

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    try:
        rows = _grid_rows(scenario_ids, seeds, args.volume_resolution)
    except DivergentRollouts as exc:
        print(f"controller diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED

    (out / "summary.csv").write_text(_summary_csv(rows))
    checks = _directional_checks(rows)
    (out / "checks.txt").write_text("\n".join(checks) + "\n")
    for line in checks:
        print(line)
    print(f"{len(rows)} runs -> {out}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sightline",
                                     description="multi-UAV viewpoint escort simulator")
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="simulate one scenario")
    p_run.add_argument("--scenario", type=int, choices=BUILTIN_SCENARIO_IDS,
                       help="builtin scenario id")
    p_run.add_argument("--config", type=str, help="path to a scenario JSON file")
    p_run.add_argument("--seed", type=int, default=None, help="override the config seed")
    p_run.add_argument("--disable-task2", action="store_true",
                       help="turn off formation-distance keeping")
    p_run.add_argument("--disable-task3", action="store_true",
                       help="turn off sightline-clearance avoidance")
    p_run.add_argument("--controller", choices=("pic", "pid"), default=None,
                       help="goal controller override")
    p_run.add_argument("--out", type=str, default="sightline-out",
                       help="output directory")
    p_run.add_argument("--volume-resolution", type=float, default=20.0,
                       help="voxels per meter for overlap volumes")
    p_run.set_defaults(func=cmd_run)

    p_ab = sub.add_parser("ablate", help="sweep the toggle grid over scenarios")
    p_ab.add_argument("--scenarios", type=str, default="1,2,3,4,5",
                      help="comma-separated builtin scenario ids")
    p_ab.add_argument("--seeds", type=str, default="7", help="comma-separated seeds")
    p_ab.add_argument("--out", type=str, default="sightline-ablation",
                      help="output directory")
    p_ab.add_argument("--volume-resolution", type=float, default=20.0,
                      help="voxels per meter for overlap volumes")
    p_ab.set_defaults(func=cmd_ablate)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
