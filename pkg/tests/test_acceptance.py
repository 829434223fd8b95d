"""Headline evaluation harness.

Each test checks one quantitative claim end to end and prints a single
PASS/FAIL verdict line (bypassing capture) before asserting, so a full run
leaves a readable scorecard.  The directional claims (1-3) consume the shared
ablation grid; the property claims (4-9) build their own fixtures.
"""

import dataclasses
import math
import time

import numpy as np

from sightline.engine import history_to_csv, integrate, run
from sightline.geometry import (
    LosCase,
    ViewCone,
    fov_obstacle_intersection_volume,
    los_geometry,
    occludes,
)
from sightline.metrics import distance_error_stats, occlusion_time_pct, path_length
from sightline.pic import pic_step_detailed, sample_weights
from sightline.tasks import LosControlState, task3_los
from sightline.thc import TaskOutput, compose, null_space_projector
from sightline.world import (
    BUILTIN_SCENARIO_IDS,
    ControllerGains,
    Obstacle,
    PicParams,
    SimParams,
    UavState,
    builtin_scenario,
    clamp_norm,
    vec3,
)


def _verdict(capsys, ok, label, detail):
    with capsys.disabled():
        print(f"\n{'PASS' if ok else 'FAIL'} [{label}] {detail}")
    assert ok, f"{label}: {detail}"


# ---------------------------------------------------------------------------
# 1-3: ablation grid directions


def test_1_sightline_task_reduces_occlusion(ablation_grid, capsys):
    histories, elapsed = ablation_grid
    parts = []
    ok = elapsed < 300.0
    for sid in BUILTIN_SCENARIO_IDS:
        on = occlusion_time_pct(histories[(sid, True, True, "pic")])
        off = occlusion_time_pct(histories[(sid, True, False, "pic")])
        ok &= on <= off
        if sid == 2:
            ok &= on <= 1.0 and off >= 20.0
        parts.append(f"s{sid} {on:.2f}%<={off:.2f}%")
    detail = "; ".join(parts) + f"; grid {elapsed:.0f}s (<300s)"
    _verdict(capsys, ok, "1 occlusion ablation", detail)


def test_2_distance_task_reduces_range_error(ablation_grid, capsys):
    histories, _ = ablation_grid
    worst = -np.inf
    ok = True
    for sid in BUILTIN_SCENARIO_IDS:
        on = distance_error_stats(histories[(sid, True, True, "pic")])
        off = distance_error_stats(histories[(sid, False, True, "pic")])
        for u, (a, b) in enumerate(zip(on, off)):
            ok &= a["mean"] <= b["mean"] + 1e-6
            worst = max(worst, a["mean"] - b["mean"])
    _verdict(capsys, ok, "2 distance ablation",
             f"mean range error on<=off for all aux, worst margin {worst:.3e} (<=1e-6)")


def test_3_sampling_controller_flies_shorter_paths(ablation_grid, capsys):
    histories, _ = ablation_grid
    wins = 0
    best = 0.0
    for sid in BUILTIN_SCENARIO_IDS:
        pic = histories[(sid, True, True, "pic")]
        pid = histories[(sid, True, True, "pid")]
        pic_lengths = [path_length(pic, 1 + u) for u in range(pic.n_aux)]
        pid_lengths = [path_length(pid, 1 + u) for u in range(pid.n_aux)]
        if sum(pic_lengths) < sum(pid_lengths):
            wins += 1
        for a, b in zip(pic_lengths, pid_lengths):
            if b > 0:
                best = max(best, (b - a) / b)
    ok = wins >= 3 and best >= 0.10
    _verdict(capsys, ok, "3 controller path length",
             f"shorter-escort-path wins {wins}/5 (>=3), "
             f"best single-vehicle reduction {100 * best:.1f}% (>=10%)")


# ---------------------------------------------------------------------------
# 4: closed-loop sightline recovery


def test_4_sightline_clearance_recovers(capsys):
    params = SimParams()
    rng = np.random.default_rng(42)
    main = UavState(vec3(11, 11, 5), vec3(0, 0, 0))
    tan_half = math.tan(params.fov_apex_angle / 2.0)
    trials = 200
    ok_e3 = ok_clear = 0
    for _ in range(trials):
        # random vantage on the formation shell, obstacle pressed into the
        # margin band so the run starts moderately violated
        while True:
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            aux = UavState(main.position + 5.0 * d, vec3(0, 0, 0))
            t = rng.uniform(1.0, 4.0)
            p_axis = aux.position + t * (main.position - aux.position) / 5.0
            perp = rng.normal(size=3)
            perp -= np.dot(perp, d) * d
            n = np.linalg.norm(perp)
            if n < 1e-6:
                continue
            perp /= n
            radius = rng.uniform(0.4, 1.2)
            e3_target = -params.los_margin * rng.uniform(0.05, 0.45)
            rho = radius + t * tan_half + params.los_margin + e3_target
            ob = Obstacle(p_axis + rho * perp, radius)
            geom = los_geometry(aux.position, main.position, ob.center, ob.radius,
                                params.fov_apex_angle, params.los_margin)
            if (geom.case is LosCase.NEAR
                    and -0.45 * params.los_margin <= geom.e3 <= -0.05 * params.los_margin):
                break
        memory = LosControlState()
        cur = aux
        reached = False
        min_clear = np.inf
        for _ in range(200):
            out, memory = task3_los(cur, main, [ob], params, memory)
            geom = los_geometry(cur.position, main.position, ob.center, ob.radius,
                                params.fov_apex_angle, params.los_margin)
            min_clear = min(min_clear, float(np.linalg.norm(geom.p3 - geom.p2)))
            if geom.e3 >= -1e-3:
                reached = True
            accel = out.accel_cmd if out.active else np.zeros(3)
            cur = integrate(cur, accel, params.sampling_time, params.speed_limit)
        ok_e3 += reached
        ok_clear += min_clear >= 0.5 * params.los_margin
    ok = ok_e3 >= 0.95 * trials and ok_clear >= 0.95 * trials
    _verdict(capsys, ok, "4 sightline recovery",
             f"error recovers to >=-1e-3 in {ok_e3}/{trials}, "
             f"clearance stays >=0.5*margin in {ok_clear}/{trials} (both >=190)")


# ---------------------------------------------------------------------------
# 5: exact occlusion test vs Monte-Carlo membership oracle


def _mc_overlap(cloud, apex, axis, length, slope, center, radius):
    pts = center + radius * cloud
    rel = pts - apex
    ax = rel @ axis
    rad2 = np.einsum("ij,ij->i", rel, rel) - ax * ax
    return bool(((ax >= 0.0) & (ax <= length) & (rad2 <= (ax * slope) ** 2)).any())


def _socp_margin(apex, axis, length, apex_angle, center, radius):
    """Signed cone/sphere separation from a conic program, the tie arbiter."""
    import cvxpy as cp

    x = cp.Variable(3)
    ax_comp = (x - apex) @ axis
    prob = cp.Problem(
        cp.Minimize(cp.norm(x - center)),
        [cp.norm(x - apex - ax_comp * axis) <= math.tan(apex_angle / 2.0) * ax_comp,
         ax_comp >= 0.0, ax_comp <= length],
    )
    prob.solve(solver=cp.CLARABEL)
    return float(prob.value) - radius


def test_5_occlusion_test_matches_membership_oracle(capsys):
    t0 = time.perf_counter()
    rng = np.random.default_rng(2026)
    n_pts = 100_000
    raw = rng.normal(size=(n_pts, 3))
    raw /= np.linalg.norm(raw, axis=1, keepdims=True)
    cloud = raw * rng.uniform(0.0, 1.0, size=(n_pts, 1)) ** (1.0 / 3.0)

    n_cfg = 10_000
    margin = SimParams().los_margin
    hard_failures = 0
    escalations = 0
    cases_seen = set()
    for i in range(n_cfg):
        corridor = i % 2 == 0
        apex = rng.uniform(-5, 5, 3)
        axis = rng.normal(size=3)
        axis /= np.linalg.norm(axis)
        if corridor:
            # obstacle between the two vehicles with a moderate apex angle,
            # the regime the margin classifier is built for; past roughly
            # 1.45 rad a sphere can clear the local cross-section yet touch
            # the slant farther along, so wide cones are exercised only by
            # the exact-test half below
            length = rng.uniform(2.0, 12.0)
            theta = rng.uniform(0.4, 1.3)
            s = rng.uniform(0.05, 0.95) * length
            perp = rng.normal(size=3)
            perp -= perp @ axis * axis
            n = np.linalg.norm(perp)
            if n < 1e-9:
                perp = np.zeros(3)
            else:
                perp /= n
            center = apex + s * axis + rng.uniform(0.05, 0.7 * length) * perp
            radius = rng.uniform(0.05, 1.5)
        else:
            length = rng.uniform(0.5, 10.0)
            theta = rng.uniform(0.2, 2.5)
            kind = rng.integers(0, 3)
            if kind == 0:    # anywhere near the cone
                center = (apex + rng.uniform(-1.5, 1.5) * length * axis
                          + rng.normal(size=3) * 0.8 * length)
                radius = rng.uniform(0.05, 3.0)
            elif kind == 1:  # axial: behind the apex or beyond the cap
                s = rng.choice([-1.0, 1.0]) * rng.uniform(0.0, 0.6) * length
                s += length if rng.random() < 0.5 else 0.0
                center = apex + s * axis + rng.normal(size=3) * 0.2
                radius = rng.uniform(0.05, 2.0)
            else:            # sphere large enough to swallow the cone
                center = apex + rng.uniform(0, 1) * length * axis + rng.normal(size=3)
                radius = rng.uniform(3.0, 12.0)
        slope = math.tan(theta / 2.0)
        cone = ViewCone(apex, apex + length * axis, theta)
        exact = occludes(cone, center, radius)
        mc = _mc_overlap(cloud, apex, axis, length, slope, center, radius)
        socp = None
        if mc != exact:
            # the point cloud can miss slivers; a conic program settles it
            escalations += 1
            socp = _socp_margin(apex, axis, length, theta, center, radius)
            if (socp <= 0.0) != exact and abs(socp) > 1e-6:
                hard_failures += 1
        if corridor:
            geom = los_geometry(apex, apex + length * axis, center, radius,
                                theta, margin)
            cases_seen.add(geom.case)
            if geom.case is LosCase.CLEAR and (mc or exact):
                if socp is None:
                    socp = _socp_margin(apex, axis, length, theta, center, radius)
                if socp <= -1e-6:
                    hard_failures += 1
            if geom.case is LosCase.BLOCKED and not exact:
                hard_failures += 1
    elapsed = time.perf_counter() - t0
    ok = (hard_failures == 0 and elapsed < 120.0
          and cases_seen == {LosCase.CLEAR, LosCase.NEAR, LosCase.BLOCKED})
    _verdict(capsys, ok, "5 occlusion oracle",
             f"{n_cfg} configs x {n_pts} points: {hard_failures} disagreements "
             f"outside the 1e-6 band ({escalations} arbitrated), {elapsed:.0f}s (<120s)")


# ---------------------------------------------------------------------------
# 6: overlap volume


def test_6_overlap_volume_reference_values(capsys):
    cone = ViewCone(vec3(0, 0, 0), vec3(10, 0, 0), math.pi / 3.0)
    contained = fov_obstacle_intersection_volume(cone, vec3(5, 0, 0), 1.0)
    rel_err = abs(contained - 4.0 * math.pi / 3.0) / (4.0 * math.pi / 3.0)
    disjoint = fov_obstacle_intersection_volume(cone, vec3(20.0, 10.0, 0.0), 1.0)
    ok = rel_err <= 0.02 and disjoint == 0.0
    _verdict(capsys, ok, "6 overlap volume",
             f"contained unit sphere {contained:.4f} m^3 "
             f"({100 * rel_err:.2f}% off 4pi/3, <=2%), disjoint exactly {disjoint}")


# ---------------------------------------------------------------------------
# 7: null-space algebra


def _conditioned_rows(rng, rows):
    while True:
        j = rng.normal(size=(rows, 3))
        sv = np.linalg.svd(j, compute_uv=False)
        if sv.min() > 0.3 and sv.max() / sv.min() < 20.0:
            return j


def test_7_null_space_priority_protection(capsys):
    rng = np.random.default_rng(11)
    worst_jn = 0.0
    worst_leak = 0.0
    for _ in range(1000):
        j1 = _conditioned_rows(rng, int(rng.integers(1, 3)))
        tasks = [TaskOutput(1, True, np.zeros(j1.shape[0]), j1, rng.normal(size=3))]
        stacked = j1
        for task_id in (2, 3):
            if stacked.shape[0] >= 3 or rng.random() >= 0.7:
                continue
            row = _conditioned_rows(rng, 1)
            candidate = np.vstack([stacked, row])
            if np.linalg.svd(candidate, compute_uv=False).min() < 0.3:
                continue
            stacked = candidate
            tasks.append(TaskOutput(task_id, True, np.zeros(1), row, rng.normal(size=3)))
        tasks.append(TaskOutput(4, True, np.zeros(3), np.eye(3), rng.normal(size=3)))

        projector = null_space_projector(stacked)
        x = rng.normal(size=3)
        worst_jn = max(worst_jn, float(np.linalg.norm(stacked @ (projector @ x))))

        full = compose(tasks)
        u1 = tasks[0].accel_cmd
        worst_leak = max(worst_leak, float(np.linalg.norm(j1 @ (full - u1))))
    ok = worst_jn <= 1e-9 and worst_leak <= 1e-8
    _verdict(capsys, ok, "7 null-space algebra",
             f"1000 stacks: max |J N x| = {worst_jn:.2e} (<=1e-9), "
             f"max priority leak |J1 (u - u1)| = {worst_leak:.2e} (<=1e-8)")


# ---------------------------------------------------------------------------
# 8: sampling-controller estimator properties


def test_8_estimator_weight_identities(capsys):
    rng = np.random.default_rng(5)
    worst_sum = 0.0
    for _ in range(500):
        costs = rng.uniform(0, 1e4, size=int(rng.integers(2, 512)))
        w = sample_weights(costs, float(rng.uniform(0.01, 10.0)))
        worst_sum = max(worst_sum, abs(float(w.sum()) - 1.0))
    sums_ok = worst_sum <= 1e-12

    uniform = sample_weights(np.full(64, 3.7), 0.5)
    uniform_ok = bool(np.all(uniform == 1.0 / 64))

    params = SimParams(gains=ControllerGains(pic=PicParams(noise_sigma=0.0)))
    state = UavState(vec3(1, 2, 3), vec3(0.1, 0, -0.2))
    nominal = rng.normal(size=(params.gains.pic.horizon, 3))
    accel, new_nominal, w0, costs0 = pic_step_detailed(
        state, nominal, vec3(4, 4, 4), [], params, rng_seed=123)
    passthrough_ok = (np.array_equal(accel, clamp_norm(nominal[0], params.accel_limit))
                      and np.array_equal(new_nominal[:-1], nominal[1:])
                      and np.array_equal(new_nominal[-1], np.zeros(3)))

    params = SimParams()
    nominal = rng.normal(size=(params.gains.pic.horizon, 3))
    first = pic_step_detailed(state, nominal, vec3(4, 4, 4),
                              [Obstacle(vec3(2, 2, 2), 0.5)], params, rng_seed=77)
    second = pic_step_detailed(state, nominal, vec3(4, 4, 4),
                               [Obstacle(vec3(2, 2, 2), 0.5)], params, rng_seed=77)
    deterministic_ok = all(np.array_equal(a, b) for a, b in zip(first, second))

    ok = sums_ok and uniform_ok and passthrough_ok and deterministic_ok
    _verdict(capsys, ok, "8 estimator properties",
             f"max |sum(w)-1| = {worst_sum:.2e} (<=1e-12), equal costs uniform: "
             f"{uniform_ok}, sigma=0 passthrough exact: {passthrough_ok}, "
             f"seeded rerun bitwise equal: {deterministic_ok}")


# ---------------------------------------------------------------------------
# 9: integrator closed form and whole-run determinism


def test_9_integrator_and_run_determinism(ablation_grid, capsys):
    rng = np.random.default_rng(99)
    n = 1_000_000
    pos = rng.uniform(-100, 100, (n, 3))
    vel = rng.uniform(-5, 5, (n, 3))
    acc = rng.uniform(-5, 5, (n, 3))
    dt = rng.uniform(0.001, 0.5, n)
    lim = np.where(rng.random(n) < 0.3, np.inf, rng.uniform(0.1, 10.0, n))

    out_p = np.empty((n, 3))
    out_v = np.empty((n, 3))
    for i in range(n):
        nxt = integrate(UavState(pos[i], vel[i]), acc[i], dt[i], lim[i])
        out_p[i] = nxt.position
        out_v[i] = nxt.velocity

    v_raw = vel + acc * dt[:, None]
    speed = np.linalg.norm(v_raw, axis=1)
    scale = np.where(speed > lim,
                     np.divide(lim, speed, out=np.ones_like(speed), where=speed > 0),
                     1.0)
    v_ref = v_raw * scale[:, None]
    p_ref = pos + v_ref * dt[:, None]
    err = max(float(np.abs(out_v - v_ref).max()), float(np.abs(out_p - p_ref).max()))
    closed_form_ok = err <= 1e-12

    histories, _ = ablation_grid
    stable = True
    for sid in BUILTIN_SCENARIO_IDS:
        again = run(builtin_scenario(sid))
        stable &= history_to_csv(histories[(sid, True, True, "pic")]) == history_to_csv(again)

    ok = closed_form_ok and stable
    _verdict(capsys, ok, "9 dynamics determinism",
             f"10^6 random steps max deviation {err:.2e} (<=1e-12), "
             f"rerun CSV bytes identical on all 5 scenarios: {stable}")
