"""
One full scenario, end to end
=============================

Scenario 2 places hovering obstacles at flight altitude right next to the
main vehicle's survey leg, so the escorts' sightlines get blocked unless the
clearance task pushes them around the spheres.  This script runs the closed
loop once, prints the headline numbers, and draws the top-down picture plus
the per-escort occlusion timeline.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sightline.engine import run
from sightline.metrics import build_report
from sightline.world import builtin_scenario

cfg = builtin_scenario(2)
hist = run(cfg)
report = build_report(hist, volume_resolution=8.0)

print(f"scenario {cfg.id}, seed {cfg.seed}, {hist.n_steps} steps, "
      f"{hist.n_aux} escorts, {hist.n_obstacles} obstacles")
print(f"occlusion: {report.occlusion_time_pct:.2f}% of instants "
      f"(per escort {['%.2f' % v for v in report.occlusion_time_pct_per_aux]})")
for u, stats in enumerate(report.distance_error_stats):
    print(f"escort {u + 1}: range error mean {stats['mean']:.3f} m, "
          f"max {stats['max']:.3f} m, path {report.path_length[u + 1]:.2f} m")

fig, (xy, timeline) = plt.subplots(
    1, 2, figsize=(11, 5), gridspec_kw={"width_ratios": [3, 2]})

xy.plot(*hist.positions[:, 0, :2].T, "k-", lw=2, label="main")
for u in range(hist.n_aux):
    xy.plot(*hist.positions[:, 1 + u, :2].T, lw=1, label=f"escort {u + 1}")
for ob in cfg.obstacles:
    xy.add_patch(plt.Circle(ob.center[:2], ob.radius, color="0.8"))
xy.set_aspect("equal")
xy.set_xlabel("x (m)")
xy.set_ylabel("y (m)")
xy.legend(fontsize=8)

t = np.arange(hist.n_steps + 1) * cfg.params.sampling_time
occ = hist.occluded.any(axis=2)
for u in range(hist.n_aux):
    timeline.step(t, occ[:, u].astype(int) + 1.5 * u, where="post")
timeline.set_yticks([0, 1, 1.5, 2.5], ["clear", "blocked", "clear", "blocked"])
timeline.set_xlabel("time (s)")
timeline.set_title("sightline state per escort")

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)
fig.tight_layout()
fig.savefig(out / "single_scenario_run.png", dpi=130)
print(f"wrote {out / 'single_scenario_run.png'}")
