"""
Toggle ablation on one scenario
===============================

Rerun scenario 2 under every combination of {distance task on/off} x
{sightline task on/off} x {sampling controller, PID} and tabulate what each
ingredient buys: the sightline task is what removes occlusion, the distance
task is what holds the camera range, and the controller choice mostly moves
path length.  The same sweep over all five scenarios is available from the
command line as ``sightline ablate``.
"""

import dataclasses
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sightline.engine import run
from sightline.metrics import build_report
from sightline.world import AblationToggles, builtin_scenario

base = builtin_scenario(2)
rows = []
for task2 in (True, False):
    for task3 in (True, False):
        for controller in ("pic", "pid"):
            toggles = AblationToggles(task2=task2, task3=task3, controller=controller)
            hist = run(dataclasses.replace(base, ablation=toggles))
            rows.append((toggles, build_report(hist, volume_resolution=4.0)))

print(f"{'task2':>5} {'task3':>5} {'ctrl':>4} {'occl%':>7} "
      f"{'range err (m)':>13} {'escort path (m)':>15}")
for toggles, rep in rows:
    mean_err = np.mean([s["mean"] for s in rep.distance_error_stats])
    print(f"{str(toggles.task2):>5} {str(toggles.task3):>5} {toggles.controller:>4} "
          f"{rep.occlusion_time_pct:7.2f} {mean_err:13.3f} "
          f"{sum(rep.path_length[1:]):15.2f}")

labels = [f"{'d' if t.task2 else '-'}{'s' if t.task3 else '-'}\n{t.controller}"
          for t, _ in rows]
occl = [rep.occlusion_time_pct for _, rep in rows]
fig, ax = plt.subplots(figsize=(8, 4))
ax.bar(range(len(rows)), occl, color=["C0" if t.task3 else "C3" for t, _ in rows])
ax.set_xticks(range(len(rows)), labels, fontsize=8)
ax.set_ylabel("occluded instants (%)")
ax.set_title("scenario 2: d = distance task, s = sightline task")

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)
fig.tight_layout()
fig.savefig(out / "ablation_grid.png", dpi=130)
print(f"wrote {out / 'ablation_grid.png'}")
