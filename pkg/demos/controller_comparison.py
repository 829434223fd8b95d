"""
Sampling controller vs PID baseline
===================================

The goal-seeking layer can run either a path-integral sampler (rolls out
perturbed control sequences, softmax-averages them by cost) or a plain PD
law.  Both sit at the same spot in the task hierarchy; the sampler looks
ahead, so it cuts corners earlier and flies measurably less distance per
escort.  This script runs scenario 1 under both and overlays the paths.
"""

import dataclasses
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt

from sightline.engine import run
from sightline.metrics import path_length
from sightline.world import AblationToggles, builtin_scenario

base = builtin_scenario(1)
histories = {}
for controller in ("pic", "pid"):
    cfg = dataclasses.replace(base, ablation=AblationToggles(controller=controller))
    histories[controller] = run(cfg)

for controller, hist in histories.items():
    lengths = [path_length(hist, 1 + u) for u in range(hist.n_aux)]
    print(f"{controller}: escort paths "
          + " + ".join(f"{v:.2f}" for v in lengths)
          + f" = {sum(lengths):.2f} m")
pic_sum = sum(path_length(histories["pic"], 1 + u) for u in range(2))
pid_sum = sum(path_length(histories["pid"], 1 + u) for u in range(2))
print(f"reduction {100 * (pid_sum - pic_sum) / pid_sum:.1f}%")

fig, axes = plt.subplots(1, 2, figsize=(11, 5), sharex=True, sharey=True)
for ax, (controller, hist) in zip(axes, histories.items()):
    ax.plot(*hist.positions[:, 0, :2].T, "k-", lw=2, label="main")
    for u in range(hist.n_aux):
        ax.plot(*hist.positions[:, 1 + u, :2].T, lw=1, label=f"escort {u + 1}")
    for ob in base.obstacles:
        ax.add_patch(plt.Circle(ob.center[:2], ob.radius, color="0.8"))
    ax.set_aspect("equal")
    ax.set_title(controller)
    ax.set_xlabel("x (m)")
axes[0].set_ylabel("y (m)")
axes[0].legend(fontsize=8)

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)
fig.tight_layout()
fig.savefig(out / "controller_comparison.png", dpi=130)
print(f"wrote {out / 'controller_comparison.png'}")
