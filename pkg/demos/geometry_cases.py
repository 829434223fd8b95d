"""
Sightline geometry walkthrough
==============================

Slide a spherical obstacle across a fixed escort-to-target sightline and
watch the three classification cases change: CLEAR (the view cone plus a
safety margin misses the sphere), NEAR (inside the margin band), and BLOCKED
(the cone itself is intersected).  The clearance error e3 is the signed
distance between the cone surface and the obstacle surface minus the margin;
the avoidance task drives it back to zero whenever it goes negative.
"""

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

from sightline.geometry import (
    LosCase,
    ViewCone,
    cone_sphere_margin,
    fov_obstacle_intersection_volume,
    los_geometry,
)

APEX_ANGLE = np.pi / 3.0
MARGIN = 0.5

aux = np.array([0.0, 0.0, 0.0])     # escort with the camera
main = np.array([10.0, 0.0, 0.0])   # vehicle being filmed
radius = 1.5

offsets = np.linspace(0.5, 8.0, 400)
e3 = np.empty_like(offsets)
cases = np.empty(offsets.shape, dtype=int)
exact_margin = np.empty_like(offsets)
volume = np.empty_like(offsets)

cone = ViewCone(aux, main, APEX_ANGLE)
for i, off in enumerate(offsets):
    center = np.array([5.0, off, 0.0])
    geom = los_geometry(aux, main, center, radius, APEX_ANGLE, MARGIN)
    e3[i] = geom.e3
    cases[i] = int(geom.case)
    exact_margin[i] = cone_sphere_margin(cone, center, radius)
    volume[i] = fov_obstacle_intersection_volume(cone, center, radius, resolution=10.0)

for case in (LosCase.BLOCKED, LosCase.NEAR, LosCase.CLEAR):
    band = offsets[cases == int(case)]
    print(f"{case.name:8s} lateral offsets {band.min():5.2f} .. {band.max():5.2f} m")

crossing = offsets[np.searchsorted(e3 > 0, True)]
print(f"e3 crosses zero at offset {crossing:.3f} m "
      f"(cone half-width at mid-span {5 * np.tan(APEX_ANGLE / 2):.3f} m "
      f"+ radius {radius} + margin {MARGIN})")

fig, (top, bottom) = plt.subplots(2, 1, sharex=True, figsize=(7, 6))
top.plot(offsets, e3, label="clearance error e3")
top.plot(offsets, exact_margin, "--", label="exact cone/sphere separation")
top.axhline(0.0, color="k", lw=0.5)
for case, color in ((LosCase.BLOCKED, "0.75"), (LosCase.NEAR, "0.88")):
    band = cases == int(case)
    top.fill_between(offsets, *top.get_ylim(), where=band, color=color,
                     label=case.name.lower())
top.set_ylabel("m")
top.legend(loc="lower right", fontsize=8)

bottom.plot(offsets, volume)
bottom.set_xlabel("lateral obstacle offset (m)")
bottom.set_ylabel("cone/sphere overlap (m$^3$)")

out = Path(__file__).with_name("out")
out.mkdir(exist_ok=True)
fig.tight_layout()
fig.savefig(out / "geometry_cases.png", dpi=130)
print(f"wrote {out / 'geometry_cases.png'}")
