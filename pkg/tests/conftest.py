"""Shared fixtures.

The ablation grid (5 builtin scenarios x 8 toggle combinations) is expensive,
so it runs once per session and every test that needs full histories reads
from it.  Keys are (scenario_id, task2, task3, controller).
"""

import dataclasses
import time

import pytest

from sightline.engine import run
from sightline.world import AblationToggles, BUILTIN_SCENARIO_IDS, builtin_scenario

GRID_KEYS = [
    (sid, t2, t3, ctrl)
    for sid in BUILTIN_SCENARIO_IDS
    for t2 in (True, False)
    for t3 in (True, False)
    for ctrl in ("pic", "pid")
]


@pytest.fixture(scope="session")
def ablation_grid():
    """Run the full grid once; returns ({key: SimHistory}, elapsed_seconds)."""
    histories = {}
    t0 = time.perf_counter()
    for sid, t2, t3, ctrl in GRID_KEYS:
        cfg = builtin_scenario(sid)
        cfg = dataclasses.replace(
            cfg, ablation=AblationToggles(task2=t2, task3=t3, controller=ctrl)
        )
        histories[(sid, t2, t3, ctrl)] = run(cfg)
    return histories, time.perf_counter() - t0
