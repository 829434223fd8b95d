"""Best-viewpoint assignment for the auxiliary UAVs.

The vantage set depends on what the main UAV is doing: while it surveys for
reachable targets the escorts take the front/top and top views; while it
works on a target they take the right/top and top views.  Offsets are unit
vectors in the main UAV's heading frame (forward, right, up with right =
forward x up), scaled by the formation distance.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .world import Bounds, MainActivity, UavState

HEADING_SPEED_MIN = 0.1   # m/s; below this the last heading persists
BOUNDS_MARGIN = 1.0       # m; viewpoint goals keep this far inside the bounds

_SQRT2 = float(np.sqrt(2.0))

_OFFSETS = {
    MainActivity.REACHABILITY: (
        np.array([1.0, 0.0, 1.0]) / _SQRT2,   # front/top
        np.array([0.0, 0.0, 1.0]),            # top
    ),
    MainActivity.MANIPULABILITY: (
        np.array([0.0, 1.0, 1.0]) / _SQRT2,   # right/top
        np.array([0.0, 0.0, 1.0]),            # top
    ),
}


@dataclass(frozen=True)
class ViewpointGoal:
    """Where one auxiliary UAV should be to get its assigned view."""

    position: np.ndarray
    aux_index: int
    activity: MainActivity


def best_viewpoint_offsets(activity: MainActivity) -> tuple[np.ndarray, ...]:
    """Unit offsets (forward, right, up components) for the given activity."""
    return tuple(v.copy() for v in _OFFSETS[activity])


def heading_of(main: UavState, fallback: np.ndarray) -> np.ndarray:
    """Unit horizontal heading of the main UAV, or ``fallback`` when hovering."""
    if main.speed < HEADING_SPEED_MIN:
        return np.asarray(fallback, dtype=float)
    horizontal = np.array([main.velocity[0], main.velocity[1], 0.0])
    n = float(np.linalg.norm(horizontal))
    if n == 0.0:  # climbing or descending straight; keep the old heading
        return np.asarray(fallback, dtype=float)
    return horizontal / n


def viewpoint_goal(main: UavState, activity: MainActivity, distance: float,
                   aux_index: int, heading: np.ndarray | None = None,
                   bounds: Bounds | None = None) -> ViewpointGoal:
    """Viewpoint position for one aux UAV at the formation distance.

    Offsets cycle when there are more escorts than vantage points.  The goal
    is clipped to stay a meter inside the world bounds when given; unclipped
    goals sit exactly ``distance`` from the main UAV.
    """
    if heading is None:
        heading = np.array([1.0, 0.0, 0.0])
    forward = heading_of(main, heading)
    up = np.array([0.0, 0.0, 1.0])
    right = np.cross(forward, up)

    offsets = _OFFSETS[activity]
    f, r, u = offsets[aux_index % len(offsets)]
    world_offset = f * forward + r * right + u * up
    position = main.position + distance * world_offset
    if bounds is not None:
        position = bounds.clip(position, margin=BOUNDS_MARGIN)
    return ViewpointGoal(position=position, aux_index=aux_index, activity=activity)
