"""Strict-priority task composition via null-space projection.

Each behavior produces a desired acceleration and a task Jacobian; lower
priority commands are projected into the null space of everything above them,
so they can never disturb a higher-priority task to first order:

    u = u1 + N1 (u2 + N2 (u3 + N3 u4)),   Ni = I - Ji_aug^+ Ji_aug

with Ji_aug the stacked Jacobians of tasks 1..i.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .world import clamp_norm

DEFAULT_DAMPING = 1e-3


@dataclass(frozen=True, eq=False)
class TaskOutput:
    """One behavior's vote: scalar/vector error, Jacobian rows, acceleration.

    Inactive tasks carry empty error/Jacobian blocks and a zero command, so
    they drop out of the composition without special-casing.
    """

    task_id: int
    active: bool
    error: np.ndarray
    jacobian: np.ndarray
    accel_cmd: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "error", np.atleast_1d(np.asarray(self.error, dtype=float)))
        jac = np.asarray(self.jacobian, dtype=float).reshape(-1, 3)
        object.__setattr__(self, "jacobian", jac)
        object.__setattr__(self, "accel_cmd", np.asarray(self.accel_cmd, dtype=float).reshape(3))

    @property
    def priority(self) -> int:
        return self.task_id


def inactive_task(task_id: int) -> TaskOutput:
    return TaskOutput(task_id, False, np.zeros(0), np.zeros((0, 3)), np.zeros(3))


@dataclass(frozen=True)
class PriorityStack:
    """Tasks ordered by strictly increasing priority, at most one per id."""

    tasks: tuple[TaskOutput, ...]

    def __post_init__(self):
        tasks = tuple(sorted(self.tasks, key=lambda t: t.task_id))
        ids = [t.task_id for t in tasks]
        if len(set(ids)) != len(ids):
            raise ValueError(f"duplicate task ids in stack: {ids}")
        object.__setattr__(self, "tasks", tasks)


def damped_pseudo_inverse(jacobian: np.ndarray, damping: float = DEFAULT_DAMPING) -> np.ndarray:
    """J^T (J J^T + damping^2 I)^-1; plain pseudo-inverse when damping is 0.

    The damping keeps the inverse bounded through task singularities at the
    cost of a small bias near them.
    """
    J = np.atleast_2d(np.asarray(jacobian, dtype=float))
    if damping == 0.0:
        return np.linalg.pinv(J)
    m = J.shape[0]
    return J.T @ np.linalg.inv(J @ J.T + (damping ** 2) * np.eye(m))


def null_space_projector(jacobian: np.ndarray, damping: float = DEFAULT_DAMPING) -> np.ndarray:
    """Orthogonal projector onto the null space of ``jacobian``.

    Uses an exact (SVD) pseudo-inverse with ``damping`` as the relative rank
    cutoff, so well-conditioned rows are annihilated to machine precision
    and near-singular rows degrade gracefully instead of blowing up.
    """
    J = np.atleast_2d(np.asarray(jacobian, dtype=float))
    if J.shape[0] == 0:
        return np.eye(3)
    return np.eye(3) - np.linalg.pinv(J, rcond=max(damping, 1e-12)) @ J


def compose(stack: PriorityStack | Sequence[TaskOutput],
            damping: float = DEFAULT_DAMPING,
            accel_limit: float = np.inf) -> np.ndarray:
    """Blend task commands with strict priority; clamp after composition.

    Inactive tasks are skipped (identity projector, zero command).  The final
    acceleration is norm-clamped to ``accel_limit``; per-task clamps are the
    tasks' own responsibility.
    """
    if not isinstance(stack, PriorityStack):
        stack = PriorityStack(tuple(stack))
    u = np.zeros(3)
    rows: list[np.ndarray] = []
    projector = np.eye(3)
    for task in stack.tasks:
        if not task.active:
            continue
        u = u + projector @ task.accel_cmd
        if task.jacobian.shape[0]:
            rows.append(task.jacobian)
            projector = null_space_projector(np.vstack(rows), damping)
    return clamp_norm(u, accel_limit)
