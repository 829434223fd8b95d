"""Sampling-based goal controller (path-integral style) and a PD baseline.

Each control step perturbs a nominal acceleration sequence with Gaussian
noise, rolls the double-integrator dynamics forward, scores every rollout,
and blends the perturbations with softmax weights on cost:

    w_i = exp(-(S_i - min S) / temperature),  normalized
    u*  = nominal + sum_i w_i eps_i

The first blended control is executed; the rest become next step's nominal
(shifted, zero padded).  Sampling uses a counter-based Philox stream keyed by
the caller-supplied seed, so results are bit-reproducible no matter how the
rollouts are evaluated.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .world import Obstacle, PidGains, SimParams, UavState, clamp_norm


class DivergentRollouts(RuntimeError):
    """Every rollout scored non-finite; the optimizer has nothing to average."""


@dataclass(frozen=True, eq=False)
class Rollout:
    """One simulated control sequence and the states it produces."""

    controls: np.ndarray    # (H, 3)
    positions: np.ndarray   # (H+1, 3)
    velocities: np.ndarray  # (H+1, 3)


def simulate_rollout(state: UavState, controls: np.ndarray,
                     sampling_time: float) -> Rollout:
    """Integrate the double integrator (no limits) under a control sequence."""
    controls = np.asarray(controls, dtype=float).reshape(-1, 3)
    horizon = controls.shape[0]
    positions = np.empty((horizon + 1, 3))
    velocities = np.empty((horizon + 1, 3))
    positions[0] = state.position
    velocities[0] = state.velocity
    for k in range(horizon):
        velocities[k + 1] = velocities[k] + controls[k] * sampling_time
        positions[k + 1] = positions[k] + velocities[k + 1] * sampling_time
    return Rollout(controls, positions, velocities)


def _obstacle_penalty(positions: np.ndarray, obstacles: Sequence[Obstacle],
                      influence: float) -> np.ndarray:
    """Squared influence-zone penetration at each position (nearest obstacle)."""
    if not obstacles:
        return np.zeros(positions.shape[:-1])
    dists = np.stack(
        [np.linalg.norm(positions - ob.center, axis=-1) - ob.radius for ob in obstacles],
        axis=-1,
    )
    return np.square(np.maximum(0.0, influence - dists.min(axis=-1)))


def rollout_cost(rollout: Rollout, goal: np.ndarray, obstacles: Sequence[Obstacle],
                 params: SimParams) -> float:
    """Terminal goal distance + running obstacle penetration and control effort."""
    pic = params.gains.pic
    goal = np.asarray(goal, dtype=float)
    pen = _obstacle_penalty(rollout.positions[1:], obstacles,
                            params.collision_influence_radius)
    effort = np.sum(np.square(rollout.controls), axis=-1)
    terminal = float(np.dot(rollout.positions[-1] - goal, rollout.positions[-1] - goal))
    return float(
        pic.goal_weight * terminal
        + pic.obstacle_penalty * np.sum(pen)
        + pic.control_cost * np.sum(effort)
    )


def sample_weights(costs: np.ndarray, temperature: float) -> np.ndarray:
    """Softmax-on-cost weights with min-cost baseline subtraction.

    The best sample always carries weight exp(0), so the normalizer is >= 1
    and the weights sum to one to machine precision.
    """
    costs = np.asarray(costs, dtype=float)
    finite = np.isfinite(costs)
    if not np.any(finite):
        raise DivergentRollouts("all rollout costs are non-finite")
    shifted = np.where(finite, costs - costs[finite].min(), np.inf)
    w = np.exp(-shifted / temperature)
    return w / w.sum()


def pic_step_detailed(state: UavState, nominal: np.ndarray, goal: np.ndarray,
                      obstacles: Sequence[Obstacle], params: SimParams,
                      rng_seed: int):
    """One optimizer step; also returns the weights and costs for inspection.

    Returns ``(accel, new_nominal, weights, costs)`` where ``accel`` is the
    executed (norm-clamped) first control and ``new_nominal`` the shifted
    blended sequence, zero padded at the tail.
    """
    pic = params.gains.pic
    nominal = np.asarray(nominal, dtype=float).reshape(pic.horizon, 3)
    goal = np.asarray(goal, dtype=float)
    dt = params.sampling_time

    rng = np.random.Generator(np.random.Philox(np.random.SeedSequence(int(rng_seed))))
    eps = rng.normal(0.0, pic.noise_sigma, size=(pic.samples, pic.horizon, 3))
    controls = nominal[None, :, :] + eps

    # vectorized rollout of all samples at once
    pos = np.broadcast_to(state.position, (pic.samples, 3)).copy()
    vel = np.broadcast_to(state.velocity, (pic.samples, 3)).copy()
    costs = np.zeros(pic.samples)
    for k in range(pic.horizon):
        vel = vel + controls[:, k, :] * dt
        pos = pos + vel * dt
        costs += pic.obstacle_penalty * _obstacle_penalty(
            pos, obstacles, params.collision_influence_radius
        )
        costs += pic.control_cost * np.sum(np.square(controls[:, k, :]), axis=-1)
    costs += pic.goal_weight * np.sum(np.square(pos - goal), axis=-1)
    costs = np.where(np.isnan(costs), np.inf, costs)

    weights = sample_weights(costs, pic.temperature)
    blended = nominal + np.tensordot(weights, eps, axes=1)
    accel = clamp_norm(blended[0], params.accel_limit)
    new_nominal = np.vstack([blended[1:], np.zeros((1, 3))])
    return accel, new_nominal, weights, costs


def pic_step(state: UavState, nominal: np.ndarray, goal: np.ndarray,
             obstacles: Sequence[Obstacle], params: SimParams,
             rng_seed: int) -> tuple[np.ndarray, np.ndarray]:
    """One optimizer step: returns the executed accel and the updated nominal."""
    accel, new_nominal, _, _ = pic_step_detailed(state, nominal, goal, obstacles,
                                                 params, rng_seed)
    return accel, new_nominal


def pid_step(state: UavState, goal: np.ndarray, gains: PidGains,
             accel_limit: float = np.inf) -> np.ndarray:
    """Baseline goal controller: stiffness towards the goal, damping on velocity."""
    accel = gains.k_p * (np.asarray(goal, dtype=float) - state.position) \
        - gains.k_d * state.velocity
    return clamp_norm(accel, accel_limit)
