"""Prediction step: propagate a belief by a reported inertial displacement."""

from __future__ import annotations

import numpy as np

from .core import Belief, InertialDelta, MotionNoise, wrap_angle
from .errors import OutOfOrderError


def predict(belief: Belief, delta: InertialDelta, noise: MotionNoise,
            rng: np.random.Generator) -> Belief:
    """Move every particle by the displacement corrupted with proportional noise.

    Each particle independently receives ``dx * (1 + eps)`` with
    ``eps ~ N(0, sigma_d^2)`` (same law for dy, independent draws per axis),
    and ``dtheta * (1 + eps_theta)`` plus the optional additive heading
    floor. Weights and particle count are untouched; the belief clock moves
    to the event time. The noise being proportional means a zero
    displacement leaves the belief exactly where it was.
    """
    if delta.user != belief.owner:
        raise ValueError(f"delta for user {delta.user} applied to belief of {belief.owner}")
    if delta.t < belief.last_update:
        raise OutOfOrderError(
            f"inertial event at t={delta.t} behind belief clock {belief.last_update}")

    m = belief.m
    eps_x = rng.normal(0.0, noise.sigma_d, m)
    eps_y = rng.normal(0.0, noise.sigma_d, m)
    eps_theta = rng.normal(0.0, noise.sigma_theta, m)
    floor = rng.normal(0.0, noise.theta_floor, m)

    poses = np.empty_like(belief.poses)
    poses[:, 0] = belief.poses[:, 0] + delta.dx * (1.0 + eps_x)
    poses[:, 1] = belief.poses[:, 1] + delta.dy * (1.0 + eps_y)
    poses[:, 2] = wrap_angle(belief.poses[:, 2] + delta.dtheta * (1.0 + eps_theta) + floor)
    return Belief(poses, belief.weights.copy(), belief.owner, delta.t)
