"""Gaussian range likelihood used to weight particles against peer distances.

Only actually received ranges contribute; the absence of a measurement
carries no factor, so an empty neighbor set is the multiplicative identity.
Likelihoods are accumulated in log space internally and exponentiated only
at the boundary, so long neighbor lists do not underflow prematurely.
"""

from __future__ import annotations

import math

import numpy as np

from .core import Pose, RangingNoise, euclidean_distance

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def range_likelihood(z: float, a: Pose, b: Pose, noise: RangingNoise) -> float:
    """Density of measuring range z between two poses.

    Gaussian in the residual z - d(a, b) with std sigma_r; depends on the
    poses only through their planar distance.
    """
    residual = z - euclidean_distance(a, b)
    return math.exp(_log_density(residual, noise.sigma_r))


def batch_likelihood(ranges, pose: Pose, noise: RangingNoise) -> float:
    """Product of range likelihoods over (z, neighbor_pose) pairs; empty -> 1.0."""
    total = 0.0
    for z, neighbor in ranges:
        total += _log_density(z - euclidean_distance(pose, neighbor), noise.sigma_r)
    return math.exp(total)


def _log_density(residual, sigma: float) -> float:
    return -0.5 * (residual / sigma) ** 2 - _LOG_SQRT_2PI - math.log(sigma)


def summed_log_likelihood(positions: np.ndarray, zs: np.ndarray,
                          centers: np.ndarray, sigma: float) -> np.ndarray:
    """Log of the joint range likelihood for each candidate position.

    positions is (m, 2), zs is (c,), centers is (c, 2); returns (m,).
    """
    d = np.linalg.norm(positions[:, None, :] - centers[None, :, :], axis=2)
    r = (zs[None, :] - d) / sigma
    return -0.5 * np.einsum("mc,mc->m", r, r) - len(zs) * (_LOG_SQRT_2PI + math.log(sigma))
