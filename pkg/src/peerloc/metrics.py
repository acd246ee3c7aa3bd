"""Accuracy metrics for relative positioning.

Relative positioning is only defined up to a global rigid transform, so
accuracy is measured on pairwise distances: the RMSE over all unordered
user pairs of (estimated pair distance - true pair distance). That metric
is invariant under rotating or translating all estimates together.
"""

from __future__ import annotations

import numpy as np

from .core import Pose, UserId
from .errors import DataError
from .simulate import GroundTruth


def pairwise_rmse_xy(est_xy: np.ndarray, truth_xy: np.ndarray) -> float:
    """Pairwise-distance RMSE between matching (n, 2) position arrays."""
    n = len(est_xy)
    if n < 2:
        raise ValueError("need at least two users")
    i, j = np.triu_indices(n, k=1)
    de = np.linalg.norm(est_xy[i] - est_xy[j], axis=1)
    dt = np.linalg.norm(truth_xy[i] - truth_xy[j], axis=1)
    return float(np.sqrt(np.mean((de - dt) ** 2)))


def pairwise_rmse(est: dict[UserId, Pose], truth: dict[UserId, Pose]) -> float:
    """Pairwise-distance RMSE between two pose maps over the same users."""
    users = sorted(est)
    if sorted(truth) != users:
        raise ValueError("estimate and truth cover different user sets")
    e = np.array([[est[u].x, est[u].y] for u in users])
    t = np.array([[truth[u].x, truth[u].y] for u in users])
    return pairwise_rmse_xy(e, t)


def error_timeline(timeline, truth: GroundTruth) -> np.ndarray:
    """Pairwise RMSE at every estimate timestamp, against interpolated truth.

    Returns a (T, 2) array of (t, rmse). The truth must cover the
    timeline's span and user set.
    """
    if set(timeline.users) != set(truth.users):
        raise DataError("timeline and truth cover different user sets")
    order = [truth.users.index(u) for u in timeline.users]
    truth_xy = truth.positions_at(timeline.times)[order]   # (n, T, 2)
    est_xy = timeline.poses[:, :, :2]

    n = len(timeline.users)
    i, j = np.triu_indices(n, k=1)
    de = np.linalg.norm(est_xy[i] - est_xy[j], axis=2)     # (pairs, T)
    dt = np.linalg.norm(truth_xy[i] - truth_xy[j], axis=2)
    rmse = np.sqrt(np.mean((de - dt) ** 2, axis=0))
    return np.column_stack([timeline.times, rmse])
