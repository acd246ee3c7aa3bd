"""Shared domain types plus the small geometric and statistical kernels.

Everything here is a plain value: cheap to copy, no hidden state, safe to
hand between threads. Angles are radians everywhere, including in files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError

UserId = int

_TWO_PI = 2.0 * math.pi


def wrap_angle(theta):
    """Normalize an angle (scalar or array) to [-pi, pi).

    Values already in range pass through unchanged, so wrapping is exact
    for them rather than perturbed by the modulo round trip.
    """
    if np.isscalar(theta):
        if -math.pi <= theta < math.pi:
            return theta
        return (theta + math.pi) % _TWO_PI - math.pi
    theta = np.asarray(theta, dtype=float)
    outside = (theta < -math.pi) | (theta >= math.pi)
    if not outside.any():
        return theta
    result = theta.copy()
    result[outside] = (theta[outside] + math.pi) % _TWO_PI - math.pi
    return result


@dataclass
class Pose:
    """2D position plus heading of one user at one instant."""

    x: float
    y: float
    theta: float = 0.0

    def __post_init__(self):
        self.x, self.y = float(self.x), float(self.y)
        if not (math.isfinite(self.x) and math.isfinite(self.y) and math.isfinite(self.theta)):
            raise ValueError("pose components must be finite")
        self.theta = float(wrap_angle(float(self.theta)))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.theta])


@dataclass
class Particle:
    """One pose hypothesis with its importance weight."""

    pose: Pose
    weight: float


@dataclass
class Belief:
    """Weighted particle set representing one user's posterior.

    ``poses`` is an (m, 3) float array of x, y, theta rows and ``weights``
    is the matching (m,) vector; the weights sum to 1 after every public
    operation. Operations treat beliefs as values: they return fresh
    beliefs and never mutate arrays in place, so input arrays may be
    shared by the result.
    """

    poses: np.ndarray
    weights: np.ndarray
    owner: UserId
    last_update: float = 0.0

    @property
    def m(self) -> int:
        return len(self.weights)

    @property
    def positions(self) -> np.ndarray:
        return self.poses[:, :2]

    @property
    def headings(self) -> np.ndarray:
        return self.poses[:, 2]

    @property
    def particles(self) -> list[Particle]:
        """Materialized particle list, for inspection and tests."""
        return [Particle(Pose(*row), float(w)) for row, w in zip(self.poses, self.weights)]


@dataclass
class InertialDelta:
    """One reported displacement triple for one user."""

    user: UserId
    t: float
    dx: float
    dy: float
    dtheta: float

    def __post_init__(self):
        if not all(map(math.isfinite, (self.t, self.dx, self.dy, self.dtheta))):
            raise ValueError("inertial delta components must be finite")


@dataclass
class RangeObservation:
    """One measured peer-to-peer distance."""

    from_user: UserId
    to_user: UserId
    z: float
    t: float

    def __post_init__(self):
        if self.from_user == self.to_user:
            raise ValueError("range observation needs two distinct users")
        if not (self.z > 0 and math.isfinite(self.z)):
            raise ValueError("measured range must be positive and finite")


# A measurement is either an inertial displacement or a peer range; both
# variants carry their timestamp in ``t``.
MeasurementEvent = InertialDelta | RangeObservation


@dataclass
class MotionNoise:
    """Proportional noise scales applied to a reported displacement.

    ``sigma_d`` and ``sigma_theta`` are unitless factors multiplying the
    displacement and heading change; ``theta_floor`` is an optional
    additive heading noise std in radians (default off), useful because
    purely proportional heading noise never widens heading uncertainty on
    straight walks.
    """

    sigma_d: float = 0.0
    sigma_theta: float = 0.0
    theta_floor: float = 0.0

    def __post_init__(self):
        if self.sigma_d < 0 or self.sigma_theta < 0 or self.theta_floor < 0:
            raise ConfigError("motion noise scales must be >= 0")


@dataclass
class RangingNoise:
    """Gaussian std of the range measurement model, in meters."""

    sigma_r: float

    def __post_init__(self):
        if not self.sigma_r > 0:
            raise ConfigError("sigma_r must be > 0")


DUAL_REPLACEMENT_MODES = ("lowest_weight", "random")


@dataclass
class FilterConfig:
    """Every knob of one user's filter, plus engine routing flags."""

    m: int = 500
    alpha: float = 0.01
    motion: MotionNoise = field(default_factory=MotionNoise)
    ranging: RangingNoise = field(default_factory=lambda: RangingNoise(2.0))
    ess_fraction: float = 0.5
    seed: int = 0
    dual_replacement: str = "lowest_weight"
    dual_on_failure_only: bool = False
    symmetric_ranging: bool = True
    reorder_tolerance: float = 0.0

    def __post_init__(self):
        if self.m < 1:
            raise ConfigError("particle count m must be >= 1")
        if not 0.0 <= self.alpha <= 1.0:
            raise ConfigError("alpha must lie in [0, 1]")
        if not 0.0 < self.ess_fraction <= 1.0:
            raise ConfigError("ess_fraction must lie in (0, 1]")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit non-negative integer")
        if self.dual_replacement not in DUAL_REPLACEMENT_MODES:
            raise ConfigError(f"dual_replacement must be one of {DUAL_REPLACEMENT_MODES}")
        if self.reorder_tolerance < 0:
            raise ConfigError("reorder_tolerance must be >= 0")


def euclidean_distance(a: Pose, b: Pose) -> float:
    """Planar distance between two poses; heading is ignored."""
    return math.hypot(a.x - b.x, a.y - b.y)


def circular_mean(angles, weights) -> float:
    """Weighted mean of angles via the resultant vector, in [-pi, pi).

    Raises ValueError when the weights sum to zero or when the resultant
    vector is too short for a mean to be defined (opposing angles with
    equal weight).
    """
    angles = np.asarray(angles, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if angles.size == 0 or angles.shape != weights.shape:
        raise ValueError("angles and weights must be nonempty and the same length")
    if float(weights.sum()) <= 0.0:
        raise ValueError("degenerate weights: sum must be positive")
    s = float(np.sin(angles) @ weights)
    c = float(np.cos(angles) @ weights)
    if math.hypot(s, c) < 1e-12:
        raise ValueError("circular mean undefined: resultant vector vanishes")
    return float(wrap_angle(math.atan2(s, c)))


def effective_sample_size(weights) -> float:
    """ESS = 1 / sum(w^2) of a normalized weight vector."""
    w = np.asarray(weights, dtype=float)
    total = float(w.sum())
    if abs(total - 1.0) > 1e-6:
        raise ValueError(f"weights must sum to 1 (got {total!r})")
    return 1.0 / float(w @ w)


def weighted_mean_pose(belief: Belief) -> Pose:
    """Weight-weighted mean position, with the heading averaged circularly."""
    w = belief.weights
    x = float(w @ belief.poses[:, 0])
    y = float(w @ belief.poses[:, 1])
    return Pose(x, y, circular_mean(belief.poses[:, 2], w))
