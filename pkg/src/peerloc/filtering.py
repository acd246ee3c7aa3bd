"""Per-user filter lifecycle.

Initialization, correction against neighbor range constraints, ESS-gated
systematic resampling, and measurement-driven sample injection: a fraction
alpha of the particle set is redrawn from the ranging measurement itself
(an annulus around a neighbor's estimate) and weighted by a kernel density
reconstruction of the prior position cloud, which lets the filter recover
when the regular proposal has starved the true pose of particles.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import (Belief, FilterConfig, Pose, RangingNoise, UserId,
                   effective_sample_size)
from .errors import ConfigError, DegenerateCorrection
from .ranging import summed_log_likelihood

# Below this joint log-likelihood even the best particle's density underflows
# to zero in double precision, so the corrected weights would be unusable.
_LOG_TINY = math.log(np.finfo(float).tiny)

# Keeps the KDE finite when the position cloud collapses to a point.
_MIN_BANDWIDTH = 1e-9


@dataclass
class NeighborConstraint:
    """A measured range paired with the neighbor's current point estimate."""

    z: float
    neighbor_estimate: Pose
    neighbor: UserId

    def __post_init__(self):
        if not self.z > 0:
            raise ValueError("constraint range must be positive")


@dataclass
class KdeConfig:
    """Bandwidth policy for the density that weights injected samples.

    The default is a fixed 2 m width, the scale of the default ranging
    noise: injected samples are hypotheses drawn from a range measurement,
    so their plausibility under the prior should be judged at measurement
    resolution. Scott's rule is available but adapts to the particle
    cloud, which under accurate tracking is centimeters wide and then
    assigns injected samples no weight at all, disabling recovery.
    """

    bandwidth_rule: str = "fixed"
    fixed_bandwidth: float = 2.0

    def __post_init__(self):
        if self.bandwidth_rule not in ("scott", "fixed"):
            raise ConfigError("bandwidth_rule must be 'scott' or 'fixed'")
        if self.bandwidth_rule == "fixed" and not self.fixed_bandwidth > 0:
            raise ConfigError("fixed bandwidth must be > 0")


def init_known(pose: Pose, cfg: FilterConfig, owner: UserId = 0) -> Belief:
    """All m particles at the given pose with uniform weights."""
    poses = np.tile([pose.x, pose.y, pose.theta], (cfg.m, 1))
    weights = np.full(cfg.m, 1.0 / cfg.m)
    return Belief(poses, weights, owner)


def init_offset(pose: Pose, shift: float, cfg: FilterConfig,
                rng: np.random.Generator, owner: UserId = 0) -> Belief:
    """Like init_known, but centered ``shift`` meters away in a uniformly
    random direction (models a wrong starting position)."""
    if shift < 0:
        raise ConfigError("shift must be >= 0")
    angle = rng.uniform(0.0, 2.0 * math.pi)
    center = Pose(pose.x + shift * math.cos(angle),
                  pose.y + shift * math.sin(angle), pose.theta)
    return init_known(center, cfg, owner)


def correct(belief: Belief, constraints, noise: RangingNoise) -> Belief:
    """Reweight particles by the joint range likelihood; poses untouched.

    An empty constraint list returns the input unchanged. Raises
    DegenerateCorrection when every particle's joint density underflows to
    zero; the caller chooses the recovery (typically full measurement-driven
    reinjection).
    """
    if not constraints:
        return belief
    zs = np.array([c.z for c in constraints])
    centers = np.array([[c.neighbor_estimate.x, c.neighbor_estimate.y] for c in constraints])
    loglik = summed_log_likelihood(belief.positions, zs, centers, noise.sigma_r)
    peak = float(loglik.max())
    if peak < _LOG_TINY:
        raise DegenerateCorrection("all particles incompatible with the ranging batch")
    weights = belief.weights * np.exp(loglik - peak)
    total = float(weights.sum())
    if not total > 0.0:
        raise DegenerateCorrection("corrected weights sum to zero")
    return Belief(belief.poses, weights / total, belief.owner, belief.last_update)


def systematic_indices(weights: np.ndarray, offset: float) -> np.ndarray:
    """Low-variance selection: m evenly spaced targets from one offset.

    A particle of weight w is replicated either floor(m*w) or ceil(m*w)
    times because the targets are exactly 1/m apart.
    """
    m = len(weights)
    targets = offset + np.arange(m) / m
    idx = np.searchsorted(np.cumsum(weights), targets, side="right")
    return np.minimum(idx, m - 1)


def maybe_resample(belief: Belief, cfg: FilterConfig, rng: np.random.Generator) -> Belief:
    """Systematic resample when ESS drops below ess_fraction * m.

    Above the threshold the input belief is returned unchanged; below it,
    m particles are drawn weight-proportionally and weights reset to 1/m.
    """
    if effective_sample_size(belief.weights) >= cfg.ess_fraction * belief.m:
        return belief
    offset = rng.uniform(0.0, 1.0 / belief.m)
    idx = systematic_indices(belief.weights, offset)
    weights = np.full(belief.m, 1.0 / belief.m)
    return Belief(belief.poses[idx], weights, belief.owner, belief.last_update)


def kde_position_density(positions: np.ndarray, weights: np.ndarray,
                         queries: np.ndarray, kde: KdeConfig) -> np.ndarray:
    """Gaussian product-kernel density of the weighted (x, y) cloud.

    Scott's rule sets the per-axis bandwidth to sigma_axis * neff**(-1/6)
    with neff = 1 / sum(w^2) accounting for weight imbalance; the fixed
    rule applies one width to both axes. Returns the density at each of
    the (k, 2) query points.
    """
    w = weights / weights.sum()
    if kde.bandwidth_rule == "fixed":
        hx = hy = kde.fixed_bandwidth
    else:
        neff = 1.0 / float(w @ w)
        mean = w @ positions
        var = w @ (positions - mean) ** 2
        factor = neff ** (-1.0 / 6.0)
        hx = max(math.sqrt(var[0]) * factor, _MIN_BANDWIDTH)
        hy = max(math.sqrt(var[1]) * factor, _MIN_BANDWIDTH)
    dx = (queries[:, None, 0] - positions[None, :, 0]) / hx
    dy = (queries[:, None, 1] - positions[None, :, 1]) / hy
    kernel = np.exp(-0.5 * (dx * dx + dy * dy))
    return (kernel @ w) / (2.0 * math.pi * hx * hy)


def dual_inject(belief: Belief, constraints, cfg: FilterConfig, kde: KdeConfig,
                rng: np.random.Generator) -> Belief:
    """Replace part of the particle set with measurement-drawn samples.

    round(alpha * m) samples (round-half-to-even) are placed on an annulus
    of radius z + N(0, sigma_r^2) around a uniformly chosen constraint's
    neighbor estimate, with uniform bearing and uniform heading: ranging
    carries no bearing information, so only the distance is informative.
    The result is the mixture the blending fraction describes: injected
    samples carry total weight alpha, split among them in proportion to a
    Gaussian KDE of the incoming belief's position cloud (uniformly when
    the KDE vanishes at every sample), while the retained particles keep
    their current weights scaled by 1 - alpha. With alpha rounding to zero
    the input is returned unchanged.
    """
    if not constraints:
        raise ValueError("sample injection needs at least one constraint")
    m = belief.m
    n_new = min(round(cfg.alpha * m), m)
    if n_new == 0:
        return belief

    pick = rng.integers(0, len(constraints), size=n_new)
    zs = np.array([c.z for c in constraints])[pick]
    centers = np.array([[c.neighbor_estimate.x, c.neighbor_estimate.y]
                        for c in constraints])[pick]
    radius = np.abs(zs + rng.normal(0.0, cfg.ranging.sigma_r, size=n_new))
    bearing = rng.uniform(0.0, 2.0 * math.pi, size=n_new)
    heading = rng.uniform(-math.pi, math.pi, size=n_new)
    new_poses = np.column_stack([centers[:, 0] + radius * np.cos(bearing),
                                 centers[:, 1] + radius * np.sin(bearing),
                                 heading])
    density = kde_position_density(belief.positions, belief.weights,
                                   new_poses[:, :2], kde)
    mass = float(density.sum())
    if mass > 0.0:
        new_weights = cfg.alpha * density / mass
    else:
        # Prior vanishes at every sample: nothing to prefer among them.
        new_weights = np.full(n_new, cfg.alpha / n_new)

    n_keep = m - n_new
    if n_keep:
        if cfg.dual_replacement == "lowest_weight":
            kept = np.sort(np.argsort(-belief.weights, kind="stable")[:n_keep])
        else:
            kept = np.sort(rng.permutation(m)[:n_keep])
        kept_weights = belief.weights[kept]
        kept_total = float(kept_weights.sum())
        if kept_total > 0.0:
            kept_weights = (1.0 - cfg.alpha) * kept_weights / kept_total
        else:
            kept_weights = np.full(n_keep, (1.0 - cfg.alpha) / n_keep)
        poses = np.vstack([belief.poses[kept], new_poses])
        weights = np.concatenate([kept_weights, new_weights])
    else:
        poses, weights = new_poses, new_weights

    weights = weights / weights.sum()
    return Belief(poses, weights, belief.owner, belief.last_update)
