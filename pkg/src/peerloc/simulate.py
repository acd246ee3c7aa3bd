"""Synthetic world: walkers on a rectangular loop with noisy sensors.

Users walk the perimeter of a rectangle at constant speed. By default all
of them start at the same corner and depart one after another, so that in
steady state consecutive users are ``spacing`` meters apart along the
path; a flag switches to spatially pre-spaced starts instead. Inertial
deltas are the true per-tick displacements corrupted with proportional
noise; range observations are true pair distances plus Gaussian noise,
emitted per ordered pair that passes the detection draw. Everything is
driven by one seeded generator, so equal seeds give byte-identical logs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .core import (InertialDelta, MeasurementEvent, MotionNoise, Pose,
                   RangeObservation, UserId, wrap_angle)
from .errors import ConfigError, DataError

_MIN_RANGE = 1e-6


@dataclass
class DetectionModel:
    """Distance-dependent probability that a ranging attempt succeeds.

    ``curve`` holds (distance, probability) breakpoints, linearly
    interpolated, held constant beyond the last breakpoint, and forced to
    zero past ``max_range``.
    """

    max_range: float = 30.0
    curve: tuple[tuple[float, float], ...] = ((0.0, 1.0),)

    def __post_init__(self):
        if not self.max_range > 0:
            raise ConfigError("max_range must be > 0")
        if not self.curve:
            raise ConfigError("detection curve needs at least one breakpoint")
        distances = [d for d, _ in self.curve]
        probs = [p for _, p in self.curve]
        if any(not 0.0 <= p <= 1.0 for p in probs):
            raise ConfigError("detection probabilities must lie in [0, 1]")
        if any(b <= a for a, b in zip(distances, distances[1:])):
            raise ConfigError("detection breakpoints must be strictly increasing")
        if any(b > a for a, b in zip(probs, probs[1:])):
            raise ConfigError("detection probability must be non-increasing with distance")

    def probability(self, d):
        """Detection probability at distance(s) d (vectorized)."""
        d = np.asarray(d, dtype=float)
        distances = [p[0] for p in self.curve]
        probs = [p[1] for p in self.curve]
        return np.where(d <= self.max_range, np.interp(d, distances, probs), 0.0)

    @classmethod
    def occluded_indoor(cls) -> "DetectionModel":
        """Preset that decays with distance the way a cluttered indoor
        deployment does; even nearby peers occasionally miss each other."""
        return cls(30.0, ((0.0, 0.9), (5.0, 0.8), (10.0, 0.65), (15.0, 0.5),
                          (20.0, 0.35), (25.0, 0.2), (30.0, 0.1)))


def sample_detection(d: float, model: DetectionModel, rng: np.random.Generator) -> bool:
    """One Bernoulli detection draw at distance d."""
    if d < 0:
        raise ValueError("distance must be >= 0")
    u = rng.random()  # drawn before the range gate to keep the stream layout fixed
    return bool(d <= model.max_range and u < float(model.probability(d)))


@dataclass
class ScenarioConfig:
    """Every knob of one synthetic run."""

    area: tuple[float, float] = (20.0, 10.0)
    path_rect: tuple[float, float] = (16.0, 6.0)
    path_center: tuple[float, float] | None = None  # defaults to the area center
    n_users: int = 6
    spacing: float = 8.0
    speed: float = 0.5
    duration: float = 450.0
    imu_rate: float = 1.0
    uwb_rate: float = 0.5
    imu_noise: MotionNoise | tuple[MotionNoise, ...] = field(
        default_factory=lambda: MotionNoise(0.2, 0.1))
    range_sigma: float = 1.5
    detection: DetectionModel = field(default_factory=DetectionModel)
    prespaced_start: bool = False
    seed: int = 0

    def __post_init__(self):
        if self.n_users < 1:
            raise ConfigError("need at least one user")
        if self.imu_rate <= 0 or self.uwb_rate <= 0:
            raise ConfigError("sensor rates must be > 0")
        if self.spacing < 0:
            raise ConfigError("spacing must be >= 0")
        if self.speed <= 0 or self.duration <= 0:
            raise ConfigError("speed and duration must be > 0")
        if self.range_sigma < 0:
            raise ConfigError("range_sigma must be >= 0")
        cx, cy = self.center
        w, h = self.path_rect
        if (cx - w / 2 < 0 or cx + w / 2 > self.area[0]
                or cy - h / 2 < 0 or cy + h / 2 > self.area[1]):
            raise ConfigError("path rectangle must fit inside the area")
        if isinstance(self.imu_noise, tuple) and len(self.imu_noise) != self.n_users:
            raise ConfigError("per-user imu_noise needs one entry per user")

    @property
    def center(self) -> tuple[float, float]:
        return self.path_center if self.path_center is not None else (
            self.area[0] / 2.0, self.area[1] / 2.0)

    @property
    def perimeter(self) -> float:
        return 2.0 * (self.path_rect[0] + self.path_rect[1])

    def noise_for(self, user: UserId) -> MotionNoise:
        if isinstance(self.imu_noise, tuple):
            return self.imu_noise[user]
        return self.imu_noise


@dataclass
class GroundTruth:
    """Dense per-user pose trajectories on a shared time grid."""

    users: tuple[UserId, ...]
    times: np.ndarray          # (T,)
    poses: np.ndarray          # (len(users), T, 3)

    @property
    def n_users(self) -> int:
        return len(self.users)

    def positions_at(self, query_times) -> np.ndarray:
        """Linearly interpolated planar positions, shape (n_users, k, 2).

        Raises DataError when a query falls outside the recorded span.
        """
        q = np.atleast_1d(np.asarray(query_times, dtype=float))
        if q.min() < self.times[0] - 1e-9 or q.max() > self.times[-1] + 1e-9:
            raise DataError(
                f"query times span [{q.min()}, {q.max()}] outside truth "
                f"span [{self.times[0]}, {self.times[-1]}]")
        out = np.empty((self.n_users, len(q), 2))
        for i in range(self.n_users):
            out[i, :, 0] = np.interp(q, self.times, self.poses[i, :, 0])
            out[i, :, 1] = np.interp(q, self.times, self.poses[i, :, 1])
        return out

    def pose_map_at_start(self) -> dict[UserId, Pose]:
        return {u: Pose(*self.poses[i, 0]) for i, u in enumerate(self.users)}


def rectangle_pose(arc, width: float, height: float, cx: float, cy: float) -> np.ndarray:
    """Pose on the rectangle perimeter at arc length(s), counterclockwise
    from the south-west corner heading east. Returns (..., 3)."""
    perimeter = 2.0 * (width + height)
    s = np.asarray(arc, dtype=float) % perimeter
    x0, y0 = cx - width / 2.0, cy - height / 2.0

    side = [s < width,
            (s >= width) & (s < width + height),
            (s >= width + height) & (s < 2 * width + height),
            s >= 2 * width + height]
    x = np.select(side, [x0 + s, x0 + width, x0 + width - (s - width - height), x0])
    y = np.select(side, [y0, y0 + (s - width), y0 + height,
                         y0 + height - (s - 2 * width - height)])
    theta = np.select(side, [0.0, math.pi / 2.0, wrap_angle(math.pi), -math.pi / 2.0])
    return np.stack([x, y, theta], axis=-1)


def _arc_lengths(cfg: ScenarioConfig, times: np.ndarray) -> np.ndarray:
    """(n_users, T) arc positions along the path."""
    t = times[None, :]
    idx = np.arange(cfg.n_users)[:, None]
    if cfg.prespaced_start:
        return idx * cfg.spacing + cfg.speed * t
    depart = idx * (cfg.spacing / cfg.speed) if cfg.speed > 0 else idx * 0.0
    return cfg.speed * np.maximum(0.0, t - depart)


def ground_truth(cfg: ScenarioConfig) -> GroundTruth:
    """True trajectories sampled at the faster of the two sensor rates."""
    rate = max(cfg.imu_rate, cfg.uwb_rate)
    n = int(round(cfg.duration * rate))
    times = np.arange(n + 1) / rate
    arcs = _arc_lengths(cfg, times)
    w, h = cfg.path_rect
    cx, cy = cfg.center
    poses = rectangle_pose(arcs, w, h, cx, cy)
    return GroundTruth(tuple(range(cfg.n_users)), times, poses)


def generate_scenario(cfg: ScenarioConfig) -> tuple[GroundTruth, list[MeasurementEvent]]:
    """Ground truth plus the time-sorted measurement log for one run.

    Noise corrupts only the reported quantities, never the truth. At equal
    timestamps inertial events sort before range observations, matching
    how a fusion stage wants to consume them.
    """
    rng = np.random.default_rng(cfg.seed)
    truth = ground_truth(cfg)
    events: list[MeasurementEvent] = []

    w, h = cfg.path_rect
    cx, cy = cfg.center

    # Inertial deltas per user over each tick interval.
    n_imu = int(math.floor(cfg.duration * cfg.imu_rate + 1e-9))
    tick_times = np.arange(n_imu + 1) / cfg.imu_rate
    tick_arcs = _arc_lengths(cfg, tick_times)
    for user in range(cfg.n_users):
        poses = rectangle_pose(tick_arcs[user], w, h, cx, cy)
        deltas = np.diff(poses, axis=0)
        deltas[:, 2] = wrap_angle(deltas[:, 2])
        noise = cfg.noise_for(user)
        eps_x = rng.normal(0.0, noise.sigma_d, n_imu)
        eps_y = rng.normal(0.0, noise.sigma_d, n_imu)
        eps_t = rng.normal(0.0, noise.sigma_theta, n_imu)
        floor = rng.normal(0.0, noise.theta_floor, n_imu)
        for k in range(n_imu):
            events.append(InertialDelta(
                user, float(tick_times[k + 1]),
                float(deltas[k, 0] * (1.0 + eps_x[k])),
                float(deltas[k, 1] * (1.0 + eps_y[k])),
                float(deltas[k, 2] * (1.0 + eps_t[k]) + floor[k])))

    # Pairwise ranges per tick. The full (n, n) noise blocks are drawn up
    # front so the stream layout does not depend on geometry or detection.
    n_uwb = int(math.floor(cfg.duration * cfg.uwb_rate + 1e-9))
    for j in range(1, n_uwb + 1):
        t = j / cfg.uwb_rate
        arcs = _arc_lengths(cfg, np.array([t]))[:, 0]
        positions = rectangle_pose(arcs, w, h, cx, cy)[:, :2]
        diff = positions[:, None, :] - positions[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        draws = rng.random((cfg.n_users, cfg.n_users))
        noise = rng.normal(0.0, cfg.range_sigma, (cfg.n_users, cfg.n_users))
        probs = cfg.detection.probability(dist)
        for a in range(cfg.n_users):
            for b in range(cfg.n_users):
                if a == b:
                    continue
                if dist[a, b] <= cfg.detection.max_range and draws[a, b] < probs[a, b]:
                    z = max(dist[a, b] + noise[a, b], _MIN_RANGE)
                    events.append(RangeObservation(a, b, float(z), float(t)))

    events.sort(key=_event_order)
    return truth, events


def _event_order(event: MeasurementEvent):
    if isinstance(event, InertialDelta):
        return (event.t, 0, event.user, -1)
    return (event.t, 1, event.from_user, event.to_user)
