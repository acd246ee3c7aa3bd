"""Log replay and parameter sweeps.

``run_events`` folds an engine over an in-memory event stream and records
a snapshot after each distinct timestamp has been fully applied (including
its ranging batch). ``run_replay`` does the same from a log file.
``run_sweep`` repeats runs across a parameter grid and seeds, reusing the
generated logs per seed whenever the axis does not touch generation.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, replace

import numpy as np

from .core import (FilterConfig, MotionNoise, Pose, RangeObservation,
                   RangingNoise, UserId)
from .engine import Engine
from .errors import ConfigError
from .filtering import KdeConfig
from .logio import read_event_log
from .metrics import error_timeline
from .simulate import ScenarioConfig, generate_scenario


@dataclass
class EstimateTimeline:
    """Per-user estimated poses on the shared sequence of processed timestamps."""

    users: tuple[UserId, ...]
    times: np.ndarray            # (T,)
    poses: np.ndarray            # (len(users), T, 3)
    config_hash: str = ""
    seed: int = 0

    def pose_map_at(self, index: int) -> dict[UserId, Pose]:
        return {u: Pose(*self.poses[i, index]) for i, u in enumerate(self.users)}


def run_events(priors, events, cfg: FilterConfig, kde: KdeConfig | None = None, *,
               init_shift: float = 0.0, imu_only: bool = False,
               config_hash: str = "") -> tuple[EstimateTimeline, Engine]:
    """Fold an engine over a time-sorted event stream.

    Returns the timeline plus the engine itself, whose batch timing and
    drop counters the caller may inspect. The initial snapshot is recorded
    at t=0 before any event.
    """
    engine = Engine(cfg, kde)
    for user, pose in priors:
        engine.register_user(user, pose, shift=init_shift)
    users = tuple(sorted(u for u, _ in priors))

    times = [0.0]
    snaps = [engine.snapshot()]
    for t, group in itertools.groupby(events, key=lambda e: e.t):
        for event in group:
            if imu_only and isinstance(event, RangeObservation):
                continue
            engine.ingest(event)
        engine.flush()
        times.append(t)
        snaps.append(engine.snapshot())

    poses = np.empty((len(users), len(times), 3))
    for k, snap in enumerate(snaps):
        for i, user in enumerate(users):
            p = snap[user]
            poses[i, k] = (p.x, p.y, p.theta)
    timeline = EstimateTimeline(users, np.array(times), poses, config_hash, cfg.seed)
    return timeline, engine


def run_replay(log_path, cfg: FilterConfig, kde: KdeConfig | None = None, *,
               init_shift: float = 0.0, imu_only: bool = False,
               config_hash: str = "") -> EstimateTimeline:
    """Replay a log file through a fresh engine; deterministic per (config, seed)."""
    priors, events = read_event_log(log_path)
    timeline, _ = run_events(priors, events, cfg, kde, init_shift=init_shift,
                             imu_only=imu_only, config_hash=config_hash)
    return timeline


SWEEP_AXES = ("sigma_r", "imu_noise_scale", "m", "alpha", "init_shift")


@dataclass
class SweepSpec:
    """One experiment axis, its value grid, and the seeds per grid point."""

    axis: str
    grid: tuple[float, ...]
    seeds: int = 1

    def __post_init__(self):
        if self.axis not in SWEEP_AXES:
            raise ConfigError(f"unknown sweep axis {self.axis!r}; choose from {SWEEP_AXES}")
        if not self.grid:
            raise ConfigError("sweep grid must be nonempty")
        if self.seeds < 1:
            raise ConfigError("need at least one seed per grid point")


@dataclass
class SweepPoint:
    axis: str
    value: float
    mean_rmse: float
    std_rmse: float
    mean_update_s: float
    median_update_s: float
    seeds: int


def run_sweep(spec: SweepSpec, scenario: ScenarioConfig, cfg: FilterConfig,
              kde: KdeConfig | None = None, *, init_shift: float = 0.0,
              imu_only: bool = False) -> list[SweepPoint]:
    """Run the grid; each point aggregates time-mean pairwise RMSE over seeds.

    Update time is the wall-clock cost of integrating one ranging batch,
    pooled over every batch of every seeded run at that grid point. The
    imu_noise_scale axis sets both the generation-side and the filter-side
    motion noise to (value, value / 2); every other axis reuses one
    generated log per seed across the whole grid.
    """
    generated: dict[int, tuple] = {}
    rows = []
    for value in spec.grid:
        rmses = []
        durations: list[float] = []
        for k in range(spec.seeds):
            sc = replace(scenario, seed=scenario.seed + k)
            fc = replace(cfg, seed=cfg.seed + k)
            shift = init_shift
            if spec.axis == "sigma_r":
                fc = replace(fc, ranging=RangingNoise(value))
            elif spec.axis == "m":
                fc = replace(fc, m=int(value))
            elif spec.axis == "alpha":
                fc = replace(fc, alpha=value)
            elif spec.axis == "init_shift":
                shift = value
            elif spec.axis == "imu_noise_scale":
                noise = MotionNoise(value, value / 2.0)
                sc = replace(sc, imu_noise=noise)
                fc = replace(fc, motion=noise)

            if spec.axis == "imu_noise_scale":
                truth, events = generate_scenario(sc)
            else:
                if k not in generated:
                    generated[k] = generate_scenario(sc)
                truth, events = generated[k]

            priors = sorted(truth.pose_map_at_start().items())
            timeline, engine = run_events(priors, events, fc, kde,
                                          init_shift=shift, imu_only=imu_only)
            errors = error_timeline(timeline, truth)
            rmses.append(float(errors[:, 1].mean()))
            durations.extend(engine.batch_durations)

        rows.append(SweepPoint(
            spec.axis, float(value),
            float(np.mean(rmses)), float(np.std(rmses)),
            float(np.mean(durations)) if durations else 0.0,
            float(np.median(durations)) if durations else 0.0,
            spec.seeds))
    return rows
