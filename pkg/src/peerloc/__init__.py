"""Infrastructure-free relative positioning of mobile users.

Per-user particle filters fuse reported inertial displacements with
peer-to-peer range measurements; a measurement-driven sample injection
step recovers from positioning failures. The package ships a synthetic
scenario generator, a replay and sweep harness, and a command line.
"""

from .core import (Belief, FilterConfig, InertialDelta, MeasurementEvent,
                   MotionNoise, Particle, Pose, RangeObservation,
                   RangingNoise, UserId, circular_mean, effective_sample_size,
                   euclidean_distance, weighted_mean_pose, wrap_angle)
from .engine import Engine, RangingBatch
from .errors import (ConfigError, DataError, DegenerateCorrection,
                     LogParseError, OutOfOrderError, RegistrationError)
from .filtering import (KdeConfig, NeighborConstraint, correct, dual_inject,
                        init_known, init_offset, kde_position_density,
                        maybe_resample, systematic_indices)
from .metrics import error_timeline, pairwise_rmse, pairwise_rmse_xy
from .motion import predict
from .ranging import batch_likelihood, range_likelihood
from .replay import (EstimateTimeline, SweepPoint, SweepSpec, run_events,
                     run_replay, run_sweep)
from .simulate import (DetectionModel, GroundTruth, ScenarioConfig,
                       generate_scenario, ground_truth, rectangle_pose,
                       sample_detection)

__all__ = [
    "Belief", "ConfigError", "DataError", "DegenerateCorrection",
    "DetectionModel", "Engine", "EstimateTimeline", "FilterConfig",
    "GroundTruth", "InertialDelta", "KdeConfig", "LogParseError",
    "MeasurementEvent", "MotionNoise", "NeighborConstraint",
    "OutOfOrderError", "Particle", "Pose", "RangeObservation",
    "RangingBatch", "RangingNoise", "RegistrationError", "ScenarioConfig",
    "SweepPoint", "SweepSpec", "UserId", "batch_likelihood", "circular_mean",
    "correct", "dual_inject", "effective_sample_size", "error_timeline",
    "euclidean_distance", "generate_scenario", "ground_truth", "init_known",
    "init_offset", "kde_position_density", "maybe_resample",
    "pairwise_rmse", "pairwise_rmse_xy", "predict", "range_likelihood",
    "rectangle_pose", "run_events", "run_replay", "run_sweep",
    "sample_detection", "systematic_indices", "weighted_mean_pose",
    "wrap_angle",
]
