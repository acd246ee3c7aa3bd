"""Central orchestration: one filter per user folded over an event stream.

Inertial displacements go straight to the owning user's prediction step.
Range observations that share one timestamp accumulate into a batch; the
batch is applied atomically once the stream moves past that timestamp (or
``flush`` is called): all users' point estimates are snapshotted first,
then every involved user is corrected against the snapshot, receives
measurement-drawn samples, and is resampled if its ESS degenerated. A
single observation constrains both endpoints by default, since the range
model is symmetric in the two users.

Each user consumes an independent random stream derived from the config
seed and the user id, so results do not depend on processing order inside
a batch and re-running a (config, seed, log) triple is bit-identical.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np

from .core import (Belief, FilterConfig, InertialDelta, MeasurementEvent,
                   Pose, RangeObservation, UserId, weighted_mean_pose)
from .errors import DegenerateCorrection, OutOfOrderError, RegistrationError
from .filtering import (KdeConfig, NeighborConstraint, correct, dual_inject,
                        init_known, init_offset, maybe_resample)
from .motion import predict


@dataclass
class RangingBatch:
    """All range observations sharing one timestamp."""

    t: float
    observations: list[RangeObservation]


class Engine:
    """Single-writer event loop over per-user beliefs.

    Snapshots are immutable copies and safe to read from elsewhere; all
    mutation happens through ``register_user``, ``ingest`` and ``flush``.
    """

    def __init__(self, cfg: FilterConfig, kde: KdeConfig | None = None):
        self.cfg = cfg
        self.kde = kde if kde is not None else KdeConfig()
        self.beliefs: dict[UserId, Belief] = {}
        self.clock = 0.0
        self.dropped_observations = 0
        self.batch_durations: list[float] = []
        self._pending: list[RangeObservation] = []
        self._rngs: dict[UserId, np.random.Generator] = {}

    def register_user(self, user: UserId, prior: Pose, shift: float = 0.0) -> None:
        """Create the user's belief at the prior (optionally offset by
        ``shift`` meters in a random direction)."""
        if user in self.beliefs:
            raise RegistrationError(f"user {user} already registered")
        if user < 0:
            raise RegistrationError("user ids must be non-negative")
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=self.cfg.seed, spawn_key=(user,)))
        self._rngs[user] = rng
        if shift > 0:
            self.beliefs[user] = init_offset(prior, shift, self.cfg, rng, owner=user)
        else:
            self.beliefs[user] = init_known(prior, self.cfg, owner=user)

    def ingest(self, event: MeasurementEvent) -> None:
        """Fold one event into the engine.

        Events older than the clock (minus the reorder tolerance) are
        rejected without touching any state. Range observations touching an
        unregistered user are dropped and counted rather than raised, since
        a tag may be heard before it is registered.
        """
        t = event.t
        if t < self.clock - self.cfg.reorder_tolerance:
            raise OutOfOrderError(f"event at t={t} behind engine clock {self.clock}")
        if self._pending and t > self._pending[0].t:
            self.flush()
        if isinstance(event, InertialDelta):
            belief = self.beliefs.get(event.user)
            if belief is None:
                raise RegistrationError(f"inertial event for unregistered user {event.user}")
            self.beliefs[event.user] = predict(belief, event, self.cfg.motion,
                                               self._rngs[event.user])
        else:
            if event.from_user in self.beliefs and event.to_user in self.beliefs:
                self._pending.append(event)
            else:
                self.dropped_observations += 1
        self.clock = max(self.clock, t)

    def flush(self) -> None:
        """Apply the buffered ranging batch, if any."""
        if not self._pending:
            return
        start = time.perf_counter()
        batch = RangingBatch(self._pending[0].t,
                             sorted(self._pending, key=lambda o: (o.from_user, o.to_user)))
        self._pending = []

        estimates = {u: weighted_mean_pose(b) for u, b in self.beliefs.items()}
        constraints: dict[UserId, list[NeighborConstraint]] = {}
        for obs in batch.observations:
            constraints.setdefault(obs.from_user, []).append(
                NeighborConstraint(obs.z, estimates[obs.to_user], obs.to_user))
            if self.cfg.symmetric_ranging:
                constraints.setdefault(obs.to_user, []).append(
                    NeighborConstraint(obs.z, estimates[obs.from_user], obs.from_user))

        for user in sorted(constraints):
            batch_constraints = sorted(constraints[user], key=lambda c: (c.neighbor, c.z))
            rng = self._rngs[user]
            belief = self.beliefs[user]
            try:
                updated = correct(belief, batch_constraints, self.cfg.ranging)
            except DegenerateCorrection:
                # Positioning failure: rebuild the whole set from measurements.
                updated = dual_inject(belief, batch_constraints,
                                      replace(self.cfg, alpha=1.0), self.kde, rng)
            else:
                if self.cfg.alpha > 0 and not self.cfg.dual_on_failure_only:
                    updated = dual_inject(updated, batch_constraints, self.cfg,
                                          self.kde, rng)
            self.beliefs[user] = maybe_resample(updated, self.cfg, rng)
        self.batch_durations.append(time.perf_counter() - start)

    def snapshot(self) -> dict[UserId, Pose]:
        """Weighted-mean pose of every registered user. Pure read; a still
        buffered ranging batch is not applied."""
        return {u: weighted_mean_pose(b) for u, b in self.beliefs.items()}

    def estimate(self, user: UserId) -> Pose:
        return weighted_mean_pose(self.beliefs[user])
