"""Canonical file formats: event logs, truth files, timelines, tables.

The event log is line-oriented and diff-able. A header section declares
every user with its prior pose, then one record per measurement follows,
comma-separated with a fixed column order:

    # peerloc log v1
    user,<id>,<x>,<y>,<theta>
    <t>,imu,<user>,<dx>,<dy>,<dtheta>
    <t>,uwb,<from>,<to>,<z>

Timestamps carry millisecond precision; all other floats use shortest
round-trip formatting, so writing a parsed canonical file reproduces it
byte for byte. Timestamps must be non-decreasing file-wide and strictly
increasing per user for inertial records.
"""

from __future__ import annotations

import numpy as np

from .core import (InertialDelta, MeasurementEvent, Pose, RangeObservation,
                   UserId)
from .errors import LogParseError
from .simulate import GroundTruth

LOG_MAGIC = "# peerloc log v1"
TRUTH_HEADER = "t,user,x,y,theta"
TIMELINE_HEADER = "t,user,x,y,theta"


def _f(x: float) -> str:
    return repr(float(x))


def _t(t: float) -> str:
    return f"{t:.3f}"


# ---------------------------------------------------------------- event log

def format_event_log(priors: list[tuple[UserId, Pose]],
                     events: list[MeasurementEvent]) -> str:
    lines = [LOG_MAGIC]
    for user, pose in priors:
        lines.append(f"user,{user},{_f(pose.x)},{_f(pose.y)},{_f(pose.theta)}")
    for e in events:
        if isinstance(e, InertialDelta):
            lines.append(f"{_t(e.t)},imu,{e.user},{_f(e.dx)},{_f(e.dy)},{_f(e.dtheta)}")
        else:
            lines.append(f"{_t(e.t)},uwb,{e.from_user},{e.to_user},{_f(e.z)}")
    return "\n".join(lines) + "\n"


def write_event_log(path, priors, events) -> None:
    with open(path, "w") as fh:
        fh.write(format_event_log(priors, events))


def parse_event_log(text: str) -> tuple[list[tuple[UserId, Pose]], list[MeasurementEvent]]:
    lines = text.splitlines()
    if not lines or lines[0].strip() != LOG_MAGIC:
        raise LogParseError(f"expected magic line {LOG_MAGIC!r}", 1)
    priors: list[tuple[UserId, Pose]] = []
    events: list[MeasurementEvent] = []
    seen_users: set[UserId] = set()
    last_t = None
    last_imu_t: dict[UserId, float] = {}
    for no, raw in enumerate(lines[1:], start=2):
        line = raw.strip()
        if not line:
            continue
        fields = line.split(",")
        try:
            if fields[0] == "user":
                if events:
                    raise ValueError("user declaration after events")
                user = int(fields[1])
                if user in seen_users:
                    raise ValueError(f"duplicate user {user}")
                if len(fields) != 5:
                    raise ValueError("user line needs id,x,y,theta")
                seen_users.add(user)
                priors.append((user, Pose(*map(float, fields[2:5]))))
                continue
            t = float(fields[0])
            if last_t is not None and t < last_t:
                raise ValueError(f"timestamp {t} decreases (previous {last_t})")
            last_t = t
            kind = fields[1]
            if kind == "imu":
                if len(fields) != 6:
                    raise ValueError("imu record needs t,imu,user,dx,dy,dtheta")
                user = int(fields[2])
                if user in last_imu_t and t <= last_imu_t[user]:
                    raise ValueError(f"imu timestamps must strictly increase for user {user}")
                last_imu_t[user] = t
                events.append(InertialDelta(user, t, *map(float, fields[3:6])))
            elif kind == "uwb":
                if len(fields) != 5:
                    raise ValueError("uwb record needs t,uwb,from,to,z")
                events.append(RangeObservation(int(fields[2]), int(fields[3]),
                                               float(fields[4]), t))
            else:
                raise ValueError(f"unknown record kind {kind!r}")
        except LogParseError:
            raise
        except (ValueError, IndexError) as exc:
            raise LogParseError(str(exc), no) from exc
    return priors, events


def read_event_log(path) -> tuple[list[tuple[UserId, Pose]], list[MeasurementEvent]]:
    with open(path) as fh:
        return parse_event_log(fh.read())


# ------------------------------------------------------------- truth files

def write_truth(path, truth: GroundTruth) -> None:
    with open(path, "w") as fh:
        fh.write(TRUTH_HEADER + "\n")
        for k, t in enumerate(truth.times):
            for i, user in enumerate(truth.users):
                x, y, theta = truth.poses[i, k]
                fh.write(f"{_t(t)},{user},{_f(x)},{_f(y)},{_f(theta)}\n")


def read_truth(path) -> GroundTruth:
    with open(path) as fh:
        lines = fh.read().splitlines()
    if not lines or lines[0].strip() != TRUTH_HEADER:
        raise LogParseError(f"expected header {TRUTH_HEADER!r}", 1)
    rows: dict[UserId, list[tuple[float, float, float, float]]] = {}
    for no, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        try:
            if len(fields) != 5:
                raise ValueError("truth record needs t,user,x,y,theta")
            t = float(fields[0])
            user = int(fields[1])
            rows.setdefault(user, []).append(
                (t, float(fields[2]), float(fields[3]), float(fields[4])))
        except ValueError as exc:
            raise LogParseError(str(exc), no) from exc
    if not rows:
        raise LogParseError("truth file has no records", 2)
    users = tuple(sorted(rows))
    times = np.array([r[0] for r in rows[users[0]]])
    poses = np.empty((len(users), len(times), 3))
    for i, user in enumerate(users):
        if len(rows[user]) != len(times):
            raise LogParseError(f"user {user} has a truth gap", 2)
        poses[i] = np.array([r[1:] for r in rows[user]])
    return GroundTruth(users, times, poses)


# ---------------------------------------------------------- timeline files

def write_timeline(path, timeline) -> None:
    with open(path, "w") as fh:
        fh.write(f"# peerloc timeline config={timeline.config_hash} seed={timeline.seed}\n")
        fh.write(TIMELINE_HEADER + "\n")
        for k, t in enumerate(timeline.times):
            for i, user in enumerate(timeline.users):
                x, y, theta = timeline.poses[i, k]
                fh.write(f"{_t(t)},{user},{_f(x)},{_f(y)},{_f(theta)}\n")


def read_timeline(path):
    from .replay import EstimateTimeline  # local import to avoid a cycle
    with open(path) as fh:
        lines = fh.read().splitlines()
    config_hash, seed = "", 0
    body = lines
    if lines and lines[0].startswith("#"):
        for token in lines[0].split():
            if token.startswith("config="):
                config_hash = token.split("=", 1)[1]
            elif token.startswith("seed="):
                seed = int(token.split("=", 1)[1])
        body = lines[1:]
    if not body or body[0].strip() != TIMELINE_HEADER:
        raise LogParseError(f"expected header {TIMELINE_HEADER!r}", 1)
    rows: dict[UserId, list[tuple[float, float, float, float]]] = {}
    for no, line in enumerate(body[1:], start=2):
        if not line.strip():
            continue
        fields = line.split(",")
        try:
            if len(fields) != 5:
                raise ValueError("timeline record needs t,user,x,y,theta")
            rows.setdefault(int(fields[1]), []).append(
                (float(fields[0]), float(fields[2]), float(fields[3]), float(fields[4])))
        except ValueError as exc:
            raise LogParseError(str(exc), no) from exc
    if not rows:
        raise LogParseError("timeline file has no records", 2)
    users = tuple(sorted(rows))
    times = np.array([r[0] for r in rows[users[0]]])
    poses = np.empty((len(users), len(times), 3))
    for i, user in enumerate(users):
        if len(rows[user]) != len(times):
            raise LogParseError(f"user {user} is missing timeline rows", 2)
        poses[i] = np.array([r[1:] for r in rows[user]])
    return EstimateTimeline(users, times, poses, config_hash, seed)


# ------------------------------------------------------------ small tables

def write_error_timeline(path, errors: np.ndarray, config_hash: str = "") -> None:
    """(T, 2) array of (t, rmse) to CSV."""
    with open(path, "w") as fh:
        if config_hash:
            fh.write(f"# config={config_hash}\n")
        fh.write("t,rmse\n")
        for t, r in errors:
            fh.write(f"{_t(t)},{_f(r)}\n")


def write_sweep(path, rows, config_hash: str = "") -> None:
    with open(path, "w") as fh:
        if config_hash:
            fh.write(f"# config={config_hash}\n")
        fh.write("axis,value,mean_rmse,std_rmse,mean_update_s,median_update_s,seeds\n")
        for r in rows:
            fh.write(f"{r.axis},{_f(r.value)},{_f(r.mean_rmse)},{_f(r.std_rmse)},"
                     f"{_f(r.mean_update_s)},{_f(r.median_update_s)},{r.seeds}\n")


def write_metrics(path, values: dict) -> None:
    with open(path, "w") as fh:
        for key in sorted(values):
            fh.write(f"{key}={values[key]}\n")


def write_gnuplot(path, columns: list[str], rows) -> None:
    """Whitespace-separated data block consumable by gnuplot."""
    with open(path, "w") as fh:
        fh.write("# " + " ".join(columns) + "\n")
        for row in rows:
            fh.write(" ".join(_f(v) if isinstance(v, float) else str(v) for v in row) + "\n")
