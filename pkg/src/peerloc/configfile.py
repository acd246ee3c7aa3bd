"""Flat key=value configuration files and the config hash embedded in outputs.

One namespace covers scenario, filter, and run keys; the command line can
override any key with a flag of the same name. Unknown keys are rejected
so typos fail loudly.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

from .core import FilterConfig, MotionNoise, RangingNoise
from .errors import ConfigError
from .filtering import KdeConfig
from .simulate import DetectionModel, ScenarioConfig

# key -> (type tag, default). Type tags: int, float, bool, str.
CONFIG_KEYS: dict[str, tuple[str, object]] = {
    # scenario
    "area_w": ("float", 20.0),
    "area_h": ("float", 10.0),
    "path_w": ("float", 16.0),
    "path_h": ("float", 6.0),
    "n_users": ("int", 6),
    "spacing": ("float", 8.0),
    "speed": ("float", 0.5),
    "duration": ("float", 450.0),
    "imu_rate": ("float", 1.0),
    "uwb_rate": ("float", 0.5),
    "gen_sigma_d": ("float", 0.2),
    "gen_sigma_theta": ("float", 0.1),
    "gen_theta_floor": ("float", 0.0),
    "range_sigma": ("float", 1.5),
    "detection": ("str", "ideal"),
    "detection_max_range": ("float", 30.0),
    "prespaced_start": ("bool", False),
    # filter
    "m": ("int", 500),
    "alpha": ("float", 0.01),
    "sigma_d": ("float", 0.2),
    "sigma_theta": ("float", 0.1),
    "theta_floor": ("float", 0.0),
    "sigma_r": ("float", 2.0),
    "ess_fraction": ("float", 0.5),
    "dual_replacement": ("str", "lowest_weight"),
    "dual_on_failure_only": ("bool", False),
    "symmetric_ranging": ("bool", True),
    "reorder_tolerance": ("float", 0.0),
    "kde_bandwidth": ("str", "2.0"),
    # run options
    "init_shift": ("float", 0.0),
    "imu_only": ("bool", False),
    # shared
    "seed": ("int", 0),
}

DETECTION_PRESETS = ("ideal", "occluded_indoor")


def parse_kv_text(text: str) -> dict[str, str]:
    """Parse ``key=value`` lines; '#' starts a comment, blanks are skipped."""
    values: dict[str, str] = {}
    for no, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"config line {no}: expected key=value, got {raw!r}")
        key, value = line.split("=", 1)
        values[key.strip()] = value.strip()
    return values


def load_kv(path) -> dict[str, str]:
    try:
        with open(path) as fh:
            return parse_kv_text(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc


def parse_bool(value: str) -> bool:
    lowered = value.strip().lower()
    if lowered in ("true", "1", "yes", "on"):
        return True
    if lowered in ("false", "0", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {value!r}")


def coerce(key: str, value: str):
    if key not in CONFIG_KEYS:
        raise ConfigError(f"unknown config key {key!r}")
    kind = CONFIG_KEYS[key][0]
    try:
        if kind == "int":
            return int(value)
        if kind == "float":
            return float(value)
        if kind == "bool":
            return parse_bool(value)
        return value
    except ValueError as exc:
        raise ConfigError(f"config key {key}: {exc}") from exc


@dataclass
class ResolvedConfig:
    """Typed view over the merged flat configuration."""

    values: dict[str, object]

    def __getitem__(self, key: str):
        return self.values[key]

    def scenario(self) -> ScenarioConfig:
        v = self.values
        if v["detection"] not in DETECTION_PRESETS:
            raise ConfigError(f"detection must be one of {DETECTION_PRESETS}")
        if v["detection"] == "occluded_indoor":
            detection = DetectionModel.occluded_indoor()
        else:
            detection = DetectionModel(max_range=v["detection_max_range"])
        return ScenarioConfig(
            area=(v["area_w"], v["area_h"]),
            path_rect=(v["path_w"], v["path_h"]),
            n_users=v["n_users"],
            spacing=v["spacing"],
            speed=v["speed"],
            duration=v["duration"],
            imu_rate=v["imu_rate"],
            uwb_rate=v["uwb_rate"],
            imu_noise=MotionNoise(v["gen_sigma_d"], v["gen_sigma_theta"],
                                  v["gen_theta_floor"]),
            range_sigma=v["range_sigma"],
            detection=detection,
            prespaced_start=v["prespaced_start"],
            seed=v["seed"])

    def filter(self) -> FilterConfig:
        v = self.values
        return FilterConfig(
            m=v["m"],
            alpha=v["alpha"],
            motion=MotionNoise(v["sigma_d"], v["sigma_theta"], v["theta_floor"]),
            ranging=RangingNoise(v["sigma_r"]),
            ess_fraction=v["ess_fraction"],
            seed=v["seed"],
            dual_replacement=v["dual_replacement"],
            dual_on_failure_only=v["dual_on_failure_only"],
            symmetric_ranging=v["symmetric_ranging"],
            reorder_tolerance=v["reorder_tolerance"])

    def kde(self) -> KdeConfig:
        raw = str(self.values["kde_bandwidth"])
        if raw == "scott":
            return KdeConfig("scott")
        try:
            return KdeConfig("fixed", float(raw))
        except ValueError as exc:
            raise ConfigError(
                f"kde_bandwidth must be 'scott' or a width in meters, got {raw!r}") from exc

    def dump(self) -> str:
        return "".join(f"{k}={_render(self.values[k])}\n" for k in sorted(self.values))

    def hash(self) -> str:
        return hashlib.sha256(self.dump().encode()).hexdigest()[:12]


def _render(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


def resolve(file_values: dict[str, str] | None = None,
            overrides: dict[str, object] | None = None) -> ResolvedConfig:
    """defaults <- config file <- explicit overrides."""
    merged: dict[str, object] = {k: default for k, (_, default) in CONFIG_KEYS.items()}
    for key, raw in (file_values or {}).items():
        merged[key] = coerce(key, raw)
    for key, value in (overrides or {}).items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        merged[key] = value
    return ResolvedConfig(merged)
