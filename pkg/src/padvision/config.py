"""Configuration: one JSON document with camera, marker, detector and lander
sections.  Defaults are embedded here; a config file overrides individual
keys and CLI flags override the file.
"""

from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

from .shapes import CameraModel, MarkerSpec, ToleranceProfile

BINARIZE_MODES = ("interp", "window", "local", "global")


class ConfigError(ValueError):
    """Bad configuration file or values."""


@dataclass(frozen=True)
class PipelineOptions:
    binarize: str = "interp"
    connectivity: int = 8
    window: int = 128
    local_radius: int = 64

    def __post_init__(self):
        if self.binarize not in BINARIZE_MODES:
            raise ConfigError(f"binarize must be one of {BINARIZE_MODES}")
        if self.connectivity not in (4, 8):
            raise ConfigError("connectivity must be 4 or 8")


@dataclass(frozen=True)
class LanderParams:
    """Gains and thresholds of the landing state machine and its simulator."""

    kp_xy_per_cm: float = 0.02  # m/s of horizontal setpoint per cm of offset
    kp_yaw: float = 0.5  # deg/s per degree of orientation error
    v_xy_max: float = 0.5
    vz_max: float = 0.4
    yaw_rate_max: float = 30.0
    centring_px: float = 20.0
    centring_hold_s: float = 0.5
    yaw_band_deg: float = 5.0
    descend_vz: float = 0.2  # m/s downwards during descent phases
    orient_altitude_m: float = 1.0
    touchdown_m: float = 0.10
    loss_hold_s: float = 1.0
    loss_abort_s: float = 5.0
    abort_altitude_m: float = 1.5
    control_period_s: float = 1.0 / 60.0
    tau_s: float = 0.3  # first-order velocity response of the vehicle
    lidar_sigma_m: float = 0.02
    lidar_median_window: int = 7  # simulator-side running median on LiDAR
    lidar_max_m: float = 40.0
    timeout_s: float = 120.0
    # closed-loop simulation uses its own (cheaper) camera
    sim_camera: CameraModel = field(
        default_factory=lambda: CameraModel(width=256, height=192, focal_px=200.0)
    )
    sim_noise_sigma: float = 1.5
    sim_supersample: int = 2


@dataclass(frozen=True)
class Config:
    camera: CameraModel = field(default_factory=CameraModel)
    marker_spec: MarkerSpec = field(default_factory=MarkerSpec)
    thresholds: ToleranceProfile = field(default_factory=ToleranceProfile)
    pipeline: PipelineOptions = field(default_factory=PipelineOptions)
    lander: LanderParams = field(default_factory=LanderParams)


_SECTIONS = {
    "camera": CameraModel,
    "marker_spec": MarkerSpec,
    "thresholds": ToleranceProfile,
    "pipeline": PipelineOptions,
    "lander": LanderParams,
}


def _coerce(cls, current, values: dict):
    names = {f.name: f for f in dataclasses.fields(cls)}
    unknown = set(values) - set(names)
    if unknown:
        raise ConfigError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    fixed = {}
    for key, value in values.items():
        if key == "sim_camera":
            value = _coerce(CameraModel, getattr(current, key), value)
        elif isinstance(value, list):
            value = tuple(value)
        elif isinstance(value, dict) and key == "extents":
            value = {k: tuple(v) for k, v in value.items()}
        fixed[key] = value
    try:
        return dataclasses.replace(current, **fixed)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad {cls.__name__} values: {exc}") from exc


def load_config(path=None) -> Config:
    """Defaults, overridden by the JSON file at `path` when given."""
    cfg = Config()
    if path is None:
        return cfg
    try:
        doc = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    unknown = set(doc) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    sections = {}
    for name, cls in _SECTIONS.items():
        if name in doc:
            if not isinstance(doc[name], dict):
                raise ConfigError(f"config section {name!r} must be an object")
            sections[name] = _coerce(cls, getattr(cfg, name), doc[name])
    return dataclasses.replace(cfg, **sections)


def config_to_dict(cfg: Config) -> dict:
    """The full effective configuration as a JSON-compatible dict."""
    return dataclasses.asdict(cfg)
