"""Run configuration: a JSON document whose defaults reproduce the reference device."""
from __future__ import annotations

import json
import os
import re
from dataclasses import asdict, dataclass, field, fields
from typing import Optional

import numpy as np

from .model import DomainError, SystemParams
from .synthesis import FrequencyPlan, ThermalCalibration

__all__ = ["ConfigError", "Grid", "RunConfig", "load_config", "parse_quantity", "CONFIG_ENV"]

CONFIG_ENV = "BRILLOUIN_OMIT_CONFIG"


class ConfigError(DomainError):
    pass


@dataclass(frozen=True)
class Grid:
    """Symmetric grid ``center + linspace(-span, span, points)`` [Hz]."""

    span: float
    points: int

    def __post_init__(self):
        if not (self.span > 0 and np.isfinite(self.span)):
            raise ConfigError(f"grid span must be positive, got {self.span!r}")
        if int(self.points) != self.points or self.points < 2:
            raise ConfigError(f"grid needs at least 2 points, got {self.points!r}")

    def around(self, center: float) -> np.ndarray:
        return center + np.linspace(-self.span, self.span, int(self.points))


@dataclass(frozen=True)
class RunConfig:
    system: SystemParams = field(default_factory=SystemParams)
    thermal: ThermalCalibration = field(default_factory=ThermalCalibration)
    plan: FrequencyPlan = field(default_factory=FrequencyPlan)
    omega_grid: Grid = Grid(30e6, 601)   # offsets from omega_m
    delta_grid: Grid = Grid(20e6, 81)
    noise_sigma: float = 0.0
    seed: int = 0
    bath_temperature: float = 296.0      # K
    out: Optional[str] = None

    def __post_init__(self):
        if not self.noise_sigma >= 0:
            raise ConfigError("noise_sigma must be non-negative")
        if not self.bath_temperature >= 0:
            raise ConfigError("bath_temperature must be non-negative")
        if int(self.seed) != self.seed:
            raise ConfigError("seed must be an integer")

    def to_dict(self) -> dict:
        return asdict(self)


_SECTIONS = {
    "system": SystemParams,
    "thermal": ThermalCalibration,
    "plan": FrequencyPlan,
    "omega_grid": Grid,
    "delta_grid": Grid,
}


def _build(cls, data, where):
    if not isinstance(data, dict):
        raise ConfigError(f"{where} must be an object")
    names = {f.name for f in fields(cls)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown keys in {where}: {sorted(unknown)}")
    for key, value in data.items():
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}.{key} must be a number")
    try:
        return cls(**data)
    except DomainError as exc:
        raise ConfigError(f"{where}: {exc}") from None


def config_from_dict(data: dict) -> RunConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    names = {f.name for f in fields(RunConfig)}
    unknown = set(data) - names
    if unknown:
        raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    kwargs = {}
    for key, value in data.items():
        if key in _SECTIONS:
            kwargs[key] = _build(_SECTIONS[key], value, key)
        else:
            kwargs[key] = value
    try:
        return RunConfig(**kwargs)
    except (TypeError, DomainError) as exc:
        raise ConfigError(str(exc)) from None


def load_config(path: Optional[str] = None) -> RunConfig:
    """Read a config file; ``None`` falls back to ``$BRILLOUIN_OMIT_CONFIG`` then defaults.

    Raises OSError when the file cannot be read and ConfigError when it is invalid.
    """
    path = path or os.environ.get(CONFIG_ENV)
    if not path:
        return RunConfig()
    with open(path, encoding="utf-8") as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from None
    try:
        return config_from_dict(data)
    except ConfigError as exc:
        raise ConfigError(f"{path}: {exc}") from None


_PREFIX = {"": 1.0, "p": 1e-12, "n": 1e-9, "u": 1e-6, "µ": 1e-6, "m": 1e-3,
           "k": 1e3, "M": 1e6, "G": 1e9, "T": 1e12}
_QUANTITY = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*([a-zA-Zµ]*)\s*$")


def parse_quantity(text: str, unit: str) -> float:
    """Parse ``"277.8mW"``, ``"5 MHz"`` or a bare SI number for the given unit."""
    m = _QUANTITY.match(text)
    if not m:
        raise ConfigError(f"cannot parse {text!r} as a quantity in {unit}")
    value, suffix = float(m.group(1)), m.group(2)
    if not suffix:
        return value
    if not suffix.endswith(unit):
        raise ConfigError(f"{text!r}: expected a value in {unit}")
    prefix = suffix[: -len(unit)]
    if prefix not in _PREFIX:
        raise ConfigError(f"{text!r}: unknown SI prefix {prefix!r}")
    return value * _PREFIX[prefix]
