"""Scenario configuration in a flat ``section.key = value`` text format.

Blank lines and ``#`` comments are ignored. Lists are comma separated.
Unknown keys are rejected so that typos do not silently fall back to
defaults. Seeds for weather, measurement noise and the optimizer are
derived from the single ``seed`` key, which ``--seed`` overrides.
"""
from __future__ import annotations

import hashlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .almon import PRESETS as ALS_PRESETS
from .estimation import METHODS as RC_METHODS
from .exceptions import ConfigurationError
from .thermal_core import PRESET_NAMES

ALLOWED_WINDOWS = (3, 5, 7, 14, 21)
BUILDINGS = ("house", "commercial")
METHODS = RC_METHODS + ("ALS",)
TEST_DAYS = 7

# key -> (type, default); list types hold their element type
_SCHEMA = {
    "building": (str, "house"),
    "seed": (int, 0),
    "scenario.total_days": (int, 99),
    "scenario.t_s": (float, 600.0),
    "scenario.test_days": (int, TEST_DAYS),
    "scenario.windows": ([int], [3, 7]),
    "scenario.methods": ([str], list(METHODS)),
    "scenario.architectures": ([str], ["R-1", "R-2", "R-4"]),
    "scenario.meas_noise_std": (float, 0.05),
    "als.preset": (str, "R-A"),
    "als.training_days": (str, "all"),
    "weather.ambient_mean": (float, 24.0),
    "weather.ambient_amplitude": (float, 6.0),
    "weather.solar_peak": (float, 3000.0),
    "weather.internal_base": (float, 300.0),
    "weather.internal_peak": (float, 900.0),
    "weather.noise_std": (float, 0.3),
    "weather.daily_offset_std": (float, 1.5),
    "weather.clearness_min": (float, 0.5),
    "weather.occupied_from": (float, 17.0),
    "weather.occupied_to": (float, 23.0),
    "training.setpoint": (float, 23.0),
    "training.deadband": (float, 1.0),
    "hvac.cool_capacity": (float, 5000.0),
    "hvac.heat_capacity": (float, 0.0),
    "evaluation.setpoint": (float, 22.0),
    "evaluation.deadband": (float, 1.0),
    "noise.q_proc": (float, 1e-4),
    "noise.r_meas": (float, 1e-2),
    "noise.p0": (float, 1.0),
    "optimizer.max_iters": (int, 2000),
    "optimizer.grad_tol": (float, 1e-7),
    "optimizer.multistart_count": (int, 3),
    "power.cop": (float, 3.0),
    "power.p_other": (float, 500.0),
    "power.power_factor": (float, 0.95),
}


def _convert(key: str, kind, raw: str):
    try:
        if isinstance(kind, list):
            items = [s.strip() for s in raw.split(",") if s.strip()]
            if not items:
                raise ValueError("empty list")
            return [kind[0](s) for s in items]
        return kind(raw)
    except ValueError as exc:
        raise ConfigurationError(f"bad value for {key!r}: {raw!r} ({exc})") from None


def parse_config_text(text: str) -> dict:
    values = {k: (list(d) if isinstance(d, list) else d) for k, (_, d) in _SCHEMA.items()}
    for line_no, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigurationError(f"line {line_no}: expected 'key = value'")
        key, raw = (s.strip() for s in line.split("=", 1))
        if key not in _SCHEMA:
            raise ConfigurationError(f"line {line_no}: unknown key {key!r}")
        values[key] = _convert(key, _SCHEMA[key][0], raw)
    return values


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario. ``values`` holds every key, defaults filled in."""

    values: dict = field(default_factory=dict)

    def __post_init__(self):
        v = self.values
        if v["building"] not in BUILDINGS:
            raise ConfigurationError(f"building must be one of {BUILDINGS}")
        if v["scenario.test_days"] != TEST_DAYS:
            raise ConfigurationError(f"the test window is fixed at {TEST_DAYS} days")
        bad = [w for w in v["scenario.windows"] if w not in ALLOWED_WINDOWS]
        if bad:
            raise ConfigurationError(f"windows {bad} not in {ALLOWED_WINDOWS}")
        if len(set(v["scenario.windows"])) != len(v["scenario.windows"]):
            raise ConfigurationError("duplicate training windows")
        bad = [m for m in v["scenario.methods"] if m not in METHODS]
        if bad:
            raise ConfigurationError(f"unknown methods {bad}; expected a subset of {METHODS}")
        bad = [a for a in v["scenario.architectures"] if a not in PRESET_NAMES]
        if bad:
            raise ConfigurationError(f"unknown architectures {bad}; expected {PRESET_NAMES}")
        if v["als.preset"] not in ALS_PRESETS:
            raise ConfigurationError(f"als.preset must be one of {tuple(ALS_PRESETS)}")
        t_s = v["scenario.t_s"]
        if not t_s > 0 or 86400 % t_s:
            raise ConfigurationError("scenario.t_s must divide a day")
        available = v["scenario.total_days"] - v["scenario.test_days"]
        if max(v["scenario.windows"]) > available:
            raise ConfigurationError("training windows exceed the pre-test data")
        if self.als_training_days() > available:
            raise ConfigurationError("als.training_days exceeds the pre-test data")
        if v["evaluation.deadband"] <= 0 or v["training.deadband"] <= 0:
            raise ConfigurationError("deadbands must be > 0")
        for key in ("power.cop", "noise.q_proc", "noise.r_meas", "noise.p0"):
            if not v[key] > 0:
                raise ConfigurationError(f"{key} must be > 0")
        if not 0 < v["power.power_factor"] <= 1:
            raise ConfigurationError("power.power_factor must lie in (0, 1]")
        if v["optimizer.max_iters"] < 1 or v["optimizer.multistart_count"] < 1:
            raise ConfigurationError("optimizer counts must be >= 1")

    def __getitem__(self, key):
        return self.values[key]

    def with_seed(self, seed: int | None) -> "ScenarioConfig":
        if seed is None:
            return self
        return ScenarioConfig({**self.values, "seed": int(seed)})

    def als_training_days(self) -> int:
        raw = self.values["als.training_days"]
        if raw == "all":
            return self.values["scenario.total_days"] - self.values["scenario.test_days"]
        try:
            days = int(raw)
        except ValueError:
            raise ConfigurationError("als.training_days must be 'all' or an integer") from None
        if days < 1:
            raise ConfigurationError("als.training_days must be >= 1")
        return days

    def rc_methods(self) -> list[str]:
        return [m for m in self.values["scenario.methods"] if m != "ALS"]

    def seeds(self) -> dict[str, int]:
        """Independent sub-seeds derived from the master seed."""
        weather, noise, optimizer = np.random.SeedSequence(self.values["seed"]).generate_state(3)
        return {"weather": int(weather), "noise": int(noise), "optimizer": int(optimizer)}

    def canonical_text(self) -> str:
        lines = []
        for key in sorted(self.values):
            value = self.values[key]
            if isinstance(value, list):
                value = ",".join(str(x) for x in value)
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{key}={value}")
        return "\n".join(lines) + "\n"

    def hash(self) -> str:
        return hashlib.sha256(self.canonical_text().encode()).hexdigest()[:16]


def load_config(path) -> ScenarioConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigurationError(f"cannot read config {path}: {exc.strerror or exc}") from None
    return ScenarioConfig(parse_config_text(text))
