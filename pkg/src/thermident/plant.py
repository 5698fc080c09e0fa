"""Synthetic truth plants, weather and thermostat-controlled data generation."""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from datetime import datetime

import numpy as np

from .dataset import DEFAULT_START, Dataset
from .grid_edge import hvac_power
from .thermal_core import RcParameters, RcTopology, model_matrices

DEFAULT_COP = 3.0


class Mode(str, enum.Enum):
    OFF = "Off"
    COOLING = "Cooling"
    HEATING = "Heating"


@dataclass(frozen=True)
class WeatherConfig:
    """Synthetic summer weather.

    Ambient temperature is a diurnal sinusoid (minimum 03:00, maximum
    15:00) plus an optional per-day offset, linearly interpolated between
    day midpoints, plus white noise. Solar gain is a half-rectified sinusoid
    over 06:00-18:00 scaled by a per-day clearness factor. Internal gain is
    a daily square wave between ``internal_base`` and ``internal_peak``.
    """

    n_days: int = 7
    t_s: float = 600.0
    ambient_mean: float = 24.0
    ambient_amplitude: float = 6.0
    solar_peak: float = 3000.0
    internal_base: float = 300.0
    internal_peak: float = 900.0
    noise_std: float = 0.0
    rng_seed: int = 0
    daily_offset_std: float = 0.0
    clearness_min: float = 1.0
    occupied_from: float = 17.0
    occupied_to: float = 23.0

    def __post_init__(self):
        if self.n_days < 1:
            raise ValueError("n_days must be >= 1")
        if not self.t_s > 0 or 86400 % self.t_s:
            raise ValueError("t_s must divide a day")
        for name in ("ambient_amplitude", "solar_peak", "noise_std", "daily_offset_std"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        if not 0 <= self.clearness_min <= 1:
            raise ValueError("clearness_min must lie in [0, 1]")
        if self.internal_base < 0 or self.internal_peak < 0:
            raise ValueError("internal gains must be >= 0")


def gen_weather(cfg: WeatherConfig) -> np.ndarray:
    """Disturbance sequence ``[t_am, q_int, q_solar]`` of shape (T, 3)."""
    per_day = int(86400 // cfg.t_s)
    n = cfg.n_days * per_day
    rng = np.random.default_rng(cfg.rng_seed)
    hours = (np.arange(n) * cfg.t_s / 3600.0) % 24.0
    day = np.arange(n) // per_day

    offsets = cfg.daily_offset_std * rng.standard_normal(cfg.n_days + 1)
    clearness = rng.uniform(cfg.clearness_min, 1.0, cfg.n_days)
    noise = cfg.noise_std * rng.standard_normal(n)

    t_days = np.arange(n) * cfg.t_s / 86400.0
    offset = np.interp(t_days, np.arange(cfg.n_days + 1), offsets)
    t_am = (
        cfg.ambient_mean
        + offset
        + cfg.ambient_amplitude * np.sin(2 * np.pi * (hours - 9.0) / 24.0)
        + noise
    )
    q_solar = cfg.solar_peak * clearness[day] * np.maximum(0.0, np.sin(np.pi * (hours - 6.0) / 12.0))
    q_solar[q_solar < 1e-9] = 0.0
    occupied = (hours >= cfg.occupied_from) & (hours < cfg.occupied_to)
    q_int = np.where(occupied, cfg.internal_peak, cfg.internal_base)
    return np.column_stack([t_am, q_int, q_solar])


@dataclass(frozen=True)
class ThermostatConfig:
    """Hysteresis thermostat around ``setpoint`` with half-width ``deadband``."""

    setpoint: float = 22.0
    deadband: float = 1.0
    cool_capacity: float = 7000.0
    heat_capacity: float = 0.0
    mode: Mode = Mode.OFF

    def __post_init__(self):
        if not self.deadband > 0:
            raise ValueError("deadband must be > 0")
        for name in ("cool_capacity", "heat_capacity"):
            v = getattr(self, name)
            if not (v >= 0 and math.isfinite(v)):
                raise ValueError(f"{name} must be finite and >= 0")
        object.__setattr__(self, "mode", Mode(self.mode))


def thermostat_step(t_z: float, cfg: ThermostatConfig, mode: Mode | None = None) -> tuple[Mode, float]:
    """Next HVAC mode and heat rate for a zone reading ``t_z``.

    Cooling engages above ``setpoint + deadband`` and heating below
    ``setpoint - deadband``. A cooling-only unit holds cooling until the zone
    falls below ``setpoint - deadband``. When both capacities are present,
    each mode releases at the setpoint instead, otherwise a cooling release
    would immediately trigger heating and vice versa.
    """
    if not math.isfinite(t_z):
        raise ValueError("zone temperature must be finite")
    mode = Mode(cfg.mode if mode is None else mode)
    hi = cfg.setpoint + cfg.deadband
    lo = cfg.setpoint - cfg.deadband
    can_cool = cfg.cool_capacity > 0
    can_heat = cfg.heat_capacity > 0
    dual = can_cool and can_heat
    if mode is Mode.COOLING:
        if t_z < (cfg.setpoint if dual else lo):
            mode = Mode.OFF
    elif mode is Mode.HEATING:
        if t_z > (cfg.setpoint if dual else hi):
            mode = Mode.OFF
    if mode is Mode.OFF:
        if can_cool and t_z > hi:
            mode = Mode.COOLING
        elif can_heat and t_z < lo:
            mode = Mode.HEATING
    if mode is Mode.COOLING and not can_cool or mode is Mode.HEATING and not can_heat:
        mode = Mode.OFF
    q = {Mode.OFF: 0.0, Mode.COOLING: -cfg.cool_capacity, Mode.HEATING: cfg.heat_capacity}[mode]
    return mode, q


@dataclass(frozen=True)
class TruthPlant:
    topology: RcTopology
    params: RcParameters
    cop: float = DEFAULT_COP
    name: str = "custom"

    def __post_init__(self):
        self.params.validate(self.topology)
        if not self.cop > 0:
            raise ValueError("cop must be > 0")


def house_plant() -> TruthPlant:
    """4-state single-family house: exterior walls, roof, internal mass.

    Time constants are hours to days; the 7 kW cooling unit runs at roughly
    a 20-60 % duty cycle in the shipped summer weather.
    """
    topology = RcTopology(
        n_hidden=3, wall_wall_coupled=((0, 1),), gains_on_walls=True, preset_name="custom"
    )
    params = RcParameters(
        r_za=0.02,
        c_z=1.5e7,
        a_z=1.0,
        b_z=0.6,
        d_z=0.3,
        r_zw=[0.004, 0.01, 0.002],
        r_wa=[0.006, 0.008, 1.0],
        c_w=[3e7, 1e7, 2e7],
        b_w=[0.1, 0.0, 0.3],
        d_w=[0.4, 0.3, 0.2],
        r_w=[[np.inf, 0.02, np.inf], [0.02, np.inf, np.inf], [np.inf, np.inf, np.inf]],
    )
    return TruthPlant(topology, params, name="house-4state")


def commercial_plant() -> TruthPlant:
    """2-state office surrogate (zone air + envelope), heating and cooling."""
    topology = RcTopology(n_hidden=1, gains_on_walls=True, preset_name="custom")
    params = RcParameters(
        r_za=0.004,
        c_z=3e7,
        a_z=1.0,
        b_z=0.8,
        d_z=0.5,
        r_zw=[0.001],
        r_wa=[0.003],
        c_w=[2e8],
        b_w=[0.2],
        d_w=[0.5],
    )
    return TruthPlant(topology, params, name="commercial-2state")


_PRESET_TRUTH = {
    "R-1": dict(r_za=0.005, c_z=2.5e7, a_z=1.0, b_z=0.7, d_z=0.4),
    "R-2": dict(r_za=0.02, r_zw1=0.003, r_wa1=0.008, c_z=1.5e7, c_w1=4e7, a_z=1.0, d_z=0.4),
    "R-4": dict(
        r_za=0.02, r_zw1=0.004, r_zw2=0.01, r_zw3=0.002, r_wa1=0.006, r_wa2=0.008, r_wa3=1.0,
        c_z=1.5e7, c_w1=3e7, c_w2=1e7, c_w3=2e7, a_z=1.0,
    ),
    "C-1": dict(r_za=0.002, c_z=4e7, a_z=1.0),
    "C-2": dict(r_za=0.004, r_zw1=0.001, r_wa1=0.003, c_z=3e7, c_w1=2e8, a_z=1.0),
}


def preset_truth(architecture: str, cop: float = DEFAULT_COP) -> TruthPlant:
    """A truth plant whose structure is exactly the named architecture."""
    topology = RcTopology.preset(architecture)
    params = RcParameters.from_dict(topology, _PRESET_TRUTH[architecture])
    return TruthPlant(topology, params, cop=cop, name=f"{architecture}-truth")


def generate_dataset(
    plant: TruthPlant,
    thermo: ThermostatConfig,
    weather,
    meas_noise_std: float = 0.0,
    rng_seed: int = 0,
    t_s: float = 600.0,
    x0=None,
    process_noise_cov=None,
    start: datetime = DEFAULT_START,
) -> Dataset:
    """Closed-loop rollout of ``plant`` under ``thermo`` driven by ``weather``.

    The thermostat reads the true zone temperature at each sample and its
    heat rate is applied over that sample. Recorded ``t_z`` is the true zone
    temperature plus Gaussian measurement noise. ``process_noise_cov``
    optionally adds Gaussian noise to every state transition.
    """
    weather = np.asarray(weather, dtype=float)
    if weather.ndim != 2 or weather.shape[1] != 3 or len(weather) == 0:
        raise ValueError("weather must be a non-empty (T, 3) array")
    dss = model_matrices(plant.topology, plant.params, t_s)
    n = dss.n_states
    T = len(weather)
    x = np.full(n, thermo.setpoint) if x0 is None else np.asarray(x0, dtype=float).copy()
    rng = np.random.default_rng(rng_seed)
    meas_noise = meas_noise_std * rng.standard_normal(T)
    if process_noise_cov is not None:
        chol = np.linalg.cholesky(np.asarray(process_noise_cov, dtype=float))
        proc = rng.standard_normal((T, n)) @ chol.T
    else:
        proc = np.zeros((T, n))

    t_z = np.empty(T)
    q_hvac = np.empty(T)
    mode = thermo.mode
    ad, bd, dd = dss.ad, dss.bd[:, 0], dss.dd
    for k in range(T):
        t_z[k] = x[0]
        mode, q = thermostat_step(x[0], thermo, mode)
        q_hvac[k] = q
        x = ad @ x + bd * q + dd @ weather[k] + proc[k]
        if not np.all(np.isfinite(x)):
            raise FloatingPointError(f"plant rollout became non-finite at step {k}")

    p = np.array([hvac_power(q, plant.cop) for q in q_hvac])
    return Dataset(
        t_s=t_s,
        t_z=t_z + meas_noise,
        q_hvac=q_hvac,
        p_c=np.where(q_hvac < 0, p, 0.0),
        p_h=np.where(q_hvac > 0, p, 0.0),
        t_am=weather[:, 0],
        q_int=weather[:, 1],
        q_solar=weather[:, 2],
        start=start,
        metadata={"plant": plant.name},
    )


__all__ = [
    "DEFAULT_COP",
    "Mode",
    "WeatherConfig",
    "gen_weather",
    "ThermostatConfig",
    "thermostat_step",
    "TruthPlant",
    "house_plant",
    "commercial_plant",
    "preset_truth",
    "generate_dataset",
]
