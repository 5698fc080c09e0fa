import numpy as np
import pytest

from conftest import SPD, house_scenario
from thermident.grid_edge import hvac_power
from thermident.plant import (
    Mode,
    ThermostatConfig,
    WeatherConfig,
    commercial_plant,
    gen_weather,
    generate_dataset,
    house_plant,
    thermostat_step,
)
from thermident.thermal_core import model_matrices, simulate


def test_weather_shape_bounds_and_determinism():
    cfg = WeatherConfig(n_days=7)
    w = gen_weather(cfg)
    assert w.shape == (7 * SPD, 3)
    assert np.all(w[:, 0] >= 18.0 - 1e-9) and np.all(w[:, 0] <= 30.0 + 1e-9)
    assert w[:, 0].min() == pytest.approx(18.0) and w[:, 0].max() == pytest.approx(30.0)
    assert np.all(w[::SPD, 2] == 0.0)  # midnight
    assert np.all(w[:, 2] >= 0)
    np.testing.assert_array_equal(w, gen_weather(cfg))
    noisy = WeatherConfig(n_days=3, noise_std=0.3, rng_seed=5)
    np.testing.assert_array_equal(gen_weather(noisy), gen_weather(noisy))
    assert not np.array_equal(gen_weather(noisy), gen_weather(WeatherConfig(n_days=3, noise_std=0.3, rng_seed=6)))


def test_noiseless_ambient_range_is_exact():
    t_am = gen_weather(WeatherConfig(n_days=2, ambient_mean=25.0, ambient_amplitude=5.0))[:, 0]
    assert t_am.min() == pytest.approx(20.0, abs=1e-12)
    assert t_am.max() == pytest.approx(30.0, abs=1e-12)


def test_weather_validation():
    with pytest.raises(ValueError):
        WeatherConfig(n_days=0)
    with pytest.raises(ValueError):
        WeatherConfig(t_s=7)
    with pytest.raises(ValueError):
        WeatherConfig(clearness_min=1.5)


@pytest.mark.parametrize(
    "t_z, mode, expected",
    [
        (23.5, Mode.OFF, (Mode.COOLING, -7000.0)),
        (22.5, Mode.OFF, (Mode.OFF, 0.0)),
        (21.5, Mode.COOLING, (Mode.COOLING, -7000.0)),
        (20.9, Mode.COOLING, (Mode.OFF, 0.0)),
        (10.0, Mode.OFF, (Mode.OFF, 0.0)),  # cooling-only unit never heats
    ],
)
def test_thermostat_cooling_only(t_z, mode, expected):
    assert thermostat_step(t_z, ThermostatConfig(), mode) == expected


def test_thermostat_dual_mode():
    cfg = ThermostatConfig(cool_capacity=5000, heat_capacity=4000)
    assert thermostat_step(20.5, cfg, Mode.OFF) == (Mode.HEATING, 4000.0)
    assert thermostat_step(21.5, cfg, Mode.HEATING) == (Mode.HEATING, 4000.0)
    assert thermostat_step(22.1, cfg, Mode.HEATING) == (Mode.OFF, 0.0)
    assert thermostat_step(21.9, cfg, Mode.COOLING) == (Mode.OFF, 0.0)
    with pytest.raises(ValueError):
        thermostat_step(float("nan"), cfg)
    with pytest.raises(ValueError):
        ThermostatConfig(deadband=0)


def test_one_week_dataset():
    w = gen_weather(WeatherConfig(n_days=7))
    ds = generate_dataset(house_plant(), ThermostatConfig(setpoint=23, cool_capacity=5000), w)
    assert len(ds) == 1008
    assert np.all(ds.p_c * ds.p_h == 0)
    assert np.all(ds.p_h == 0)
    np.testing.assert_allclose(ds.p_c, [hvac_power(q, 3.0) for q in ds.q_hvac])


def test_noiseless_measurements_equal_the_true_trace():
    w = gen_weather(WeatherConfig(n_days=3))
    plant = house_plant()
    ds = generate_dataset(plant, ThermostatConfig(setpoint=23, cool_capacity=5000), w)
    _, y = simulate(model_matrices(plant.topology, plant.params, 600), np.full(4, 23.0), ds.q_hvac, w)
    np.testing.assert_allclose(ds.t_z, y, rtol=1e-12)


def test_house_scenario_tracks_setpoint():
    ds = house_scenario(days=14)
    near = np.abs(ds.t_z - 23.0) <= 1.2
    assert near.mean() >= 0.95
    duty = np.mean(ds.q_hvac < 0)
    assert 0.1 <= duty <= 0.8


def test_commercial_plant_runs_both_modes():
    cfg = WeatherConfig(n_days=7, ambient_mean=13, ambient_amplitude=8, solar_peak=15000,
                        internal_base=500, internal_peak=12000, occupied_from=8, occupied_to=18)
    ds = generate_dataset(commercial_plant(), ThermostatConfig(setpoint=23, cool_capacity=20000,
                                                               heat_capacity=20000), gen_weather(cfg))
    assert np.any(ds.p_c > 0) and np.any(ds.p_h > 0)
    assert np.all(ds.p_c * ds.p_h == 0)
    assert np.all(np.abs(ds.t_z - 23) <= 3)


def test_measurement_noise_is_seeded():
    w = gen_weather(WeatherConfig(n_days=1))
    a = generate_dataset(house_plant(), ThermostatConfig(), w, meas_noise_std=0.1, rng_seed=4)
    b = generate_dataset(house_plant(), ThermostatConfig(), w, meas_noise_std=0.1, rng_seed=4)
    assert a.equals(b)
    clean = generate_dataset(house_plant(), ThermostatConfig(), w)
    assert np.std(a.t_z - clean.t_z) == pytest.approx(0.1, rel=0.2)
