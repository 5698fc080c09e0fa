import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermident.grid_edge import PowerParams, grid_edge_step, hvac_power, power_sample, reactive_power
from thermident.plant import preset_truth
from thermident.thermal_core import model_matrices, step


def test_hvac_power_examples():
    assert hvac_power(-6000, 3.0) == 2000.0
    assert hvac_power(6000, PowerParams(cop=3.0)) == 2000.0
    assert hvac_power(0.0, 3.0) == 0.0
    with pytest.raises(ValueError):
        hvac_power(100, 0.0)


def test_reactive_power_examples():
    assert reactive_power(100.0, 0.8) == pytest.approx(75.0)
    assert reactive_power(100.0, 1.0) == pytest.approx(0.0, abs=1e-12)
    np.testing.assert_allclose(reactive_power(np.array([100.0, 200.0]), 0.8), [75.0, 150.0])
    for pf in (0.0, 1.1, -0.5):
        with pytest.raises(ValueError):
            reactive_power(100.0, pf)
    with pytest.raises(ValueError):
        PowerParams(power_factor=0.0)


@given(st.floats(0.05, 0.99), st.floats(0.001, 0.5))
def test_reactive_power_decreases_with_power_factor(pf, gap):
    hi = min(1.0, pf + gap)
    assert reactive_power(1000.0, hi) < reactive_power(1000.0, pf)


@given(st.floats(-1e5, 1e5), st.floats(0.5, 6.0))
def test_hvac_power_even_and_nonnegative(q, cop):
    assert hvac_power(q, cop) == hvac_power(-q, cop) >= 0


def test_power_sample_composition():
    s = power_sample(-9000.0, 500.0, 0.8, PowerParams(cop=3.0))
    assert s.p_hvac == 3000.0 and s.p_total == 3500.0
    assert s.q_reactive == pytest.approx(3500.0 * 0.75)


def test_grid_edge_step_matches_thermal_step_and_energy():
    plant = preset_truth("R-2")
    dss = model_matrices(plant.topology, plant.params, 600)
    params = PowerParams(cop=3.0, p_other=400.0, power_factor=0.9)
    x = np.array([23.0, 23.0])
    w = np.array([28.0, 300.0, 500.0])
    energy = 0.0
    x_ref = x.copy()
    for k in range(144):
        q = -6000.0 if k % 2 else 0.0
        x, sample = grid_edge_step(x, q, w, dss, params)
        x_ref, _ = step(dss, x_ref, q, w)
        energy += sample.p_total * 600 / 3.6e6
    np.testing.assert_array_equal(x, x_ref)
    # 72 samples at 2400 W, 72 at 400 W, 10 minutes each
    assert energy == pytest.approx((72 * 2400 + 72 * 400) / 6 / 1000)
    assert math.isclose(sample.q_reactive, sample.p_total * math.tan(math.acos(0.9)))
