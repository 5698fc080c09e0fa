import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from conftest import SPD, truth_scenario
from thermident.estimators import AlmonLagRegressor, RCNetworkRegressor
from thermident.evaluation import (
    EvalReport,
    average_accuracy,
    deadband_occupancy,
    run_sim1,
    run_sim2,
    run_sim3,
    trace_columns,
)
from thermident.exceptions import MetricUndefinedError
from thermident.grid_edge import PowerParams
from thermident.plant import ThermostatConfig


def test_accuracy_examples():
    assert average_accuracy([20, 20], [19, 20.8]) == pytest.approx(95.5)
    assert average_accuracy([20, 10], [40, 20]) == pytest.approx(0.0)
    assert average_accuracy([20, 10], [20, 10]) == 100.0
    with pytest.raises(MetricUndefinedError):
        average_accuracy([20, 0], [20, 1])
    with pytest.raises(ValueError):
        average_accuracy([1, 2], [1])


@given(st.lists(st.floats(1, 40), min_size=1, max_size=20), st.lists(st.floats(-5, 5), min_size=20, max_size=20))
def test_accuracy_is_100_iff_equal(y, err):
    y = np.array(y)
    e = np.array(err[: y.size])
    acc = average_accuracy(y, y + e)
    assert acc <= 100.0
    assert (acc == 100.0) == bool(np.all(y + e == y))


def test_occupancy():
    assert deadband_occupancy([22, 23.1, 23.3, 20.7], 22, 1) == 0.5
    with pytest.raises(ValueError):
        deadband_occupancy([], 22, 1)


def test_report_validation():
    with pytest.raises(ValueError):
        EvalReport("NLS", "R-1", "Sim3", 3, average_accuracy=90.0, deadband_occupancy=0.5)
    with pytest.raises(ValueError):
        EvalReport("NLS", "R-1", "Sim3", 3)
    with pytest.raises(ValueError):
        EvalReport("NLS", "R-1", "Sim1", 3, average_accuracy=90.0, deadband_occupancy=0.5)
    with pytest.raises(ValueError):
        EvalReport("NLS", "R-1", "Sim2", 3, average_accuracy=100.5)
    with pytest.raises(ValueError):
        EvalReport("NLS", "R-1", "Sim4", 3)


@pytest.fixture(scope="module")
def r2_truth():
    plant, ds = truth_scenario("R-2", days=3)
    return RCNetworkRegressor.from_parameters(plant.topology, plant.params), ds


def test_truth_model_scores_100(r2_truth):
    model, ds = r2_truth
    _, s1 = run_sim1(model, ds)
    traj, s2 = run_sim2(model, ds)
    assert s1.average_accuracy == pytest.approx(100.0, abs=1e-9)
    assert s2.average_accuracy == pytest.approx(100.0, abs=1e-9)
    assert not s2.divergent and traj.scored_from == 1


def test_hidden_state_offset_degrades_rollout(r2_truth):
    model, ds = r2_truth
    _, good = run_sim2(model, ds)
    _, bad = run_sim2(model, ds, x0=[ds.t_z[0], ds.t_z[0] + 2.0])
    assert bad.average_accuracy < good.average_accuracy - 1e-3
    _, bad1 = run_sim1(model, ds, x0=[ds.t_z[0], ds.t_z[0] + 2.0])
    assert bad1.average_accuracy < 100.0


def test_unstable_model_is_flagged(r2_truth):
    model, ds = r2_truth
    unstable = RCNetworkRegressor.from_parameters(model.topology_, model.theta_, t_s=2e5)
    traj, rep = run_sim2(unstable, ds)
    assert rep.divergent and traj.diverged_at > 0
    assert np.isfinite(rep.average_accuracy)


@pytest.fixture(scope="module")
def als_case(house_data):
    split = len(house_data) - 7 * SPD
    train, test = house_data[:split], house_data[split:]
    model = AlmonLagRegressor("R-A").fit(train.als_inputs(), train.t_z)
    return model, train, test


def test_als_one_step_accuracy(als_case):
    model, train, test = als_case
    traj, s1 = run_sim1(model, test, warmup=train, training_days=91)
    assert s1.average_accuracy >= 99.0
    assert s1.method == "ALS" and s1.architecture == "R-A" and s1.training_days == 91
    baseline = average_accuracy(test.t_z[1:], np.full(len(test) - 1, train.t_z.mean()))
    assert s1.average_accuracy > baseline
    _, s2 = run_sim2(model, test, warmup=train)
    assert s1.average_accuracy >= s2.average_accuracy
    # without warm-up the first burn_in + 1 samples are history
    traj_cold, _ = run_sim1(model, test)
    assert traj_cold.scored_from == model.history_length


def test_rc_one_step_beats_rollout():
    plant, ds = truth_scenario("R-2", days=6, meas_noise_std=0.05)
    train, test = ds[: 3 * SPD], ds[3 * SPD:]
    model = RCNetworkRegressor("R-1", "NLS").fit(train.rc_inputs(), train.t_z)
    _, s1 = run_sim1(model, test)
    _, s2 = run_sim2(model, test)
    assert s1.average_accuracy >= s2.average_accuracy


def test_sim3_report_and_trace(r2_truth, als_case):
    model, ds = r2_truth
    thermo = ThermostatConfig(setpoint=22, deadband=1, cool_capacity=5000)
    traj, rep = run_sim3(model, ds, thermo, training_days=3, trace_id="x")
    assert rep.average_accuracy is None and 0 <= rep.deadband_occupancy <= 1
    assert rep.deadband_occupancy >= 0.9
    traj2, rep2 = run_sim3(model, ds, thermo, training_days=3, trace_id="x")
    np.testing.assert_array_equal(traj.t_z, traj2.t_z)
    assert rep == rep2
    cols = trace_columns(ds, traj, "Sim3", PowerParams(cop=3, p_other=100, power_factor=0.8), thermo)
    assert all(v is None for v in cols["t_z_measured"])
    assert set(cols["band_lo"]) == {21.0} and set(cols["band_hi"]) == {23.0}
    np.testing.assert_allclose(cols["p_total"], np.abs(traj.q_hvac) / 3 + 100)
    np.testing.assert_allclose(cols["q_reactive"], np.array(cols["p_total"]) * 0.75)

    als, train, test = als_case
    t3, r3 = run_sim3(als, test, thermo, warmup=train)
    assert np.all(t3.q_hvac <= 0)
    assert np.any(t3.q_hvac < 0)
    cols = trace_columns(test, *run_sim1(als, test)[:1], "Sim1")
    assert cols["t_z_pred"][0] is None and cols["band_lo"][0] is None
