"""One-step, free-running and closed-loop evaluation of fitted models.

* Sim1 predicts each sample from measured data up to the previous one. RC
  models overwrite the zone node with the measurement every step while the
  hidden nodes roll forward on their own.
* Sim2 is a free-running rollout driven by the recorded inputs.
* Sim3 replaces the recorded HVAC input by a thermostat acting on the
  model's own zone temperature. No reference exists, so instead of an
  accuracy it reports ``deadband_occupancy``, an ad hoc tracking metric:
  the fraction of samples (after a one-day transient) with
  ``|T_z - setpoint| <= deadband + 0.2``.

Initial hidden RC states default to the first measured zone temperature.
Almon-lag models need ``burn_in + 1`` samples of history; pass ``warmup``
(data immediately preceding the test window) to score the whole window,
otherwise scoring starts after the history.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import Dataset, concat
from .estimators import DIVERGENCE_LIMIT, AlmonLagRegressor, RCNetworkRegressor
from .exceptions import MetricUndefinedError
from .grid_edge import PowerParams, reactive_power
from .plant import DEFAULT_COP, ThermostatConfig

SIM_TYPES = ("Sim1", "Sim2", "Sim3")
OCCUPANCY_MARGIN = 0.2
TRACE_COLUMNS = (
    "timestamp", "t_z_measured", "t_z_pred", "q_hvac",
    "p_hvac", "p_total", "q_reactive", "band_lo", "band_hi",
)


@dataclass(frozen=True)
class EvalReport:
    """One evaluation cell. Sim3 rows carry occupancy, the others accuracy."""

    method: str
    architecture: str
    sim_type: str
    training_days: int | None = None
    average_accuracy: float | None = None
    deadband_occupancy: float | None = None
    divergent: bool = False
    trace_id: str = ""

    def __post_init__(self):
        if self.sim_type not in SIM_TYPES:
            raise ValueError(f"sim_type must be one of {SIM_TYPES}")
        if self.sim_type == "Sim3":
            if self.average_accuracy is not None:
                raise ValueError("Sim3 reports carry no accuracy")
            if self.deadband_occupancy is None:
                raise ValueError("Sim3 reports need deadband_occupancy")
        elif self.deadband_occupancy is not None:
            raise ValueError("only Sim3 reports carry deadband_occupancy")
        acc = self.average_accuracy
        if acc is not None and not acc <= 100.0 and not np.isnan(acc):
            raise ValueError("average accuracy cannot exceed 100")
        occ = self.deadband_occupancy
        if occ is not None and not 0.0 <= occ <= 1.0:
            raise ValueError("occupancy must lie in [0, 1]")


@dataclass
class Trajectory:
    """Predicted zone temperature over the test window.

    ``q_hvac`` is the recorded input (Sim1, Sim2) or the policy output
    (Sim3). Samples before ``scored_from`` are history, not predictions.
    """

    t_z: np.ndarray
    q_hvac: np.ndarray
    scored_from: int
    diverged_at: int = -1

    @property
    def divergent(self) -> bool:
        return self.diverged_at >= 0


def average_accuracy(y, y_hat) -> float:
    """100 minus the mean absolute percentage error."""
    y = np.asarray(y, dtype=float).reshape(-1)
    y_hat = np.asarray(y_hat, dtype=float).reshape(-1)
    if y.size == 0 or y.size != y_hat.size:
        raise ValueError("series must have equal nonzero lengths")
    zero = np.flatnonzero(y == 0)
    if zero.size:
        raise MetricUndefinedError(f"reference is zero at sample {zero[0]}")
    with np.errstate(invalid="ignore", over="ignore"):
        return float(100.0 - 100.0 * np.mean(np.abs(y - y_hat) / np.abs(y)))


def deadband_occupancy(t_z, setpoint: float, deadband: float, margin: float = OCCUPANCY_MARGIN) -> float:
    t_z = np.asarray(t_z, dtype=float)
    if t_z.size == 0:
        raise ValueError("empty series")
    return float(np.mean(np.abs(t_z - setpoint) <= deadband + margin))


def _labels(model, training_days):
    if isinstance(model, AlmonLagRegressor):
        return dict(method="ALS", architecture=model.preset if model.specs is None else "custom",
                    training_days=training_days)
    if isinstance(model, RCNetworkRegressor):
        return dict(method=model.method, architecture=model.architecture, training_days=training_days)
    raise TypeError(f"unsupported model type {type(model).__name__}")


def _with_history(model: AlmonLagRegressor, dataset: Dataset, warmup: Dataset | None):
    """Prepend ``burn_in`` samples of warm-up; returns (data, prefix length)."""
    h = model.history_length
    if warmup is None:
        if len(dataset) <= h:
            raise ValueError(f"dataset of {len(dataset)} samples does not cover the burn-in of {h - 1}")
        return dataset, 0
    if len(warmup) < h - 1:
        raise ValueError(f"warm-up of {len(warmup)} samples is shorter than the burn-in of {h - 1}")
    return concat(warmup[len(warmup) - (h - 1):], dataset), h - 1


def run_sim1(model, dataset: Dataset, x0=None, warmup: Dataset | None = None,
             training_days=None, trace_id="") -> tuple[Trajectory, EvalReport]:
    """One-step-ahead prediction over ``dataset``."""
    if isinstance(model, AlmonLagRegressor):
        data, pre = _with_history(model, dataset, warmup)
        pred = model.predict_one_step(data.als_inputs(), data.t_z)[pre:]
        start = 1 if pre else model.history_length
    else:
        _labels(model, training_days)
        pred = model.predict_one_step(dataset.rc_inputs(), dataset.t_z, x0=x0)
        start = 1
    traj = Trajectory(pred, np.array(dataset.q_hvac), start)
    acc = average_accuracy(dataset.t_z[start:], pred[start:])
    return traj, EvalReport(sim_type="Sim1", average_accuracy=acc, trace_id=trace_id,
                            **_labels(model, training_days))


def run_sim2(model, dataset: Dataset, x0=None, warmup: Dataset | None = None,
             training_days=None, trace_id="") -> tuple[Trajectory, EvalReport]:
    """Free-running rollout; divergence is flagged and accuracy computed anyway."""
    if isinstance(model, AlmonLagRegressor):
        data, pre = _with_history(model, dataset, warmup)
        pred, tripped = model.rollout(data.als_inputs(), data.t_z)
        pred = pred[pre:]
        tripped = tripped - pre if tripped >= 0 else -1
        start = 1 if pre else model.history_length
    else:
        _labels(model, training_days)
        pred, tripped = model.rollout(dataset.rc_inputs(), dataset.t_z, x0=x0)
        start = 1
    traj = Trajectory(pred, np.array(dataset.q_hvac), start, tripped)
    acc = average_accuracy(dataset.t_z[start:], pred[start:])
    return traj, EvalReport(sim_type="Sim2", average_accuracy=acc, divergent=traj.divergent,
                            trace_id=trace_id, **_labels(model, training_days))


def run_sim3(model, weather: Dataset, thermo: ThermostatConfig, x0=None,
             warmup: Dataset | None = None, cop: float = DEFAULT_COP,
             transient_days: float = 1.0, training_days=None,
             trace_id="") -> tuple[Trajectory, EvalReport]:
    """Closed loop of the fitted model under ``thermo``.

    ``weather`` supplies disturbances and the initial measured zone
    temperature (plus, for Almon-lag models, the measured history). Its
    recorded HVAC input is not used after the history.
    """
    labels = _labels(model, training_days)
    if isinstance(model, AlmonLagRegressor):
        data, pre = _with_history(model, weather, warmup)
        h = model.history_length
        t_z, q, tripped = model.simulate_closed_loop(
            data.t_am, thermo, data.t_z[:h], np.column_stack([data.p_c[:h], data.p_h[:h]]), cop=cop
        )
        t_z, q = t_z[pre:], q[pre:]
        tripped = tripped - pre if tripped >= 0 else -1
        start = 1 if pre else h
    else:
        t_z, q, tripped = model.simulate_closed_loop(weather.w, thermo, y0=weather.t_z[0], x0=x0)
        start = 1
    skip = max(start, int(round(transient_days * weather.samples_per_day)))
    if skip >= len(weather):
        raise ValueError("test window is shorter than the transient")
    occ = deadband_occupancy(t_z[skip:], thermo.setpoint, thermo.deadband)
    traj = Trajectory(t_z, q, start, tripped)
    return traj, EvalReport(sim_type="Sim3", deadband_occupancy=occ, divergent=traj.divergent,
                            trace_id=trace_id, **labels)


def trace_columns(dataset: Dataset, traj: Trajectory, sim_type: str,
                  power: PowerParams | None = None,
                  thermo: ThermostatConfig | None = None) -> dict[str, list]:
    """Plot-ready columns for a trace file.

    History samples leave ``t_z_pred`` empty (``None``). Sim3 traces have
    no measured column and carry the comfort band ``setpoint +/- deadband``.
    """
    power = power or PowerParams()
    n = len(dataset)
    p_hvac = np.abs(traj.q_hvac) / power.cop
    p_total = p_hvac + power.p_other
    q_reactive = reactive_power(p_total, power.power_factor)
    pred = [None] * traj.scored_from + list(traj.t_z[traj.scored_from:])
    if sim_type == "Sim3":
        measured = [None] * n
        thermo = thermo or ThermostatConfig()
        lo, hi = thermo.setpoint - thermo.deadband, thermo.setpoint + thermo.deadband
        band_lo, band_hi = [lo] * n, [hi] * n
    else:
        measured = list(dataset.t_z)
        band_lo = band_hi = [None] * n
    return {
        "timestamp": [t.isoformat() for t in dataset.timestamps()],
        "t_z_measured": measured,
        "t_z_pred": pred,
        "q_hvac": list(traj.q_hvac),
        "p_hvac": list(p_hvac),
        "p_total": list(p_total),
        "q_reactive": list(q_reactive),
        "band_lo": band_lo,
        "band_hi": band_hi,
    }


__all__ = [
    "SIM_TYPES",
    "OCCUPANCY_MARGIN",
    "TRACE_COLUMNS",
    "DIVERGENCE_LIMIT",
    "EvalReport",
    "Trajectory",
    "average_accuracy",
    "deadband_occupancy",
    "run_sim1",
    "run_sim2",
    "run_sim3",
    "trace_columns",
]
