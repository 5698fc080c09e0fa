"""Grey-box thermal identification of buildings.

RC-network state-space models fit by nonlinear least squares, batch
estimation or Kalman-filter maximum likelihood, an Almon-lag regression
baseline, three evaluation modes and a grid-edge power mapping.
"""
from .almon import AlmonSpec, degree_days
from .dataset import Dataset, read_dataset, write_dataset
from .estimation import NoiseHyperParams, estimate
from .estimators import AlmonLagRegressor, RCNetworkRegressor
from .evaluation import EvalReport, average_accuracy, run_sim1, run_sim2, run_sim3
from .grid_edge import PowerParams, PowerSample, grid_edge_step, hvac_power, power_sample
from .plant import ThermostatConfig, WeatherConfig, gen_weather, generate_dataset
from .thermal_core import RcParameters, RcTopology, discretize, model_matrices, simulate, step

__version__ = "0.1.0"

__all__ = [
    "AlmonLagRegressor",
    "AlmonSpec",
    "Dataset",
    "EvalReport",
    "NoiseHyperParams",
    "PowerParams",
    "PowerSample",
    "RCNetworkRegressor",
    "RcParameters",
    "RcTopology",
    "ThermostatConfig",
    "WeatherConfig",
    "average_accuracy",
    "degree_days",
    "discretize",
    "estimate",
    "gen_weather",
    "generate_dataset",
    "grid_edge_step",
    "hvac_power",
    "model_matrices",
    "power_sample",
    "read_dataset",
    "run_sim1",
    "run_sim2",
    "run_sim3",
    "simulate",
    "step",
    "write_dataset",
]
