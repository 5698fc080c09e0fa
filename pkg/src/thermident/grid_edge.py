"""Mapping of thermal results to building electrical quantities.

HVAC heat rate is taken directly from the controller command, electrical
HVAC power is the heat rate magnitude divided by a constant COP, and
reactive power follows from the power factor.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .thermal_core import DiscreteStateSpace, step


@dataclass(frozen=True)
class PowerParams:
    cop: float = 3.0
    p_other: float = 0.0
    power_factor: float = 1.0

    def __post_init__(self):
        if not self.cop > 0:
            raise ValueError("cop must be > 0")
        _check_pf(self.power_factor)


@dataclass(frozen=True)
class PowerSample:
    p_hvac: float
    p_total: float
    q_reactive: float


def _check_pf(pf):
    if not (0.0 < pf <= 1.0):
        raise ValueError(f"power factor must lie in (0, 1], got {pf}")


def hvac_power(q_hvac: float, cop: float | PowerParams) -> float:
    """Electrical HVAC power |q_hvac| / COP (W)."""
    if isinstance(cop, PowerParams):
        cop = cop.cop
    if not cop > 0:
        raise ValueError("cop must be > 0")
    return abs(q_hvac) / cop


def _reactive(p_total, pf):
    # P tan(acos(pf)) = P sin / cos, with sin taken without cancellation in 1 - pf**2
    return p_total * np.sqrt((1.0 - pf) * (1.0 + pf)) / pf


def reactive_power(p_total, pf):
    """Q = P tan(acos(pf)); vectorized over numpy inputs."""
    pf_arr = np.asarray(pf, dtype=float)
    if np.any(pf_arr <= 0) or np.any(pf_arr > 1):
        raise ValueError("power factor must lie in (0, 1]")
    return _reactive(np.asarray(p_total, dtype=float), pf_arr)


def power_sample(q_hvac: float, p_other: float, pf: float, params: PowerParams) -> PowerSample:
    _check_pf(pf)
    p_hvac = hvac_power(q_hvac, params.cop)
    p_total = p_hvac + p_other
    return PowerSample(p_hvac=p_hvac, p_total=p_total, q_reactive=float(_reactive(p_total, pf)))


def grid_edge_step(
    x,
    q_hvac: float,
    w,
    dss: DiscreteStateSpace,
    params: PowerParams,
    p_other: float | None = None,
    pf: float | None = None,
) -> tuple[np.ndarray, PowerSample]:
    """Advance the thermal state and report the electrical draw for this step."""
    x_next, _ = step(dss, x, q_hvac, w)
    sample = power_sample(
        q_hvac,
        params.p_other if p_other is None else p_other,
        params.power_factor if pf is None else pf,
        params,
    )
    return x_next, sample
