"""Parameter estimation for RC networks: NLS, batch estimation and filter MLE.

All three methods optimize over transformed parameters: resistances and
capacitances in log space, gain fractions through a logistic map onto
[0, 1]. The objectives themselves are written over physical
:class:`~thermident.thermal_core.RcParameters` so they can be evaluated and
tested independently of the optimizer.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .dataset import Dataset
from .exceptions import ConfigurationError
from .optimize import OptimizerConfig, minimize
from .thermal_core import (
    DiscreteStateSpace,
    RcParameters,
    RcTopology,
    model_matrices,
)

logger = logging.getLogger(__name__)

METHODS = ("NLS", "BE", "MLE")
JITTER = 1e-10
BE_MAX_DAYS = 21

R_BOUNDS = (1e-5, 10.0)
C_BOUNDS = (1e4, 1e10)
LOGIT_BOUND = 12.0
X0_SPAN = 30.0


@dataclass(frozen=True, eq=False)
class NoiseHyperParams:
    """Process/measurement noise and initial-state prior (units degC^2)."""

    q_proc: np.ndarray
    r_meas: float
    p0: np.ndarray
    x0_prior: np.ndarray

    def __post_init__(self):
        q = np.atleast_2d(np.asarray(self.q_proc, dtype=float))
        p0 = np.atleast_2d(np.asarray(self.p0, dtype=float))
        x0 = np.asarray(self.x0_prior, dtype=float).reshape(-1)
        n = x0.size
        if q.shape != (n, n) or p0.shape != (n, n):
            raise ConfigurationError(
                f"noise shapes q {q.shape}, p0 {p0.shape} do not match {n} states"
            )
        for name, m in (("q_proc", q), ("p0", p0)):
            if not np.allclose(m, m.T):
                raise ConfigurationError(f"{name} must be symmetric")
            if np.linalg.eigvalsh(m).min() < -1e-12 * max(1.0, np.abs(m).max()):
                raise ConfigurationError(f"{name} must be positive semidefinite")
        if not (self.r_meas > 0 and math.isfinite(self.r_meas)):
            raise ConfigurationError("r_meas must be positive")
        object.__setattr__(self, "q_proc", q)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "x0_prior", x0)
        object.__setattr__(self, "r_meas", float(self.r_meas))

    @property
    def n_states(self) -> int:
        return self.x0_prior.size

    @classmethod
    def default(cls, n_states: int, y0: float, q: float = 1e-4, r: float = 1e-2, p0: float = 1.0):
        """Defaults: Q = q I, R = r, P0 = p0 I, prior mean = y0 on every node."""
        return cls(
            q_proc=q * np.eye(n_states),
            r_meas=r,
            p0=p0 * np.eye(n_states),
            x0_prior=np.full(n_states, float(y0)),
        )


@dataclass(frozen=True)
class KalmanState:
    x_pred: np.ndarray
    p_pred: np.ndarray
    innovation: float = 0.0
    s_var: float = 1.0


@dataclass(frozen=True, eq=False)
class BeDecision:
    """Batch-estimation decision: parameters plus the state trajectory x(0..T)."""

    theta: RcParameters
    x_traj: np.ndarray


@dataclass
class EstimationResult:
    theta_hat: RcParameters
    objective: float
    iterations: int
    converged: bool
    method: str
    objective_history: list[float] = field(default_factory=list)
    x0: np.ndarray | None = None
    trajectory: np.ndarray | None = None
    start_index: int = 0


# -- parametrization ---------------------------------------------------------


def default_initial_parameters(topology: RcTopology) -> RcParameters:
    """Nominal starting point of the search (house-scale magnitudes)."""
    values = {}
    for name in topology.free_parameters():
        if name == "c_z":
            values[name] = 1e7
        elif name.startswith("c_w"):
            values[name] = 5e7
        elif name.startswith("r_zw"):
            values[name] = 5e-3
        elif name.startswith("r"):
            values[name] = 1e-2
        else:
            values[name] = 0.5
    return RcParameters.from_dict(topology, values)


def _logit(p):
    p = min(max(p, 1e-300), 1.0)
    if p >= 1.0:
        return LOGIT_BOUND
    return math.log(p) - math.log1p(-p)


def _expit(z):
    if z >= 0:
        return 1.0 / (1.0 + math.exp(-z))
    ez = math.exp(z)
    return ez / (1.0 + ez)


class ParameterMap:
    """Bijection between physical parameters and the optimizer's box."""

    def __init__(self, topology: RcTopology, r_bounds=R_BOUNDS, c_bounds=C_BOUNDS):
        self.topology = topology
        self.names = topology.free_parameters()
        lo, hi, kinds = [], [], []
        for name in self.names:
            if name[0] in "rc":
                b = r_bounds if name[0] == "r" else c_bounds
                lo.append(math.log(b[0]))
                hi.append(math.log(b[1]))
                kinds.append("log")
            else:
                lo.append(-LOGIT_BOUND)
                hi.append(LOGIT_BOUND)
                kinds.append("logit")
        self.lower = np.array(lo)
        self.upper = np.array(hi)
        self.kinds = kinds

    def __len__(self):
        return len(self.names)

    def encode(self, params: RcParameters) -> np.ndarray:
        values = params.to_dict(self.topology)
        z = np.array(
            [
                math.log(values[n]) if k == "log" else _logit(values[n])
                for n, k in zip(self.names, self.kinds)
            ]
        )
        return np.clip(z, self.lower, self.upper)

    def decode(self, z) -> RcParameters:
        values = {
            n: (math.exp(v) if k == "log" else _expit(v))
            for n, v, k in zip(self.names, z, self.kinds)
        }
        return RcParameters.from_dict(self.topology, values)


# -- objectives --------------------------------------------------------------


def _series(dataset: Dataset):
    u = np.ascontiguousarray(dataset.q_hvac, dtype=float)
    w = np.ascontiguousarray(dataset.w)
    y = np.ascontiguousarray(dataset.t_z, dtype=float)
    return u, w, y


def _forcing(dss: DiscreteStateSpace, u, w):
    return _kernels.forcing(dss.bd, dss.dd, u, w)


def _nls_value(dss, x0, u, w, y) -> float:
    states = _kernels.rollout(dss.ad, _forcing(dss, u, w), np.ascontiguousarray(x0, dtype=float))
    with np.errstate(over="ignore", invalid="ignore"):
        value = float(np.sum((y - states[:-1, 0]) ** 2))
    return value if math.isfinite(value) else math.inf


def nls_objective(theta: RcParameters, x0, dataset: Dataset, topology: RcTopology) -> float:
    """Output-error sum of squares of a single-shooting rollout from ``x0``.

    Returns ``inf`` when the rollout blows up.
    """
    if len(dataset) < 1:
        raise ValueError("dataset is empty")
    dss = model_matrices(topology, theta, dataset.t_s)
    x0 = np.asarray(x0, dtype=float).reshape(-1)
    if x0.size != dss.n_states:
        raise ValueError(f"x0 has {x0.size} entries, model has {dss.n_states} states")
    return _nls_value(dss, x0, *_series(dataset))


def _checked_inverse(mat: np.ndarray, name: str) -> np.ndarray:
    m = mat + JITTER * np.eye(mat.shape[0])
    try:
        chol = np.linalg.cholesky(m)
    except np.linalg.LinAlgError:
        raise ConfigurationError(f"{name} is singular or indefinite after jitter") from None
    inv_chol = np.linalg.inv(chol)
    return inv_chol.T @ inv_chol


def be_objective(dec: BeDecision, dataset: Dataset, noise: NoiseHyperParams, topology: RcTopology) -> float:
    """Batch-estimation cost: prior + measurement + process-noise quadratic forms.

    Process noise is implied by the trajectory, ``w_n(k) = x(k+1) - f(x(k))``,
    and measurement noise by ``v_n(k) = y(k) - T_z(k)``. ``Q`` and ``P0``
    receive a 1e-10 identity jitter before inversion.
    """
    dss = model_matrices(topology, dec.theta, dataset.t_s)
    u, w, y = _series(dataset)
    x = np.asarray(dec.x_traj, dtype=float)
    if x.shape != (len(dataset) + 1, dss.n_states):
        raise ValueError(
            f"trajectory shape {x.shape} does not match ({len(dataset) + 1}, {dss.n_states})"
        )
    q_inv = _checked_inverse(noise.q_proc, "q_proc")
    p0_inv = _checked_inverse(noise.p0, "p0")
    return _be_value(dss, x, noise, u, w, y, q_inv, p0_inv)


def be_optimal_trajectory(
    theta: RcParameters, dataset: Dataset, noise: NoiseHyperParams, topology: RcTopology
) -> np.ndarray:
    """Trajectory minimizing :func:`be_objective` for fixed ``theta``.

    For fixed parameters the cost is quadratic in the trajectory, and its
    minimizer is the fixed-interval (Rauch-Tung-Striebel) smoother mean
    under the same jittered ``Q`` and ``P0``.
    """
    dss = model_matrices(topology, theta, dataset.t_s)
    return _be_trajectory(dss, noise, *_series(dataset))


def _be_trajectory(dss, noise, u, w, y):
    n = dss.n_states
    q = noise.q_proc + JITTER * np.eye(n)
    p0 = noise.p0 + JITTER * np.eye(n)
    _, _, xp, pp, xf, pf = _kernels.kalman_filter(
        dss.ad, _forcing(dss, u, w), q, noise.r_meas, noise.x0_prior.copy(), p0, y, True
    )
    return _kernels.rts_smooth(dss.ad, xp, pp, xf, pf)


def kalman_step(
    ks: KalmanState,
    u: float,
    w,
    y: float,
    dss: DiscreteStateSpace,
    noise: NoiseHyperParams,
) -> KalmanState:
    """One measurement update followed by one Euler prediction.

    The returned state carries the innovation and its variance for the
    measurement just consumed, and the predicted mean/covariance for the
    next sample.
    """
    c = dss.c
    x = np.asarray(ks.x_pred, dtype=float).reshape(-1)
    p = np.asarray(ks.p_pred, dtype=float)
    e = float(y - c[0] @ x)
    s = float(c[0] @ p @ c[0]) + noise.r_meas
    if not s > 0:
        raise RuntimeError(f"innovation variance is not positive: {s}")
    gain = (p @ c.T)[:, 0] / s
    x_f = x + gain * e
    p_f = p - np.outer(gain, c[0] @ p)
    x_next = dss.ad @ x_f + dss.bd[:, 0] * u + dss.dd @ np.asarray(w, dtype=float)
    p_next = dss.ad @ p_f @ dss.ad.T + noise.q_proc
    p_next = 0.5 * (p_next + p_next.T)
    return KalmanState(x_pred=x_next, p_pred=p_next, innovation=e, s_var=s)


def _mle_value(dss, noise, u, w, y) -> float:
    e, s, *_ = _kernels.kalman_filter(
        dss.ad, _forcing(dss, u, w), noise.q_proc, noise.r_meas,
        noise.x0_prior.copy(), noise.p0.copy(), y, False,
    )
    if np.any(s <= 0):
        return math.inf
    value = float(np.sum(e * e / s + np.log(s)))
    return value if math.isfinite(value) else math.inf


def mle_objective(theta: RcParameters, dataset: Dataset, noise: NoiseHyperParams, topology: RcTopology) -> float:
    """Prediction-error likelihood: sum of e(k)^2 / S(k) + ln S(k)."""
    if len(dataset) < 1:
        raise ValueError("dataset is empty")
    dss = model_matrices(topology, theta, dataset.t_s)
    if noise.n_states != dss.n_states:
        raise ConfigurationError("noise hyperparameters do not match the model size")
    return _mle_value(dss, noise, *_series(dataset))


# -- estimation driver -------------------------------------------------------


def _start_points(center: np.ndarray, lower, upper, count: int, rng) -> list[np.ndarray]:
    starts = [np.clip(center, lower, upper)]
    for _ in range(count - 1):
        starts.append(np.clip(center + rng.normal(0.0, 1.0, center.size), lower, upper))
    return starts


def estimate(
    method: str,
    dataset: Dataset,
    topology: RcTopology,
    noise: NoiseHyperParams | None = None,
    cfg: OptimizerConfig | None = None,
    init: RcParameters | None = None,
) -> EstimationResult:
    """Fit RC parameters by NLS, BE or MLE with seeded multistart.

    NLS optimizes parameters and the initial state jointly by single
    shooting. BE optimizes parameters with the trajectory profiled out
    exactly (see :func:`be_optimal_trajectory`). MLE runs the Kalman filter
    from the prior in ``noise``. The lowest objective across starts wins,
    ties going to the earlier start.
    """
    method = method.upper()
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}; expected one of {METHODS}")
    if len(dataset) < 2:
        raise ValueError("estimation needs at least 2 samples")
    cfg = cfg or OptimizerConfig()
    n_states = topology.n_states
    if noise is None:
        noise = NoiseHyperParams.default(n_states, dataset.t_z[0])
    if noise.n_states != n_states:
        raise ConfigurationError("noise hyperparameters do not match the model size")
    if method == "BE":
        cap = int(BE_MAX_DAYS * 86400 / dataset.t_s)
        if len(dataset) > cap:
            raise ConfigurationError(
                f"batch estimation is capped at {BE_MAX_DAYS} days ({cap} samples)"
            )
        # fail fast on singular covariances
        q_inv = _checked_inverse(noise.q_proc, "q_proc")
        p0_inv = _checked_inverse(noise.p0, "p0")

    pmap = ParameterMap(topology)
    n_theta = len(pmap)
    u, w, y = _series(dataset)
    t_s = dataset.t_s

    def matrices(z):
        try:
            return model_matrices(topology, pmap.decode(z[:n_theta]), t_s)
        except (ValueError, OverflowError):
            return None

    if method == "NLS":
        def objective(z):
            dss = matrices(z)
            return math.inf if dss is None else _nls_value(dss, z[n_theta:], u, w, y)

        x0_center = noise.x0_prior
        lower = np.concatenate([pmap.lower, x0_center - X0_SPAN])
        upper = np.concatenate([pmap.upper, x0_center + X0_SPAN])
    elif method == "BE":
        def objective(z):
            dss = matrices(z)
            if dss is None:
                return math.inf
            traj = _be_trajectory(dss, noise, u, w, y)
            if not np.all(np.isfinite(traj)):
                return math.inf
            return _be_value(dss, traj, noise, u, w, y, q_inv, p0_inv)

        lower, upper = pmap.lower, pmap.upper
    else:
        def objective(z):
            dss = matrices(z)
            return math.inf if dss is None else _mle_value(dss, noise, u, w, y)

        lower, upper = pmap.lower, pmap.upper

    center = pmap.encode(init if init is not None else default_initial_parameters(topology))
    rng = np.random.default_rng(cfg.rng_seed)
    starts = _start_points(center, pmap.lower, pmap.upper, cfg.multistart_count, rng)
    if method == "NLS":
        starts = [np.concatenate([s, noise.x0_prior]) for s in starts]

    best = None
    best_idx = -1
    for idx, z0 in enumerate(starts):
        if not math.isfinite(objective(z0)):
            logger.debug("%s start %d is unstable, skipped", method, idx)
            continue
        res = minimize(objective, z0, (lower, upper), cfg)
        logger.debug("%s start %d: f=%.6g nit=%d %s", method, idx, res.fun, res.nit, res.message)
        if best is None or res.fun < best.fun:
            best, best_idx = res, idx

    if best is None:
        theta0 = init if init is not None else default_initial_parameters(topology)
        return EstimationResult(
            theta_hat=theta0, objective=math.inf, iterations=0, converged=False,
            method=method, x0=noise.x0_prior.copy(), start_index=-1,
        )

    theta_hat = pmap.decode(best.x[:n_theta])
    result = EstimationResult(
        theta_hat=theta_hat,
        objective=best.fun,
        iterations=best.nit,
        converged=best.converged,
        method=method,
        objective_history=list(best.history),
        start_index=best_idx,
    )
    if method == "NLS":
        result.x0 = best.x[n_theta:].copy()
    elif method == "BE":
        dss = model_matrices(topology, theta_hat, t_s)
        result.trajectory = _be_trajectory(dss, noise, u, w, y)
        result.x0 = result.trajectory[0].copy()
    else:
        result.x0 = noise.x0_prior.copy()
    return result


def _be_value(dss, x, noise, u, w, y, q_inv, p0_inv) -> float:
    e0 = x[0] - noise.x0_prior
    wn = x[1:] - (x[:-1] @ dss.ad.T + _forcing(dss, u, w))
    v = y - x[:-1, 0]
    with np.errstate(over="ignore", invalid="ignore"):
        value = float(
            e0 @ p0_inv @ e0 + np.sum(v * v) / noise.r_meas + np.einsum("ki,ij,kj->", wn, q_inv, wn)
        )
    return value if math.isfinite(value) else math.inf
