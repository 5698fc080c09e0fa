"""scikit-learn compatible estimators wrapping the RC and Almon-lag models.

Inputs follow the usual ``(n_samples, n_features)`` layout with samples in
time order:

* RC models take ``X = [q_hvac, t_am, q_int, q_solar]`` and ``y = t_z``.
* Almon-lag models take ``X = [p_c, p_h, t_am]`` and ``y = t_z``.

Because both are dynamic models, ``predict`` also takes the measured zone
temperature ``y``; only its initial sample(s) are used for the free-running
rollout. ``predict_one_step`` uses all of ``y``.
"""
from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from . import _kernels
from .almon import (
    AlmonModel,
    build_design,
    lls_fit,
    one_step_predictions,
    preset_specs,
    regressor_series,
    simulate_regression,
)
from .dataset import Dataset
from .estimation import NoiseHyperParams, estimate
from .grid_edge import hvac_power
from .optimize import OptimizerConfig
from .plant import DEFAULT_COP, ThermostatConfig, thermostat_step
from .thermal_core import RcParameters, RcTopology, model_matrices

RC_FEATURES = ("q_hvac", "t_am", "q_int", "q_solar")
ALS_FEATURES = ("p_c", "p_h", "t_am")
DIVERGENCE_LIMIT = 100.0


def _check_inputs(X, n_features, names):
    X = check_array(X, dtype=float, ensure_min_samples=2)
    if X.shape[1] != n_features:
        raise ValueError(f"X has {X.shape[1]} columns; expected {n_features} {list(names)}")
    return X


def _check_y(y, n):
    y = np.asarray(y, dtype=float).reshape(-1)
    if y.size != n:
        raise ValueError(f"y has {y.size} samples, X has {n}")
    if not np.all(np.isfinite(y)):
        raise ValueError("y contains non-finite values")
    return y


class RCNetworkRegressor(RegressorMixin, BaseEstimator):
    """Grey-box RC-network model fit by NLS, batch estimation or filter MLE.

    Parameters
    ----------
    architecture : {"R-1", "R-2", "R-4", "C-1", "C-2"}
    method : {"NLS", "BE", "MLE"}
    t_s : float
        Sample period of the data in seconds.
    q_proc, r_meas, p0 : float
        Scalar noise hyperparameters; ``q_proc`` and ``p0`` are multiplied
        by the identity.
    max_iters, grad_tol, multistart_count, random_state
        Optimizer settings.

    Attributes
    ----------
    theta_ : RcParameters
    topology_ : RcTopology
    x0_ : ndarray
        Initial state of the training window (fitted by NLS and BE).
    result_ : EstimationResult
    converged_ : bool
    """

    def __init__(
        self,
        architecture="R-2",
        method="NLS",
        t_s=600.0,
        q_proc=1e-4,
        r_meas=1e-2,
        p0=1.0,
        max_iters=2000,
        grad_tol=1e-7,
        multistart_count=3,
        random_state=0,
    ):
        self.architecture = architecture
        self.method = method
        self.t_s = t_s
        self.q_proc = q_proc
        self.r_meas = r_meas
        self.p0 = p0
        self.max_iters = max_iters
        self.grad_tol = grad_tol
        self.multistart_count = multistart_count
        self.random_state = random_state

    def _dataset(self, X, y):
        return Dataset(
            t_s=self.t_s,
            t_z=y,
            q_hvac=X[:, 0],
            p_c=np.zeros(len(y)),
            p_h=np.zeros(len(y)),
            t_am=X[:, 1],
            q_int=X[:, 2],
            q_solar=X[:, 3],
        )

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True, ensure_min_samples=2)
        X = _check_inputs(X, 4, RC_FEATURES)
        topology = RcTopology.preset(self.architecture)
        noise = NoiseHyperParams.default(
            topology.n_states, y[0], q=self.q_proc, r=self.r_meas, p0=self.p0
        )
        cfg = OptimizerConfig(
            max_iters=self.max_iters,
            grad_tol=self.grad_tol,
            multistart_count=self.multistart_count,
            rng_seed=self.random_state,
        )
        result = estimate(self.method, self._dataset(X, y), topology, noise, cfg)
        self.topology_ = topology
        self.theta_ = result.theta_hat
        self.x0_ = result.x0
        self.result_ = result
        self.converged_ = result.converged
        self.n_features_in_ = 4
        return self

    @classmethod
    def from_parameters(cls, topology: RcTopology, params: RcParameters, t_s=600.0, method="truth"):
        """A fitted instance with known parameters (truth or ablation models)."""
        params.validate(topology)
        model = cls(architecture=topology.preset_name, method=method, t_s=t_s)
        model.topology_ = topology
        model.theta_ = params
        model.x0_ = None
        model.result_ = None
        model.converged_ = True
        model.n_features_in_ = 4
        return model

    def state_space(self):
        check_is_fitted(self, "theta_")
        return model_matrices(self.topology_, self.theta_, self.t_s)

    def _x0(self, y, x0):
        n = self.topology_.n_states
        if x0 is not None:
            x0 = np.asarray(x0, dtype=float).reshape(-1)
            if x0.size != n:
                raise ValueError(f"x0 has {x0.size} entries, model has {n} states")
            return x0
        if y is None:
            raise ValueError("either y (for its first sample) or x0 is required")
        return np.full(n, float(np.asarray(y, dtype=float).reshape(-1)[0]))

    def rollout(self, X, y=None, x0=None):
        """Free-running simulation; returns ``(t_z_hat, diverged_at)``.

        ``diverged_at`` is the first index with ``|T_z| > 100`` (the state is
        frozen from there on) or -1.
        """
        check_is_fitted(self, "theta_")
        X = _check_inputs(X, 4, RC_FEATURES)
        dss = self.state_space()
        g = _kernels.forcing(dss.bd, dss.dd, np.ascontiguousarray(X[:, 0]), np.ascontiguousarray(X[:, 1:]))
        states, tripped = _kernels.rollout_capped(dss.ad, g, self._x0(y, x0), DIVERGENCE_LIMIT)
        return states[:-1, 0].copy(), int(tripped)

    def predict(self, X, y=None, x0=None):
        """Free-running zone temperature from the initial state.

        The hidden nodes start at the first measured zone temperature unless
        ``x0`` gives the full initial state.
        """
        return self.rollout(X, y, x0)[0]

    def predict_one_step(self, X, y, x0=None):
        """One-step-ahead predictions with the zone node reset to ``y(k)`` each step.

        Hidden nodes evolve by rollout. Element ``k`` predicts ``y(k)`` from
        data up to ``k - 1``; element 0 is the initial zone temperature.
        """
        check_is_fitted(self, "theta_")
        X = _check_inputs(X, 4, RC_FEATURES)
        y = _check_y(y, X.shape[0])
        dss = self.state_space()
        g = _kernels.forcing(dss.bd, dss.dd, np.ascontiguousarray(X[:, 0]), np.ascontiguousarray(X[:, 1:]))
        x_init = self._x0(y, x0)
        pred = _kernels.teacher_forced(dss.ad, g, x_init, y)
        return np.concatenate([[x_init[0]], pred[:-1]])

    def simulate_closed_loop(self, W, thermostat: ThermostatConfig, y0=None, x0=None):
        """Closed loop of this model under ``thermostat``.

        ``W`` holds ``[t_am, q_int, q_solar]`` per sample. Returns
        ``(t_z, q_hvac, diverged_at)``.
        """
        check_is_fitted(self, "theta_")
        W = check_array(W, dtype=float)
        if W.shape[1] != 3:
            raise ValueError("W must have columns [t_am, q_int, q_solar]")
        dss = self.state_space()
        x = self._x0(None if y0 is None else [y0], x0)
        T = W.shape[0]
        t_z = np.empty(T)
        q_hvac = np.zeros(T)
        mode = thermostat.mode
        bd = dss.bd[:, 0]
        tripped = -1
        for k in range(T):
            t_z[k] = x[0]
            if tripped >= 0:
                continue
            if not abs(x[0]) <= DIVERGENCE_LIMIT:
                tripped = k
                continue
            mode, q = thermostat_step(x[0], thermostat, mode)
            q_hvac[k] = q
            x = dss.ad @ x + bd * q + dss.dd @ W[k]
        return t_z, q_hvac, tripped

    def score(self, X, y):
        """Average accuracy (100 - MAPE) of the free-running prediction."""
        from .evaluation import average_accuracy

        y = _check_y(y, np.asarray(X).shape[0])
        return average_accuracy(y[1:], self.predict(X, y)[1:])


class AlmonLagRegressor(RegressorMixin, BaseEstimator):
    """Distributed-lag regression of zone temperature with Almon polynomial lags.

    Parameters
    ----------
    preset : {"R-A", "C-A"}
        Lag layout; ignored when ``specs`` is given.
    specs : sequence of AlmonSpec, optional
    """

    def __init__(self, preset="R-A", specs=None):
        self.preset = preset
        self.specs = specs

    def _specs(self):
        return tuple(self.specs) if self.specs is not None else preset_specs(self.preset)

    @staticmethod
    def _frame(X, y):
        class _Frame:
            pass

        f = _Frame()
        f.t_z, f.p_c, f.p_h, f.t_am = y, X[:, 0], X[:, 1], X[:, 2]
        return f

    def fit(self, X, y):
        X, y = check_X_y(X, y, dtype=float, y_numeric=True, ensure_min_samples=2)
        X = _check_inputs(X, 3, ALS_FEATURES)
        design = build_design(self._frame(X, y), self._specs())
        self.model_ = lls_fit(design, preset=self.preset if self.specs is None else "custom")
        self.burn_in_ = self.model_.burn_in
        self.n_features_in_ = 3
        self.coef_ = self.model_.coefficients()[1:]
        self.intercept_ = self.model_.alpha0
        return self

    @classmethod
    def from_model(cls, model: AlmonModel):
        est = cls(preset=model.preset, specs=None if model.preset in ("R-A", "C-A") else model.specs)
        est.model_ = model
        est.burn_in_ = model.burn_in
        est.n_features_in_ = 3
        est.coef_ = model.coefficients()[1:]
        est.intercept_ = model.alpha0
        return est

    @property
    def history_length(self) -> int:
        check_is_fitted(self, "model_")
        return self.burn_in_ + 1

    def predict(self, X, y):
        """Free-running rollout; the first ``burn_in + 1`` samples of ``y`` seed the lags."""
        check_is_fitted(self, "model_")
        X = _check_inputs(X, 3, ALS_FEATURES)
        y = _check_y(y, X.shape[0])
        h = self.history_length
        return simulate_regression(self.model_, y[:h], X[:, 0], X[:, 1], X[:, 2])

    def rollout(self, X, y):
        pred = self.predict(X, y)
        over = np.flatnonzero(~(np.abs(pred) <= DIVERGENCE_LIMIT))
        if over.size:
            k = int(over[0])
            pred[k:] = pred[k] if np.isfinite(pred[k]) else np.sign(pred[k - 1]) * DIVERGENCE_LIMIT
            return pred, k
        return pred, -1

    def predict_one_step(self, X, y):
        """One-step predictions; the first ``burn_in + 1`` entries echo ``y``."""
        check_is_fitted(self, "model_")
        X = _check_inputs(X, 3, ALS_FEATURES)
        y = _check_y(y, X.shape[0])
        out = y.copy()
        out[self.burn_in_ + 1:] = one_step_predictions(self.model_, y, X[:, 0], X[:, 1], X[:, 2])
        return out

    def simulate_closed_loop(self, t_am, thermostat: ThermostatConfig, y_history, p_history, cop=DEFAULT_COP):
        """Closed loop of the regression under ``thermostat``.

        ``y_history`` and ``p_history`` (columns ``[p_c, p_h]``) cover the
        first ``H >= burn_in + 1`` samples; from sample ``H`` on the policy
        sets the HVAC heat rate, which enters the model as electrical power
        ``|q| / cop``. Returns ``(t_z, q_hvac, diverged_at)``.
        """
        check_is_fitted(self, "model_")
        t_am = np.asarray(t_am, dtype=float).reshape(-1)
        T = t_am.size
        hist = np.asarray(y_history, dtype=float).reshape(-1)
        p_hist = np.asarray(p_history, dtype=float).reshape(-1, 2)
        H = hist.size
        if H < self.history_length or p_hist.shape[0] != H:
            raise ValueError("history must cover the burn-in and match in length")
        t_z = np.zeros(T)
        t_z[:H] = hist
        p_c = np.zeros(T)
        p_h = np.zeros(T)
        p_c[:H] = p_hist[:, 0]
        p_h[:H] = p_hist[:, 1]
        q_hvac = np.zeros(T)
        series = regressor_series(t_z, p_c, p_h, t_am)
        series["T_z"], series["P_c"], series["P_h"] = t_z, p_c, p_h
        mode = thermostat.mode
        tripped = -1
        for k in range(H - 1, T):
            if k >= H:
                mode, q = thermostat_step(t_z[k], thermostat, mode)
                q_hvac[k] = q
                power = hvac_power(q, cop)
                p_c[k] = power if q < 0 else 0.0
                p_h[k] = power if q > 0 else 0.0
            if k == T - 1:
                break
            t_z[k + 1] = self.model_.predict_next(series, k)
            if not abs(t_z[k + 1]) <= DIVERGENCE_LIMIT:
                tripped = k + 1
                t_z[k + 1:] = t_z[k + 1] if np.isfinite(t_z[k + 1]) else DIVERGENCE_LIMIT
                break
        return t_z, q_hvac, tripped

    def score(self, X, y):
        """Average accuracy (100 - MAPE) of the free-running prediction after burn-in."""
        from .evaluation import average_accuracy

        y = _check_y(y, np.asarray(X).shape[0])
        h = self.history_length
        return average_accuracy(y[h:], self.predict(X, y)[h:])
