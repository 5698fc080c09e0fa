"""Structured autoregressive zone-temperature model with Almon lag weights.

The next-step zone temperature is an intercept plus distributed lags of
zone temperature, cooling/heating power and cooling/heating degree-days.
Each lag block's weights are restricted to a polynomial in the lag index,
``zeta_i = sum_j omega_j * i**j`` for ``i = l..t``, so the block costs
``q + 1`` coefficients instead of ``t - l + 1``.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_triangular

from .exceptions import RankDeficiencyError

REGRESSORS = ("T_z", "P_c", "P_h", "D_c", "D_h")
DEGREE_DAY_BASE = 19.44


@dataclass(frozen=True)
class AlmonSpec:
    """Lag block ``A(z, l, t, q)``: lags ``start_lag..end_lag``, polynomial order ``poly_order``."""

    regressor: str
    start_lag: int
    end_lag: int
    poly_order: int

    def __post_init__(self):
        if self.regressor not in REGRESSORS:
            raise ValueError(f"unknown regressor {self.regressor!r}; expected one of {REGRESSORS}")
        if not 0 <= self.start_lag <= self.end_lag:
            raise ValueError("lags must satisfy 0 <= start_lag <= end_lag")
        if self.poly_order < 0:
            raise ValueError("poly_order must be >= 0")
        if self.poly_order >= self.n_lags:
            raise ValueError(
                f"poly_order {self.poly_order} must be below the lag count {self.n_lags}"
            )

    @property
    def n_lags(self) -> int:
        return self.end_lag - self.start_lag + 1

    @property
    def lags(self) -> np.ndarray:
        return np.arange(self.start_lag, self.end_lag + 1)


PRESETS = {
    "R-A": (
        AlmonSpec("T_z", 6, 14, 2),
        AlmonSpec("P_c", 0, 11, 2),
        AlmonSpec("D_c", 6, 17, 1),
        AlmonSpec("D_h", 6, 17, 1),
    ),
    "C-A": (
        AlmonSpec("T_z", 6, 14, 2),
        AlmonSpec("P_c", 0, 8, 2),
        AlmonSpec("P_h", 0, 8, 2),
        AlmonSpec("D_c", 6, 17, 1),
        AlmonSpec("D_h", 6, 17, 1),
    ),
}


def preset_specs(name: str) -> tuple[AlmonSpec, ...]:
    try:
        return PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; expected one of {tuple(PRESETS)}") from None


def degree_days(t_am):
    """Cooling and heating degrees relative to 19.44 degC.

    Works on scalars and arrays; returns ``(d_c, d_h)``.
    """
    t = np.asarray(t_am, dtype=float)
    d_c = np.maximum(0.0, t - DEGREE_DAY_BASE)
    d_h = np.maximum(0.0, DEGREE_DAY_BASE - t)
    if d_c.ndim == 0:
        return float(d_c), float(d_h)
    return d_c, d_h


def almon_basis(l: int, t: int, q: int) -> np.ndarray:
    """Matrix ``M`` with ``M[i - l, j] = i**j``; lag weights are ``M @ omega``."""
    AlmonSpec("T_z", l, t, q)  # validates
    lags = np.arange(l, t + 1, dtype=float)
    return lags[:, None] ** np.arange(q + 1, dtype=float)[None, :]


def transform_regressor(z, spec: AlmonSpec, k: int) -> np.ndarray:
    """Transformed values ``z~_j(k) = sum_i i**j z(k - i)`` for ``j = 0..q``."""
    z = np.asarray(z, dtype=float)
    if k < spec.end_lag or k >= z.size:
        raise ValueError(
            f"index {k} lacks history for lags up to {spec.end_lag} (series length {z.size})"
        )
    window = z[k - spec.lags]
    return almon_basis(spec.start_lag, spec.end_lag, spec.poly_order).T @ window


def _lag_matrix(z: np.ndarray, spec: AlmonSpec, ks: np.ndarray) -> np.ndarray:
    return z[ks[:, None] - spec.lags[None, :]]


def regressor_series(t_z, p_c, p_h, t_am) -> dict[str, np.ndarray]:
    d_c, d_h = degree_days(np.asarray(t_am, dtype=float))
    return {
        "T_z": np.asarray(t_z, dtype=float),
        "P_c": np.asarray(p_c, dtype=float),
        "P_h": np.asarray(p_h, dtype=float),
        "D_c": np.atleast_1d(d_c),
        "D_h": np.atleast_1d(d_h),
    }


@dataclass
class DesignMatrix:
    x: np.ndarray
    target: np.ndarray
    burn_in: int
    rows: np.ndarray
    specs: tuple[AlmonSpec, ...]
    columns: list[str] = field(default_factory=list)

    @property
    def shape(self):
        return self.x.shape

    def block_of(self, column: int) -> str:
        if column == 0:
            return "intercept"
        for spec, sl in zip(self.specs, _block_slices(self.specs)):
            if sl.start <= column < sl.stop:
                return spec.regressor
        raise IndexError(column)


def _block_slices(specs):
    out = []
    start = 1
    for spec in specs:
        out.append(slice(start, start + spec.poly_order + 1))
        start += spec.poly_order + 1
    return out


def burn_in_of(specs) -> int:
    return max(s.end_lag for s in specs)


def _check_specs(specs):
    specs = tuple(specs)
    names = [s.regressor for s in specs]
    if len(set(names)) != len(names):
        raise ValueError("each regressor may appear in at most one lag block")
    if "T_z" not in names:
        raise ValueError("an autoregressive T_z block is required")
    return specs


def coefficient_names(specs) -> list[str]:
    """Column names of the design matrix, in coefficient order."""
    names = ["alpha0"]
    for spec in specs:
        names += [f"omega.{spec.regressor}.{j}" for j in range(spec.poly_order + 1)]
    return names


def build_design(dataset, specs) -> DesignMatrix:
    """Rows ``k = burn_in .. T-2`` regress ``T_z(k+1)`` on lag blocks at ``k``.

    ``dataset`` needs ``t_z``, ``p_c``, ``p_h`` and ``t_am`` attributes.
    """
    specs = _check_specs(specs)
    series = regressor_series(dataset.t_z, dataset.p_c, dataset.p_h, dataset.t_am)
    T = series["T_z"].size
    burn_in = burn_in_of(specs)
    if T - burn_in - 1 < 1:
        raise ValueError(f"dataset of {T} samples is shorter than the burn-in of {burn_in} + 1")
    ks = np.arange(burn_in, T - 1)
    cols = [np.ones((ks.size, 1))]
    for spec in specs:
        basis = almon_basis(spec.start_lag, spec.end_lag, spec.poly_order)
        cols.append(_lag_matrix(series[spec.regressor], spec, ks) @ basis)
    x = np.hstack(cols)
    if not np.all(np.isfinite(x)):
        raise ValueError("design matrix contains non-finite entries")
    return DesignMatrix(
        x=x, target=series["T_z"][ks + 1], burn_in=burn_in, rows=ks, specs=specs,
        columns=coefficient_names(specs),
    )


@dataclass
class AlmonModel:
    alpha0: float
    omega: dict[str, np.ndarray]
    zeta: dict[str, np.ndarray]
    specs: tuple[AlmonSpec, ...]
    preset: str = "custom"

    @property
    def burn_in(self) -> int:
        return burn_in_of(self.specs)

    def coefficients(self) -> np.ndarray:
        return np.concatenate([[self.alpha0]] + [self.omega[s.regressor] for s in self.specs])

    @classmethod
    def from_coefficients(cls, specs, beta, preset="custom") -> "AlmonModel":
        specs = _check_specs(specs)
        beta = np.asarray(beta, dtype=float)
        slices = _block_slices(specs)
        if beta.size != slices[-1].stop:
            raise ValueError(f"expected {slices[-1].stop} coefficients, got {beta.size}")
        omega = {s.regressor: beta[sl].copy() for s, sl in zip(specs, slices)}
        zeta = {
            s.regressor: almon_basis(s.start_lag, s.end_lag, s.poly_order) @ omega[s.regressor]
            for s in specs
        }
        return cls(float(beta[0]), omega, zeta, specs, preset)

    def predict_next(self, series: dict[str, np.ndarray], k: int) -> float:
        """``T_z(k+1)`` from lagged values at ``k`` using the lag weights."""
        value = self.alpha0
        for spec in self.specs:
            value += self.zeta[spec.regressor] @ series[spec.regressor][k - spec.lags]
        return float(value)


def lls_fit(design: DesignMatrix, preset: str = "custom", rcond: float = 1e-12) -> AlmonModel:
    """Least-squares coefficients by Householder QR."""
    x, y = design.x, design.target
    n_rows, n_cols = x.shape
    if n_rows < n_cols:
        raise RankDeficiencyError(f"{n_rows} rows for {n_cols} columns")
    q_mat, r_mat = np.linalg.qr(x, mode="reduced")
    diag = np.abs(np.diag(r_mat))
    col_norm = np.linalg.norm(x, axis=0)
    bad = np.flatnonzero(diag <= rcond * np.maximum(col_norm, np.finfo(float).tiny))
    if bad.size:
        block = design.block_of(int(bad[0]))
        raise RankDeficiencyError(
            f"design matrix is rank deficient in the {block} block "
            f"(column {design.columns[bad[0]] if design.columns else bad[0]})",
            block=block,
        )
    beta = solve_triangular(r_mat, q_mat.T @ y)
    return AlmonModel.from_coefficients(design.specs, beta, preset)


def simulate_regression(model: AlmonModel, t_z_history, p_c, p_h, t_am) -> np.ndarray:
    """Free-running rollout feeding predicted zone temperature back into its lags.

    The exogenous sequences cover the whole horizon ``T``; the first
    ``H = len(t_z_history)`` zone temperatures are taken as given and
    ``T_z(H..T-1)`` are predicted. ``H`` must exceed the model burn-in.
    """
    p_c = np.asarray(p_c, dtype=float)
    T = p_c.size
    hist = np.asarray(t_z_history, dtype=float).reshape(-1)
    H = hist.size
    if H < model.burn_in + 1:
        raise ValueError(f"history of {H} samples does not cover the burn-in of {model.burn_in}")
    if H > T:
        raise ValueError("history is longer than the input horizon")
    t_z = np.empty(T)
    t_z[:H] = hist
    series = regressor_series(t_z, p_c, p_h, t_am)
    series["T_z"] = t_z
    exo = exogenous_contribution(model, series, np.arange(H - 1, T - 1))
    tz_spec = next(s for s in model.specs if s.regressor == "T_z")
    zeta = model.zeta["T_z"]
    lags = tz_spec.lags
    for idx, k in enumerate(range(H - 1, T - 1)):
        t_z[k + 1] = exo[idx] + zeta @ t_z[k - lags]
    return t_z


def exogenous_contribution(model: AlmonModel, series, ks: np.ndarray) -> np.ndarray:
    """Intercept plus every non-T_z block evaluated at rows ``ks``."""
    out = np.full(ks.size, model.alpha0)
    for spec in model.specs:
        if spec.regressor == "T_z":
            continue
        out += _lag_matrix(series[spec.regressor], spec, ks) @ model.zeta[spec.regressor]
    return out


def one_step_predictions(model: AlmonModel, t_z, p_c, p_h, t_am) -> np.ndarray:
    """``T_z(k+1)`` predicted from measured data, for ``k = burn_in .. T-2``."""
    series = regressor_series(t_z, p_c, p_h, t_am)
    ks = np.arange(model.burn_in, series["T_z"].size - 1)
    if ks.size == 0:
        raise ValueError("series too short for the model burn-in")
    tz_spec = next(s for s in model.specs if s.regressor == "T_z")
    return exogenous_contribution(model, series, ks) + _lag_matrix(
        series["T_z"], tz_spec, ks
    ) @ model.zeta["T_z"]
