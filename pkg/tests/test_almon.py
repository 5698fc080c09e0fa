from types import SimpleNamespace

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermident.almon import (
    AlmonModel,
    AlmonSpec,
    almon_basis,
    build_design,
    coefficient_names,
    degree_days,
    lls_fit,
    one_step_predictions,
    preset_specs,
    simulate_regression,
    transform_regressor,
)
from thermident.exceptions import RankDeficiencyError

SMALL = (AlmonSpec("T_z", 1, 3, 1), AlmonSpec("P_c", 0, 2, 0), AlmonSpec("D_c", 0, 1, 0))


def _frame(t_z, p_c=None, p_h=None, t_am=None):
    n = len(t_z)
    z = np.zeros(n)
    return SimpleNamespace(
        t_z=np.asarray(t_z, float),
        p_c=z if p_c is None else np.asarray(p_c, float),
        p_h=z if p_h is None else np.asarray(p_h, float),
        t_am=np.full(n, 25.0) if t_am is None else np.asarray(t_am, float),
    )


def _inputs(T, seed):
    rng = np.random.default_rng(seed)
    p_c = 1000 * (rng.random(T) < 0.4) * rng.random(T)
    t_am = 20 + 10 * rng.random(T)
    return p_c, t_am


def test_degree_day_examples():
    assert degree_days(25.0) == pytest.approx((5.56, 0.0))
    assert degree_days(10.0) == pytest.approx((0.0, 9.44))
    assert degree_days(19.44) == (0.0, 0.0)


@given(st.floats(-40, 50))
def test_degree_days_split(t):
    d_c, d_h = degree_days(t)
    assert d_c >= 0 and d_h >= 0 and d_c * d_h == 0
    assert d_c - d_h == pytest.approx(t - 19.44, abs=1e-12)


def test_basis_examples():
    np.testing.assert_array_equal(almon_basis(0, 2, 1), [[1, 0], [1, 1], [1, 2]])
    m = almon_basis(6, 14, 2)
    assert m.shape == (9, 3)
    np.testing.assert_array_equal(m[0], [1, 6, 36])
    np.testing.assert_array_equal(m[-1], [1, 14, 196])
    with pytest.raises(ValueError):
        almon_basis(0, 2, 3)


def test_transform_example():
    z = np.array([4.0, 3.0, 2.0])  # z(k) = 2, z(k-1) = 3, z(k-2) = 4 at k = 2
    np.testing.assert_allclose(transform_regressor(z, AlmonSpec("P_c", 0, 2, 1), 2), [9.0, 11.0])
    with pytest.raises(ValueError):
        transform_regressor(z, AlmonSpec("P_c", 0, 2, 1), 1)


@given(
    st.integers(0, 4),
    st.integers(0, 5),
    st.integers(0, 3),
    st.lists(st.floats(-2, 2), min_size=4, max_size=4),
    st.integers(0, 2**31),
)
def test_transformed_sum_matches_double_sum(l, span, q, omega, seed):
    t = l + span
    q = min(q, span)
    spec = AlmonSpec("P_c", l, t, q)
    omega = np.array(omega[: q + 1])
    z = np.random.default_rng(seed).normal(size=t + 5)
    k = t + 2
    lhs = omega @ transform_regressor(z, spec, k)
    rhs = 0.0
    for i in range(l, t + 1):
        zeta_i = sum(omega[j] * float(i) ** j for j in range(q + 1))
        rhs += zeta_i * z[k - i]
    assert lhs == pytest.approx(rhs, rel=1e-9, abs=1e-9)


def test_preset_design_shape(house_data):
    week = house_data[: 1008]
    d = build_design(week, preset_specs("R-A"))
    assert d.shape == (990, 11)
    assert d.burn_in == 17
    np.testing.assert_array_equal(d.target, week.t_z[18:])
    names_c = coefficient_names(preset_specs("C-A"))
    assert any(n.startswith("omega.P_h") for n in names_c)
    assert not any(n.startswith("omega.P_h") for n in coefficient_names(preset_specs("R-A")))
    assert len(names_c) == 14


def _random_design(T=300, seed=0, specs=SMALL):
    rng = np.random.default_rng(seed)
    p_c, t_am = _inputs(T, seed)
    t_z = 22 + rng.normal(size=T)
    return build_design(_frame(t_z, p_c, t_am=t_am), specs)


@pytest.mark.parametrize("seed", range(5))
def test_fit_matches_normal_equations(seed):
    d = _random_design(seed=seed)
    beta = lls_fit(d).coefficients()
    ref = np.linalg.solve(d.x.T @ d.x, d.x.T @ d.target)
    np.testing.assert_allclose(beta, ref, rtol=1e-8, atol=1e-10)
    resid = d.target - d.x @ beta
    assert np.max(np.abs(d.x.T @ resid)) <= 1e-8 * np.linalg.norm(d.x) * np.linalg.norm(d.target)


def test_full_order_polynomial_equals_unrestricted_lags():
    specs = (AlmonSpec("T_z", 1, 3, 2), AlmonSpec("P_c", 0, 2, 2))
    p_c, t_am = _inputs(300, 3)
    t_z = 22 + np.random.default_rng(3).normal(size=300)
    d = build_design(_frame(t_z, p_c, t_am=t_am), specs)
    model = lls_fit(d)
    # independent route: raw lag columns solved by numpy's SVD least squares
    ks = d.rows
    raw = np.column_stack(
        [np.ones(ks.size)] + [t_z[ks - i] for i in (1, 2, 3)] + [p_c[ks - i] for i in (0, 1, 2)]
    )
    coef, *_ = np.linalg.lstsq(raw, t_z[ks + 1], rcond=None)
    np.testing.assert_allclose(model.zeta["T_z"], coef[1:4], rtol=1e-7, atol=1e-9)
    np.testing.assert_allclose(model.zeta["P_c"], coef[4:], rtol=1e-7, atol=1e-12)
    assert model.alpha0 == pytest.approx(coef[0], rel=1e-7)


def test_noiseless_data_recovers_the_generating_model():
    truth = AlmonModel.from_coefficients(SMALL, [2.0, 0.5, -0.1, -1e-3, 0.05])
    p_c, t_am = _inputs(400, 8)
    t_z = simulate_regression(truth, np.full(4, 21.0), p_c, np.zeros(400), t_am)
    fit = lls_fit(build_design(_frame(t_z, p_c, t_am=t_am), SMALL))
    np.testing.assert_allclose(fit.coefficients(), truth.coefficients(), rtol=1e-6, atol=1e-9)
    pred = one_step_predictions(fit, t_z, p_c, np.zeros(400), t_am)
    np.testing.assert_allclose(pred, t_z[4:], rtol=1e-9)


def test_rank_deficiency_names_the_block():
    p_c, t_am = _inputs(200, 1)
    rng = np.random.default_rng(1)
    t_z = 22 + rng.normal(size=200)
    with pytest.raises(RankDeficiencyError) as err:
        lls_fit(build_design(_frame(t_z, np.zeros(200), t_am=t_am), SMALL))
    assert err.value.block == "P_c" and "P_c" in str(err.value)
    with pytest.raises(RankDeficiencyError) as err:
        lls_fit(build_design(_frame(np.full(200, 3.0), p_c, t_am=t_am), SMALL))
    assert err.value.block == "T_z"
    with pytest.raises(RankDeficiencyError):
        lls_fit(build_design(_frame(t_z[:6], p_c[:6], t_am=t_am[:6]), SMALL))


def test_simulation_with_zero_weights_is_constant():
    model = AlmonModel.from_coefficients(SMALL, [5.0, 0, 0, 0, 0])
    p_c, t_am = _inputs(50, 2)
    out = simulate_regression(model, [1.0, 2.0, 3.0, 4.0], p_c, np.zeros(50), t_am)
    np.testing.assert_array_equal(out[:4], [1, 2, 3, 4])
    np.testing.assert_array_equal(out[4:], 5.0)
    with pytest.raises(ValueError):
        simulate_regression(model, [1.0, 2.0, 3.0], p_c, np.zeros(50), t_am)


def test_one_step_base_case_matches_direct_lag_sum():
    model = AlmonModel.from_coefficients(SMALL, [1.0, 0.4, 0.1, -2e-3, 0.2])
    p_c, t_am = _inputs(30, 4)
    t_z = 22 + np.random.default_rng(4).normal(size=30)
    pred = one_step_predictions(model, t_z, p_c, np.zeros(30), t_am)
    k = 3
    d_c, _ = degree_days(t_am)
    direct = (
        1.0
        + sum((0.4 + 0.1 * i) * t_z[k - i] for i in (1, 2, 3))
        + sum(-2e-3 * p_c[k - i] for i in (0, 1, 2))
        + sum(0.2 * d_c[k - i] for i in (0, 1))
    )
    assert pred[0] == pytest.approx(direct, rel=1e-12)
    assert pred.size == 30 - 3 - 1


def test_spec_validation():
    with pytest.raises(ValueError):
        AlmonSpec("X", 0, 1, 0)
    with pytest.raises(ValueError):
        AlmonSpec("T_z", 3, 1, 0)
    with pytest.raises(ValueError):
        build_design(_frame(np.ones(50)), (AlmonSpec("P_c", 0, 2, 0),))
    with pytest.raises(ValueError):
        build_design(_frame(np.ones(50)), (AlmonSpec("T_z", 1, 2, 0), AlmonSpec("T_z", 3, 4, 0)))
