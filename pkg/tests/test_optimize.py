import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from thermident.optimize import OptimizerConfig, fd_gradient, minimize


def test_quadratic_interior_minimum():
    res = minimize(lambda x: (x[0] - 3.0) ** 2, [0.5], ([0.0], [10.0]))
    assert res.x[0] == pytest.approx(3.0, abs=1e-6)
    assert res.converged


def test_quadratic_active_bound():
    res = minimize(lambda x: (x[0] - 3.0) ** 2, [0.5], ([0.0], [2.0]))
    assert res.x[0] == 2.0
    assert res.converged


def test_rosenbrock():
    def rosen(x):
        return (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2

    res = minimize(rosen, [-1.2, 1.0], ([-5, -5], [5, 5]), OptimizerConfig(max_iters=500))
    np.testing.assert_allclose(res.x, [1.0, 1.0], atol=1e-4)
    assert np.all(np.diff(res.history) <= 0)


def test_errors():
    with pytest.raises(ValueError):
        minimize(lambda x: math.inf, [1.0], ([0.0], [2.0]))
    with pytest.raises(ValueError):
        minimize(lambda x: x[0] ** 2, [3.0], ([0.0], [2.0]))
    with pytest.raises(ValueError):
        minimize(lambda x: x[0] ** 2, [1.0], ([2.0], [0.0]))
    for bad in (dict(max_iters=0), dict(grad_tol=0), dict(fd_step=-1), dict(multistart_count=0)):
        with pytest.raises(ValueError):
            OptimizerConfig(**bad)


def test_infinite_region_is_avoided():
    # objective undefined (inf) for x < 1; minimum of the finite part at x = 1
    def f(x):
        return math.inf if x[0] < 1.0 else (x[0] - 0.0) ** 2

    res = minimize(f, [4.0], ([-10.0], [10.0]))
    assert res.x[0] >= 1.0 and res.x[0] == pytest.approx(1.0, abs=1e-3)


def test_max_iters_reported():
    res = minimize(lambda x: (1 - x[0]) ** 2 + 100 * (x[1] - x[0] ** 2) ** 2, [-1.2, 1.0],
                   ([-5, -5], [5, 5]), OptimizerConfig(max_iters=3))
    assert not res.converged and res.nit == 3


@given(
    st.lists(st.floats(0.1, 10.0), min_size=3, max_size=3),
    st.lists(st.floats(-3.0, 3.0), min_size=3, max_size=3),
    st.lists(st.floats(-1.0, 1.0), min_size=3, max_size=3),
)
def test_separable_quadratic_box_solution(scales, centers, start):
    scales, centers = np.array(scales), np.array(centers)
    lower, upper = -np.ones(3), np.ones(3)
    seen = []

    def f(x):
        seen.append(x.copy())
        return float(np.sum(scales * (x - centers) ** 2))

    res = minimize(f, start, (lower, upper))
    np.testing.assert_allclose(res.x, np.clip(centers, lower, upper), atol=1e-5)
    assert np.all(np.diff(res.history) <= 0)
    # never evaluated outside the box
    pts = np.array(seen)
    assert np.all(pts >= lower) and np.all(pts <= upper)


def test_fd_gradient_matches_analytic_and_respects_bounds():
    def f(x):
        return float(np.sin(x[0]) * x[1] ** 2 + np.exp(0.1 * x[2]))

    x = np.array([0.3, -1.2, 2.0])
    analytic = np.array([np.cos(x[0]) * x[1] ** 2, 2 * np.sin(x[0]) * x[1], 0.1 * np.exp(0.1 * x[2])])
    g = fd_gradient(f, x, -5 * np.ones(3), 5 * np.ones(3))
    np.testing.assert_allclose(g, analytic, rtol=1e-7, atol=1e-9)

    at_bound = np.array([0.3, -1.2, 5.0])
    seen = []

    def g_f(z):
        seen.append(z.copy())
        return f(z)

    g2 = fd_gradient(g_f, at_bound, -5 * np.ones(3), 5 * np.ones(3))
    assert max(p[2] for p in seen) <= 5.0
    assert g2[2] == pytest.approx(0.1 * np.exp(0.5), rel=1e-5)
