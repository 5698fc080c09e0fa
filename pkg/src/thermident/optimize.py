"""Box-constrained quasi-Newton minimizer with finite-difference gradients.

Projected BFGS: the inverse-Hessian approximation acts on the free
variables, the search path is projected onto the box, and an Armijo
backtracking line search accepts a step. Non-finite objective values are
treated as rejected trial points, so an objective may return ``inf`` for
unstable candidates.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np


@dataclass(frozen=True)
class OptimizerConfig:
    max_iters: int = 2000
    grad_tol: float = 1e-7
    step_tol: float = 1e-12
    f_tol: float = 1e-9
    fd_step: float = 1e-6
    multistart_count: int = 3
    rng_seed: int = 0

    def __post_init__(self):
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")
        for name in ("grad_tol", "step_tol", "fd_step"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be > 0")
        if not self.f_tol >= 0:
            raise ValueError("f_tol must be >= 0")
        if self.multistart_count < 1:
            raise ValueError("multistart_count must be >= 1")


@dataclass
class MinimizeResult:
    x: np.ndarray
    fun: float
    history: list[float] = field(default_factory=list)
    nit: int = 0
    nfev: int = 0
    converged: bool = False
    message: str = ""


def fd_gradient(fun: Callable, x: np.ndarray, lower, upper, rel_step: float = 1e-6) -> np.ndarray:
    """Central-difference gradient that never steps outside ``[lower, upper]``.

    Falls back to a one-sided difference for coordinates sitting within one
    step of a bound.
    """
    x = np.asarray(x, dtype=float)
    g = np.empty_like(x)
    f0 = None
    for i in range(x.size):
        h = rel_step * max(1.0, abs(x[i]))
        xp = x.copy()
        xm = x.copy()
        xp[i] += h
        xm[i] -= h
        fp = fun(xp) if xp[i] <= upper[i] else math.nan
        fm = fun(xm) if xm[i] >= lower[i] else math.nan
        if math.isfinite(fp) and math.isfinite(fm):
            g[i] = (fp - fm) / (2 * h)
            continue
        # one-sided near a bound or next to a region where f is undefined
        if f0 is None:
            f0 = fun(x)
        if math.isfinite(fp):
            g[i] = (fp - f0) / h
        elif math.isfinite(fm):
            g[i] = (f0 - fm) / h
        else:
            g[i] = 0.0
    return g


def minimize(
    fun: Callable[[np.ndarray], float],
    x_init,
    bounds,
    cfg: OptimizerConfig | None = None,
    grad: Callable[[np.ndarray], np.ndarray] | None = None,
) -> MinimizeResult:
    """Minimize ``fun`` over the box ``bounds = (lower, upper)``.

    Stops when the projected-gradient infinity norm drops to
    ``grad_tol * max(1, |f|)``, when an accepted step is shorter than
    ``step_tol``, or after ``max_iters`` iterations. ``history`` holds the
    objective after every accepted iterate and is non-increasing.
    """
    cfg = cfg or OptimizerConfig()
    lower = np.asarray(bounds[0], dtype=float).reshape(-1)
    upper = np.asarray(bounds[1], dtype=float).reshape(-1)
    x = np.asarray(x_init, dtype=float).reshape(-1).copy()
    if lower.shape != x.shape or upper.shape != x.shape:
        raise ValueError("bounds and x_init have different sizes")
    if np.any(lower > upper):
        raise ValueError("lower bound exceeds upper bound")
    if np.any(x < lower) or np.any(x > upper):
        raise ValueError("x_init lies outside the bounds")

    nfev = 0

    def f(z):
        nonlocal nfev
        nfev += 1
        v = float(fun(z))
        return v if math.isfinite(v) else math.inf

    if grad is None:
        def gradient(z):
            return fd_gradient(f, z, lower, upper, cfg.fd_step)
    else:
        gradient = grad

    fx = f(x)
    if not math.isfinite(fx):
        raise ValueError("objective is not finite at the initial point")
    g = gradient(x)
    n = x.size
    H = np.eye(n)
    fresh = True
    history = [fx]
    converged = False
    message = "max_iters reached"
    it = 0
    for it in range(1, cfg.max_iters + 1):
        pg = x - np.clip(x - g, lower, upper)
        if np.max(np.abs(pg), initial=0.0) <= cfg.grad_tol * max(1.0, abs(fx)):
            converged, message = True, "projected gradient below tolerance"
            it -= 1
            break
        active = ((x <= lower) & (g > 0)) | ((x >= upper) & (g < 0))
        free = ~active
        d = np.zeros(n)
        Hf = H[np.ix_(free, free)]
        d[free] = -Hf @ g[free]
        slope = g @ d
        if not slope < 0:
            H = np.eye(n)
            fresh = True
            d = np.where(free, -g, 0.0)
            slope = g @ d
        alpha = 1.0
        if fresh:
            alpha = min(1.0, 1.0 / max(np.max(np.abs(d)), 1e-300))
        accepted = False
        for _ in range(60):
            x_new = np.clip(x + alpha * d, lower, upper)
            f_new = f(x_new)
            if f_new <= fx + 1e-4 * (g @ (x_new - x)) and f_new <= fx:
                accepted = True
                break
            alpha *= 0.5
        if not accepted:
            if not fresh:
                H = np.eye(n)
                fresh = True
                continue
            converged, message = True, "line search cannot reduce the objective"
            break
        s = x_new - x
        g_new = gradient(x_new)
        yv = g_new - g
        x, g = x_new, g_new
        small_step = np.max(np.abs(s)) <= cfg.step_tol * (1.0 + np.max(np.abs(x)))
        small_drop = fx - f_new <= 1e-15 * max(1.0, abs(fx))
        rel_drop = (fx - f_new) / max(abs(fx), abs(f_new), 1.0)
        fx = f_new
        history.append(fx)
        if small_step:
            converged, message = True, "step below tolerance"
            break
        if rel_drop <= cfg.f_tol:
            converged, message = True, "relative reduction below f_tol"
            break
        sy = s @ yv
        if sy > 1e-12 * np.linalg.norm(s) * np.linalg.norm(yv):
            if fresh:
                H = np.eye(n) * (sy / (yv @ yv))
                fresh = False
            rho = 1.0 / sy
            Hy = H @ yv
            H = H + ((sy + yv @ Hy) * rho * rho) * np.outer(s, s) - rho * (
                np.outer(Hy, s) + np.outer(s, Hy)
            )
        elif small_drop:
            H = np.eye(n)
            fresh = True
    return MinimizeResult(
        x=x, fun=fx, history=history, nit=it, nfev=nfev, converged=converged, message=message
    )
