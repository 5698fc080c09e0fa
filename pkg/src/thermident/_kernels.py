"""Compiled inner loops for rollouts and Kalman recursions.

The public, readable versions of these recursions live in ``thermal_core``
and ``estimation``; the kernels here exist only for speed and are checked
against those in the test suite. Output matrix is always C = [1, 0, ..., 0].
"""
import numpy as np
from numba import njit


@njit(cache=True)
def forcing(bd, dd, u, w):
    """Per-step exogenous increment bd*u(k) + dd @ w(k), shape (T, n)."""
    T = u.shape[0]
    n = bd.shape[0]
    g = np.empty((T, n))
    for k in range(T):
        for i in range(n):
            acc = bd[i, 0] * u[k]
            for j in range(dd.shape[1]):
                acc += dd[i, j] * w[k, j]
            g[k, i] = acc
    return g


@njit(cache=True)
def rollout(ad, g, x0):
    T = g.shape[0]
    n = ad.shape[0]
    xs = np.empty((T + 1, n))
    xs[0] = x0
    for k in range(T):
        for i in range(n):
            acc = g[k, i]
            for j in range(n):
                acc += ad[i, j] * xs[k, j]
            xs[k + 1, i] = acc
    return xs


@njit(cache=True)
def rollout_capped(ad, g, x0, limit):
    """Rollout that freezes the state once |T_z| exceeds ``limit``.

    Returns the trajectory and the first index at which the cap tripped
    (-1 when it never did).
    """
    T = g.shape[0]
    n = ad.shape[0]
    xs = np.empty((T + 1, n))
    xs[0] = x0
    tripped = -1
    for k in range(T):
        if tripped >= 0:
            xs[k + 1] = xs[k]
            continue
        for i in range(n):
            acc = g[k, i]
            for j in range(n):
                acc += ad[i, j] * xs[k, j]
            xs[k + 1, i] = acc
        if not np.abs(xs[k + 1, 0]) <= limit:
            tripped = k + 1
    return xs, tripped


@njit(cache=True)
def teacher_forced(ad, g, x0, y):
    """One-step predictions with the zone state overwritten by y(k)."""
    T = g.shape[0]
    n = ad.shape[0]
    x = x0.copy()
    nxt = np.empty(n)
    pred = np.empty(T)
    for k in range(T):
        x[0] = y[k]
        for i in range(n):
            acc = g[k, i]
            for j in range(n):
                acc += ad[i, j] * x[j]
            nxt[i] = acc
        x[:] = nxt
        pred[k] = x[0]
    return pred


@njit(cache=True)
def kalman_filter(ad, g, q, r, x0, p0, y, keep):
    """Predict/update Kalman recursion with scalar output C = e_0.

    Returns innovations, innovation variances, and (when ``keep``) the
    predicted and filtered means/covariances needed by the smoother.
    """
    T = g.shape[0]
    n = ad.shape[0]
    e = np.empty(T)
    s = np.empty(T)
    m = T + 1 if keep else 1
    xp = np.empty((m, n))
    pp = np.empty((m, n, n))
    xf = np.empty((m, n))
    pf = np.empty((m, n, n))
    x = x0.copy()
    p = p0.copy()
    kg = np.empty(n)
    xa = np.empty(n)
    pa = np.empty((n, n))
    tmp = np.empty((n, n))
    for k in range(T):
        if keep:
            xp[k] = x
            pp[k] = p
        ek = y[k] - x[0]
        sk = p[0, 0] + r
        e[k] = ek
        s[k] = sk
        for i in range(n):
            kg[i] = p[i, 0] / sk
        for i in range(n):
            xa[i] = x[i] + kg[i] * ek
            for j in range(n):
                pa[i, j] = p[i, j] - kg[i] * p[0, j]
        if keep:
            xf[k] = xa
            pf[k] = pa
        for i in range(n):
            acc = g[k, i]
            for j in range(n):
                acc += ad[i, j] * xa[j]
            x[i] = acc
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc += ad[i, l] * pa[l, j]
                tmp[i, j] = acc
        for i in range(n):
            for j in range(n):
                acc = 0.0
                for l in range(n):
                    acc += tmp[i, l] * ad[j, l]
                p[i, j] = acc + q[i, j]
        for i in range(n):
            for j in range(i + 1, n):
                avg = 0.5 * (p[i, j] + p[j, i])
                p[i, j] = avg
                p[j, i] = avg
    if keep:
        xp[T] = x
        pp[T] = p
        xf[T] = x
        pf[T] = p
    return e, s, xp, pp, xf, pf


@njit(cache=True)
def _solve_small(a, b):
    """Solve a @ x = b for a small dense system (partial pivoting)."""
    n = a.shape[0]
    m = b.shape[1]
    a = a.copy()
    x = b.copy()
    for c in range(n):
        piv = c
        best = abs(a[c, c])
        for r in range(c + 1, n):
            if abs(a[r, c]) > best:
                best = abs(a[r, c])
                piv = r
        if piv != c:
            for j in range(n):
                t = a[c, j]
                a[c, j] = a[piv, j]
                a[piv, j] = t
            for j in range(m):
                t = x[c, j]
                x[c, j] = x[piv, j]
                x[piv, j] = t
        d = a[c, c]
        for r in range(c + 1, n):
            f = a[r, c] / d
            if f != 0.0:
                for j in range(c, n):
                    a[r, j] -= f * a[c, j]
                for j in range(m):
                    x[r, j] -= f * x[c, j]
    for c in range(n - 1, -1, -1):
        for j in range(m):
            acc = x[c, j]
            for k in range(c + 1, n):
                acc -= a[c, k] * x[k, j]
            x[c, j] = acc / a[c, c]
    return x


@njit(cache=True)
def rts_smooth(ad, xp, pp, xf, pf):
    """Rauch-Tung-Striebel backward pass over filter output (means only)."""
    N = xf.shape[0]
    n = ad.shape[0]
    xs = np.empty_like(xf)
    xs[N - 1] = xf[N - 1]
    diff = np.empty((n, 1))
    for k in range(N - 2, -1, -1):
        # xs_k = xf_k + Pf_k Ad^T Pp_{k+1}^{-1} (xs_{k+1} - xp_{k+1})
        for i in range(n):
            diff[i, 0] = xs[k + 1, i] - xp[k + 1, i]
        z = _solve_small(pp[k + 1], diff)
        for i in range(n):
            acc = 0.0
            for j in range(n):
                t = 0.0
                for l in range(n):
                    t += ad[l, j] * z[l, 0]
                acc += pf[k, i, j] * t
            xs[k, i] = xf[k, i] + acc
    return xs
