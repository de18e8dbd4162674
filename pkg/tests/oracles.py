"""Independent reference computations used by the tests.

Nothing here imports the numerical kernels of the package; only the orbit
data (angles and multiplicities) is shared.
"""

import math

import mpmath
import numpy as np


def a_two_arg_mp(phis, mults, alpha, beta, dps=40):
    """``sum n_j cos(alpha - phi_j) / sin(beta - phi_j)`` in high precision."""
    with mpmath.workdps(dps):
        total = mpmath.mpf(0)
        for phi, m in zip(phis, mults):
            total += m * mpmath.cos(mpmath.mpf(alpha) - phi) / mpmath.sin(mpmath.mpf(beta) - phi)
        return float(total)


def raw_curvature(phis, mults, n, H, s, x, xp):
    """``k`` with ``x'' = k x'^perp`` from the second-order equation."""
    k = -(n - 1) * H(s)
    for phi, m in zip(phis, mults):
        e = (math.cos(phi), math.sin(phi))
        ep = (-math.sin(phi), math.cos(phi))
        k += m * (e[0] * xp[0] + e[1] * xp[1]) / (ep[0] * x[0] + ep[1] * x[1])
    return k


def raw_rk4(phis, mults, n, H, s0, x0, xp0, length, steps):
    """Classical RK4 on ``(x, x')`` with ``x'`` renormalised after each step."""
    h = length / steps
    y = np.array([x0[0], x0[1], xp0[0], xp0[1]], dtype=float)
    s = s0

    def f(s, y):
        k = raw_curvature(phis, mults, n, H, s, y[:2], y[2:])
        return np.array([y[2], y[3], -k * y[3], k * y[2]])

    for _ in range(steps):
        k1 = f(s, y)
        k2 = f(s + h / 2, y + h / 2 * k1)
        k3 = f(s + h / 2, y + h / 2 * k2)
        k4 = f(s + h, y + h * k3)
        y = y + h / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
        y[2:] /= math.hypot(y[2], y[3])
        s += h
    return y


def brute_origin_type_ii_unit(V=1e-3, K=10_000, H=1.0):
    """Leading coefficient ``lim r/v`` at the origin for Type II with ell = m = 1.

    The graph ``u = u(v)`` in the frame of the lower edge satisfies
    ``q' = 3 H w^3 - w^2 (q / v - 1 / u)`` (``q = du/dv``, ``w^2 = 1 + q^2``),
    obtained by hand from the tangent-angle equation.  With ``r = q - 1`` and
    ``u = v (1 + rho)`` the linear part is ``v r' + 2 r + 2 rho``; the integral
    form ``r = v^-2 int eta (-2 rho + F)``, ``rho = v^-1 int r`` is iterated
    with left Riemann sums on ``K`` steps.  The O(1/K) bias is removed by
    Richardson extrapolation against ``K / 2`` steps.
    """

    def solve(K):
        h = V / K
        v = np.linspace(0.0, V, K + 1)

        def cum(g):
            c = np.zeros_like(g)
            c[1:] = np.cumsum(g[:-1]) * h
            return c

        def F(r, rho):
            q = 1.0 + r
            w2 = 1.0 + q * q
            return 3.0 * H * w2**1.5 * v - w2 * (q - 1.0 / (1.0 + rho)) + 2.0 * r + 2.0 * rho

        r = np.zeros(K + 1)
        for _ in range(200):
            rho = np.zeros(K + 1)
            rho[1:] = cum(r)[1:] / v[1:]
            new = np.zeros(K + 1)
            new[1:] = cum(v * (-2.0 * rho + F(r, rho)))[1:] / v[1:] ** 2
            done = np.max(np.abs(new - r)) < 1e-17
            r = new
            if done:
                break
        sel = v >= V / 2
        return np.polyfit(v[sel], r[sel] / v[sel], 1)[-1]

    return 2.0 * solve(K) - solve(K // 2)


def circle_q(v):
    """Graph slope of the unit circle near its right pole: ``u = sqrt(1 - v^2)``."""
    v = np.asarray(v, dtype=float)
    return -v / np.sqrt(1.0 - v * v)
