"""Regular integration of the generating-curve equation away from ``S``.

With unit speed ``x' = e(tau)`` the second-order equation becomes

    tau' = -(n - 1) H(s) + sum_j n_j cos(tau - phi_j) / (e(phi_j)^perp . x)

because ``x''^perp . x' = -tau'``.  The state ``(x, y, tau)`` is advanced
with the Dormand-Prince 5(4) pair from scipy, stepping one step at a time so
that the step cap can follow the distance to the singular set.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np
from scipy.integrate import RK45

from .catalog import Family, OrbitTypeSpec
from .errors import SingularityError
from .hfield import HField
from .plane import boundary_values

DENOM_TOL = 1e-14
ORIGIN_RATIO = 0.05


@dataclass(frozen=True)
class CurveState:
    s: float
    x: float
    y: float
    tau: float

    @property
    def pos(self) -> np.ndarray:
        return np.array([self.x, self.y])

    @property
    def tangent(self) -> np.ndarray:
        return np.array([math.cos(self.tau), math.sin(self.tau)])


@dataclass(frozen=True)
class Tolerances:
    rel: float = 1e-10
    abs: float = 1e-12
    h_min: float = 1e-12
    h_max: float = 0.1
    singular_trigger: float = 1e-4
    sample_ds: float = 1e-2
    step_cap_fraction: float = 0.25

    def __post_init__(self):
        for name in ("rel", "abs", "h_min", "h_max", "singular_trigger", "sample_ds"):
            if not getattr(self, name) > 0.0:
                raise ValueError(f"tolerance {name} must be positive")
        if not self.h_min < self.h_max:
            raise ValueError("h_min must be smaller than h_max")


@dataclass(frozen=True)
class IntegrationEvent:
    """Why a regular integration stopped.

    ``kind`` is one of ``reached_end``, ``boundary_approach``,
    ``origin_approach`` or ``step_failure``.  For approaches, ``j`` is the
    nearest line, ``s_est``/``x_est`` the extrapolated contact and ``state``
    the last regular state (where the trigger fired).
    """

    kind: str
    state: CurveState
    j: Optional[int] = None
    s_est: Optional[float] = None
    x_est: Optional[tuple] = None
    message: str = ""


class _Geometry:
    """Precomputed trigonometry of the singular lines."""

    def __init__(self, spec: OrbitTypeSpec):
        self.spec = spec
        self.J = spec.J
        self.sin = [math.sin(spec.phi[j]) for j in spec.J]
        self.cos = [math.cos(spec.phi[j]) for j in spec.J]
        self.mult = [float(spec.mult[j]) for j in spec.J]
        self.nm1 = float(spec.n - 1)

    def denominators(self, x, y):
        return [-s * x + c * y for s, c in zip(self.sin, self.cos)]

    def line_sum(self, x, y, tau):
        """``sum_j n_j cos(tau - phi_j) / (e(phi_j)^perp . x)``."""
        total = 0.0
        ct, st = math.cos(tau), math.sin(tau)
        for s, c, m in zip(self.sin, self.cos, self.mult):
            d = -s * x + c * y
            if abs(d) < DENOM_TOL:
                raise SingularityError(f"point ({x!r}, {y!r}) is on the singular set")
            total += m * (ct * c + st * s) / d
        return total

    def d_min(self, x, y):
        return min(abs(-s * x + c * y) for s, c in zip(self.sin, self.cos))


def tau_rate(spec: OrbitTypeSpec, h: HField, state: CurveState) -> float:
    g = _Geometry(spec)
    return -g.nm1 * h.eval(state.s) + g.line_sum(state.x, state.y, state.tau)


def _trigger_value(geo, tol, x, y):
    return geo.d_min(x, y) - tol.singular_trigger * (1.0 + math.hypot(x, y))


def _classify(spec, geo, x, y):
    b = boundary_values(spec, (x, y))
    j = min(b, key=lambda k: abs(b[k]))
    r = math.hypot(x, y)
    if spec.family is not Family.I and abs(b[j]) > ORIGIN_RATIO * r:
        return "origin_approach", j
    return "boundary_approach", j


def _extrapolate_contact(geo, spec, h, st, j, direction):
    """Zero of the quadratic Taylor model of ``b(s) = e(phi_j)^perp . x(s)``."""
    phi = spec.phi[j]
    kappa = -geo.nm1 * h.eval(st.s) + geo.line_sum(st.x, st.y, st.tau)
    b0 = -math.sin(phi) * st.x + math.cos(phi) * st.y
    b1 = math.sin(st.tau - phi) * direction
    b2 = 0.5 * kappa * math.cos(st.tau - phi)
    roots = np.roots([b2, b1, b0]) if abs(b2) > 1e-300 else np.roots([b1, b0])
    ahead = [r.real for r in roots if abs(r.imag) < 1e-12 and r.real >= 0.0]
    ds = min(ahead) if ahead else (-b0 / b1 if b1 != 0.0 else 0.0)
    ds = abs(ds)
    ct, sn = math.cos(st.tau), math.sin(st.tau)
    k = kappa * direction
    x = st.x + ds * direction * ct - 0.5 * ds * ds * k * sn * direction
    y = st.y + ds * direction * sn + 0.5 * ds * ds * k * ct * direction
    return st.s + direction * ds, (x, y)


def integrate(spec: OrbitTypeSpec, h: HField, start: CurveState, s_target: float,
              tol: Tolerances = Tolerances(), check_trigger: bool = True):
    """Integrate from ``start`` towards ``s_target``.

    Returns ``(samples, event)``.  Samples are taken every ``tol.sample_ds``
    in arclength (measured from ``start.s``) plus the final state.
    """
    if s_target == start.s:
        raise ValueError("s_target must differ from start.s")
    geo = _Geometry(spec)
    direction = 1.0 if s_target > start.s else -1.0

    def rhs(s, y):
        ct, st = math.cos(y[2]), math.sin(y[2])
        return np.array([ct, st, -geo.nm1 * h.eval(s) + geo.line_sum(y[0], y[1], y[2])])

    d0 = geo.d_min(start.x, start.y)
    if d0 < DENOM_TOL:
        raise SingularityError("start point is on the singular set")
    # Steps never exceed the sample spacing, so interpolated samples carry
    # errors far below what finite differences of them can resolve.
    h_top = min(tol.h_max, tol.sample_ds)
    cap = lambda x, y: max(min(h_top, tol.step_cap_fraction * geo.d_min(x, y)), tol.h_min)
    solver = RK45(rhs, start.s, np.array([start.x, start.y, start.tau]), s_target,
                  rtol=tol.rel, atol=tol.abs, max_step=cap(start.x, start.y),
                  first_step=min(cap(start.x, start.y), abs(s_target - start.s)))
    samples = [start]
    k_next = 1

    def emit_until(sol, t_end, inclusive):
        nonlocal k_next
        while True:
            t = start.s + direction * k_next * tol.sample_ds
            if (t - t_end) * direction > 0 or (not inclusive and t == t_end):
                break
            y = sol(t)
            samples.append(CurveState(t, float(y[0]), float(y[1]), float(y[2])))
            k_next += 1

    def final(t, y):
        st = CurveState(float(t), float(y[0]), float(y[1]), float(y[2]))
        if samples[-1].s != st.s:
            samples.append(st)
        return st

    if check_trigger and _trigger_value(geo, tol, start.x, start.y) <= 0.0:
        kind, j = _classify(spec, geo, start.x, start.y)
        return samples, IntegrationEvent(kind, start, j, start.s, (start.x, start.y),
                                         "start point is inside the singular trigger zone")

    while True:
        solver.max_step = cap(solver.y[0], solver.y[1])
        t_old = solver.t
        try:
            msg = solver.step()
        except SingularityError as exc:
            st = CurveState(float(solver.t), *map(float, solver.y))
            return samples, IntegrationEvent("step_failure", st, message=str(exc))
        if solver.status == "failed":
            st = final(solver.t, solver.y)
            return samples, IntegrationEvent("step_failure", st, message=str(msg))
        t_new = solver.t
        sol = solver.dense_output()
        if solver.step_size is not None and solver.step_size < tol.h_min and solver.status == "running":
            emit_until(sol, t_new, True)
            st = final(t_new, solver.y)
            return samples, IntegrationEvent("step_failure", st, message="step size below h_min")
        if check_trigger and _trigger_value(geo, tol, solver.y[0], solver.y[1]) <= 0.0:
            # locate the trigger crossing inside the step by bisection
            a, b = t_old, t_new
            for _ in range(100):
                m = 0.5 * (a + b)
                ym = sol(m)
                if _trigger_value(geo, tol, ym[0], ym[1]) > 0.0:
                    a = m
                else:
                    b = m
                if abs(b - a) <= 1e-15 * max(1.0, abs(m)):
                    break
            t_hit = b
            emit_until(sol, t_hit, False)
            y_hit = sol(t_hit)
            st = final(t_hit, y_hit)
            kind, j = _classify(spec, geo, st.x, st.y)
            if kind == "boundary_approach":
                s_est, x_est = _extrapolate_contact(geo, spec, h, st, j, direction)
            else:
                r = math.hypot(st.x, st.y)
                s_est, x_est = t_hit + direction * r, (0.0, 0.0)
            return samples, IntegrationEvent(kind, st, j, s_est, x_est)
        if solver.status == "finished":
            emit_until(sol, t_new, False)
            st = final(t_new, solver.y)
            return samples, IntegrationEvent("reached_end", st)
        emit_until(sol, t_new, True)


def _fd_weights(s, order):
    """Five-point derivative weights (exact for quartics) on a non-uniform grid.

    Returns ``(idx, w1, w2)``: node indices of each stencil and the weights of
    the first and second derivatives at its target node.  Rows with a
    repeated abscissa get NaN weights.
    """
    n = len(s)
    i = np.arange(1, n - 1)
    start = np.clip(i - 2, 0, n - 5)
    idx = start[:, None] + np.arange(5)[None, :]
    t = s[idx] - s[i][:, None]
    scale = np.max(np.abs(t), axis=1, keepdims=True)
    scale[scale == 0.0] = 1.0
    tn = t / scale
    V = tn[:, None, :] ** np.arange(5)[None, :, None]  # V[r, p, k] = t_k^p
    ok = np.all(np.diff(np.sort(t, axis=1), axis=1) > 0.0, axis=1)
    V[~ok] = np.eye(5)
    rhs = np.zeros((len(i), 5, 2))
    rhs[:, 1, 0] = 1.0
    rhs[:, 2, 1] = 2.0
    w = np.linalg.solve(V, rhs)
    w1 = w[:, :, 0] / scale
    w2 = w[:, :, 1] / scale**2
    w1[~ok] = np.nan
    w2[~ok] = np.nan
    return i, idx, w1, w2


def residual_profile(spec: OrbitTypeSpec, h: HField, segment, exclusion: float = 1e-3):
    """Pointwise residual of the raw second-order equation from positions only.

    Derivatives are finite differences of the sampled positions on the
    (possibly non-uniform) arclength grid, so the check does not depend on
    the integrator's angle formulation.  Returns ``(values, excluded)``:
    ``values`` is NaN at the two ends, at repeated ``s`` and where the sample
    lies within ``exclusion`` of the singular set (flagged in ``excluded``).
    """
    s = np.array([p.s for p in segment], dtype=float)
    X = np.array([[p.x, p.y] for p in segment], dtype=float)
    n = len(segment)
    out = np.full(n, np.nan)
    geo = _Geometry(spec)
    excluded = np.array([geo.d_min(p.x, p.y) < exclusion for p in segment], dtype=bool)
    if n < 5:
        return out, excluded
    i, idx, w1, w2 = _fd_weights(s, 2)
    d1 = np.einsum("rk,rkc->rc", w1, X[idx])
    d2 = np.einsum("rk,rkc->rc", w2, X[idx])
    curv = -d2[:, 1] * d1[:, 0] + d2[:, 0] * d1[:, 1]  # x''^perp . x'
    Hs = h.eval_array(s[i])
    total = curv - geo.nm1 * Hs
    for sn, cs, m in zip(geo.sin, geo.cos, geo.mult):
        den = -sn * X[i, 0] + cs * X[i, 1]
        with np.errstate(divide="ignore", invalid="ignore"):
            total = total + m * (cs * d1[:, 0] + sn * d1[:, 1]) / den
    total[excluded[i]] = np.nan
    out[i] = total
    return out, excluded


def residual(spec: OrbitTypeSpec, h: HField, segment, exclusion: float = 1e-3) -> float:
    """Largest finite-difference residual over interior samples away from ``S``."""
    if len(segment) < 5:
        raise ValueError("residual needs at least five samples")
    vals, _ = residual_profile(spec, h, segment, exclusion)
    finite = vals[np.isfinite(vals)]
    return float(np.max(np.abs(finite))) if finite.size else 0.0
