import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from rotogen import catalog
from rotogen.errors import SingularityError
from rotogen.hfield import ConstantH, PolynomialH, parse_h
from rotogen.integrator import CurveState, Tolerances, integrate, residual, residual_profile, tau_rate
from rotogen.plane import e_dir

from oracles import raw_rk4

TYPE_I = catalog.type_I(3)
TYPE_II = catalog.type_II(1, 1)


def test_tau_rate_examples():
    ray = 2.0 * e_dir(math.pi / 4)
    assert tau_rate(TYPE_II, ConstantH(0.0), CurveState(0.0, ray[0], ray[1], math.pi / 4)) == pytest.approx(0.0, abs=1e-15)
    assert tau_rate(TYPE_I, ConstantH(0.0), CurveState(0.0, 0.0, 1.0, 0.0)) == pytest.approx(1.0)
    assert tau_rate(TYPE_I, ConstantH(1.0), CurveState(0.0, 0.0, 1.0, 0.0)) == pytest.approx(-1.0)


def test_tau_rate_on_singular_set():
    with pytest.raises(SingularityError):
        tau_rate(TYPE_I, ConstantH(0.0), CurveState(0.0, 1.0, 0.0, 0.0))


def test_sign_identity_for_circle():
    # x(s) = (sin s, cos s): x'' = -x, x''^perp . x' = -tau'
    s = 0.3
    xp = np.array([math.cos(s), -math.sin(s)])
    xpp = -np.array([math.sin(s), math.cos(s)])
    perp = np.array([-xpp[1], xpp[0]])
    tau_prime = -1.0  # tau = -s
    assert perp @ xp == pytest.approx(-tau_prime)


def test_catenary_endpoint():
    seg, ev = integrate(TYPE_I, ConstantH(0.0), CurveState(0.0, 0.0, 1.0, 0.0), math.sinh(1.0))
    assert ev.kind == "reached_end"
    end = seg[-1]
    assert math.hypot(end.x - 1.0, end.y - math.cosh(1.0)) < 1e-6


@pytest.mark.parametrize("H,tau0,x_end", [(1.0, 0.0, 1.0), (-1.0, math.pi, -1.0)])
def test_circle_boundary_event(H, tau0, x_end):
    # the unit circle through (0, 1): clockwise for H = 1, counterclockwise for H = -1
    seg, ev = integrate(TYPE_I, ConstantH(H), CurveState(0.0, 0.0, 1.0, tau0), 3.0)
    assert ev.kind == "boundary_approach" and ev.j == 0
    assert ev.x_est[0] == pytest.approx(x_end, abs=1e-8) and abs(ev.x_est[1]) < 1e-8
    assert ev.s_est == pytest.approx(math.pi / 2, abs=1e-8)


def test_ray_reaches_end():
    x0 = 0.1 * e_dir(math.pi / 4)
    seg, ev = integrate(TYPE_II, ConstantH(0.0), CurveState(0.0, x0[0], x0[1], math.pi / 4), 10.0)
    assert ev.kind == "reached_end"
    target = 10.1 * e_dir(math.pi / 4)
    assert math.hypot(seg[-1].x - target[0], seg[-1].y - target[1]) < 1e-9
    assert residual(TYPE_II, ConstantH(0.0), seg) < 1e-9


def test_residual_catenary_and_corruption():
    tol = Tolerances(sample_ds=1e-3)
    seg, _ = integrate(TYPE_I, ConstantH(0.0), CurveState(0.0, 0.0, 1.0, 0.0), 1.0, tol)
    assert residual(TYPE_I, ConstantH(0.0), seg) < 1e-5
    # a tangent that is off by 0.01 shows up as a drift in the positions
    corrupted = [CurveState(p.s, p.x + 0.01 * p.s * math.cos(p.tau + math.pi / 2), p.y + 0.01 * p.s * math.sin(p.tau + math.pi / 2), p.tau) for p in seg]
    assert residual(TYPE_I, ConstantH(0.0), corrupted) > 1e-3


def test_residual_excludes_near_singular_samples():
    pts = [CurveState(0.001 * k, 1.0, 0.0005 + 0.001 * k, math.pi / 2) for k in range(10)]
    vals, excluded = residual_profile(TYPE_I, ConstantH(0.0), pts)
    assert excluded[0] and not excluded[-1]
    assert np.isnan(vals[0])


def test_unit_speed_structural():
    seg, _ = integrate(TYPE_I, ConstantH(0.3), CurveState(0.0, 0.0, 1.0, 0.2), 1.0)
    for p in seg:
        assert np.hypot(*p.tangent) == pytest.approx(1.0, abs=1e-15)


def _random_regular_start(rng):
    spec = [catalog.type_I(3), catalog.type_I(5), catalog.type_II(1, 2), catalog.type_III(2),
            catalog.type_IV("SO(5),R10"), catalog.type_V(1)][rng.integers(6)]
    if spec.family is catalog.Family.I:
        x = np.array([rng.uniform(-2, 2), rng.uniform(2.5, 4.0)])
    else:
        i = int(rng.choice(catalog.sector_ids(spec)))
        lo, hi = catalog.sector_bounds(spec, i)
        # far enough from every line that one unit of arclength stays regular
        r = 2.5 / math.sin(0.5 * (hi - lo))
        x = r * e_dir(0.5 * (lo + hi))
    h = PolynomialH(tuple(rng.uniform(-0.5, 0.5, 2)))
    return spec, h, x, rng.uniform(-math.pi, math.pi)


def test_angle_form_matches_raw_second_order_form():
    rng = np.random.default_rng(2024)
    tol = Tolerances(rel=1e-12, abs=1e-13)
    for _ in range(20):
        spec, h, x, tau = _random_regular_start(rng)
        seg, ev = integrate(spec, h, CurveState(0.0, x[0], x[1], tau), 1.0, tol)
        assert ev.kind == "reached_end"
        raw = raw_rk4(spec.angles, spec.mults, spec.n, h.eval, 0.0, x, (math.cos(tau), math.sin(tau)), 1.0, 2000)
        assert math.hypot(raw[0] - seg[-1].x, raw[1] - seg[-1].y) < 1e-7
        assert abs(math.remainder(math.atan2(raw[3], raw[2]) - seg[-1].tau, 2 * math.pi)) < 1e-7


def test_reversibility():
    rng = np.random.default_rng(11)
    for _ in range(10):
        spec, h, x, tau = _random_regular_start(rng)
        fwd, _ = integrate(spec, h, CurveState(0.0, x[0], x[1], tau), 1.0)
        back, ev = integrate(spec, h, fwd[-1], 0.0)
        assert ev.kind == "reached_end"
        assert math.hypot(back[-1].x - x[0], back[-1].y - x[1]) < 1e-8


def test_convergence_order_against_circle():
    errs = []
    for step in (0.2, 0.1, 0.05):
        tol = Tolerances(rel=1.0, abs=1.0, h_max=step, sample_ds=step)
        seg, ev = integrate(TYPE_I, ConstantH(1.0), CurveState(0.0, 0.0, 1.0, 0.0), 1.0, tol)
        end = seg[-1]
        errs.append(math.hypot(end.x - math.sin(1.0), end.y - math.cos(1.0)))
    orders = [math.log2(a / b) for a, b in zip(errs, errs[1:])]
    assert min(orders) >= 4.0, (errs, orders)


def test_deterministic_samples():
    a, _ = integrate(TYPE_I, parse_h("0.3*sin(s)"), CurveState(0.0, 0.0, 1.0, 0.1), 2.0)
    b, _ = integrate(TYPE_I, parse_h("0.3*sin(s)"), CurveState(0.0, 0.0, 1.0, 0.1), 2.0)
    assert a == b


def test_step_failure_without_trigger():
    # with the trigger disabled the circle runs into the pole and steps collapse
    tol = Tolerances(h_min=1e-6)
    seg, ev = integrate(TYPE_I, ConstantH(1.0), CurveState(0.0, 0.0, 1.0, 0.0), 3.0, tol, check_trigger=False)
    assert ev.kind == "step_failure"
    assert abs(ev.state.y) < 1e-3 and ev.state.s < math.pi / 2


@settings(max_examples=30, deadline=None)
@given(st.floats(0.5, 3.0), st.floats(-0.4, 1.0))
def test_ray_property(r0, length):
    if abs(length) < 1e-3:
        return
    x0 = r0 * e_dir(math.pi / 4)
    seg, ev = integrate(TYPE_II, ConstantH(0.0), CurveState(0.0, x0[0], x0[1], math.pi / 4), length)
    assert all(abs(p.tau - math.pi / 4) < 1e-12 for p in seg)
