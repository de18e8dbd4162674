import math

import numpy as np
import pytest
from hypothesis import assume, given, settings, strategies as st

from rotogen import catalog
from rotogen.plane import (Frame, antipodal_cone, cone_of, cones, e_dir, e_perp, rotate, sector_of,
                           singular_report)

angles = st.floats(-10.0, 10.0, allow_nan=False)


def test_unit_vectors():
    assert np.allclose(e_dir(0.0), [1.0, 0.0])
    assert np.allclose(e_perp(math.pi / 2), [-1.0, 0.0])
    assert np.allclose(e_dir(math.pi / 4), [math.sqrt(2) / 2, math.sqrt(2) / 2])


def test_rotate_examples():
    assert np.allclose(rotate(math.pi / 2, [1.0, 0.0]), [0.0, 1.0], atol=1e-16)
    x = np.array([0.3, -2.0])
    assert np.array_equal(rotate(0.0, x), x)


@settings(max_examples=1000, deadline=None)
@given(angles)
def test_perp_orthonormal(phi):
    a, b = e_dir(phi), e_perp(phi)
    assert abs(a @ b) < 1e-15
    assert abs(np.hypot(*a) - 1.0) < 1e-15 and abs(np.hypot(*b) - 1.0) < 1e-15


@settings(max_examples=200, deadline=None)
@given(angles, st.floats(-1e3, 1e3), st.floats(-1e3, 1e3))
def test_rotate_preserves_norm_and_inverts(psi, x, y):
    v = np.array([x, y])
    w = rotate(psi, v)
    scale = max(1.0, np.hypot(x, y))
    assert abs(np.hypot(*w) - np.hypot(x, y)) <= 1e-15 * scale * 4
    assert np.allclose(rotate(-psi, w), v, atol=1e-12 * scale)


def test_sector_of_examples():
    assert sector_of(catalog.type_I(3), (3.0, 1.0)) == 0
    assert sector_of(catalog.type_II(1, 1), (1.0, 1.0)) == 0
    assert sector_of(catalog.type_II(1, 1), (1.0, 0.0)) is None


SPECS = [catalog.type_II(1, 1), catalog.type_III(1), catalog.type_IV("SO(5),R10"), catalog.type_V(2)]


@settings(max_examples=300, deadline=None)
@given(st.sampled_from(SPECS), st.floats(0.0, 2 * math.pi), st.floats(0.1, 10.0))
def test_sector_rotation_consistency(spec, a, r):
    x = r * e_dir(a)
    assume(min(abs(math.sin(a - phi)) for phi in spec.angles) > 1e-9)
    for i in catalog.sector_ids(spec):
        assert (sector_of(spec, x) == i) == (sector_of(spec, rotate(-spec.phi[i], x)) == 0)


def test_singular_report_examples():
    rep = singular_report(catalog.type_II(1, 1), (1.0, 1.0))
    assert rep.per_direction[0] == pytest.approx(1.0) and rep.per_direction[1] == pytest.approx(-1.0)
    assert rep.origin_distance == pytest.approx(math.sqrt(2))
    assert rep.nearest_kind == "boundary" and rep.nearest_distance == pytest.approx(1.0)
    rep0 = singular_report(catalog.type_II(1, 1), (0.0, 0.0))
    assert rep0.nearest_kind == "origin" and rep0.nearest_distance == 0.0
    rep1 = singular_report(catalog.type_I(3), (5.0, 0.1))
    assert rep1.nearest_kind == "boundary" and rep1.nearest_j == 0 and rep1.nearest_distance == pytest.approx(0.1)
    assert singular_report(catalog.type_II(1, 1), (2.0, 0.0)).in_singular_set


def test_frame_round_trip():
    f = Frame(0.4, -1)
    x = np.array([[0.3, 0.8], [-1.0, 2.0]])
    u, v = f.to_frame(x)
    assert np.allclose(f.from_frame(u, v), x)
    assert f.angle_to_frame(f.angle_from_frame(0.25)) == pytest.approx(0.25)


@pytest.mark.parametrize("spec", SPECS)
def test_cone_table(spec):
    table = cones(spec)
    assert len(table) == 2 * len(spec.J)
    total = sum(c.hi - c.lo for c in table)
    assert total == pytest.approx(2 * math.pi)
    for c in table:
        assert c.lo < c.theta < c.hi
        assert abs(catalog.A_theta(spec, c.theta)) < 1e-11
        anti = antipodal_cone(table, c)
        assert anti.theta == pytest.approx(c.theta + math.pi if c.theta + math.pi < table[0].lo + 2 * math.pi
                                           else c.theta - math.pi)
        x = e_dir(c.theta)
        assert cone_of(spec, x, table) is c
