import math

import mpmath as mp
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from microtrap.errors import DivergentAtZero, DivergentIntegral, IntegerC, PoleAtC, PoleAtNonPositiveInteger
from microtrap.specfun import (
    SeriesPolicy,
    digamma,
    gamma_pq,
    kummer_m,
    pochhammer,
    tricomi_u,
    tricomi_u_dc,
    upper_inc_gamma,
)

mp.mp.dps = 40


def u_ref(a, c, z):
    # a hair off c keeps mpmath away from its integer-parameter limit code
    return float(mp.hyperu(a, mp.mpf(c) + mp.mpf("1e-25"), z))


def rel(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def test_pochhammer():
    assert pochhammer(3.0, 0) == 1.0
    assert pochhammer(3.0, 4) == 3 * 4 * 5 * 6
    assert pochhammer(-2.0, 3) == 0.0


@pytest.mark.parametrize("a,c,z", [
    (0.5, 1.5, 2.0), (-3.0, 0.5, 4.0), (2.0, -0.5, 1.0), (-1.5, -0.3, 7.0),
    (1.0, 2.0, -30.0), (-20.5, -39.9, 3.0), (0.3, 0.7, 40.0), (-0.5, 2.5, -80.0),
])
def test_kummer_m_matches_mpmath(a, c, z):
    assert rel(kummer_m(a, c, z), float(mp.hyp1f1(a, c, z))) < 1e-11


@given(st.floats(-5, 5), st.floats(0.1, 6), st.floats(-20, 20))
@settings(max_examples=60, deadline=None)
def test_kummer_m_property(a, c, z):
    ref = float(mp.hyp1f1(mp.mpf(a) + mp.mpf("1e-25"), c, z))
    if abs(ref) > 1e-8:
        assert abs(kummer_m(a, c, z) - ref) <= 1e-9 * max(1.0, abs(ref))


def test_kummer_m_pole():
    with pytest.raises(PoleAtC):
        kummer_m(0.5, -2.0, 1.0)
    with pytest.raises(PoleAtC):
        kummer_m(0.5, -2.0 + 1e-7, 1.0)


@pytest.mark.parametrize("a,c,z", [
    (-1.0, -1.25, 0.5), (-1.0, -1.25, 9.0), (-19.0, -19.5, 4.0), (0.5, -0.7, 2.0),
    (-11.5, -13.0, 3.0), (-1.0, -1.0, 2.5), (2.0, 3.0, 1.0), (-0.5, 0.25, 0.0),
    (-49.0, -49.2, 20.0), (-1.0, -2.9, 60.0),
])
def test_tricomi_u_matches_mpmath(a, c, z):
    ref = u_ref(a, c, z) if z > 0 else float(mp.gamma(1 - c) / mp.gamma(a - c + 1))
    assert rel(tricomi_u(a, c, z), ref) < 1e-8


@given(st.floats(-6, 2), st.floats(-8, 0.9), st.floats(0.01, 25))
@settings(max_examples=60, deadline=None)
def test_tricomi_u_property(a, c, z):
    ref = u_ref(a, c, z)
    assert abs(tricomi_u(a, c, z) - ref) <= 1e-7 * max(1.0, abs(ref))


def test_tricomi_u_divergent_at_zero():
    with pytest.raises(DivergentAtZero):
        tricomi_u(0.5, 1.5, 0.0)
    with pytest.raises(ValueError):
        tricomi_u(0.5, 0.5, -1.0)


@pytest.mark.parametrize("a,c,z", [(-1.0, -1.25, 0.7), (-19.0, -19.5, 3.0), (0.5, -0.3, 2.0), (-4.5, -5.25, 10.0)])
def test_tricomi_u_dc(a, c, z):
    ref = float(mp.diff(lambda cc: mp.hyperu(a, cc, z), c))
    assert rel(tricomi_u_dc(a, c, z), ref) < 1e-7


def test_tricomi_u_dc_integer():
    with pytest.raises(IntegerC):
        tricomi_u_dc(-1.0, -2.0, 1.0)


@pytest.mark.parametrize("x", [0.3, 1.0, 2.5, 17.0, -0.5, -3.7, 1e-4])
def test_digamma(x):
    assert rel(digamma(x), float(mp.digamma(x))) < 1e-13


def test_digamma_pole():
    with pytest.raises(PoleAtNonPositiveInteger):
        digamma(-2.0)


@given(st.floats(0.05, 60), st.floats(0, 120))
@settings(max_examples=80, deadline=None)
def test_gamma_pq_property(a, z):
    p, q = gamma_pq(a, z)
    assert abs(p + q - 1.0) < 1e-13
    ref = float(mp.gammainc(a, z, mp.inf, regularized=True))
    assert abs(q - ref) < 1e-12 + 1e-11 * ref


@pytest.mark.parametrize("a,z", [(2.5, 1.0), (-0.5, 0.3), (-2.0, 0.4), (0.0, 0.2), (-1.5, 3.0), (0.0, 5.0), (40.0, 35.0)])
def test_upper_inc_gamma(a, z):
    assert rel(upper_inc_gamma(a, z), float(mp.gammainc(a, z))) < 1e-11


def test_upper_inc_gamma_divergent():
    with pytest.raises(DivergentIntegral):
        upper_inc_gamma(-1.0, 0.0)


@given(st.floats(0.1, 8), st.floats(0.05, 15))
@settings(max_examples=40, deadline=None)
def test_incomplete_gamma_identity(a, z):
    # Gamma(a; z) = exp(-z) U(1 - a, 1 - a; z), two independent routes
    lhs = upper_inc_gamma(a, z)
    rhs = math.exp(-z) * tricomi_u(1 - a, 1 - a, z)
    assert abs(lhs - rhs) <= 1e-8 * abs(lhs)


def test_policy_validation():
    with pytest.raises(ValueError):
        SeriesPolicy(rel_tol=0)
    with pytest.raises(ValueError):
        SeriesPolicy(integer_guard=0.1)


def test_kummer_m_terminating_before_pole():
    # M(-1, -2; z) = 1 + z/2 is a polynomial even though c is a pole
    for z in (-60.0, -3.0, 0.0, 2.0):
        assert kummer_m(-1.0, -2.0, z) == pytest.approx(1.0 + z / 2.0, abs=1e-14)
    with pytest.raises(PoleAtC):
        kummer_m(-2.0, -1.0, 1.0)


@pytest.mark.parametrize("a,c,z", [(-1.5, 0.0, 17.0), (-5.3, -7.9, 20.0), (-0.5, -3.2, 25.0)])
def test_tricomi_u_negative_parameters_large_z(a, c, z):
    assert rel(tricomi_u(a, c, z), u_ref(a, c, z)) < 1e-10
