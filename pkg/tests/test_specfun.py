import math

import mpmath
import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from monoshape import specfun as sf

mpmath.mp.dps = 40


def mp_j(m, x):
    return float(mpmath.besselj(m, x))


def mp_y(m, x):
    return float(mpmath.bessely(m, x))


def test_j_at_zero():
    assert sf.bessel_j(0, 0.0) == 1.0
    assert sf.bessel_j(1, 0.0) == 0.0
    assert sf.bessel_j(7, 0.0) == 0.0


@pytest.mark.parametrize("m,x", [(5, 20.9585), (0, 0.3), (1, 7.5), (40, 3.0), (12, 12.0), (100, 20.0)])
def test_j_matches_high_precision(m, x):
    assert sf.bessel_j(m, x) == pytest.approx(mp_j(m, x), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("m,x", [(3, 10.0), (0, 0.02), (1, 0.5), (0, 33.0), (20, 5.0), (7, 40.0)])
def test_y_matches_high_precision(m, x):
    assert sf.bessel_y(m, x) == pytest.approx(mp_y(m, x), rel=1e-12)


def test_hankel_matches_high_precision():
    ref = complex(mpmath.hankel1(2, 5.0))
    assert abs(sf.hankel1(2, 5.0) - ref) <= 1e-12 * abs(ref)


def test_deep_order_matches_where_double_precision_underflows_elsewhere():
    # J_200(5) ~ 4.8e-296 is still representable
    assert sf.bessel_j(200, 5.0) == pytest.approx(mp_j(200, 5.0), rel=1e-10)


def test_reflection_exact():
    x = np.linspace(0.1, 30.0, 37)
    for m in (1, 2, 5, 13):
        np.testing.assert_array_equal(sf.bessel_j(-m, x), (-1) ** m * sf.bessel_j(m, x))
        np.testing.assert_array_equal(sf.bessel_y(-m, x), (-1) ** m * sf.bessel_y(m, x))


def test_y0_diverges_towards_origin():
    x = np.geomspace(1e-8, 0.5, 50)
    y = sf.bessel_y(0, x)
    assert np.all(np.diff(y) > 0)
    assert y[0] < -10


def test_y_rejects_nonpositive():
    with pytest.raises(ValueError):
        sf.bessel_y(0, 0.0)
    with pytest.raises(ValueError):
        sf.bessel_y(1, -1.0)


def test_order_limit():
    with pytest.raises(sf.UnsupportedOrderError):
        sf.bessel_j(401, 1.0)
    cfg = sf.SpecfunConfig(max_order=10)
    with pytest.raises(sf.UnsupportedOrderError):
        sf.bessel_j(11, 1.0, cfg)


def test_config_validation():
    with pytest.raises(ValueError):
        sf.SpecfunConfig(max_order=0)
    with pytest.raises(ValueError):
        sf.SpecfunConfig(rel_tol=0.0)


def test_hankel_large_argument_asymptotics():
    for t in (50.0, 200.0, 1000.0):
        approx = math.sqrt(2 / (math.pi * t)) * np.exp(1j * (t - math.pi / 4))
        h = sf.hankel1(0, t)
        assert abs(h - approx) / abs(h) < 1.0 / t


def test_hankel2_is_conjugate():
    x = np.linspace(0.2, 25.0, 11)
    for m in (0, 3, 9):
        np.testing.assert_array_equal(sf.hankel2(m, x), np.conj(sf.hankel1(m, x)))


def test_wronskian_over_representable_range():
    x = np.linspace(0.02, 50.0, 400)
    j = sf.bessel_j_orders(sf.DEFAULT_CONFIG.max_order + 1, x)
    y = sf.bessel_y_orders(sf.DEFAULT_CONFIG.max_order + 1, x)
    target = 2.0 / (np.pi * x)
    with np.errstate(all="ignore"):
        w = j[1:] * y[:-1] - j[:-1] * y[1:]
    # both factors finite: Y has not overflowed and J has not underflowed
    ok = np.isfinite(y[1:]) & (np.abs(j[:-1]) > 1e-290) & (np.abs(j[1:]) > 1e-290)
    assert ok[:30].all()
    rel = np.abs(w[ok] / np.broadcast_to(target, w.shape)[ok] - 1.0)
    assert rel.max() < 10 * sf.DEFAULT_CONFIG.rel_tol


@pytest.mark.parametrize("m", [0, 1, 4, 15])
def test_hankel_derivative_finite_difference(m):
    k, r, h = 20.9585, 0.03, 1e-6
    fd = (sf.hankel1(m, k * (r + h)) - sf.hankel1(m, k * (r - h))) / (2 * h)
    exact = k * sf.hankel1_derivative(m, k * r)
    assert abs(fd - exact) <= 1e-6 * abs(exact)


def test_derivative_recurrence_form():
    x = 3.7
    for m in (0, 2, 8):
        lhs = sf.hankel1_derivative(m, x)
        rhs = 0.5 * (sf.hankel1(m - 1, x) - sf.hankel1(m + 1, x))
        assert abs(lhs - rhs) <= 1e-13 * abs(lhs)


def test_ratio_underflow_is_zero():
    r = sf.j_over_h_orders(200, 0.2)
    assert np.all(np.isfinite(r))
    assert r[-1] == 0.0
    assert r[0] != 0.0


@settings(max_examples=40, deadline=None)
@given(m=st.integers(0, 60), x=st.floats(0.05, 60.0))
def test_j_property_against_oracle(m, x):
    ref = mp_j(m, x)
    got = sf.bessel_j(m, x)
    assert abs(got - ref) <= 1e-11 * max(abs(ref), 1e-280) + 1e-300 or abs(ref) < 1e-290


@settings(max_examples=40, deadline=None)
@given(x=st.floats(0.05, 60.0))
def test_vectorised_orders_agree_with_scalar(x):
    j = sf.bessel_j_orders(10, x)
    for m in (0, 3, 10):
        assert j[m] == pytest.approx(sf.bessel_j(m, x), rel=1e-14, abs=1e-300)
