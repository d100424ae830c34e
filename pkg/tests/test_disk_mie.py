import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from monoshape import disk_mie as dm, forward as f, geometry as g, specfun

W = f.DEFAULT_WAVE
K = W.wavenumber


def unit(a):
    return np.array([math.cos(a), math.sin(a)])


def test_series_tail_is_negligible():
    disk = g.InitialDisk((0.01, 0.0), 0.03)
    M0 = int(K * 0.03) + 20
    x, d = unit(0.4), unit(2.0)
    a = dm.far_field_series(disk, W, x, d, M0)
    b = dm.far_field_series(disk, W, x, d, M0 + 40)
    assert abs(a - b) < 1e-12


def test_truncation_validated():
    with pytest.raises(ValueError):
        dm.far_field_series(g.InitialDisk((0, 0), 0.03), W, unit(0), unit(1), 0)


def test_origin_disk_backscatter_constant():
    disk = g.InitialDisk((0, 0), 0.2)
    vals = [abs(dm.far_field_series(disk, W, unit(a), -unit(a))) for a in np.linspace(0, 6, 13)]
    assert np.ptp(vals) < 1e-14


def test_coefficients_satisfy_dirichlet_condition():
    disk = g.InitialDisk((0.1, -0.2), 0.05)
    d = unit(1.1)
    series = dm.DiskSeries(disk, W, 40, tuple(d))
    theta = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    pts = np.array(disk.center) + disk.radius * np.column_stack([np.cos(theta), np.sin(theta)])
    total = series.scattered_field(pts) + np.exp(1j * K * pts @ d)
    assert np.max(np.abs(total)) <= 1e-10


def test_series_far_field_is_asymptotic_limit_of_near_field():
    disk = g.InitialDisk((0.0, 0.0), 0.03)
    d = unit(0.0)
    series = dm.DiskSeries(disk, W, 40, tuple(d))
    x = unit(0.9)
    r = 2000.0
    near = series.scattered_field(r * x[None, :])[0]
    ff = near * math.sqrt(r) * np.exp(-1j * K * r)
    assert abs(ff - dm.far_field_series(disk, W, x, d)) < 1e-3 * abs(ff)


def test_density_solves_single_layer_on_circle():
    disk = g.InitialDisk((0.0, 0.0), 0.03)
    d = unit(0.3)
    system = f.assemble(g.make_circle(disk, 128), W)
    ref = f.solve_density(system, d).values
    got = dm.disk_density(disk, W, d, system.curve.t)
    assert np.max(np.abs(got - ref)) <= 1e-8 * np.max(np.abs(ref))


def test_modulus_monotone_and_positive():
    w = f.WaveContext.from_wavenumber(20.95845)
    r = np.linspace(0.001, 1.0, 1001)[1:]
    fm = dm.monostatic_modulus(r, w, 200)
    assert np.all(fm > 0)
    assert np.all(np.diff(fm) > 0)
    with pytest.raises(ValueError):
        dm.monostatic_modulus(0.0, w)


def test_modulus_equals_scaled_backscatter():
    disk = g.InitialDisk((0.3, 0.1), 0.05)
    u = dm.far_field_series(disk, W, unit(0.2), -unit(0.2), 200)
    assert math.sqrt(math.pi * K / 2) * abs(u) == pytest.approx(dm.monostatic_modulus(0.05, W, 200), rel=1e-12)


def test_data_modulus_modes():
    data = f.MonostaticData(f.DirectionSet(4), np.full(4, 0.1 + 0.2j))
    expect = math.sqrt(math.pi * K / 2) * abs(0.1 + 0.2j)
    assert dm.data_modulus_mean(data, W) == pytest.approx(expect)
    assert dm.data_modulus_mean(data, W, "quadratic") == pytest.approx(expect)
    with pytest.raises(ValueError):
        dm.data_modulus_mean(data, W, "median")


@settings(max_examples=30, deadline=None)
@given(st.lists(st.complex_numbers(max_magnitude=10, allow_nan=False, allow_infinity=False),
                min_size=4, max_size=4))
def test_arithmetic_not_above_quadratic(vals):
    data = f.MonostaticData(f.DirectionSet(4), np.array(vals))
    assert dm.data_modulus_mean(data, W) <= dm.data_modulus_mean(data, W, "quadratic") * (1 + 1e-12) + 1e-300


def test_radius_inverts_modulus():
    for r in (0.003, 0.03, 0.467, 1.3):
        gbar = dm.monostatic_modulus(r, W)
        assert dm.estimate_radius(gbar, W, tol=1e-9) == pytest.approx(r, abs=1e-8)


def test_bracket_errors():
    g0 = dm.monostatic_modulus(0.03, W)
    with pytest.raises(dm.BracketError, match="outside"):
        dm.estimate_radius(g0, W, bracket=(0.1, 1.0))
    with pytest.raises(dm.BracketError):
        dm.estimate_radius(g0, W, bracket=(1.0, 0.1))


def test_radius_independent_of_center():
    dirs = f.DirectionSet(36)
    vals = []
    for center in ((0.01, 0.0), (1.01, 1.0)):
        curve = g.make_circle(g.InitialDisk(center, 0.03), 128)
        data = f.monostatic_sweep(curve, W, dirs)
        vals.append(dm.estimate_radius(dm.data_modulus_mean(data, W), W, tol=1e-12))
    assert vals[0] == pytest.approx(vals[1], abs=1e-12)


def test_ratio_symmetric_orders():
    r = dm._ratios_symmetric(5, 0.7)
    np.testing.assert_array_equal(r, r[::-1])
    assert r[5] == pytest.approx(specfun.bessel_j(0, 0.7) / specfun.hankel1(0, 0.7))
