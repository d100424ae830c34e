import math

import numpy as np
import pytest

from monoshape import basis as b, disk_mie as dm, forward as f, geometry as g

W = f.DEFAULT_WAVE
DISK = g.InitialDisk((0.0, 0.0), 0.03)


@pytest.fixture(scope="module")
def system():
    return b.circle_system(DISK, W, 128)


@pytest.fixture(scope="module")
def derived(system):
    return b.build_derived_basis(DISK, W, f.DirectionSet(36), system=system)


def test_psi_solves_defining_equation(system):
    d = np.array([0.0, -1.0])
    psi = b.psi_density(DISK, W, d, system=system).values
    rhs = np.exp(1j * W.wavenumber * system.curve.nodes @ d)
    res = system.matrix @ (psi * system.curve.speed) - rhs
    assert np.max(np.abs(res)) <= 1e-10


def test_psi_matches_series(system):
    d = np.array([math.cos(2.0), math.sin(2.0)])
    psi = b.psi_density(DISK, W, d, system=system).values
    ref = dm.disk_density(DISK, W, d, system.curve.t)
    assert np.max(np.abs(psi - ref)) <= 1e-6 * np.max(np.abs(ref))


def test_derived_orthonormal(derived):
    assert derived.kind == "derived"
    assert 1 <= derived.size <= 72
    np.testing.assert_allclose(derived.gram(), np.eye(derived.size), atol=1e-10)


def test_derived_spans_raw_functions(system, derived):
    raw = b.raw_derived_functions(DISK, W, f.DirectionSet(36), system)
    w = derived.inner_product_weights
    proj = (raw * w) @ derived.functions.T @ derived.functions
    norm = np.sqrt(np.sum(raw**2 * w, axis=1)).max()
    assert np.max(np.sqrt(np.sum((raw - proj) ** 2 * w, axis=1))) <= 1e-8 * norm


def test_derived_span_rotates_with_directions():
    # J = 32 directions on 128 nodes: a rotation by 2 pi / 32 is a 4-node shift
    sysm = b.circle_system(DISK, W, 128)
    dirs = f.DirectionSet(32)
    basis = b.build_derived_basis(DISK, W, dirs, system=sysm)
    raw = b.raw_derived_functions(DISK, W, dirs, sysm)
    rolled = np.roll(raw, 4, axis=1)
    w = basis.inner_product_weights
    proj = (rolled * w) @ basis.functions.T @ basis.functions
    assert np.max(np.abs(rolled - proj)) <= 1e-8 * np.max(np.abs(raw))


def test_larger_drop_tolerance_keeps_leading_directions(system, derived):
    coarse = b.build_derived_basis(DISK, W, f.DirectionSet(36), drop_tol=0.1, system=system)
    assert coarse.size < derived.size
    np.testing.assert_allclose(coarse.gram(), np.eye(coarse.size), atol=1e-10)


def test_gram_schmidt_drops_dependent_vectors():
    n = 64
    w = np.full(n, 2 * np.pi / n)
    t = 2 * np.pi * np.arange(n) / n
    v = np.array([np.cos(t), 2 * np.cos(t), np.sin(t), np.cos(t) + np.sin(t)])
    q, kept = b.gram_schmidt(v, w)
    assert kept == [0, 2]
    assert q.shape == (2, n)


def test_degenerate_basis(monkeypatch, system):
    monkeypatch.setattr(b, "raw_derived_functions", lambda *a, **k: np.zeros((4, 128)))
    with pytest.raises(b.DegenerateBasisError):
        b.build_derived_basis(DISK, W, f.DirectionSet(4), system=system)


def test_fourier_basis():
    fb = b.build_fourier_basis(DISK, 36, 128)
    assert fb.size == 73
    gram = fb.gram()
    np.testing.assert_allclose(gram - np.diag(np.diag(gram)), 0.0, atol=1e-12)
    j = np.arange(1, 37)
    np.testing.assert_allclose(np.diag(gram), np.r_[1.0, j**-4.0, j**-4.0], rtol=1e-12)
    assert np.sum(fb.functions[0] * fb.inner_product_weights) == pytest.approx(math.sqrt(2 * math.pi))
    with pytest.raises(ValueError):
        b.build_fourier_basis(DISK, 0)
    with pytest.raises(ValueError):
        b.build_fourier_basis(DISK, 64, 128)


def test_deformation_scaling():
    fb = b.build_fourier_basis(DISK, 2, 32)
    c = np.zeros(5)
    c[0] = math.sqrt(2 * math.pi) * math.log(2)
    rho = fb.domain(c).radial_profile()
    np.testing.assert_allclose(rho, 0.06)
    amp = fb.with_amplitude(0.5)
    np.testing.assert_allclose(amp.domain(2 * c).radial_profile(), 0.06)
    np.testing.assert_allclose(amp.log_radius(2 * c), math.log(2))
    with pytest.raises(ValueError):
        fb.with_amplitude(0.0)


def test_prediction_zero_and_linear(system):
    t = system.curve.t
    h = 1e-5 * np.cos(3 * t)
    x = np.array([1.0, 0.0])
    assert b.shape_derivative_prediction(DISK, W, 0 * h, x, -x, system) == 0
    p1 = b.shape_derivative_prediction(DISK, W, h, x, -x, system)
    p2 = b.shape_derivative_prediction(DISK, W, 2.5 * h, x, -x, system)
    assert p2 == pytest.approx(2.5 * p1, rel=1e-12)
    with pytest.raises(ValueError):
        b.shape_derivative_prediction(DISK, W, h[:-2], x, -x, system)


def test_prediction_matches_radius_derivative():
    # uniform h changes only the radius: compare with the series derivative
    sysm = b.circle_system(DISK, W, 128)
    h = np.full(128, 1.0)
    x = np.array([0.0, 1.0])
    pred = b.shape_derivative_prediction(DISK, W, h, x, -x, sysm)
    eps = 1e-6
    up = dm.far_field_series(g.InitialDisk((0, 0), 0.03 + eps), W, x, -x)
    dn = dm.far_field_series(g.InitialDisk((0, 0), 0.03 - eps), W, x, -x)
    assert abs(pred - (up - dn) / (2 * eps)) <= 1e-6 * abs(pred)


def test_basis_csv_round_trip(tmp_path, derived):
    p = tmp_path / "b.csv"
    b.write_basis_csv(derived.with_amplitude(3.0), p)
    back = b.read_basis_csv(p)
    np.testing.assert_array_equal(back.functions, derived.functions)
    assert back.kind == "derived" and back.amplitude == 3.0 and back.base == DISK
