import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from monoshape import basis as b, forward as f, geometry as g, mcmc

W = f.DEFAULT_WAVE
DIRS = f.DirectionSet(12)
DISK = g.InitialDisk((0.01, 0.0), 0.03)


@pytest.fixture(scope="module")
def omega1_data():
    return f.monostatic_sweep(g.target_curve("omega1", 256), W, DIRS)


@pytest.fixture(scope="module")
def small_basis():
    return b.build_fourier_basis(DISK, 4, 128)


@pytest.mark.parametrize("L", [1, 2, 3, 4, 6, 12])
def test_scan_covers_every_coordinate_once(L):
    n = 12 // L
    for start in range(0, 3 * n):
        idx = np.concatenate([mcmc.block_indices(m, L, 12) for m in range(start + 1, start + n + 1)])
        assert sorted(idx) == list(range(12))


def test_block_size_must_divide():
    with pytest.raises(ValueError):
        mcmc.McmcConfig(block_size=5).scan_length(12)


def test_config_validation():
    for bad in (dict(beta=0.0), dict(beta=1.0), dict(sigma=0.0), dict(tau=-1.0),
                dict(block_size=0), dict(max_scans=0), dict(max_scans=5001)):
        with pytest.raises(ValueError):
            mcmc.McmcConfig(**bad)


def test_propose_touches_only_block():
    rng = np.random.Generator(np.random.PCG64(1))
    c = np.arange(6.0)
    out = mcmc.propose(c, 2, 2, 0.5, rng)
    assert np.array_equal(out[[0, 1, 4, 5]], c[[0, 1, 4, 5]])
    rng = np.random.Generator(np.random.PCG64(1))
    xi = rng.standard_normal(2)
    np.testing.assert_allclose(out[2:4], math.sqrt(0.5) * c[2:4] + math.sqrt(0.5) * xi)


def test_propose_small_beta_barely_moves():
    rng = np.random.Generator(np.random.PCG64(0))
    c = np.ones(4)
    out = mcmc.propose(c, 1, 4, 1e-12, rng)
    assert np.max(np.abs(out - c)) < 1e-5


def test_flat_energy():
    cfg = mcmc.McmcConfig(sigma=math.inf, tau=0.0)
    e = mcmc.energy(np.zeros(3), None, None, W, cfg)
    assert cfg.energy_is_flat and e.pi == 1.0


def test_energy_of_truth_is_one(small_basis, omega1_data):
    e = mcmc.energy(np.zeros(small_basis.size), small_basis, omega1_data, W, mcmc.McmcConfig())
    assert e.misfit < 1e-14
    assert e.regularizer == pytest.approx(4 * math.pi**2, rel=1e-10)
    assert e.pi == pytest.approx(1.0, abs=1e-9)


def test_energy_includes_regulariser(small_basis, omega1_data):
    cfg = mcmc.McmcConfig(tau=0.5)
    e = mcmc.energy(np.zeros(small_basis.size), small_basis, omega1_data, W, cfg)
    assert e.log_pi == pytest.approx(-0.5 * 4 * math.pi**2 - e.misfit / 2e-4, rel=1e-12)


def test_accept_rules():
    assert mcmc.accept(-1.0, -2.0, 0.999)
    assert mcmc.accept(-3.0, -2.0, 0.0)
    assert mcmc.accept(-3.0, -2.0, math.exp(-1.0) - 1e-12)
    assert not mcmc.accept(-3.0, -2.0, math.exp(-1.0) + 1e-12)
    assert not mcmc.accept(-math.inf, -2.0, 0.0)
    assert mcmc.accept(-800.0, -1.0, 0.0)


@settings(max_examples=200, deadline=None)
@given(st.floats(1e-6, 1e3), st.floats(0.0, 1.0, exclude_max=True),
       st.floats(1e-6, 1.0), st.floats(1.0, 100.0))
def test_lower_sigma_accepts_fewer_uphill_moves(delta, y, sigma, factor):
    # misfit increase delta: accepted at the lower sigma implies accepted at the higher one
    low = mcmc.accept(-delta / (2 * sigma), 0.0, y)
    high = mcmc.accept(-delta / (2 * sigma * factor), 0.0, y)
    assert high or not low


def test_forward_failure_is_rejection(monkeypatch, small_basis, omega1_data):
    cfg = mcmc.McmcConfig()
    e0 = mcmc.energy(np.zeros(small_basis.size), small_basis, omega1_data, W, cfg)
    state = mcmc.ChainState(0, np.zeros(small_basis.size), e0)

    def boom(c, *a, **k):
        raise mcmc.ForwardFailure("under-resolved", c)

    monkeypatch.setattr(mcmc, "energy", boom)
    rng = np.random.Generator(np.random.PCG64(0))
    new, ok, failed = mcmc.step(state, small_basis, omega1_data, W, cfg, rng)
    assert failed and not ok
    assert np.array_equal(new.c, state.c) and new.m == 1


def test_initial_failure_raises(monkeypatch, small_basis, omega1_data):
    def boom(c, *a, **k):
        raise mcmc.ForwardFailure("bad", c)

    monkeypatch.setattr(mcmc, "energy", boom)
    with pytest.raises(mcmc.ForwardFailure):
        mcmc.run(small_basis, omega1_data, W, mcmc.McmcConfig(max_scans=2))


def _short(seed, basis, data):
    cfg = mcmc.McmcConfig(beta=0.05, max_scans=6, min_scans=1000, seed=seed, block_size=3)
    return mcmc.run(basis, data, W, cfg, truth=g.target_curve("omega1", 128), truth_resolution=128)


def test_run_is_deterministic(tmp_path, small_basis, omega1_data):
    a = _short(3, small_basis, omega1_data)
    c = _short(3, small_basis, omega1_data)
    assert np.array_equal(a.history, c.history)
    for name, writer in (("chain", mcmc.write_chain_log), ("scans", mcmc.write_scan_log)):
        writer(a, tmp_path / f"{name}_a.csv")
        writer(c, tmp_path / f"{name}_c.csv")
        assert (tmp_path / f"{name}_a.csv").read_bytes() == (tmp_path / f"{name}_c.csv").read_bytes()
    other = _short(4, small_basis, omega1_data)
    assert not np.array_equal(a.history, other.history)


def test_run_bookkeeping(small_basis, omega1_data):
    res = _short(0, small_basis, omega1_data)
    n = small_basis.size // 3
    assert res.n_scans == 6 and res.status == "unconverged"
    assert len(res.iterations) == 6 * n
    assert [it[0] for it in res.iterations] == list(range(1, 6 * n + 1))
    assert res.final_state.accept_count == sum(it[1] for it in res.iterations)
    assert np.array_equal(res.history[-1], res.final_state.c)
    for scan, log_pi, rate, dj in res.scans:
        assert 0.0 <= rate <= 1.0 and 0.0 <= dj <= 1.0


def test_logged_energy_is_reproducible(small_basis, omega1_data):
    res = _short(1, small_basis, omega1_data)
    again = mcmc.energy(res.final_state.c, small_basis, omega1_data, W, res.config)
    assert again.log_pi == pytest.approx(res.iterations[-1][2], rel=1e-12, abs=1e-300)
    assert again.regularizer == pytest.approx(res.iterations[-1][3], rel=1e-12)


def test_frozen_chain_converges_at_min_scans(small_basis):
    cfg = mcmc.McmcConfig(beta=1e-12, sigma=math.inf, tau=0.0, min_scans=20, stop_window=20,
                          max_scans=50)
    res = mcmc.run(small_basis, None, W, cfg)
    assert res.converged and res.n_scans == 20


def test_wandering_chain_hits_cap(small_basis):
    cfg = mcmc.McmcConfig(beta=0.5, sigma=math.inf, tau=0.0, min_scans=5, stop_window=5,
                          max_scans=12)
    res = mcmc.run(small_basis, None, W, cfg)
    assert not res.converged and res.n_scans == 12


def test_frequency_contour_of_identical_shapes(small_basis):
    hist = np.zeros((4, small_basis.size))
    bounds = ((-0.03, 0.05), (-0.04, 0.04))
    xs, ys, freq = mcmc.history_frequency_contour(small_basis, hist, 0, 4, bounds, 40)
    assert set(np.unique(freq)) == {0.0, 1.0}
    X, Y = np.meshgrid(xs, ys)
    inside = (X - 0.01) ** 2 + Y**2 < 0.03**2
    assert np.mean(inside == (freq == 1.0)) > 0.97
    with pytest.raises(ValueError):
        mcmc.history_frequency_contour(small_basis, hist, 0, 5, bounds, 40)
    with pytest.raises(ValueError):
        mcmc.history_frequency_contour(small_basis, hist, 3, 3, bounds, 40)


def test_frequency_contour_weights():
    small = g.make_circle(g.InitialDisk((0, 0), 0.5), 64)
    big = g.make_circle(g.InitialDisk((0, 0), 1.0), 64)
    xs, ys, freq = mcmc.frequency_contour([small, big], ((-1.2, 1.2), (-1.2, 1.2)), 24, [1, 3])
    assert freq.min() == 0.0 and freq.max() == 1.0
    assert np.isclose(freq, 0.75).any()


def test_snapshots_round_trip(tmp_path):
    hist = np.random.default_rng(0).standard_normal((5, 7))
    mcmc.write_snapshots(hist, tmp_path / "s.csv")
    assert np.array_equal(mcmc.read_snapshots(tmp_path / "s.csv"), hist)
