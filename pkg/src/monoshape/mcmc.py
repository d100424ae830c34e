"""Systematic-scan Hastings sampler over shape coefficients.

Each iteration refreshes one block of ``L`` coefficients with the
autoregressive proposal ``sqrt(1 - beta) c + sqrt(beta) xi`` (which leaves
the standard Gaussian invariant), forward-solves the resulting star-shaped
domain and accepts with probability ``min(1, pi_new / pi_old)`` where

    log pi = -(1 / (2 sigma)) sum_j |u_meas_j - u_model_j|^2 - tau * R

and ``R = length * ∫ kappa^2 d sigma``. After every full scan of the ``n =
J_tilde / L`` blocks the current coefficients are recorded; the run stops
once the shapes from the trailing window of scans agree to within a
Jaccard tolerance, or at the scan cap.
"""

from __future__ import annotations

import csv
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .basis import ShapeBasis
from .forward import (IllConditionedWarning, MonostaticData, ResolutionError,
                      SingularSystemError, WaveContext, assemble, monostatic_sweep)
from .geometry import (ParamCurve, jaccard_distance, star_jaccard_distances,
                       trig_interpolate, winding_mask)

logger = logging.getLogger(__name__)

RNG_NAME = "numpy.random.PCG64"
HARD_SCAN_CAP = 5000


class ForwardFailure(RuntimeError):
    """Forward solve failed for a proposed coefficient vector."""

    def __init__(self, message: str, coefficients: np.ndarray):
        super().__init__(message)
        self.coefficients = coefficients


@dataclass(frozen=True)
class McmcConfig:
    """Sampler parameters.

    ``lam`` is accepted for completeness but unused; ``tau`` weights the
    curvature regulariser. ``sigma = inf`` together with ``tau = 0`` makes
    the energy identically one (no forward solves).
    """

    beta: float = 2e-4
    sigma: float = 1e-4
    tau: float = 0.0
    block_size: int = 1
    max_scans: int = HARD_SCAN_CAP
    min_scans: int = 1000
    stop_window: int = 1000
    stop_tol: float = 0.02
    stop_resolution: int = 2048
    stop_check_every: int = 1
    seed: int = 0
    lam: float | None = None

    def __post_init__(self):
        if not 0.0 < self.beta < 1.0:
            raise ValueError("beta must lie in (0, 1)")
        if not self.sigma > 0 or self.tau < 0:
            raise ValueError("sigma must be positive and tau non-negative")
        if self.block_size < 1:
            raise ValueError("block size must be >= 1")
        if not 1 <= self.max_scans <= HARD_SCAN_CAP:
            raise ValueError(f"max_scans must be in [1, {HARD_SCAN_CAP}]")
        if self.stop_window < 1 or self.stop_check_every < 1:
            raise ValueError("stop_window and stop_check_every must be positive")

    @property
    def energy_is_flat(self) -> bool:
        return math.isinf(self.sigma) and self.tau == 0.0

    def scan_length(self, n_coefficients: int) -> int:
        if n_coefficients % self.block_size:
            raise ValueError(
                f"block size {self.block_size} does not divide J_tilde = {n_coefficients}")
        return n_coefficients // self.block_size


@dataclass(frozen=True)
class Energy:
    log_pi: float
    regularizer: float
    misfit: float

    @property
    def pi(self) -> float:
        return math.exp(self.log_pi) if self.log_pi > -745.0 else 0.0


@dataclass
class ChainState:
    m: int
    c: np.ndarray
    energy: Energy
    accept_count: int = 0
    history: list = field(default_factory=list)


@dataclass
class ChainResult:
    """Outcome of :func:`run`.

    ``history`` holds the coefficients after each full scan (row ``M - 1``
    for scan ``M``); ``iterations`` is the per-iteration log and ``scans``
    the per-scan log.
    """

    basis: ShapeBasis
    config: McmcConfig
    history: np.ndarray
    iterations: list
    scans: list
    converged: bool
    failures: int
    final_state: ChainState

    @property
    def status(self) -> str:
        return "converged" if self.converged else "unconverged"

    @property
    def n_scans(self) -> int:
        return len(self.history)

    def mean_coefficients(self, last: int = 1000) -> np.ndarray:
        return self.history[-last:].mean(axis=0)

    def mean_curve(self, last: int = 1000) -> ParamCurve:
        return self.basis.curve(self.mean_coefficients(last))


def block_indices(m: int, block_size: int, n_coefficients: int) -> np.ndarray:
    """0-based coordinates refreshed at iteration ``m`` (1-based)."""
    return ((m - 1) * block_size + np.arange(block_size)) % n_coefficients


def propose(c: np.ndarray, m: int, block_size: int, beta: float,
            rng: np.random.Generator) -> np.ndarray:
    """Autoregressive Gaussian update of the ``m``-th coordinate block."""
    idx = block_indices(m, block_size, len(c))
    xi = rng.standard_normal(block_size)
    out = np.array(c, dtype=float)
    out[idx] = math.sqrt(1.0 - beta) * out[idx] + math.sqrt(beta) * xi
    return out


def energy(c: np.ndarray, basis: ShapeBasis, data: MonostaticData, wave: WaveContext,
           cfg: McmcConfig) -> Energy:
    """Log-energy of the shape ``c`` against monostatic data.

    Raises
    ------
    ForwardFailure
        The deformed curve was under-resolved or its system singular.
    """
    if cfg.energy_is_flat:
        return Energy(0.0, 0.0, 0.0)
    curve = basis.curve(c)
    reg = curve.bending_energy()
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", IllConditionedWarning)
            system = assemble(curve, wave)
            model = monostatic_sweep(curve, wave, data.directions, system)
    except (ResolutionError, SingularSystemError) as exc:
        raise ForwardFailure(str(exc), np.array(c)) from exc
    misfit = float(np.sum(np.abs(np.asarray(data.values) - model.values) ** 2))
    data_term = 0.0 if math.isinf(cfg.sigma) else misfit / (2.0 * cfg.sigma)
    return Energy(-data_term - cfg.tau * reg, reg, misfit)


def accept(log_pi_new: float, log_pi_old: float, y: float) -> bool:
    """Hastings test ``pi_new / pi_old >= y`` evaluated in log space."""
    if log_pi_new == -math.inf:
        return False
    log_alpha = log_pi_new - log_pi_old
    if log_alpha >= 0.0:
        return True
    return y == 0.0 or log_alpha >= math.log(y)


def step(state: ChainState, basis: ShapeBasis, data: MonostaticData, wave: WaveContext,
         cfg: McmcConfig, rng: np.random.Generator) -> tuple[ChainState, bool, bool]:
    """One Hastings iteration; returns the new state, the decision and a failure flag."""
    m = state.m + 1
    proposal = propose(state.c, m, cfg.block_size, cfg.beta, rng)
    failed = False
    try:
        e_new = energy(proposal, basis, data, wave, cfg)
    except ForwardFailure as exc:
        logger.debug("iteration %d: forward failure (%s); proposal rejected", m, exc)
        e_new = Energy(-math.inf, math.nan, math.nan)
        failed = True
    y = rng.uniform()
    ok = accept(e_new.log_pi, state.energy.log_pi, y)
    if ok:
        new = ChainState(m, proposal, e_new, state.accept_count + 1, state.history)
    else:
        new = ChainState(m, state.c, state.energy, state.accept_count, state.history)
    return new, ok, failed


class _StopMonitor:
    """Trailing-window shape agreement test on radial profiles.

    All chain shapes share the centre ``c0``, so the Jaccard distance of two
    of them follows from their radial profiles by the polar area formula.
    The cheap window-wide bound ``1 - ∫ min rho^2 / ∫ max rho^2`` and the
    distance to the newest shape bracket the maximum pairwise distance; the
    exact pairwise maximum is only computed when they disagree.
    """

    def __init__(self, basis: ShapeBasis, resolution: int):
        self.basis = basis
        self.resolution = max(resolution, basis.n_nodes)
        self.functions = basis.amplitude * trig_interpolate(basis.functions, self.resolution)

    def profiles(self, coeffs: np.ndarray) -> np.ndarray:
        r0 = self.basis.base.radius
        return r0 * np.exp(np.atleast_2d(coeffs) @ self.functions)

    def max_pairwise(self, window: np.ndarray, tol: float) -> float:
        uniq = np.unique(window, axis=0)
        rho = self.profiles(uniq)
        if len(rho) == 1:
            return 0.0
        upper = 1.0 - np.sum(rho.min(axis=0) ** 2) / np.sum(rho.max(axis=0) ** 2)
        if upper <= tol:
            return upper
        lower = star_jaccard_distances(rho[-1], rho).max()
        if lower > tol:
            return lower
        best = 0.0
        for i in range(len(rho) - 1):
            best = max(best, star_jaccard_distances(rho[i], rho[i + 1:]).max())
        return best


def run(basis: ShapeBasis, data: MonostaticData, wave: WaveContext, cfg: McmcConfig,
        truth: ParamCurve | None = None, truth_resolution: int = 512,
        progress=None) -> ChainResult:
    """Sample from ``c = 0`` until the shape window stabilises or the scan cap.

    Parameters
    ----------
    truth : ParamCurve, optional
        When given, the per-scan log records the Jaccard distance of the
        current shape to it.
    progress : callable, optional
        Called as ``progress(scan, state)`` after every scan.
    """
    n_coef = basis.size
    n = cfg.scan_length(n_coef)
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    c0 = np.zeros(n_coef)
    try:
        e0 = energy(c0, basis, data, wave, cfg)
    except ForwardFailure as exc:
        raise ForwardFailure(f"initial disk cannot be solved: {exc}", c0) from exc
    state = ChainState(0, c0, e0)
    monitor = _StopMonitor(basis, cfg.stop_resolution)
    history: list[np.ndarray] = []
    iterations: list[tuple] = []
    scans: list[tuple] = []
    failures = 0
    converged = False
    dj_cache: tuple | None = None
    scan_accepts = 0
    for scan in range(1, cfg.max_scans + 1):
        scan_accepts = 0
        for _ in range(n):
            state, ok, failed = step(state, basis, data, wave, cfg, rng)
            failures += failed
            scan_accepts += ok
            iterations.append((state.m, int(ok), state.energy.log_pi, state.energy.regularizer))
        history.append(state.c.copy())
        dj = math.nan
        if truth is not None:
            if dj_cache is None or not np.array_equal(dj_cache[0], state.c):
                dj_cache = (state.c.copy(), jaccard_distance(basis.curve(state.c), truth,
                                                             truth_resolution))
            dj = dj_cache[1]
        scans.append((scan, state.energy.log_pi, scan_accepts / n, dj))
        if progress is not None:
            progress(scan, state)
        if (scan >= cfg.min_scans and scan >= cfg.stop_window
                and scan % cfg.stop_check_every == 0):
            window = np.array(history[-cfg.stop_window:])
            if monitor.max_pairwise(window, cfg.stop_tol) <= cfg.stop_tol:
                converged = True
                break
    state.history = history
    return ChainResult(basis, cfg, np.array(history), iterations, scans, converged,
                       failures, state)


def frequency_contour(curves, bounds, resolution: int | tuple[int, int],
                      multiplicities=None) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Fraction of ``curves`` whose interior contains each grid cell centre.

    ``bounds`` is ``((xmin, xmax), (ymin, ymax))``. Returns ``(xs, ys, grid)``
    with ``grid[iy, ix]`` in ``[0, 1]``.
    """
    (x0, x1), (y0, y1) = bounds
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    if not (x1 > x0 and y1 > y0):
        raise ValueError("degenerate bounds")
    xs = x0 + (np.arange(nx) + 0.5) * (x1 - x0) / nx
    ys = y0 + (np.arange(ny) + 0.5) * (y1 - y0) / ny
    curves = list(curves)
    if not curves:
        raise ValueError("no shapes to count")
    weights = np.ones(len(curves)) if multiplicities is None else np.asarray(multiplicities, float)
    total = np.zeros((ny, nx))
    for curve, w in zip(curves, weights):
        total += w * winding_mask(curve.nodes, xs, ys)
    return xs, ys, total / weights.sum()


def history_frequency_contour(result_basis: ShapeBasis, history: np.ndarray, N1: int, N2: int,
                              bounds, resolution) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """``f_{N1,N2}``: membership frequency over scans ``N1 < M <= N2``."""
    if not 0 <= N1 < N2:
        raise ValueError("need 0 <= N1 < N2")
    if N2 > len(history):
        raise ValueError(f"history has {len(history)} scans, window needs {N2}")
    window = np.asarray(history)[N1:N2]
    uniq, counts = np.unique(window, axis=0, return_counts=True)
    curves = [result_basis.curve(c) for c in uniq]
    return frequency_contour(curves, bounds, resolution, counts)


def write_chain_log(result: ChainResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"# rng={RNG_NAME}", f"seed={result.config.seed}",
                    f"status={result.status}", f"failures={result.failures}"])
        w.writerow(["m", "accepted", "log_pi", "R"])
        for m, ok, log_pi, reg in result.iterations:
            w.writerow([m, ok, f"{log_pi:.17g}", f"{reg:.17g}"])


def write_scan_log(result: ChainResult, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"# rng={RNG_NAME}", f"seed={result.config.seed}"])
        w.writerow(["scan", "log_pi", "acceptance_rate", "d_J"])
        for scan, log_pi, rate, dj in result.scans:
            w.writerow([scan, f"{log_pi:.17g}", f"{rate:.17g}",
                        "" if math.isnan(dj) else f"{dj:.17g}"])


def write_snapshots(history: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["scan"] + [f"c_{j}" for j in range(1, history.shape[1] + 1)])
        for scan, row in enumerate(history, 1):
            w.writerow([scan] + [f"{v:.17g}" for v in row])


def read_snapshots(path) -> np.ndarray:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        return np.array([[float(v) for v in row[1:]] for row in reader])
