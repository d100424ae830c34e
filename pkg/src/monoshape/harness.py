"""Synthetic data, noise, calibration and end-to-end experiment runs.

An experiment is described by an INI file (see :class:`ExperimentConfig`)
and writes only CSV artifacts plus a ``manifest.json`` that records the
configuration, seeds and every derived quantity needed to regenerate it.
"""

from __future__ import annotations

import configparser
import json
import logging
import math
import os
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

import numpy as np

from . import __version__
from .basis import (ShapeBasis, build_derived_basis, build_fourier_basis, circle_system,
                    write_basis_csv)
from .disk_mie import (DEFAULT_BRACKET, data_modulus_mean, estimate_radius, far_field_series)
from .forward import (DirectionSet, MonostaticData, MsrMatrix, WaveContext, assemble,
                      default_node_count, msr_matrix, write_monostatic_csv, write_msr_csv)
from .geometry import (DEFAULT_NODES, InitialDisk, ParamCurve, jaccard_distance, load_curve,
                       make_circle, write_curve_csv)
from .locate import indicator, pick_center, write_indicator_csv
from .mcmc import (ChainResult, McmcConfig, history_frequency_contour, run, write_chain_log,
                   write_scan_log, write_snapshots)

logger = logging.getLogger(__name__)

OUTPUT_ENV = "MONOSHAPE_OUTPUT_DIR"
DEFAULT_LOCATE_SIDE = 4.0
# the derived basis drops directions whose Gram-Schmidt residual is below
# this fraction of the largest raw norm; see README "Shape bases"
RECONSTRUCTION_DROP_TOL = 0.1
RECONSTRUCTION_AMPLITUDE = 10.0
# deformed shapes grow; sample the base circle finer than the solver minimum
BASIS_POINTS_PER_WAVELENGTH = 24.0


@dataclass(frozen=True)
class NoiseSpec:
    """Complex white noise at a given Frobenius-norm SNR."""

    snr_db: float = math.inf
    seed: int = 0

    def __post_init__(self):
        if not (math.isinf(self.snr_db) and self.snr_db > 0) and not self.snr_db > 0:
            raise ValueError("snr_db must be positive or +inf")


def add_noise(msr: MsrMatrix, spec: NoiseSpec, rng: np.random.Generator | None = None) -> MsrMatrix:
    """Perturb every entry with i.i.d. circular complex Gaussian noise.

    The noise variance is chosen so that ``10 log10(|U|_F^2 / |N|_F^2)``
    equals ``spec.snr_db`` in expectation.
    """
    if math.isinf(spec.snr_db):
        return msr
    if rng is None:
        rng = np.random.Generator(np.random.PCG64(spec.seed))
    u = np.asarray(msr.values)
    power = np.sum(np.abs(u) ** 2) / u.size * 10.0 ** (-spec.snr_db / 10.0)
    noise = math.sqrt(power / 2.0) * (rng.standard_normal(u.shape) + 1j * rng.standard_normal(u.shape))
    return MsrMatrix(msr.directions, u + noise)


def calibrate(reference: MonostaticData, measured: MonostaticData) -> float:
    """Positive scale ``s`` minimising ``sum |s m_j - r_j|^2``."""
    m = np.asarray(measured.values)
    r = np.asarray(reference.values)
    if m.shape != r.shape:
        raise ValueError("reference and measured data differ in length")
    mm = float(np.vdot(m, m).real)
    if mm == 0.0:
        raise ValueError("measured data are identically zero")
    return max(float(np.vdot(m, r).real) / mm, 0.0)


def mie_monostatic(disk: InitialDisk, wave: WaveContext, dirs: DirectionSet, M: int = 60) -> MonostaticData:
    vals = [far_field_series(disk, wave, x, -x, M) for x in dirs.vectors]
    return MonostaticData(dirs, np.array(vals))


def solver_calibration(wave: WaveContext, dirs: DirectionSet,
                       disk: InitialDisk = InitialDisk((0.0, 0.0), 0.03)) -> float:
    """Scale mapping this Nyström solver onto the disk series on a reference disk."""
    n = default_node_count(2.0 * math.pi * disk.radius, wave)
    circle = make_circle(disk, n)
    from .forward import monostatic_sweep
    measured = monostatic_sweep(circle, wave, dirs, assemble(circle, wave))
    return calibrate(mie_monostatic(disk, wave, dirs), measured)


def synthetic_msr(curve: ParamCurve, wave: WaveContext, dirs: DirectionSet,
                  noise: NoiseSpec = NoiseSpec()) -> MsrMatrix:
    return add_noise(msr_matrix(curve, wave, dirs), noise)


# ---------------------------------------------------------------- config


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(v) for v in text.replace(",", " ").split())


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything needed to reproduce one reconstruction.

    INI schema (all keys optional except ``target.name``)::

        [target]  name = omega2 | path/to/curve.csv ; nodes = 256
        [wave]    frequency = 1e9
        [data]    directions = 36 ; snr_db = inf ; noise_seed = 0 ; calibrate = no
        [basis]   kind = derived | fourier ; drop_tol = 0.1 ; fourier_modes = 36
                  amplitude = 10 ; trim_to_block = yes
        [init]    mode = explicit | auto ; center = 0 0 ; radius = 0.01
                  locate_bounds = xmin xmax ymin ymax ; locate_resolution = 201
                  candidate = 1
        [mcmc]    beta, sigma, tau, block_size, max_scans, min_scans,
                  stop_window, stop_tol, seed
        [output]  directory = runs/omega2 ; contour_resolution = 200
    """

    target: str
    target_nodes: int = DEFAULT_NODES
    wave: WaveContext = WaveContext(1e9)
    directions: int = 36
    noise: NoiseSpec = NoiseSpec()
    calibrate: bool = False
    basis_kind: str = "derived"
    drop_tol: float = RECONSTRUCTION_DROP_TOL
    fourier_modes: int = 36
    amplitude: float = RECONSTRUCTION_AMPLITUDE
    trim_to_block: bool = True
    init_mode: str = "explicit"
    init_center: tuple[float, float] = (0.0, 0.0)
    init_radius: float = 0.01
    locate_bounds: tuple[float, ...] | None = None
    locate_resolution: int = 201
    candidate: int = 1
    mcmc: McmcConfig = field(default_factory=McmcConfig)
    output_dir: str = ""
    contour_resolution: int = 200

    def __post_init__(self):
        if self.basis_kind not in ("derived", "fourier"):
            raise ValueError(f"unknown basis kind {self.basis_kind!r}")
        if self.init_mode not in ("explicit", "auto"):
            raise ValueError(f"unknown init mode {self.init_mode!r}")
        if self.directions < 4:
            raise ValueError("need at least 4 directions")
        if self.amplitude <= 0:
            raise ValueError("basis amplitude must be positive")
        if self.init_radius <= 0 or self.candidate < 1:
            raise ValueError("init radius and candidate rank must be positive")
        if self.locate_bounds is not None and len(self.locate_bounds) != 4:
            raise ValueError("locate_bounds needs four numbers")

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir or os.environ.get(OUTPUT_ENV, "monoshape-output"))

    @classmethod
    def from_ini(cls, path) -> "ExperimentConfig":
        cp = configparser.ConfigParser()
        if not cp.read(path):
            raise FileNotFoundError(path)
        return cls.from_parser(cp)

    @classmethod
    def from_parser(cls, cp: configparser.ConfigParser) -> "ExperimentConfig":
        known = {"target", "wave", "data", "basis", "init", "mcmc", "output"}
        extra = set(cp.sections()) - known
        if extra:
            raise ValueError(f"unknown config sections: {sorted(extra)}")
        if not cp.has_option("target", "name"):
            raise ValueError("config needs [target] name")
        g = cp.get
        kw: dict = {"target": g("target", "name")}
        kw["target_nodes"] = cp.getint("target", "nodes", fallback=DEFAULT_NODES)
        kw["wave"] = WaveContext(cp.getfloat("wave", "frequency", fallback=1e9))
        kw["directions"] = cp.getint("data", "directions", fallback=36)
        kw["noise"] = NoiseSpec(cp.getfloat("data", "snr_db", fallback=math.inf),
                                cp.getint("data", "noise_seed", fallback=0))
        kw["calibrate"] = cp.getboolean("data", "calibrate", fallback=False)
        kw["basis_kind"] = g("basis", "kind", fallback="derived")
        kw["drop_tol"] = cp.getfloat("basis", "drop_tol", fallback=RECONSTRUCTION_DROP_TOL)
        kw["fourier_modes"] = cp.getint("basis", "fourier_modes", fallback=36)
        kw["amplitude"] = cp.getfloat("basis", "amplitude", fallback=RECONSTRUCTION_AMPLITUDE)
        kw["trim_to_block"] = cp.getboolean("basis", "trim_to_block", fallback=True)
        kw["init_mode"] = g("init", "mode", fallback="explicit")
        kw["init_center"] = _floats(g("init", "center", fallback="0 0"))
        kw["init_radius"] = cp.getfloat("init", "radius", fallback=0.01)
        if cp.has_option("init", "locate_bounds"):
            kw["locate_bounds"] = _floats(g("init", "locate_bounds"))
        kw["locate_resolution"] = cp.getint("init", "locate_resolution", fallback=201)
        kw["candidate"] = cp.getint("init", "candidate", fallback=1)
        mc = {}
        if cp.has_section("mcmc"):
            types = {f: type(v) for f, v in asdict(McmcConfig()).items() if v is not None}
            for key, raw in cp.items("mcmc"):
                if key not in types:
                    raise ValueError(f"unknown mcmc key {key!r}")
                mc[key] = types[key](float(raw)) if types[key] is int else types[key](raw)
        kw["mcmc"] = McmcConfig(**mc)
        kw["output_dir"] = g("output", "directory", fallback="")
        kw["contour_resolution"] = cp.getint("output", "contour_resolution", fallback=200)
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["wave"] = {"frequency": self.wave.frequency, "permittivity": self.wave.permittivity,
                     "permeability": self.wave.permeability}
        d["noise"] = {"snr_db": _json_float(self.noise.snr_db), "seed": self.noise.seed}
        d["mcmc"] = {k: _json_float(v) for k, v in asdict(self.mcmc).items()}
        return d


def _json_float(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


# ---------------------------------------------------------------- pipeline


@dataclass
class ExperimentResult:
    config: ExperimentConfig
    disk: InitialDisk
    basis: ShapeBasis
    chain: ChainResult
    mean_curve: ParamCurve
    final_jaccard: float
    manifest: dict


def initial_disk(data: MonostaticData, wave: WaveContext, cfg: ExperimentConfig) -> tuple[InitialDisk, dict]:
    """Explicit disk, or MSM centre plus series-fitted radius."""
    if cfg.init_mode == "explicit":
        return InitialDisk(cfg.init_center, cfg.init_radius), {}
    bounds = cfg.locate_bounds
    if bounds is None:
        half = 0.5 * DEFAULT_LOCATE_SIDE * wave.wavelength
        bounds = (-half, half, -half, half)
    grid = indicator(data, wave, bounds, cfg.locate_resolution)
    cands = pick_center(grid, max(cfg.candidate, 5))
    if cfg.candidate > len(cands):
        raise ValueError(f"only {len(cands)} indicator maxima, candidate {cfg.candidate} requested")
    center = cands[cfg.candidate - 1][0]
    radius = estimate_radius(data_modulus_mean(data, wave), wave, DEFAULT_BRACKET)
    info = {"candidates": [[float(p[0]), float(p[1]), v] for p, v in cands], "grid": grid}
    return InitialDisk(tuple(center), radius), info


def fit_block_size(basis: ShapeBasis, block_size: int, trim: bool) -> ShapeBasis:
    """Drop trailing basis rows so that ``block_size`` divides ``J_tilde``.

    Gram-Schmidt keeps directions in order of decreasing data sensitivity,
    so the trailing rows are the least informative ones.
    """
    extra = basis.size % block_size
    if extra == 0:
        return basis
    if not trim or basis.size < block_size:
        raise ValueError(f"block size {block_size} does not divide J_tilde = {basis.size}")
    return replace(basis, functions=basis.functions[: basis.size - extra])


def run_experiment(cfg: ExperimentConfig, progress=None) -> ExperimentResult:
    out = cfg.output_path
    out.mkdir(parents=True, exist_ok=True)
    wave = cfg.wave
    dirs = DirectionSet(cfg.directions)
    truth = load_curve(cfg.target, cfg.target_nodes)
    msr = synthetic_msr(truth, wave, dirs, cfg.noise)
    data = msr.diagonal_data()
    scale = 1.0
    if cfg.calibrate:
        scale = solver_calibration(wave, dirs)
        data = MonostaticData(dirs, scale * np.asarray(data.values))
    write_msr_csv(msr, wave, out / "msr.csv")
    write_monostatic_csv(data, wave, out / "monostatic.csv")

    disk, info = initial_disk(data, wave, cfg)
    if "grid" in info:
        write_indicator_csv(info.pop("grid"), out / "indicator.csv")
    n_basis = default_node_count(2.0 * math.pi * disk.radius, wave, BASIS_POINTS_PER_WAVELENGTH)
    system = circle_system(disk, wave, n_basis)
    if cfg.basis_kind == "derived":
        basis = build_derived_basis(disk, wave, dirs, drop_tol=cfg.drop_tol, system=system)
    else:
        basis = build_fourier_basis(disk, cfg.fourier_modes, max(128, system.curve.n_nodes))
    basis = basis.with_amplitude(cfg.amplitude)
    mcfg = cfg.mcmc
    basis = fit_block_size(basis, mcfg.block_size, cfg.trim_to_block)
    write_basis_csv(basis, out / "basis.csv")

    chain = run(basis, data, wave, mcfg, truth=truth, progress=progress)
    write_chain_log(chain, out / "chain.csv")
    write_scan_log(chain, out / "scans.csv")
    write_snapshots(chain.history, out / "snapshots.csv")
    window = min(1000, chain.n_scans)
    mean = chain.mean_curve(window)
    write_curve_csv(mean, out / "mean_curve.csv")
    dj = jaccard_distance(mean, truth)

    n1 = chain.n_scans - window
    bounds = contour_bounds([truth, make_circle(disk, 64), mean])
    xs, ys, freq = history_frequency_contour(basis, chain.history, n1, chain.n_scans,
                                             bounds, cfg.contour_resolution)
    write_contour_csv(xs, ys, freq, out / "contour.csv")

    manifest = {
        "code_version": __version__,
        "config": cfg.to_dict(),
        "derived": {
            "wavenumber": wave.wavenumber,
            "wavelength": wave.wavelength,
            "bem_nodes_target": truth.n_nodes,
            "basis_nodes": basis.n_nodes,
            "J_tilde": basis.size,
            "initial_center": list(map(float, disk.center)),
            "initial_radius": disk.radius,
            "calibration_scale": scale,
            "locate_candidates": info.get("candidates"),
        },
        "seeds": {"mcmc": mcfg.seed, "noise": cfg.noise.seed, "rng": "numpy.random.PCG64"},
        "result": {
            "status": chain.status,
            "scans": chain.n_scans,
            "forward_failures": chain.failures,
            "mean_window": window,
            "mean_shape_jaccard": dj,
            "contour_window": [n1, chain.n_scans],
        },
    }
    with open(out / "manifest.json", "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
    return ExperimentResult(cfg, disk, basis, chain, mean, dj, manifest)


def contour_bounds(curves, pad: float = 0.15):
    pts = np.vstack([c.nodes for c in curves])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    span = float(np.max(hi - lo))
    mid = 0.5 * (lo + hi)
    half = 0.5 * span * (1.0 + 2.0 * pad)
    return (mid[0] - half, mid[0] + half), (mid[1] - half, mid[1] + half)


def write_contour_csv(xs, ys, grid, path) -> None:
    with open(path, "w") as fh:
        fh.write("x,y,frequency\n")
        for j, y in enumerate(ys):
            for i, x in enumerate(xs):
                fh.write(f"{x:.17g},{y:.17g},{grid[j, i]:.17g}\n")


def with_overrides(cfg: ExperimentConfig, **changes) -> ExperimentConfig:
    return replace(cfg, **changes)
