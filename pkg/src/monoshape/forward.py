"""Nyström solver for the sound-soft scattering problem.

The scattered field is represented as ``u_scat = -S[phi]`` with the
single-layer operator built on ``Gamma(x) = -(i/4) H_0^(1)(k|x|)``; the
boundary density solves the first-kind equation ``S[phi] = u_inc`` on the
curve. The logarithmic singularity of the kernel is split off and
integrated with exact trigonometric weights (Kress' quadrature), which is
spectrally accurate on smooth parametrised curves.

The discrete unknown is the speed-weighted density ``phi * |Y'(t)|`` so
that the system matrix is complex-symmetric.
"""

from __future__ import annotations

import csv
import functools
import logging
import math
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack
from scipy.special import j0, y0

from .geometry import ParamCurve

logger = logging.getLogger(__name__)

EPS0 = 8.8542e-12
MU0 = 1.2566e-6
MIN_POINTS_PER_WAVELENGTH = 10.0
DEFAULT_POINTS_PER_WAVELENGTH = 12.0
MIN_DEFAULT_NODES = 128
CONDITION_WARN = 1e12
EULER = 0.57721566490153286061
FORMAT_VERSION = 1


class ResolutionError(ValueError):
    """Too few boundary nodes per wavelength for the requested frequency."""

    def __init__(self, message: str, required_nodes: int):
        super().__init__(message)
        self.required_nodes = required_nodes


class SingularSystemError(RuntimeError):
    """The discretised single-layer operator could not be factorised."""


class IllConditionedWarning(UserWarning):
    pass


@dataclass(frozen=True)
class WaveContext:
    """Frequency-domain constants; ``k = 2 pi f sqrt(eps0 mu0)``."""

    frequency: float
    permittivity: float = EPS0
    permeability: float = MU0

    def __post_init__(self):
        if not self.frequency > 0:
            raise ValueError("frequency must be positive")

    @classmethod
    def from_wavenumber(cls, k: float, permittivity: float = EPS0,
                        permeability: float = MU0) -> "WaveContext":
        return cls(k / (2.0 * math.pi * math.sqrt(permittivity * permeability)),
                   permittivity, permeability)

    @property
    def wavenumber(self) -> float:
        return 2.0 * math.pi * self.frequency * math.sqrt(self.permittivity * self.permeability)

    @property
    def wavelength(self) -> float:
        return 2.0 * math.pi / self.wavenumber


DEFAULT_WAVE = WaveContext(1e9)


@dataclass(frozen=True)
class DirectionSet:
    """``J`` equispaced directions ``theta_j = 2 pi j / J``, ``j = 1..J``."""

    count: int

    def __post_init__(self):
        if self.count < 4:
            raise ValueError("at least 4 directions are required")

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(1, self.count + 1) / self.count

    @property
    def vectors(self) -> np.ndarray:
        a = self.angles
        return np.column_stack([np.cos(a), np.sin(a)])


def default_node_count(perimeter: float, wave: WaveContext,
                       points_per_wavelength: float = DEFAULT_POINTS_PER_WAVELENGTH) -> int:
    """Smallest power of two giving 12 points per wavelength, at least 128."""
    need = points_per_wavelength * perimeter / wave.wavelength
    n = MIN_DEFAULT_NODES
    while n < need:
        n *= 2
    return n


@functools.lru_cache(maxsize=16)
def _log_weights(n_nodes: int) -> np.ndarray:
    """Kress weights R_|i-j| for the kernel ln(4 sin^2((t - tau)/2))."""
    half = n_nodes // 2
    diff = 2.0 * np.pi * np.arange(n_nodes) / n_nodes
    m = np.arange(1, half)
    r = -(2.0 * np.pi / half) * (np.cos(np.outer(diff, m)) / m).sum(axis=1) \
        - (np.pi / half**2) * np.cos(half * diff)
    idx = (np.arange(n_nodes)[None, :] - np.arange(n_nodes)[:, None]) % n_nodes
    out = r[idx]
    out.setflags(write=False)
    return out


def single_layer_matrix(curve: ParamCurve, k: float) -> np.ndarray:
    """Discretised ``S`` acting on speed-weighted nodal densities."""
    n = curve.n_nodes
    half = n // 2
    x = curve.nodes
    diff = x[:, None, :] - x[None, :, :]
    dist = np.sqrt(np.sum(diff**2, axis=-1))
    np.fill_diagonal(dist, 1.0)
    kd = k * dist
    t = curve.t
    log_term = np.log(4.0 * np.sin(0.5 * (t[:, None] - t[None, :]))**2 + np.eye(n))

    # Colton-Kress split of Phi = (i/4) H0, the negative of Gamma.
    bj0 = j0(kd)
    m1 = -bj0 / (4.0 * np.pi)
    m2 = 0.25j * (bj0 + 1j * y0(kd)) - m1 * log_term
    diag = 0.25j - EULER / (2.0 * np.pi) - np.log(0.5 * k * curve.speed) / (2.0 * np.pi)
    m1[np.diag_indices(n)] = -1.0 / (4.0 * np.pi)
    m2[np.diag_indices(n)] = diag
    phi_ck = _log_weights(n) * m1 + (np.pi / half) * m2
    return -phi_ck


@dataclass
class SingleLayerSystem:
    """Assembled and LU-factorised single-layer system on one curve."""

    curve: ParamCurve
    wave: WaveContext
    matrix: np.ndarray
    factorization: tuple = field(repr=False)
    condition_estimate: float

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return sla.lu_solve(self.factorization, rhs)


@dataclass(frozen=True)
class BoundaryDensity:
    """Nodal samples of the density ``phi`` (one column per incident direction)."""

    values: np.ndarray


def assemble(curve: ParamCurve, wave: WaveContext, check_resolution: bool = True) -> SingleLayerSystem:
    """Build and factorise the single-layer matrix on ``curve``.

    Raises
    ------
    ResolutionError
        Fewer than 10 nodes per wavelength of perimeter.
    SingularSystemError
        LU factorisation hit an exactly singular pivot.
    """
    k = wave.wavenumber
    if check_resolution:
        per_wave = curve.n_nodes * wave.wavelength / curve.length
        if per_wave < MIN_POINTS_PER_WAVELENGTH:
            need = int(math.ceil(MIN_POINTS_PER_WAVELENGTH * curve.length / wave.wavelength))
            need += need % 2
            raise ResolutionError(
                f"{curve.n_nodes} nodes give {per_wave:.1f} points per wavelength; "
                f"need at least {need}", need)
    a = single_layer_matrix(curve, k)
    lu, piv, info = lapack.zgetrf(a)
    if info != 0:
        raise SingularSystemError(f"single-layer matrix is singular (zgetrf info={info})")
    anorm = np.max(np.sum(np.abs(a), axis=0))
    rcond, _ = lapack.zgecon(lu, anorm, norm="1")
    cond = math.inf if rcond == 0 else 1.0 / rcond
    if cond > CONDITION_WARN:
        warnings.warn(f"single-layer system is ill-conditioned (cond ~ {cond:.3g})",
                      IllConditionedWarning, stacklevel=2)
    return SingleLayerSystem(curve=curve, wave=wave, matrix=a, factorization=(lu, piv),
                             condition_estimate=cond)


def _as_directions(d) -> np.ndarray:
    d = np.atleast_2d(np.asarray(d, dtype=float))
    return d / np.linalg.norm(d, axis=1, keepdims=True)


def incident_field(points: np.ndarray, d, k: float) -> np.ndarray:
    """Plane waves ``exp(i k d . x)``; shape ``(len(points), len(d))``."""
    return np.exp(1j * k * points @ _as_directions(d).T)


def solve_density(system: SingleLayerSystem, d) -> BoundaryDensity:
    """Density ``phi = S^{-1}[u_inc]`` for one or several incident directions."""
    dirs = _as_directions(d)
    rhs = incident_field(system.curve.nodes, dirs, system.wave.wavenumber)
    weighted = system.solve(rhs)
    if not np.all(np.isfinite(weighted)):
        raise SingularSystemError("non-finite density")
    values = weighted / system.curve.speed[:, None]
    if np.ndim(d) == 1:
        values = values[:, 0]
    return BoundaryDensity(values)


def far_field(system: SingleLayerSystem, density: BoundaryDensity, xhat) -> np.ndarray | complex:
    """``u_inf(xhat) = e^{i pi/4} / sqrt(8 pi k) ∫ exp(-i k xhat.y) phi d sigma``.

    With ``density.values`` of shape ``(N, D)`` and ``xhat`` of shape ``(M, 2)``
    the result has shape ``(M, D)``.
    """
    k = system.wave.wavenumber
    curve = system.curve
    obs = _as_directions(xhat)
    kernel = np.exp(-1j * k * obs @ curve.nodes.T) * curve.weights[None, :]
    vals = np.asarray(density.values)
    out = (np.exp(0.25j * np.pi) / math.sqrt(8.0 * math.pi * k)) * (kernel @ vals)
    if np.ndim(xhat) == 1 and vals.ndim == 1:
        return complex(out[0])
    return out


@dataclass(frozen=True)
class MonostaticData:
    """Back-scattered far field ``u_inf(xhat_j, -xhat_j)``."""

    directions: DirectionSet
    values: np.ndarray

    def __post_init__(self):
        if len(self.values) != self.directions.count:
            raise ValueError("monostatic data length does not match J")

    def scaled(self, factor: complex) -> "MonostaticData":
        return MonostaticData(self.directions, np.asarray(self.values) * factor)


@dataclass(frozen=True)
class MsrMatrix:
    """Entries ``u_inf(xhat_i, d_j)`` with ``d_j = -xhat_j``.

    The diagonal is therefore the monostatic (back-scatter) data, and
    reciprocity ``u_inf(xhat, d) = u_inf(-d, -xhat)`` makes the matrix
    symmetric.
    """

    directions: DirectionSet
    values: np.ndarray

    def diagonal_data(self) -> MonostaticData:
        return MonostaticData(self.directions, np.ascontiguousarray(np.diagonal(self.values)))


def monostatic_sweep(curve: ParamCurve, wave: WaveContext, dirs: DirectionSet,
                     system: SingleLayerSystem | None = None) -> MonostaticData:
    """``J`` solves with ``d = -xhat_j``, each read back at ``xhat_j``."""
    if system is None:
        system = assemble(curve, wave)
    xhat = dirs.vectors
    dens = solve_density(system, -xhat)
    ff = far_field(system, dens, xhat)
    return MonostaticData(dirs, np.ascontiguousarray(np.diagonal(ff)))


def msr_matrix(curve: ParamCurve, wave: WaveContext, dirs: DirectionSet,
               system: SingleLayerSystem | None = None) -> MsrMatrix:
    """Full ``J x J`` multistatic response; rows are receivers, columns incidences."""
    if system is None:
        system = assemble(curve, wave)
    v = dirs.vectors
    dens = solve_density(system, -v)
    return MsrMatrix(dirs, far_field(system, dens, v))


def _header(kind: str, k: float, J: int) -> list[str]:
    return [f"# format=monoshape-{kind}", f"version={FORMAT_VERSION}", f"k={k:.17g}", f"J={J}"]


def write_monostatic_csv(data: MonostaticData, wave: WaveContext, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_header("monostatic", wave.wavenumber, data.directions.count))
        w.writerow(["j", "theta_deg", "re", "im"])
        for j, (theta, v) in enumerate(zip(np.degrees(data.directions.angles), data.values), 1):
            w.writerow([j, f"{theta:.17g}", f"{v.real:.17g}", f"{v.imag:.17g}"])


def write_msr_csv(msr: MsrMatrix, wave: WaveContext, path) -> None:
    J = msr.directions.count
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(_header("msr", wave.wavenumber, J))
        w.writerow(["i", "j", "re", "im"])
        for i in range(J):
            for j in range(J):
                v = msr.values[i, j]
                w.writerow([i + 1, j + 1, f"{v.real:.17g}", f"{v.imag:.17g}"])


def _read_header(fh) -> dict:
    first = next(csv.reader([fh.readline()]))
    meta = {}
    for item in first:
        item = item.strip().lstrip("#").strip()
        if "=" in item:
            key, val = item.split("=", 1)
            meta[key.strip()] = val.strip()
    if "format" not in meta:
        raise ValueError("missing data header line")
    if int(meta.get("version", -1)) != FORMAT_VERSION:
        raise ValueError(f"unsupported data format version {meta.get('version')}")
    return meta


def read_data_csv(path) -> tuple[MonostaticData | MsrMatrix, float]:
    """Read a monostatic or MSR CSV; returns the data and the recorded ``k``."""
    with open(path, newline="") as fh:
        meta = _read_header(fh)
        rows = list(csv.DictReader(fh))
    J = int(meta["J"])
    k = float(meta["k"])
    dirs = DirectionSet(J)
    if meta["format"] == "monoshape-monostatic":
        vals = np.zeros(J, dtype=complex)
        for r in rows:
            vals[int(r["j"]) - 1] = complex(float(r["re"]), float(r["im"]))
        return MonostaticData(dirs, vals), k
    if meta["format"] == "monoshape-msr":
        vals = np.zeros((J, J), dtype=complex)
        for r in rows:
            vals[int(r["i"]) - 1, int(r["j"]) - 1] = complex(float(r["re"]), float(r["im"]))
        return MsrMatrix(dirs, vals), k
    raise ValueError(f"unknown data format {meta['format']!r}")
