"""Closed parametric curves, star-shaped deformations and the Jaccard distance.

Curves are sampled at ``N`` equispaced parameter values ``t_i = 2 pi i / N``
and oriented counter-clockwise. Tangents and curvature of sampled curves
are obtained by trigonometric (FFT) differentiation.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Callable

import numpy as np

DEFAULT_NODES = 256
DEFAULT_JACCARD_RESOLUTION = 1024

TARGET_NAMES = ("omega1", "omega2", "omega3")


class DegenerateCurveError(ValueError):
    """Raised when a curve encloses no area."""


@dataclass(frozen=True)
class ParamCurve:
    """Sampled smooth closed curve.

    Attributes
    ----------
    t : ndarray, shape (N,)
        Parameter values ``2 pi i / N``.
    nodes : ndarray, shape (N, 2)
        Points on the curve [m].
    tangents : ndarray, shape (N, 2)
        ``dY/dt`` (not normalised) [m].
    normals : ndarray, shape (N, 2)
        Outward unit normals.
    curvatures : ndarray, shape (N,)
        Signed curvature [1/m], positive for a convex counter-clockwise arc.
    speed : ndarray, shape (N,)
        ``|dY/dt|`` [m].
    """

    t: np.ndarray
    nodes: np.ndarray
    tangents: np.ndarray
    normals: np.ndarray
    curvatures: np.ndarray
    speed: np.ndarray
    closed: bool = True

    @property
    def n_nodes(self) -> int:
        return self.nodes.shape[0]

    @property
    def weights(self) -> np.ndarray:
        """Trapezoidal arc-length quadrature weights ``speed * 2 pi / N``."""
        return self.speed * (2.0 * np.pi / self.n_nodes)

    @property
    def length(self) -> float:
        return float(np.sum(self.weights))

    @property
    def area(self) -> float:
        """Enclosed area via ``(1/2) ∮ (x dy - y dx)``."""
        x, y = self.nodes.T
        dx, dy = self.tangents.T
        return float(0.5 * np.sum(x * dy - y * dx) * 2.0 * np.pi / self.n_nodes)

    @property
    def centroid(self) -> np.ndarray:
        x, y = self.nodes.T
        dx, dy = self.tangents.T
        w = 2.0 * np.pi / self.n_nodes
        a = self.area
        cx = 0.5 * np.sum(x * x * dy) * w / a
        cy = -0.5 * np.sum(y * y * dx) * w / a
        return np.array([cx, cy])

    def diameter(self) -> float:
        diff = self.nodes[:, None, :] - self.nodes[None, :, :]
        return float(np.sqrt(np.max(np.sum(diff**2, axis=-1))))

    def bending_energy(self) -> float:
        """Scale-invariant regulariser ``length * ∫ kappa^2 d sigma``."""
        return self.length * float(np.sum(self.curvatures**2 * self.weights))


@dataclass(frozen=True)
class InitialDisk:
    center: tuple[float, float]
    radius: float

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError(f"disk radius must be positive, got {self.radius}")
        object.__setattr__(self, "center", (float(self.center[0]), float(self.center[1])))
        object.__setattr__(self, "radius", float(self.radius))


@dataclass(frozen=True)
class StarShapedDomain:
    """Disk boundary pushed radially by ``exp(h / r0)``."""

    base: InitialDisk
    deformation: np.ndarray

    def radial_profile(self) -> np.ndarray:
        """Distance from the base centre to the deformed boundary at each node."""
        h = np.asarray(self.deformation, dtype=float)
        return self.base.radius * np.exp(h / self.base.radius)


def _check_n(n_nodes: int) -> None:
    if n_nodes < 16 or n_nodes % 2:
        raise ValueError(f"n_nodes must be even and >= 16, got {n_nodes}")


def parameter_grid(n_nodes: int) -> np.ndarray:
    return 2.0 * np.pi * np.arange(n_nodes) / n_nodes


def spectral_derivatives(values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """First and second ``t``-derivatives of periodic samples (last axis)."""
    n = values.shape[-1]
    freqs = np.fft.fftfreq(n, d=1.0 / n)
    coeffs = np.fft.fft(values, axis=-1)
    first = 1j * freqs
    first[n // 2] = 0.0  # odd derivative of the Nyquist mode is not real
    second = -(freqs**2)
    d1 = np.fft.ifft(coeffs * first, axis=-1)
    d2 = np.fft.ifft(coeffs * second, axis=-1)
    if np.isrealobj(values):
        return d1.real, d2.real
    return d1, d2


def trig_interpolate(values: np.ndarray, n_out: int) -> np.ndarray:
    """Resample real periodic samples on ``n_out`` equispaced points."""
    n = values.shape[-1]
    if n_out == n:
        return np.array(values, dtype=float)
    coeffs = np.fft.rfft(values, axis=-1)
    if n % 2 == 0 and n_out > n:
        coeffs[..., -1] *= 0.5  # split the Nyquist mode between +/- n/2
    padded = np.zeros(values.shape[:-1] + (n_out // 2 + 1,), dtype=complex)
    keep = min(coeffs.shape[-1], padded.shape[-1])
    padded[..., :keep] = coeffs[..., :keep]
    return np.fft.irfft(padded, n=n_out, axis=-1) * (n_out / n)


def _assemble(t, z, dz, ddz) -> ParamCurve:
    speed = np.abs(dz)
    tangents = np.column_stack([dz.real, dz.imag])
    normals = np.column_stack([dz.imag, -dz.real]) / speed[:, None]
    curvature = (dz.real * ddz.imag - dz.imag * ddz.real) / speed**3
    nodes = np.column_stack([z.real, z.imag])
    return ParamCurve(t=t, nodes=nodes, tangents=tangents, normals=normals,
                      curvatures=curvature, speed=speed)


def curve_from_samples(points: np.ndarray) -> ParamCurve:
    """Build a curve from equispaced samples, orienting it counter-clockwise."""
    points = np.asarray(points, dtype=float)
    _check_n(points.shape[0])
    z = points[:, 0] + 1j * points[:, 1]
    dz, ddz = spectral_derivatives(z)
    curve = _assemble(parameter_grid(len(z)), z, dz, ddz)
    if curve.area < 0:
        return curve_from_samples(np.roll(points[::-1], 1, axis=0))
    return curve


def curve_from_function(z_of: Callable, dz_of: Callable, ddz_of: Callable,
                        n_nodes: int) -> ParamCurve:
    """Sample an analytic complex parametrisation, flipping ``t -> -t`` if clockwise."""
    _check_n(n_nodes)
    t = parameter_grid(n_nodes)
    curve = _assemble(t, z_of(t), dz_of(t), ddz_of(t))
    if curve.area < 0:
        curve = _assemble(t, z_of(-t), -dz_of(-t), ddz_of(-t))
    return curve


def make_circle(disk: InitialDisk, n_nodes: int = DEFAULT_NODES) -> ParamCurve:
    _check_n(n_nodes)
    t = parameter_grid(n_nodes)
    c = complex(*disk.center)
    r = disk.radius
    e = np.exp(1j * t)
    z = c + r * e
    dz = 1j * r * e
    curve = _assemble(t, z, dz, -r * e)
    # exact values instead of the rounded quotient
    return ParamCurve(t=t, nodes=curve.nodes, tangents=curve.tangents,
                      normals=np.column_stack([np.cos(t), np.sin(t)]),
                      curvatures=np.full(n_nodes, 1.0 / r),
                      speed=np.full(n_nodes, r))


def deform(domain: StarShapedDomain) -> ParamCurve:
    """Boundary ``c0 + (y - c0) exp(h(y) / r0)`` over the base-circle nodes."""
    h = np.asarray(domain.deformation, dtype=float)
    _check_n(h.size)
    t = parameter_grid(h.size)
    rho = domain.radial_profile()
    z = complex(*domain.base.center) + rho * np.exp(1j * t)
    dz, ddz = spectral_derivatives(z)
    return _assemble(t, z, dz, ddz)


def _target_functions(name: str):
    key = name.lower().replace("ω", "omega").replace("Ω", "omega")
    if key in ("omega1", "1"):
        return (lambda t: 0.01 + 0.03 * np.exp(1j * t),
                lambda t: 0.03j * np.exp(1j * t),
                lambda t: -0.03 * np.exp(1j * t))
    if key in ("omega2", "2"):
        return (lambda t: 0.01 + 0.024j * np.cos(t) + 0.036 * np.sin(t),
                lambda t: -0.024j * np.sin(t) + 0.036 * np.cos(t),
                lambda t: -0.024j * np.cos(t) - 0.036 * np.sin(t))
    if key in ("omega3", "3"):
        return (lambda t: 0.7 + 1j + 0.5 * (np.cos(t) - 0.2 * np.sin(t)**2 + 0.9j * np.sin(t)),
                lambda t: 0.5 * (-np.sin(t) - 0.2 * np.sin(2 * t) + 0.9j * np.cos(t)),
                lambda t: 0.5 * (-np.cos(t) - 0.4 * np.cos(2 * t) - 0.9j * np.sin(t)))
    raise KeyError(f"unknown target {name!r}; expected one of {TARGET_NAMES}")


def target_curve(name: str, n_nodes: int = DEFAULT_NODES) -> ParamCurve:
    """One of the three benchmark scatterers (circle, ellipse, kite)."""
    return curve_from_function(*_target_functions(name), n_nodes=n_nodes)


def is_simple(curve: ParamCurve) -> bool:
    """True when no two non-adjacent polygon edges intersect."""
    p = curve.nodes
    q = np.roll(p, -1, axis=0)
    n = len(p)

    def orient(a, b, c):
        return np.sign((b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1])
                       - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0]))

    i, j = np.triu_indices(n, k=2)
    keep = ~((i == 0) & (j == n - 1))
    i, j = i[keep], j[keep]
    a, b, c, d = p[i], q[i], p[j], q[j]
    crosses = (orient(a, b, c) * orient(a, b, d) < 0) & (orient(c, d, a) * orient(c, d, b) < 0)
    return not bool(np.any(crosses))


def _raster_grid(lo: np.ndarray, hi: np.ndarray, resolution: int):
    xs = lo[0] + (np.arange(resolution) + 0.5) * (hi[0] - lo[0]) / resolution
    ys = lo[1] + (np.arange(resolution) + 0.5) * (hi[1] - lo[1]) / resolution
    return xs, ys


def winding_mask(polygon: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """Non-zero winding number of a closed polygon at grid cell centres.

    Returns a boolean array of shape ``(len(ys), len(xs))``.
    """
    p0 = polygon
    p1 = np.roll(polygon, -1, axis=0)
    y0, y1 = p0[:, 1][None, :], p1[:, 1][None, :]
    yc = ys[:, None]
    up = (y0 <= yc) & (yc < y1)
    down = (y1 <= yc) & (yc < y0)
    hit = up | down
    rows, edges = np.nonzero(hit)
    if rows.size == 0:
        return np.zeros((len(ys), len(xs)), dtype=bool)
    a, b = p0[edges], p1[edges]
    frac = (ys[rows] - a[:, 1]) / (b[:, 1] - a[:, 1])
    xcross = a[:, 0] + frac * (b[:, 0] - a[:, 0])
    sign = np.where(up[rows, edges], 1, -1)
    # centres strictly left of a crossing see it on their rightward ray
    idx = np.searchsorted(xs, xcross, side="left")
    acc = np.zeros((len(ys), len(xs) + 1), dtype=np.int32)
    np.add.at(acc, (rows, idx), sign)
    winding = np.cumsum(acc[:, ::-1], axis=1)[:, ::-1][:, 1:]
    return winding != 0


def jaccard_distance(a: ParamCurve, b: ParamCurve,
                     resolution: int = DEFAULT_JACCARD_RESOLUTION) -> float:
    """``1 - |A n B| / |A u B|`` by rasterising both interiors on a common grid."""
    both = np.vstack([a.nodes, b.nodes])
    lo, hi = both.min(axis=0), both.max(axis=0)
    if np.any(hi - lo <= 0):
        raise DegenerateCurveError("curves have a degenerate bounding box")
    xs, ys = _raster_grid(lo, hi, resolution)
    ma = winding_mask(a.nodes, xs, ys)
    mb = winding_mask(b.nodes, xs, ys)
    if not ma.any() or not mb.any():
        raise DegenerateCurveError("curve encloses no grid cell")
    union = np.count_nonzero(ma | mb)
    return 1.0 - np.count_nonzero(ma & mb) / union


def star_jaccard_distances(rho: np.ndarray, others: np.ndarray) -> np.ndarray:
    """Jaccard distance between star domains sharing one centre.

    ``rho`` (shape ``(K,)``) and each row of ``others`` (shape ``(M, K)``)
    are radial profiles on the same equispaced angle grid; the polar area
    formula makes the intersection and union exact up to angular quadrature.
    """
    others = np.atleast_2d(others)
    lo = np.minimum(rho[None, :], others) ** 2
    hi = np.maximum(rho[None, :], others) ** 2
    return 1.0 - lo.sum(axis=1) / hi.sum(axis=1)


def write_curve_csv(curve: ParamCurve, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "x", "y", "nx", "ny", "kappa", "speed"])
        for row in zip(curve.t, curve.nodes[:, 0], curve.nodes[:, 1], curve.normals[:, 0],
                       curve.normals[:, 1], curve.curvatures, curve.speed):
            w.writerow([f"{v:.17g}" for v in row])


def read_curve_csv(path) -> ParamCurve:
    """Load a curve CSV; only ``x, y`` are used, the rest is recomputed."""
    with open(path, newline="") as fh:
        rows = [r for r in csv.DictReader(fh)]
    if not rows:
        raise ValueError(f"{path}: no curve samples")
    points = np.array([[float(r["x"]), float(r["y"])] for r in rows])
    return curve_from_samples(points)


def load_curve(spec: str, n_nodes: int = DEFAULT_NODES) -> ParamCurve:
    """Resolve a target name or a curve CSV path."""
    if Path(spec).exists():
        return read_curve_csv(spec)
    return target_curve(spec, n_nodes)
