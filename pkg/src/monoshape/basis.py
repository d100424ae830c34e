"""Deformation bases on the initial circle and the far-field shape derivative.

A deformation ``h`` on ``dB(c0, r0)`` moves a boundary point ``y`` to
``c0 + (y - c0) exp(h(y) / r0)``. For small ``h`` the back-scattered far field
changes, to first order, along ``Re psi_d^2`` and ``Im psi_d^2`` with
``psi_d = S^{-1}[exp(i k d.y)]`` and ``d = -xhat_j``. The derived basis
orthonormalises those ``2J`` functions; the Fourier basis is the usual
trigonometric alternative with ``j^-2`` damping.

Basis functions are dimensionless and orthonormal for
``<f, g> = ∫_0^{2pi} f g dtheta``; a coefficient vector ``c`` maps to the
deformation ``h = a * r0 * sum_j c_j Psi_j`` with a dimensionless amplitude
``a`` (1 by default).
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace

import numpy as np

from .forward import (BoundaryDensity, DirectionSet, SingleLayerSystem, WaveContext,
                      assemble, default_node_count, solve_density)
from .geometry import InitialDisk, StarShapedDomain, deform, make_circle

DROP_TOL = 1e-10


class DegenerateBasisError(ValueError):
    """Every candidate deformation direction collapsed under Gram-Schmidt."""


@dataclass(frozen=True)
class ShapeBasis:
    """Orthonormal deformation functions sampled at the base-circle nodes.

    Attributes
    ----------
    base : InitialDisk
    functions : ndarray, shape (J_tilde, N)
    inner_product_weights : ndarray, shape (N,)
        Quadrature weights of the inner product (``2 pi / N``).
    kind : {"derived", "fourier"}
    amplitude : float
        Dimensionless factor between coefficients and ``h / r0``.
    """

    base: InitialDisk
    functions: np.ndarray
    inner_product_weights: np.ndarray
    kind: str
    amplitude: float = 1.0

    def __post_init__(self):
        if not self.amplitude > 0:
            raise ValueError("amplitude must be positive")

    @property
    def size(self) -> int:
        return self.functions.shape[0]

    @property
    def n_nodes(self) -> int:
        return self.functions.shape[1]

    def gram(self) -> np.ndarray:
        f = self.functions
        return (f * self.inner_product_weights) @ f.T

    def deformation(self, c: np.ndarray) -> np.ndarray:
        """Nodal values of ``h = a * r0 * sum_j c_j Psi_j`` [m]."""
        return self.amplitude * self.base.radius * (np.asarray(c, dtype=float) @ self.functions)

    def log_radius(self, c: np.ndarray) -> np.ndarray:
        """``h / r0`` at the nodes; the deformed radius is ``r0 exp`` of this."""
        return self.amplitude * (np.asarray(c, dtype=float) @ self.functions)

    def with_amplitude(self, amplitude: float) -> "ShapeBasis":
        return replace(self, amplitude=float(amplitude))

    def domain(self, c: np.ndarray) -> StarShapedDomain:
        return StarShapedDomain(self.base, self.deformation(c))

    def curve(self, c: np.ndarray):
        return deform(self.domain(c))


def circle_system(disk: InitialDisk, wave: WaveContext, n_nodes: int | None = None) -> SingleLayerSystem:
    if n_nodes is None:
        n_nodes = default_node_count(2.0 * math.pi * disk.radius, wave)
    return assemble(make_circle(disk, n_nodes), wave)


def psi_density(disk: InitialDisk, wave: WaveContext, d, n_nodes: int | None = None,
                system: SingleLayerSystem | None = None) -> BoundaryDensity:
    """``psi_d = S^{-1}[exp(i k d.y)]`` on the circle ``dB(c0, r0)``."""
    if system is None:
        system = circle_system(disk, wave, n_nodes)
    return solve_density(system, d)


def gram_schmidt(vectors: np.ndarray, weights: np.ndarray,
                 drop_tol: float = DROP_TOL) -> tuple[np.ndarray, list[int]]:
    """Modified Gram-Schmidt with one re-orthogonalisation pass.

    A vector is dropped when its norm after projection is below
    ``drop_tol`` times the largest input norm. Returns the orthonormal rows
    and the indices of the input vectors that produced them.
    """
    norms = np.sqrt(np.sum(vectors**2 * weights, axis=1))
    cutoff = drop_tol * norms.max()
    out: list[np.ndarray] = []
    kept: list[int] = []
    for i, v in enumerate(vectors):
        w = v.astype(float).copy()
        for _ in range(2):
            for q in out:
                w -= np.sum(q * w * weights) * q
        nrm = math.sqrt(np.sum(w * w * weights))
        if nrm > cutoff:
            out.append(w / nrm)
            kept.append(i)
    if not out:
        return np.zeros((0, vectors.shape[1])), kept
    return np.array(out), kept


def raw_derived_functions(disk: InitialDisk, wave: WaveContext, dirs: DirectionSet,
                          system: SingleLayerSystem) -> np.ndarray:
    """Rows ``Re psi^2, Im psi^2`` for ``psi = psi_{-xhat_j}``, ``j = 1..J``."""
    psi = solve_density(system, -dirs.vectors).values
    sq = psi**2
    raw = np.empty((2 * dirs.count, system.curve.n_nodes))
    raw[0::2] = sq.real.T
    raw[1::2] = sq.imag.T
    return raw


def build_derived_basis(disk: InitialDisk, wave: WaveContext, dirs: DirectionSet,
                        n_nodes: int | None = None, drop_tol: float = DROP_TOL,
                        system: SingleLayerSystem | None = None) -> ShapeBasis:
    """Orthonormalised shape-derivative directions for monostatic data."""
    if system is None:
        system = circle_system(disk, wave, n_nodes)
    raw = raw_derived_functions(disk, wave, dirs, system)
    n = raw.shape[1]
    weights = np.full(n, 2.0 * math.pi / n)
    funcs, _ = gram_schmidt(raw, weights, drop_tol)
    if funcs.shape[0] == 0:
        raise DegenerateBasisError("all derived basis vectors are degenerate")
    return ShapeBasis(disk, funcs, weights, "derived")


def build_fourier_basis(disk: InitialDisk, J: int, n_nodes: int = 128) -> ShapeBasis:
    """``(2 pi)^-1/2``, ``pi^-1/2 j^-2 cos(j theta)``, ``pi^-1/2 j^-2 sin(j theta)``."""
    if J < 1:
        raise ValueError("J must be >= 1")
    if n_nodes <= 2 * J:
        raise ValueError(f"{n_nodes} nodes cannot resolve Fourier mode {J}")
    theta = 2.0 * math.pi * np.arange(n_nodes) / n_nodes
    j = np.arange(1, J + 1)[:, None]
    rows = [np.full((1, n_nodes), 1.0 / math.sqrt(2.0 * math.pi)),
            np.cos(j * theta) / (math.sqrt(math.pi) * j**2),
            np.sin(j * theta) / (math.sqrt(math.pi) * j**2)]
    return ShapeBasis(disk, np.vstack(rows), np.full(n_nodes, 2.0 * math.pi / n_nodes), "fourier")


def shape_derivative_prediction(disk: InitialDisk, wave: WaveContext, h: np.ndarray,
                                xhat, d, system: SingleLayerSystem | None = None) -> complex:
    """Leading-order far-field change for the normal boundary displacement ``h``.

    ``-(e^{i pi/4} / sqrt(8 pi k)) ∫ h psi_{-xhat} psi_d d sigma`` over the
    circle, with ``h`` sampled at its nodes [m].
    """
    h = np.asarray(h, dtype=float)
    if system is None:
        system = circle_system(disk, wave, h.size)
    if system.curve.n_nodes != h.size:
        raise ValueError("h must be sampled at the circle nodes")
    xhat = np.asarray(xhat, dtype=float)
    dens = solve_density(system, np.vstack([-xhat, np.asarray(d, dtype=float)])).values
    k = wave.wavenumber
    integral = np.sum(h * dens[:, 0] * dens[:, 1] * system.curve.weights)
    return complex(-np.exp(0.25j * math.pi) / math.sqrt(8.0 * math.pi * k) * integral)


def write_basis_csv(basis: ShapeBasis, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        c = basis.base.center
        w.writerow([f"# kind={basis.kind}", f"J_tilde={basis.size}", f"N={basis.n_nodes}",
                    f"cx={c[0]:.17g}", f"cy={c[1]:.17g}", f"r0={basis.base.radius:.17g}", f"amplitude={basis.amplitude:.17g}"])
        w.writerow(["index"] + [f"node_{i}" for i in range(basis.n_nodes)])
        for i, row in enumerate(basis.functions, 1):
            w.writerow([i] + [f"{v:.17g}" for v in row])


def read_basis_csv(path) -> ShapeBasis:
    with open(path, newline="") as fh:
        meta = {}
        for item in next(csv.reader([fh.readline()])):
            key, _, val = item.strip().lstrip("#").strip().partition("=")
            meta[key] = val
        reader = csv.reader(fh)
        next(reader)
        funcs = np.array([[float(v) for v in row[1:]] for row in reader])
    disk = InitialDisk((float(meta["cx"]), float(meta["cy"])), float(meta["r0"]))
    n = funcs.shape[1]
    return ShapeBasis(disk, funcs, np.full(n, 2.0 * math.pi / n), meta["kind"],
                      float(meta.get("amplitude", 1.0)))
