"""Closed-form scattering by a sound-soft disk and disk-radius estimation.

For ``B(x0, r0)`` the scattered field is ``sum_m c_m H_m(k r) e^{i m theta}``
with ``c_m = -i^m e^{i k d.x0} e^{-i m arg d} J_m(k r0) / H_m(k r0)``. Its far
field is

    u_inf(xhat, d) = -e^{-i pi/4} sqrt(2 / (pi k)) e^{i k (d - xhat).x0}
                     * sum_m e^{i m (arg xhat - arg d)} J_m(k r0) / H_m(k r0).

The back-scattered modulus depends on ``r0`` only, which is what the
radius estimator inverts.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import specfun
from .forward import MonostaticData, WaveContext
from .geometry import InitialDisk

DEFAULT_M = 200
DEFAULT_BRACKET = (1e-4, 2.0)
DEFAULT_TOL = 1e-5
MONOTONICITY_GRID = 400


class BracketError(ValueError):
    """The target modulus is not enclosed by the bracket, or f_M is not monotone there."""


def _angle(v) -> float:
    return math.atan2(float(v[1]), float(v[0]))


@dataclass(frozen=True)
class DiskSeries:
    """Truncated cylindrical-harmonic expansion of the field scattered by a disk."""

    disk: InitialDisk
    wave: WaveContext
    truncation: int
    direction: tuple[float, float]

    @property
    def orders(self) -> np.ndarray:
        return np.arange(-self.truncation, self.truncation + 1)

    @property
    def coefficients(self) -> np.ndarray:
        """``c_m^(1)`` for ``m = -M..M``."""
        k = self.wave.wavenumber
        ratios = _ratios_symmetric(self.truncation, k * self.disk.radius)
        m = self.orders
        d = np.asarray(self.direction)
        phase = np.exp(1j * k * float(d @ np.asarray(self.disk.center)))
        return -(1j**m) * phase * np.exp(-1j * m * _angle(d)) * ratios

    def scattered_field(self, points: np.ndarray) -> np.ndarray:
        """Evaluate the series at points with ``|x - x0| >= r0``."""
        k = self.wave.wavenumber
        rel = np.atleast_2d(points) - np.asarray(self.disk.center)
        r = np.hypot(rel[:, 0], rel[:, 1])
        theta = np.arctan2(rel[:, 1], rel[:, 0])
        M = self.truncation
        jv = specfun.bessel_j_orders(M + 1, k * r)
        yv = specfun.bessel_y_orders(M, k * r)
        h = jv[: M + 1] + 1j * yv
        m = self.orders
        sign = np.where(m % 2 == 0, 1.0, -1.0)
        h_all = np.where((m < 0)[:, None], sign[:, None], 1.0) * h[np.abs(m)]
        return np.sum(self.coefficients[:, None] * h_all * np.exp(1j * np.outer(m, theta)), axis=0)


def _ratios_symmetric(M: int, x: float) -> np.ndarray:
    """``J_m(x) / H_m(x)`` for ``m = -M..M`` (even in ``m``)."""
    r = specfun.j_over_h_orders(M, x)
    return np.concatenate([r[:0:-1], r])


def far_field_series(disk: InitialDisk, wave: WaveContext, xhat, d, M: int = 60) -> complex:
    """Far-field pattern of a sound-soft disk from the truncated series.

    Terms are added in ``+/- m`` pairs; orders whose ratio underflows are
    dropped as exact zeros.
    """
    if M < 1:
        raise ValueError("truncation M must be >= 1")
    k = wave.wavenumber
    xhat = np.asarray(xhat, dtype=float)
    d = np.asarray(d, dtype=float)
    ratios = specfun.j_over_h_orders(M, k * disk.radius)
    delta = _angle(xhat) - _angle(d)
    m = np.arange(1, M + 1)
    total = ratios[0] + 2.0 * np.sum(ratios[1:] * np.cos(m * delta))
    phase = np.exp(1j * k * float((d - xhat) @ np.asarray(disk.center)))
    return complex(-np.exp(-0.25j * np.pi) * math.sqrt(2.0 / (math.pi * k)) * phase * total)


def disk_density(disk: InitialDisk, wave: WaveContext, d, theta: np.ndarray,
                 M: int = 60) -> np.ndarray:
    """Single-layer density solving ``S[phi] = exp(i k d.y)`` on the disk boundary.

    On a circle of radius ``a`` the operator is diagonal in ``e^{i m theta}``
    with eigenvalues ``-(i pi a / 2) J_m(ka) H_m(ka)``, and the plane wave
    expands by Jacobi-Anger.
    """
    k = wave.wavenumber
    a = disk.radius
    d = np.asarray(d, dtype=float)
    h = specfun.bessel_j_orders(M, k * a) + 1j * specfun.bessel_y_orders(M, k * a)
    m = np.arange(-M, M + 1)
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    h_m = np.where(m < 0, sign, 1.0) * h[np.abs(m)]
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        inv_h = np.where(np.isfinite(h_m), 1.0 / h_m, 0.0)
    phase = np.exp(1j * k * float(d @ np.asarray(disk.center)))
    coeff = (2j / (math.pi * a)) * phase * (1j**m) * np.exp(-1j * m * _angle(d)) * inv_h
    return np.exp(1j * np.outer(np.asarray(theta), m)) @ coeff


def monostatic_modulus(r, wave: WaveContext, M: int = DEFAULT_M):
    """``f_M(r) = |sum_{m=-M}^{M} (-1)^m J_m(kr) / H_m(kr)|``."""
    r_arr = np.asarray(r, dtype=float)
    if np.any(r_arr <= 0):
        raise ValueError("radius must be positive")
    ratios = specfun.j_over_h_orders(M, wave.wavenumber * r_arr)
    m = np.arange(1, M + 1)
    sign = np.where(m % 2 == 0, 1.0, -1.0)
    sign = sign.reshape((-1,) + (1,) * r_arr.ndim)
    total = ratios[0] + 2.0 * np.sum(sign * ratios[1:], axis=0)
    out = np.abs(total)
    return out if np.ndim(out) else float(out)


def data_modulus_mean(data: MonostaticData, wave: WaveContext, mode: str = "arithmetic") -> float:
    """Mean of ``g_j = sqrt(pi k / 2) |u_inf(xhat_j, -xhat_j)|``.

    ``mode`` is ``"arithmetic"`` or ``"quadratic"`` (root mean square).
    """
    vals = np.abs(np.asarray(data.values))
    if vals.size == 0:
        raise ValueError("no data")
    g = math.sqrt(math.pi * wave.wavenumber / 2.0) * vals
    if mode == "arithmetic":
        return float(np.mean(g))
    if mode == "quadratic":
        # scale by the largest modulus so tiny values do not underflow when squared
        top = g.max()
        return 0.0 if top == 0.0 else float(top * np.sqrt(np.mean((g / top) ** 2)))
    raise ValueError(f"unknown mode {mode!r}")


def estimate_radius(gbar: float, wave: WaveContext, bracket=DEFAULT_BRACKET,
                    tol: float = DEFAULT_TOL, M: int = DEFAULT_M) -> float:
    """Radius of the disk whose back-scatter modulus equals ``gbar``, by bisection.

    ``f_M`` is first checked to be increasing on a grid over the bracket so
    that bisection is guaranteed to find the unique root.
    """
    lo, hi = float(bracket[0]), float(bracket[1])
    if not 0 < lo < hi:
        raise BracketError(f"invalid bracket {bracket}")
    grid = np.geomspace(lo, hi, MONOTONICITY_GRID)
    f_grid = monostatic_modulus(grid, wave, M)
    if np.any(np.diff(f_grid) <= 0):
        bad = grid[1:][np.diff(f_grid) <= 0][0]
        raise BracketError(f"f_M is not increasing on the bracket (near r = {bad:.4g})")
    f_lo, f_hi = f_grid[0], f_grid[-1]
    if not f_lo < gbar < f_hi:
        raise BracketError(
            f"target {gbar:.6g} outside [f_M({lo:g}) = {f_lo:.6g}, f_M({hi:g}) = {f_hi:.6g}]")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if monostatic_modulus(mid, wave, M) < gbar:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)
