"""Monostatic sampling indicator for locating the target centre.

A point-like scatterer at ``z0`` contributes ``u_inf(xhat, -xhat) ~ C
exp(-2 i k xhat.z0)`` to back-scatter data, so correlating the data with the
round-trip phase ``exp(+2 i k xhat.z)`` peaks at ``z = z0``:

    I(z) = |sum_j u_inf(xhat_j, -xhat_j) exp(2 i k xhat_j.z)| / max_z I.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy.ndimage import label, maximum_filter

from .forward import MonostaticData, WaveContext

DEFAULT_RESOLUTION = 201
DEFAULT_SIDE_WAVELENGTHS = 4.0


class FlatIndicatorError(ValueError):
    """The indicator grid has no usable maximum."""


@dataclass(frozen=True)
class IndicatorGrid:
    """Indicator values on a tensor grid.

    Attributes
    ----------
    xs, ys : ndarray
        Cell-centre coordinates [m].
    values : ndarray, shape (len(ys), len(xs))
        Normalised so that the maximum is 1.
    """

    xs: np.ndarray
    ys: np.ndarray
    values: np.ndarray

    @property
    def bounds(self) -> tuple[float, float, float, float]:
        return float(self.xs[0]), float(self.xs[-1]), float(self.ys[0]), float(self.ys[-1])

    @property
    def resolution(self) -> tuple[int, int]:
        return len(self.xs), len(self.ys)

    def argmax(self) -> np.ndarray:
        iy, ix = np.unravel_index(np.argmax(self.values), self.values.shape)
        return np.array([self.xs[ix], self.ys[iy]])


def default_bounds(wave: WaveContext, center=(0.0, 0.0),
                   side_wavelengths: float = DEFAULT_SIDE_WAVELENGTHS) -> tuple[float, float, float, float]:
    half = 0.5 * side_wavelengths * wave.wavelength
    cx, cy = float(center[0]), float(center[1])
    return cx - half, cx + half, cy - half, cy + half


def indicator(data: MonostaticData, wave: WaveContext, bounds=None,
              resolution: int | tuple[int, int] = DEFAULT_RESOLUTION) -> IndicatorGrid:
    """Evaluate the normalised monostatic sampling indicator.

    Parameters
    ----------
    bounds : (xmin, xmax, ymin, ymax), optional
        Defaults to a square of side four wavelengths about the origin.
    resolution : int or (nx, ny)
    """
    if bounds is None:
        bounds = default_bounds(wave)
    xmin, xmax, ymin, ymax = (float(v) for v in bounds)
    if not (xmin < xmax and ymin < ymax) or not np.all(np.isfinite(bounds)):
        raise ValueError(f"degenerate bounds {bounds}")
    nx, ny = (resolution, resolution) if np.isscalar(resolution) else resolution
    if nx < 2 or ny < 2:
        raise ValueError("resolution must be at least 2 in each direction")
    xs = np.linspace(xmin, xmax, int(nx))
    ys = np.linspace(ymin, ymax, int(ny))
    k = wave.wavenumber
    xhat = data.directions.vectors
    u = np.asarray(data.values, dtype=complex)
    # the phase factorises over x and y, so the sum is a small matrix product
    ex = np.exp(2j * k * np.outer(xhat[:, 0], xs))
    ey = np.exp(2j * k * np.outer(xhat[:, 1], ys))
    vals = np.abs((ey * u[:, None]).T @ ex)
    peak = vals.max()
    if not np.isfinite(peak) or peak <= 0.0:
        raise FlatIndicatorError("indicator vanishes on the whole grid")
    return IndicatorGrid(xs, ys, vals / peak)


def pick_center(grid: IndicatorGrid, n_candidates: int = 5) -> list[tuple[np.ndarray, float]]:
    """Local maxima over 8-neighbourhoods, largest first.

    Ties are broken by ``x`` and then ``y``. Plateaus count once, at their
    lowest ``(x, y)`` cell; cells at the grid minimum are never returned.
    """
    if n_candidates < 1:
        raise ValueError("n_candidates must be >= 1")
    v = grid.values
    if np.ptp(v) <= 0.0:
        raise FlatIndicatorError("indicator grid is flat")
    local = maximum_filter(v, size=3, mode="constant", cval=-np.inf)
    # cells at the grid minimum are background, never candidates
    mask = (v == local) & (v > v.min())
    # neighbouring maxima share their value, so each component is one plateau
    labels, _ = label(mask, structure=np.ones((3, 3), dtype=int))
    iy, ix = np.nonzero(mask)
    order = np.lexsort((grid.ys[iy], grid.xs[ix], -v[iy, ix]))
    out: list[tuple[np.ndarray, float]] = []
    seen: set[int] = set()
    for o in order:
        lab = int(labels[iy[o], ix[o]])
        if lab in seen:
            continue
        seen.add(lab)
        out.append((np.array([grid.xs[ix[o]], grid.ys[iy[o]]]), float(v[iy[o], ix[o]])))
        if len(out) == n_candidates:
            break
    return out


def write_indicator_csv(grid: IndicatorGrid, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["x", "y", "value"])
        for j, y in enumerate(grid.ys):
            for i, x in enumerate(grid.xs):
                w.writerow([f"{x:.17g}", f"{y:.17g}", f"{grid.values[j, i]:.17g}"])


def read_indicator_csv(path) -> IndicatorGrid:
    raw = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
    xs = np.unique(raw[:, 0])
    ys = np.unique(raw[:, 1])
    return IndicatorGrid(xs, ys, raw[:, 2].reshape(len(ys), len(xs)))
