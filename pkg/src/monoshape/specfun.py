"""Integer-order Bessel and Hankel functions of real positive argument.

J_m is obtained by Miller's downward recurrence normalised with
``J_0 + 2 * sum_k J_2k = 1``. Y_0 and Y_1 come from the Neumann series in
the same J values, and higher Y_m from the (stable) upward recurrence.
All routines are vectorised over the argument.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

EULER_GAMMA = 0.57721566490153286061

_RESCALE = 1e250
_TINY = 1e-300


class UnsupportedOrderError(ValueError):
    """Requested order exceeds the configured ``max_order``."""


@dataclass(frozen=True)
class SpecfunConfig:
    max_order: int = 400
    rel_tol: float = 1e-12

    def __post_init__(self):
        if self.max_order < 1:
            raise ValueError("max_order must be >= 1")
        if not self.rel_tol > 0:
            raise ValueError("rel_tol must be positive")


DEFAULT_CONFIG = SpecfunConfig()


def _as_positive_array(x, allow_zero: bool) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    bad = (x < 0) | ~np.isfinite(x) if allow_zero else (x <= 0) | ~np.isfinite(x)
    if np.any(bad):
        raise ValueError("Bessel argument must be positive and finite")
    return x


def _check_order(m: int, config: SpecfunConfig) -> int:
    if int(m) != m:
        raise ValueError(f"order must be an integer, got {m!r}")
    m = int(m)
    if abs(m) > config.max_order:
        raise UnsupportedOrderError(
            f"|order| = {abs(m)} exceeds max_order = {config.max_order}")
    return m


def _miller_start(n_max: int, x_max: float) -> int:
    # J_n(x) is below 1e-17 of its peak once n exceeds x by ~ x^(1/3) * 10
    start = max(n_max, int(np.ceil(x_max))) + 30 + int(12 * np.cbrt(x_max + 1.0))
    return start + (start % 2)


def bessel_j_orders(n_max: int, x) -> np.ndarray:
    """J_0..J_{n_max} at every point of ``x``.

    Returns an array of shape ``(n_max + 1,) + x.shape``. ``x = 0`` is
    accepted and yields ``J_0 = 1`` and ``J_m = 0`` for ``m >= 1``.
    """
    x = _as_positive_array(x, allow_zero=True)
    shape = x.shape
    xf = x.ravel()
    out = np.zeros((n_max + 1, xf.size))
    zero = xf == 0.0
    out[0, zero] = 1.0
    pos = ~zero
    if not np.any(pos):
        return out.reshape((n_max + 1,) + shape)

    xp = xf[pos]
    start = _miller_start(n_max, float(xp.max()))
    two_over_x = 2.0 / xp
    vals = np.zeros((n_max + 1, xp.size))
    j_next = np.zeros_like(xp)
    j_cur = np.full_like(xp, 1e-30)
    norm = np.zeros_like(xp)
    for n in range(start, 0, -1):
        # j_cur holds J_n (unnormalised); step down to J_{n-1}
        j_prev = n * two_over_x * j_cur - j_next
        j_next, j_cur = j_cur, j_prev
        order = n - 1
        if order <= n_max:
            vals[order] = j_cur
        if order % 2 == 0 and order > 0:
            norm += 2.0 * j_cur
        big = np.abs(j_cur) > _RESCALE
        if np.any(big):
            scale = np.where(big, 1.0 / _RESCALE, 1.0)
            j_cur *= scale
            j_next *= scale
            norm *= scale
            vals[:, big] *= 1.0 / _RESCALE
    norm += j_cur
    vals /= norm
    vals[np.abs(vals) < _TINY] = 0.0
    out[:, pos] = vals
    return out.reshape((n_max + 1,) + shape)


def bessel_y_orders(n_max: int, x, j_values: np.ndarray | None = None) -> np.ndarray:
    """Y_0..Y_{n_max} at every point of ``x`` (``x > 0``).

    Orders whose magnitude overflows are returned as ``-inf``.
    """
    x = _as_positive_array(x, allow_zero=False)
    shape = x.shape
    xf = x.ravel()
    # The Neumann series needs even orders well past the oscillatory region.
    n_series = _miller_start(max(n_max, 1), float(xf.max())) if xf.size else 2
    if j_values is None or j_values.shape[0] <= n_series:
        jv = bessel_j_orders(n_series, xf)
    else:
        jv = j_values.reshape(j_values.shape[0], -1)
    n_series = jv.shape[0] - 2

    log_term = np.log(xf / 2.0) + EULER_GAMMA
    ks = np.arange(1, n_series // 2 + 1)
    signs = np.where(ks % 2 == 0, 1.0, -1.0)[:, None]
    even = jv[2 * ks]
    y0 = (2.0 / np.pi) * (log_term * jv[0] - 2.0 * np.sum(signs * even / ks[:, None], axis=0))
    odd_diff = jv[2 * ks - 1] - jv[2 * ks + 1]
    y1 = (2.0 / np.pi) * (log_term * jv[1] - jv[0] / xf
                          + np.sum(signs * odd_diff / ks[:, None], axis=0))

    out = np.empty((n_max + 1, xf.size))
    out[0] = y0
    if n_max >= 1:
        out[1] = y1
    overflow = np.zeros(xf.size, dtype=bool)
    with np.errstate(over="ignore", invalid="ignore"):
        for n in range(1, n_max):
            nxt = (2.0 * n / xf) * out[n] - out[n - 1]
            overflow |= ~np.isfinite(nxt) | (np.abs(nxt) > 1e300)
            out[n + 1] = np.where(overflow, -np.inf, nxt)
    return out.reshape((n_max + 1,) + shape)


def _reflect(m: int, values: np.ndarray) -> np.ndarray:
    return values if m >= 0 or m % 2 == 0 else -values


def bessel_j(m: int, x, config: SpecfunConfig = DEFAULT_CONFIG):
    """Bessel function of the first kind J_m(x), integer m, real x >= 0."""
    m = _check_order(m, config)
    vals = bessel_j_orders(abs(m), x)[abs(m)]
    vals = _reflect(m, vals)
    return vals if np.ndim(vals) else float(vals)


def bessel_y(m: int, x, config: SpecfunConfig = DEFAULT_CONFIG):
    """Bessel function of the second kind Y_m(x), integer m, real x > 0."""
    m = _check_order(m, config)
    vals = bessel_y_orders(abs(m), x)[abs(m)]
    vals = _reflect(m, vals)
    return vals if np.ndim(vals) else float(vals)


def hankel1(m: int, x, config: SpecfunConfig = DEFAULT_CONFIG):
    """Hankel function of the first kind H_m^(1)(x) = J_m(x) + i Y_m(x)."""
    m = _check_order(m, config)
    x = _as_positive_array(x, allow_zero=False)
    n = abs(m)
    jv = bessel_j_orders(max(n, 1), x)
    yv = bessel_y_orders(n, x)
    vals = _reflect(m, jv[n] + 1j * yv[n])
    return vals if np.ndim(vals) else complex(vals)


def hankel2(m: int, x, config: SpecfunConfig = DEFAULT_CONFIG):
    """Hankel function of the second kind, the conjugate of H_m^(1) for real x."""
    return np.conj(hankel1(m, x, config))


def hankel1_derivative(m: int, x, config: SpecfunConfig = DEFAULT_CONFIG):
    """d/dx H_m^(1)(x) = (H_{m-1}^(1)(x) - H_{m+1}^(1)(x)) / 2."""
    return 0.5 * (hankel1(m - 1, x, config) - hankel1(m + 1, x, config))


def j_over_h_orders(n_max: int, x) -> np.ndarray:
    """Ratios J_m(x) / H_m^(1)(x) for m = 0..n_max.

    Deeply evanescent orders where the ratio drops below 1e-300 (or where
    Y_m overflows) are returned as exact zeros rather than NaN.
    """
    x = _as_positive_array(x, allow_zero=False)
    jv = bessel_j_orders(n_max, x)
    yv = bessel_y_orders(n_max, x)
    with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
        ratio = jv / (jv + 1j * yv)
    dead = ~np.isfinite(ratio) | (np.abs(ratio) < _TINY) | ~np.isfinite(yv)
    ratio[dead] = 0.0
    return ratio
