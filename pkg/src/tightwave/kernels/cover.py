"""The square-root Gamma-Poisson kernel of the tree cover-time recursion.

Conditioned on ``Y = y >= 0`` the displacement law ``K(y)`` has density::

    k(y, x) = 2 x exp(-(x^2 + y^2)) I_0(2 x y),   x > 0

which is evaluated in log space as ``log(2x) - (x - y)^2 + log(e^{-2xy} I_0(2xy))``
so that ``y`` up to ~1e3 neither overflows nor underflows prematurely.

Tails are integrals of the density over panels, with Gauss-Legendre nodes
inside each panel and suffix sums accumulated from the far right.
"""
from __future__ import annotations

import math

import numpy as np
from scipy.special import erfc

from ..errors import NumericError
from .bessel import bessel_i_scaled

# (z - y)^2 beyond this leaves exp(.) < 1e-326: density is exactly zero in double
UPPER_REACH = 28.0
LOWER_REACH = 40.0
MAX_PANEL = 0.25
QUAD_ATOL = 1e-12


def normal_half_tail(x):
    """``P(N(0, 1/2) > x) = erfc(x) / 2``."""
    out = 0.5 * erfc(np.asarray(x, dtype=float))
    return float(out) if np.ndim(out) == 0 else out


def log_cover_density(y, x):
    """``log k(y, x)``; ``-inf`` for ``x <= 0``."""
    y = np.asarray(y, dtype=float)
    x = np.asarray(x, dtype=float)
    y, x = np.broadcast_arrays(y, x)
    out = np.full(x.shape, -np.inf)
    pos = x > 0
    if np.any(pos):
        xp, yp = x[pos], np.maximum(y[pos], 0.0)
        out[pos] = (np.log(2.0 * xp) - (xp - yp) ** 2
                    + np.log(bessel_i_scaled(0, 2.0 * xp * yp)))
    return float(out) if out.ndim == 0 else out


def cover_density(y, x):
    """``k(y, x) = 2x exp(-(x^2+y^2)) I_0(2xy)`` for ``y >= 0``, 0 for ``x <= 0``."""
    out = np.exp(log_cover_density(y, x))
    return float(out) if np.ndim(out) == 0 else out


_GL_CACHE: dict[int, tuple[np.ndarray, np.ndarray]] = {}


def _gauss_legendre(order: int):
    if order not in _GL_CACHE:
        _GL_CACHE[order] = np.polynomial.legendre.leggauss(order)
    return _GL_CACHE[order]


def _panel_integrals(y: np.ndarray, breaks: np.ndarray, order: int) -> np.ndarray:
    """Integrals of ``k(y_j, .)`` over ``[breaks[p], breaks[p+1]]``; shape (len(y), P)."""
    nodes, weights = _gauss_legendre(order)
    lo, hi = breaks[:-1], breaks[1:]
    half = 0.5 * (hi - lo)
    z = (0.5 * (hi + lo))[:, None] + half[:, None] * nodes[None, :]
    dens = np.exp(log_cover_density(y[:, None, None], z[None, :, :]))
    return (dens @ weights) * half[None, :]


def _refine(points: np.ndarray, top: float) -> np.ndarray:
    """Sorted break list: given points, subdivided to panels <= MAX_PANEL, up to ``top``."""
    pts = np.unique(np.concatenate([points, [top]]))
    gaps = np.diff(pts)
    pieces = np.maximum(1, np.ceil(gaps / MAX_PANEL - 1e-12).astype(int))
    out = [pts[:-1, None] + gaps[:, None] * (np.arange(pieces.max())[None, :] / pieces[:, None])]
    mask = np.arange(pieces.max())[None, :] < pieces[:, None]
    return np.concatenate([out[0][mask], [pts[-1]]])


def upper_integrals(y: float, lower, order: int = 16, check: bool = True) -> np.ndarray:
    """``int_{a}^{inf} k(y, z) dz`` for each lower limit ``a`` (absolute coordinate).

    Raises :class:`NumericError` when a lower-order rule disagrees by more
    than ``QUAD_ATOL``.
    """
    y = max(float(y), 0.0)
    a = np.atleast_1d(np.asarray(lower, dtype=float))
    out = np.ones_like(a)
    top = y + UPPER_REACH
    bottom = max(0.0, y - LOWER_REACH)
    live = a < top
    out[~live] = 0.0
    if not np.any(live):
        return out
    starts = np.clip(a[live], bottom, None)
    breaks = _refine(np.concatenate([starts, [bottom]]), top)
    yy = np.array([y])
    panel = _panel_integrals(yy, breaks, order)[0]
    suffix = np.cumsum(panel[::-1])[::-1]
    suffix = np.append(suffix, 0.0)
    idx = np.searchsorted(breaks, starts)
    out[live] = suffix[idx]
    if check:
        coarse = _panel_integrals(yy, breaks, max(4, order // 2))[0]
        err = float(np.max(np.abs(np.cumsum((panel - coarse)[::-1]))))
        if err > QUAD_ATOL:
            raise NumericError(
                f"cover tail quadrature did not converge at y={y}: "
                f"order-{order} vs order-{max(4, order // 2)} gap {err:.2e}"
            )
    return out


def cover_tail(y, t):
    """``G(y, t) = P(K(y) - y > t)`` in relative coordinates.

    For ``y >= 0`` this is 1 when ``t <= -y`` and otherwise the integral of
    the density from ``y + t``.  For ``y < 0`` the convention
    ``G(y, x - y) = G(0, x)`` applies, i.e. ``G(y, t) = G(0, t + y)``.
    """
    ya = np.asarray(y, dtype=float)
    ta = np.asarray(t, dtype=float)
    ya, ta = np.broadcast_arrays(ya, ta)
    absolute = ya + ta  # for y < 0 this is also the argument of G(0, .)
    yeff = np.maximum(ya, 0.0)
    out = np.empty(ya.shape)
    flat_y, flat_a, flat_out = yeff.ravel(), absolute.ravel(), out.reshape(-1)
    for yv in np.unique(flat_y):
        sel = flat_y == yv
        flat_out[sel] = upper_integrals(yv, flat_a[sel])
    out[absolute <= 0.0] = 1.0  # K(y) > 0 almost surely
    return float(out) if out.ndim == 0 else out


def cover_tail_matrix(ys, xs, order: int = 3, chunk: int = 48) -> np.ndarray:
    """``T[j, i] = P(K(y_j) > x_i)`` for absolute coordinates.

    ``xs`` must be increasing.  Rows for ``y_j < 0`` use ``y = 0``.  On a
    uniform grid the compiled path integrates each cell with an ``order``-point
    Gauss-Legendre rule on sub-panels no wider than 0.05; otherwise the
    quadrature breaks are the points ``xs`` themselves.  Either way every
    entry is a suffix sum of panel integrals, so rows are monotone.
    """
    ys = np.maximum(np.asarray(ys, dtype=float), 0.0)
    xs = np.asarray(xs, dtype=float)
    if ys.size == 0:
        return np.ones((0, xs.size))
    if xs.size >= 2:
        h = (xs[-1] - xs[0]) / (xs.size - 1)
        if h > 0 and np.allclose(np.diff(xs), h, rtol=1e-9, atol=1e-12):
            from ._cover_jit import tail_rows
            nodes, weights = _gauss_legendre(order)
            return tail_rows(np.ascontiguousarray(ys), float(xs[0]), float(h), xs.size,
                             nodes, weights)
    T = np.ones((ys.size, xs.size))
    top = float(ys.max()) + UPPER_REACH
    pos = (xs > 0) & (xs < top)
    T[:, xs >= top] = 0.0
    if not np.any(pos):
        return T
    breaks = _refine(np.concatenate([[0.0], xs[pos]]), top)
    idx = np.searchsorted(breaks, xs[pos])
    for s in range(0, ys.size, chunk):
        panel = _panel_integrals(ys[s:s + chunk], breaks, max(order, 6))
        suffix = np.cumsum(panel[:, ::-1], axis=1)[:, ::-1]
        T[s:s + chunk][:, pos] = suffix[:, idx]
    return T


def cover_shift_for(m: float) -> float:
    """Level shift ``L > 1`` with ``P(N(0,1/2) > -L) >= 1 - log(m)/100``."""
    from scipy.special import erfcinv

    eps0 = math.log(m) / 100.0
    # P(N(0,1/2) <= -L) = erfc(L)/2 <= eps0
    return max(1.0 + 1e-9, float(erfcinv(2.0 * eps0)))
