"""Modified Bessel functions of the first kind, orders 0 and 1.

Power series for ``z <= 20``; Hankel asymptotic expansion of the scaled form
``exp(-z) I_nu(z)`` beyond.  Both paths are vectorized.
"""
from __future__ import annotations

import math

import numpy as np

from ..errors import DomainError

SERIES_LIMIT = 20.0
_SERIES_RTOL = 1e-17
_MAX_SERIES_TERMS = 200
_MAX_ASYMPTOTIC_TERMS = 60


def _check_order(order):
    if order not in (0, 1):
        raise DomainError(f"only orders 0 and 1 are supported, got {order!r}")


def _series(order: int, z: np.ndarray) -> np.ndarray:
    q = 0.25 * z * z
    term = np.ones_like(z) if order == 0 else 0.5 * z
    total = term.copy()
    for j in range(1, _MAX_SERIES_TERMS):
        term = term * q / (j * (j + order))
        total += term
        if np.all(term <= _SERIES_RTOL * total):
            break
    return total


def _asymptotic_scaled(order: int, z: np.ndarray) -> np.ndarray:
    mu = 4.0 * order * order
    term = np.ones_like(z)
    total = term.copy()
    prev = np.full_like(z, np.inf)
    active = np.ones(z.shape, dtype=bool)
    for k in range(1, _MAX_ASYMPTOTIC_TERMS):
        term = -term * (mu - (2 * k - 1) ** 2) / (k * 8.0 * z)
        mag = np.abs(term)
        # stop each entry at its smallest term (optimal truncation)
        active &= (mag < prev) & (mag > _SERIES_RTOL * np.abs(total))
        if not np.any(active):
            break
        total = np.where(active, total + term, total)
        prev = mag
    return total / np.sqrt(2.0 * math.pi * z)


def bessel_i_scaled(order: int, z):
    """``exp(-z) * I_order(z)`` for ``z >= 0``."""
    _check_order(order)
    za = np.asarray(z, dtype=float)
    if np.any(za < 0):
        raise DomainError("bessel_i is defined here for z >= 0 only")
    flat = np.atleast_1d(za).ravel()
    out = np.empty_like(flat)
    small = flat <= SERIES_LIMIT
    if np.any(small):
        zs = flat[small]
        out[small] = _series(order, zs) * np.exp(-zs)
    if np.any(~small):
        out[~small] = _asymptotic_scaled(order, flat[~small])
    out = out.reshape(np.shape(za))
    return float(out) if out.ndim == 0 else out


def bessel_i(order: int, z):
    """``I_order(z)``; overflows to ``inf`` past ``z ~ 713`` like ``exp``."""
    _check_order(order)
    za = np.asarray(z, dtype=float)
    if np.any(za < 0):
        raise DomainError("bessel_i is defined here for z >= 0 only")
    flat = np.atleast_1d(za).ravel()
    out = np.empty_like(flat)
    small = flat <= SERIES_LIMIT
    if np.any(small):
        out[small] = _series(order, flat[small])
    if np.any(~small):
        with np.errstate(over="ignore"):
            out[~small] = _asymptotic_scaled(order, flat[~small]) * np.exp(flat[~small])
    out = out.reshape(np.shape(za))
    return float(out) if out.ndim == 0 else out


def log_bessel_i0_scaled(z):
    """``log(exp(-z) I_0(z))``, finite for all ``z >= 0``."""
    return np.log(bessel_i_scaled(0, z))
