"""Compiled inner loops for cover-kernel tails on a uniform grid."""
from __future__ import annotations

import math

import numpy as np
from numba import config, njit, prange

# avoid probing an outdated TBB; the row loop is order-independent anyway
config.THREADING_LAYER_PRIORITY = ["omp", "workqueue", "tbb"]

_SERIES_LIMIT = 20.0
_RTOL = 1e-17
_REACH = 28.0
_SUB_PANEL = 0.05


@njit(cache=True)
def i0e_scalar(z):
    """``exp(-z) I_0(z)`` for ``z >= 0`` (same split as the vectorized version)."""
    if z <= _SERIES_LIMIT:
        q = 0.25 * z * z
        term = 1.0
        total = 1.0
        for j in range(1, 200):
            term = term * q / (j * j)
            total += term
            if term <= _RTOL * total:
                break
        return total * math.exp(-z)
    term = 1.0
    total = 1.0
    prev = math.inf
    for k in range(1, 60):
        term = -term * (0.0 - (2 * k - 1) ** 2) / (k * 8.0 * z)
        mag = abs(term)
        if mag >= prev or mag <= _RTOL * abs(total):
            break
        total += term
        prev = mag
    return total / math.sqrt(2.0 * math.pi * z)


@njit(cache=True)
def _density(y, x):
    if x <= 0.0:
        return 0.0
    d = x - y
    return 2.0 * x * math.exp(-d * d) * i0e_scalar(2.0 * x * y)


@njit(cache=True)
def _segment(y, a, b, nodes, weights):
    half = 0.5 * (b - a)
    mid = 0.5 * (b + a)
    s = 0.0
    for k in range(nodes.size):
        s += weights[k] * _density(y, mid + half * nodes[k])
    return s * half


@njit(parallel=True, cache=True)
def tail_rows(ys, x0, h, nx, nodes, weights):
    """``T[j, i] = P(K(y_j) > x0 + i h)``; ``y_j`` already clipped at 0."""
    ny = ys.size
    T = np.zeros((ny, nx))
    sub = max(1, int(math.ceil(h / _SUB_PANEL - 1e-12)))
    for j in prange(ny):
        y = ys[j]
        lo = y - _REACH
        hi = y + _REACH
        acc = 0.0
        for i in range(nx - 1, -1, -1):
            x = x0 + i * h
            if x <= 0.0:
                T[j, i] = 1.0
                continue
            if x >= hi:
                continue
            right = x + h
            if right > lo:
                if right > hi:
                    right = hi
                width = (right - x) / sub
                for s in range(sub):
                    acc += _segment(y, x + s * width, x + (s + 1) * width, nodes, weights)
            T[j, i] = min(acc, 1.0)
    return T
