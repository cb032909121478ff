"""Distances between samples and tail curves, and the matching error bands."""
from __future__ import annotations

import math

import numpy as np

from ..dist import TailCurve, eval_curve
from ..errors import DomainError


def dkw_band(reps: int, alpha: float = 1e-3) -> float:
    """Half-width ``sqrt(log(2/alpha) / (2 reps))`` of the DKW confidence band."""
    if reps < 1 or not 0 < alpha < 1:
        raise DomainError("need reps >= 1 and alpha in (0, 1)")
    return math.sqrt(math.log(2.0 / alpha) / (2.0 * reps))


def binomial_halfwidth(p: float, reps: int, sigmas: float = 4.0) -> float:
    return sigmas * math.sqrt(max(p * (1.0 - p), 0.0) / reps)


def ks_vs_curve(samples, curve: TailCurve) -> float:
    """``sup_x |P_emp(X > x) - u(x)|`` over sample points and curve grid points.

    For continuous curves left limits of the empirical tail at sample points
    are also compared, so this is the exact Kolmogorov distance to the
    interpolated curve at every jump.
    """
    x = np.sort(np.asarray(samples, dtype=float))
    if x.size == 0:
        raise DomainError("no samples")
    pts = np.union1d(x, curve.grid)
    n = x.size
    tail_right = 1.0 - np.searchsorted(x, pts, side="right") / n   # P(X > t)
    u = np.asarray(eval_curve(curve, pts))
    d = np.max(np.abs(tail_right - u))
    if not curve.lattice:
        tail_left = 1.0 - np.searchsorted(x, pts, side="left") / n  # P(X >= t)
        d = max(d, float(np.max(np.abs(tail_left - u))))
    return float(d)


def ks_two_sample(a, b) -> float:
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    pts = np.union1d(a, b)
    fa = np.searchsorted(a, pts, side="right") / a.size
    fb = np.searchsorted(b, pts, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


def ks_vs_cdf(samples, cdf) -> float:
    """One-sample Kolmogorov distance to a continuous cdf."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = x.size
    f = np.asarray(cdf(x))
    i = np.arange(1, n + 1)
    return float(max(np.max(i / n - f), np.max(f - (i - 1) / n)))
