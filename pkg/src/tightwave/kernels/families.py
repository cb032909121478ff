"""Kernel specifications.

``tail(n, y, x)`` returns ``G_n(y, x) = P(N_{y,n} > x)`` where ``x`` is the
displacement relative to ``y``.  Translation-invariant kernels ignore ``y``;
the cover-time kernel depends on it.  Both carry a level shift ``L``:
``G^{(L)}(x) = G(x - L)`` and ``G_n^{(L)}(y, x) = G(y - nL, x - L)``.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import erfc

from ..errors import DomainError
from .cover import cover_tail, cover_tail_matrix


def _out(a):
    return float(a) if np.ndim(a) == 0 else a


@dataclass(frozen=True)
class Gaussian:
    sigma: float = 1.0

    def __post_init__(self):
        if not self.sigma > 0:
            raise DomainError("Gaussian sigma must be positive")

    def tail(self, r):
        return _out(0.5 * erfc(np.asarray(r, dtype=float) / (self.sigma * math.sqrt(2.0))))

    def cdf(self, r):
        return _out(0.5 * erfc(-np.asarray(r, dtype=float) / (self.sigma * math.sqrt(2.0))))

    def sample(self, rng, size):
        return rng.normal(0.0, self.sigma, size)

    @property
    def scale(self):
        return self.sigma

    @property
    def reach(self):
        # tail below 1e-300 beyond ~37 sigma
        return 38.0 * self.sigma


@dataclass(frozen=True)
class Exponential:
    rate: float = 1.0

    def __post_init__(self):
        if not self.rate > 0:
            raise DomainError("Exponential rate must be positive")

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        return _out(np.where(r < 0, 1.0, np.exp(-self.rate * np.maximum(r, 0.0))))

    def cdf(self, r):
        r = np.asarray(r, dtype=float)
        return _out(np.where(r < 0, 0.0, -np.expm1(-self.rate * np.maximum(r, 0.0))))

    def sample(self, rng, size):
        return rng.exponential(1.0 / self.rate, size)

    @property
    def scale(self):
        return 1.0 / self.rate

    @property
    def reach(self):
        return 700.0 / self.rate


@dataclass(frozen=True)
class Uniform:
    a: float = 0.0
    b: float = 1.0

    def __post_init__(self):
        if self.b < self.a:
            raise DomainError("Uniform needs a <= b")

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        if self.b == self.a:
            return _out((r < self.a).astype(float))
        return _out(np.clip((self.b - r) / (self.b - self.a), 0.0, 1.0))

    def cdf(self, r):
        return _out(1.0 - np.asarray(self.tail(r)))

    def sample(self, rng, size):
        if self.b == self.a:
            return np.full(size, float(self.a))
        return rng.uniform(self.a, self.b, size)

    @property
    def scale(self):
        return max(self.b - self.a, abs(self.a), abs(self.b)) or 1.0

    @property
    def reach(self):
        return max(abs(self.a), abs(self.b)) + 1.0


@dataclass(frozen=True)
class TwoPoint:
    """Steps of +1 with probability ``prob`` and -1 otherwise."""

    prob: float = 0.5

    def __post_init__(self):
        if not 0 <= self.prob <= 1:
            raise DomainError("TwoPoint prob must lie in [0, 1]")

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        return _out(np.where(r < -1, 1.0, np.where(r < 1, self.prob, 0.0)))

    def cdf(self, r):
        return _out(1.0 - np.asarray(self.tail(r)))

    def sample(self, rng, size):
        return np.where(rng.random(size) < self.prob, 1.0, -1.0)

    @property
    def scale(self):
        return 1.0

    @property
    def reach(self):
        return 2.0


@dataclass(frozen=True)
class Pareto:
    """Lomax-type heavy tail ``(1 + x)^(-alpha)`` on ``x >= 0``; a (G2) negative control."""

    alpha: float = 2.0

    def __post_init__(self):
        if not self.alpha > 0:
            raise DomainError("Pareto alpha must be positive")

    def tail(self, r):
        r = np.asarray(r, dtype=float)
        return _out(np.where(r < 0, 1.0, (1.0 + np.maximum(r, 0.0)) ** (-self.alpha)))

    def cdf(self, r):
        return _out(1.0 - np.asarray(self.tail(r)))

    def sample(self, rng, size):
        return (1.0 - rng.random(size)) ** (-1.0 / self.alpha) - 1.0

    @property
    def scale(self):
        return 1.0

    @property
    def reach(self):
        return 10.0 ** (300.0 / self.alpha)


@dataclass(frozen=True, eq=False)
class Table:
    """Tail tabulated at increasing points, linearly interpolated."""

    x: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if x.ndim != 1 or x.size < 2 or x.shape != v.shape:
            raise DomainError("Table needs matching x and tail columns with >= 2 rows")
        if np.any(np.diff(x) <= 0):
            raise DomainError("Table x column must be strictly increasing")
        if np.any(v < 0) or np.any(v > 1) or np.any(np.diff(v) > 0):
            raise DomainError("Table tail column must be nonincreasing within [0, 1]")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "values", v)

    @classmethod
    def from_csv(cls, text: str) -> "Table":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["x", "tail"]:
            raise DomainError("expected CSV header 'x,tail'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        return cls(data[:, 0], data[:, 1])

    def tail(self, r):
        return _out(np.interp(np.asarray(r, dtype=float), self.x, self.values, left=1.0, right=0.0))

    def cdf(self, r):
        return _out(1.0 - np.asarray(self.tail(r)))

    def sample(self, rng, size):
        # inverse of the interpolated cdf; atoms at the table ends are honoured
        u = rng.random(size)
        cdf = 1.0 - self.values
        lo_atom, hi_atom = cdf[0], cdf[-1]
        xs = np.interp(u, cdf, self.x)
        xs = np.where(u < lo_atom, self.x[0], xs)
        return np.where(u >= hi_atom, self.x[-1], xs)

    @property
    def scale(self):
        return max(0.5 * (self.x[-1] - self.x[0]), 1e-12)

    @property
    def reach(self):
        return max(abs(self.x[0]), abs(self.x[-1])) + 1.0


FAMILIES = {
    "gaussian": Gaussian,
    "exponential": Exponential,
    "uniform": Uniform,
    "two_point": TwoPoint,
    "pareto": Pareto,
    "table": Table,
}


@dataclass(frozen=True)
class TranslationInvariant:
    """``G_n(y, x) = G(x - L)`` for a step-law family."""

    family: object
    shift: float = 0.0

    translation_invariant = True

    def tail(self, n, y, x):
        return self.family.tail(np.asarray(x, dtype=float) - self.shift)

    def cdf_rel(self, r):
        return self.family.cdf(np.asarray(r, dtype=float) - self.shift)

    def sample(self, rng, size):
        return self.family.sample(rng, size) + self.shift

    @property
    def scale(self):
        return self.family.scale

    @property
    def name(self):
        return type(self.family).__name__

    def with_shift(self, shift):
        return TranslationInvariant(self.family, shift)


@dataclass(frozen=True)
class CoverTime:
    """Tree cover-time kernel ``G_n(y, x) = G(y - nL, x - L)``."""

    shift: float = 0.0

    translation_invariant = False
    name = "CoverTime"

    def tail(self, n, y, x):
        ya = np.asarray(y, dtype=float) - n * self.shift
        return cover_tail(ya, np.asarray(x, dtype=float) - self.shift)

    def tail_matrix(self, n, ys, xs, order=3):
        """``P(y_j + N_{y_j,n} > x_i)`` for absolute ``ys`` and ``xs``."""
        base = np.asarray(ys, dtype=float) - n * self.shift
        # absolute position y + N = (y - nL) + K(y - nL) - (y - nL) + L + nL
        return cover_tail_matrix(base, np.asarray(xs, dtype=float) - (n + 1) * self.shift, order=order)

    @property
    def scale(self):
        return 1.0

    def with_shift(self, shift):
        return CoverTime(shift)


def tail(kernel, n, y, x):
    """``G_n(y, x)`` for any kernel specification."""
    return kernel.tail(n, y, x)


def shift_for_centering(kernel, m: float) -> float:
    """Smallest level shift meeting ``G(-L) <= log(m)/100`` (Gaussian-type families)."""
    from scipy.optimize import brentq

    eps0 = math.log(m) / 100.0
    if isinstance(kernel, CoverTime):
        from .cover import cover_shift_for
        return cover_shift_for(m)
    fam = kernel.family

    def g(L):
        return float(fam.cdf(-L)) - eps0

    if g(0.0) <= 0:
        return 0.0
    hi = 1.0
    while g(hi) > 0:
        hi *= 2.0
        if hi > 1e6:
            raise DomainError("no finite centering shift for this family")
    return brentq(g, 0.0, hi, xtol=1e-12)
