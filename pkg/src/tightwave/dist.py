"""Discretized tail functions and their diagnostics.

A :class:`TailCurve` stores ``u(x) = P(X > x)`` on a uniform grid
``offset + i * step``.  Outside the window the curve is 1 to the left and 0 to
the right.  Two read modes exist:

* continuous (default): piecewise-linear interpolation between grid values;
* lattice: right-continuous step function, exact for lattice-valued laws
  whose lattice coincides with the grid.
"""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .errors import DomainError, InvalidCurveError, WindowOverflowError

EDGE_TOL = 1e-12
CLIP_BUDGET = 1e-10
TAIL_FLOOR = 1e-300
TRACE_LEVELS = (0.01, 0.05, 0.25, 0.5, 0.75, 0.95, 0.99)

# slack used when snapping real coordinates onto grid indices
_INDEX_SLACK = 1e-9


@dataclass(frozen=True, eq=False)
class TailCurve:
    """Nonincreasing tail function on a uniform window.

    Parameters
    ----------
    offset : float
        Absolute coordinate of ``values[0]``.
    step : float
        Grid pitch ``h > 0``.
    values : array_like
        Tail values, nonincreasing, in ``[0, 1]``.
    lattice : bool
        Read as a right-continuous step function instead of interpolating.
    edge_tol : float
        Required closeness of the first value to 1 and last value to 0.
    clipped_mass : float
        Mass discarded when this curve was produced by a window change.
    """

    offset: float
    step: float
    values: np.ndarray
    lattice: bool = False
    edge_tol: float = EDGE_TOL
    clipped_mass: float = 0.0

    def __post_init__(self):
        v = np.array(self.values, dtype=float)
        v[v < TAIL_FLOOR] = 0.0
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "offset", float(self.offset))
        object.__setattr__(self, "step", float(self.step))
        if not (self.step > 0 and math.isfinite(self.step)):
            raise InvalidCurveError(f"grid step must be positive, got {self.step}")
        if not math.isfinite(self.offset):
            raise InvalidCurveError("offset must be finite")
        if v.ndim != 1 or v.size < 2:
            raise InvalidCurveError("a tail curve needs at least two grid values")
        if not np.all(np.isfinite(v)) or v.min() < 0.0 or v.max() > 1.0:
            raise InvalidCurveError("tail values must lie in [0, 1]")
        if np.any(np.diff(v) > 0.0):
            i = int(np.argmax(np.diff(v) > 0.0))
            raise InvalidCurveError(f"tail values increase at index {i}")
        if v[0] < 1.0 - self.edge_tol or v[-1] > self.edge_tol:
            raise InvalidCurveError(
                f"window misses mass: left value {v[0]!r}, right value {v[-1]!r}"
            )

    # -- construction -----------------------------------------------------

    @classmethod
    def from_function(cls, fn, lo: float, hi: float, step: float, **kw) -> "TailCurve":
        """Sample a vectorized tail function on ``[lo, hi]``."""
        n = int(math.floor((hi - lo) / step + _INDEX_SLACK)) + 1
        x = lo + step * np.arange(n)
        return cls(lo, step, np.asarray(fn(x), dtype=float), **kw)

    @classmethod
    def step_at(cls, a: float = 0.0, step: float = 0.01, half_width: float = 1.0,
                **kw) -> "TailCurve":
        """The tail ``1_{x < a}`` of a point mass at ``a``.

        The grid contains ``a`` itself, so in lattice mode the curve is exact.
        """
        k = max(1, int(math.ceil(half_width / step - _INDEX_SLACK)))
        x = a + step * np.arange(-k, k + 1)
        return cls(a - k * step, step, (x < a - 0.5 * step).astype(float), **kw)

    @classmethod
    def from_pmf(cls, support_lo: int, pmf: Sequence[float], pad: int = 2) -> "TailCurve":
        """Lattice curve (unit step) for an integer-valued law.

        ``pmf[j]`` is ``P(X = support_lo + j)``.
        """
        p = np.asarray(pmf, dtype=float)
        tail = 1.0 - np.cumsum(p)  # P(X > support_lo + j)
        tail = np.clip(tail, 0.0, 1.0)
        vals = np.concatenate([np.ones(pad), tail, np.zeros(pad)])
        vals = np.minimum.accumulate(vals)
        return cls(support_lo - pad, 1.0, vals, lattice=True)

    @property
    def n(self) -> int:
        return self.values.size

    @property
    def grid(self) -> np.ndarray:
        return self.offset + self.step * np.arange(self.values.size)

    @property
    def right(self) -> float:
        return self.offset + self.step * (self.values.size - 1)

    def with_values(self, values, **changes) -> "TailCurve":
        return replace(self, values=values, **changes)

    # -- serialization ----------------------------------------------------

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "tail"])
        for x, v in zip(self.grid, self.values):
            w.writerow([repr(float(x)), repr(float(v))])
        return buf.getvalue()

    @classmethod
    def from_csv(cls, text: str, **kw) -> "TailCurve":
        rows = list(csv.reader(io.StringIO(text)))
        if not rows or [c.strip() for c in rows[0]] != ["x", "tail"]:
            raise InvalidCurveError("expected CSV header 'x,tail'")
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
        x, v = data[:, 0], data[:, 1]
        if x.size < 2:
            raise InvalidCurveError("CSV curve needs at least two rows")
        h = (x[-1] - x[0]) / (x.size - 1)
        if not np.allclose(np.diff(x), h, rtol=1e-9, atol=1e-12):
            raise InvalidCurveError("CSV grid is not uniform")
        return cls(x[0], h, v, **kw)

    def to_json(self) -> str:
        return json.dumps({
            "offset": self.offset,
            "step": self.step,
            "lattice": self.lattice,
            "edge_tol": self.edge_tol,
            "values": [float(v) for v in self.values],
        })

    @classmethod
    def from_json(cls, text: str) -> "TailCurve":
        d = json.loads(text)
        return cls(d["offset"], d["step"], np.array(d["values"], dtype=float),
                   lattice=bool(d.get("lattice", False)),
                   edge_tol=float(d.get("edge_tol", EDGE_TOL)))


# -- pointwise reads -------------------------------------------------------

def eval_curve(curve: TailCurve, x):
    """Evaluate the tail at ``x`` (scalar or array)."""
    xa = np.asarray(x, dtype=float)
    if curve.lattice:
        idx = np.floor((xa - curve.offset) / curve.step + _INDEX_SLACK).astype(np.int64)
        inside = (idx >= 0) & (idx < curve.n)
        out = np.where(idx < 0, 1.0, 0.0)
        out = np.where(inside, curve.values[np.clip(idx, 0, curve.n - 1)], out)
    else:
        out = np.interp(xa, curve.grid, curve.values, left=1.0, right=0.0)
    return float(out) if np.ndim(out) == 0 else out


def quantile(curve: TailCurve, p):
    """Generalized inverse ``inf{x : 1 - u(x) >= p}``; ``p = 0.5`` is the median."""
    pa = np.atleast_1d(np.asarray(p, dtype=float))
    if np.any(~((pa > 0) & (pa < 1))):
        raise DomainError(f"quantile level must lie in (0, 1), got {p!r}")
    v = curve.values
    target = 1.0 - pa
    # first index with v[i] <= target
    i = np.searchsorted(-v, -target, side="left")
    if np.any(i >= v.size):
        raise WindowOverflowError("quantile lies right of the window")
    x = curve.offset + curve.step * i.astype(float)
    if not curve.lattice:
        j = i - 1
        mid = j >= 0
        if np.any(mid):
            jj = j[mid]
            drop = v[jj] - v[jj + 1]
            frac = np.where(drop > 0, (v[jj] - target[mid]) / np.where(drop > 0, drop, 1.0), 1.0)
            x[mid] = curve.offset + curve.step * (jj + frac)
    return float(x[0]) if np.ndim(p) == 0 else x


def median(curve: TailCurve) -> float:
    return quantile(curve, 0.5)


def shift(curve: TailCurve, c: float) -> TailCurve:
    """Translate: the result at ``x + c`` equals the input at ``x``."""
    return replace(curve, offset=curve.offset + c, clipped_mass=0.0)


def center(curve: TailCurve) -> TailCurve:
    """Translate so that the median sits at 0."""
    return shift(curve, -median(curve))


def width(curve: TailCurve, eps: float) -> float:
    """Smallest grid ``A >= 0`` with ``u_c(-A) - u_c(A) > 1 - eps`` for the centered curve."""
    if not 0 < eps < 1:
        raise DomainError(f"eps must lie in (0, 1), got {eps!r}")
    c = center(curve)
    reach = max(abs(c.offset), abs(c.right))
    k = np.arange(int(math.ceil(reach / c.step)) + 2)
    a = k * c.step
    spread = eval_curve(c, -a) - eval_curve(c, a)
    ok = np.nonzero(spread > 1.0 - eps)[0]
    if ok.size == 0:
        raise WindowOverflowError(f"window holds less than 1 - {eps} of the mass")
    return float(a[ok[0]])


def kolmogorov(a: TailCurve, b: TailCurve) -> float:
    """Sup-distance between two curves over the union of their grids."""
    pts = np.union1d(a.grid, b.grid)
    return float(np.max(np.abs(eval_curve(a, pts) - eval_curve(b, pts))))


def regrid(curve: TailCurve, new_offset: float, new_n: int, new_step: float | None = None,
           clip_budget: float = CLIP_BUDGET) -> TailCurve:
    """Resample onto ``new_offset + i * new_step``, ``i < new_n``.

    The clipped mass ``(1 - u(left edge)) + u(right edge)`` is recorded on the
    result; edges violating the edge tolerance are clamped to 1 and 0.
    """
    h = curve.step if new_step is None else float(new_step)
    if new_n < 2:
        raise DomainError("a regridded curve needs at least two points")
    x = new_offset + h * np.arange(new_n)
    v = np.asarray(eval_curve(curve, x), dtype=float)
    clipped = (1.0 - v[0]) + v[-1]
    if clipped > clip_budget:
        raise WindowOverflowError(
            f"regrid clips mass {clipped:.3e} > budget {clip_budget:.1e}",
            clipped_mass=clipped,
        )
    if 1.0 - v[0] > curve.edge_tol:
        v[0] = 1.0
    if v[-1] > curve.edge_tol:
        v[-1] = 0.0
    return TailCurve(new_offset, h, v, lattice=curve.lattice, edge_tol=curve.edge_tol,
                     clipped_mass=float(clipped))


def pmf_on_grid(curve: TailCurve) -> np.ndarray:
    """Point masses ``P(X = x_i)`` of a lattice curve, including the left edge atom."""
    v = curve.values
    return np.concatenate([[1.0 - v[0]], v[:-1] - v[1:]])


def summarize_levels(curve: TailCurve, levels: Iterable[float] = TRACE_LEVELS) -> dict:
    lv = list(levels)
    return dict(zip(lv, (float(q) for q in quantile(curve, np.array(lv)))))
