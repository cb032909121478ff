"""The recursion ``u_{n+1} = T_n u_n`` and its building blocks.

``T_n u = G_n (x) Q(u)`` (move first, then branch) or ``Q(G_n (x) u)``
(branch first), where ``(G (x) u)(x) = -int G(y, x - y) du(y)``.

The measure ``-du`` of a curve on grid ``x_i = offset + i h`` is discretized
as point masses at the cell midpoints ``offset + (i + 1/2) h``: the drop
``u(x_i) - u(x_{i+1})`` of each cell, plus the mass left of the window as an
atom half a cell left of ``x_0`` and the mass right of the window half a cell
right of the last point.  In lattice mode the same masses sit exactly on the
lattice of the step law, so the recursion is exact.
"""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import dist
from .dist import CLIP_BUDGET, EDGE_TOL, TAIL_FLOOR, TRACE_LEVELS, TailCurve
from .errors import (DegenerateOffspringError, DomainError, TightwaveError,
                     WindowOverflowError)

# kernel mass below this, summed over a trimmed end, is dropped
KERNEL_CUT = 1e-30
MAX_KERNEL_CELLS = 4_000_000
DEFAULT_HALF_WIDTH_SCALES = 40.0

MOVE_FIRST = "move-first"
BRANCH_FIRST = "branch-first"


class QTransform:
    """Offspring transform ``Q(u) = 1 - sum_k p_k (1 - u)^k``.

    ``probs[k]`` is the probability of ``k`` offspring; ``probs[0]`` must be 0.
    Use :meth:`binary` for the special case ``Q(u) = 2u - u^2``.
    """

    def __init__(self, probs: Sequence[float] | None = None, theta: float = 2.0):
        if not 1 < theta <= 2:
            raise DomainError(f"theta must lie in (1, 2], got {theta}")
        self.theta = float(theta)
        if probs is None:
            self.probs = None
            self.m1 = 2.0
            self.m_theta = 2.0 ** self.theta
            return
        p = np.asarray(probs, dtype=float)
        if p.ndim != 1 or p.size < 2 or np.any(p < 0):
            raise DomainError("offspring probabilities must be a nonnegative vector")
        if abs(p.sum() - 1.0) > 1e-12:
            raise DomainError(f"offspring probabilities sum to {p.sum()!r}, not 1")
        if p[0] != 0.0:
            raise DegenerateOffspringError("p_0 must be zero (no extinction)")
        if p[1] >= 1.0:
            raise DegenerateOffspringError("p_1 = 1 gives a degenerate branching law")
        self.probs = p
        k = np.arange(p.size, dtype=float)
        self.m1 = float(np.dot(k, p))
        self.m_theta = float(np.dot(k ** self.theta, p))

    @classmethod
    def binary(cls, theta: float = 2.0) -> "QTransform":
        return cls(None, theta)

    @property
    def is_binary(self) -> bool:
        return self.probs is None

    def __call__(self, u):
        u = np.asarray(u, dtype=float)
        if self.probs is None:
            w = 1.0 - u
            out = np.where(u <= 0.5, u * (1.0 + w), 1.0 - w * w)
        else:
            with np.errstate(divide="ignore"):
                lg = np.log1p(-np.clip(u, 0.0, 1.0))
            k = np.nonzero(self.probs)[0]
            out = np.zeros_like(u)
            for kk in k:
                out = out + self.probs[kk] * -np.expm1(kk * lg)
        out = np.clip(out, 0.0, 1.0)
        return float(out) if out.ndim == 0 else out

    def inverse(self, y):
        """Numerical inverse on ``[0, 1]`` (closed form for the binary case)."""
        y = np.clip(np.asarray(y, dtype=float), 0.0, 1.0)
        if self.probs is None:
            out = y / (1.0 + np.sqrt(1.0 - y))
        else:
            lo, hi = np.zeros_like(y), np.ones_like(y)
            for _ in range(80):
                mid = 0.5 * (lo + hi)
                below = self(mid) < y
                lo = np.where(below, mid, lo)
                hi = np.where(below, hi, mid)
            out = 0.5 * (lo + hi)
        return float(out) if out.ndim == 0 else out

    def describe(self) -> dict:
        if self.probs is None:
            return {"type": "binary"}
        return {"type": "offspring", "p": [float(x) for x in self.probs]}

    def __repr__(self):
        if self.probs is None:
            return "QTransform.binary()"
        return f"QTransform({self.probs.tolist()!r})"


@dataclass(frozen=True)
class GridSpec:
    step: float = 0.01
    half_width: float | None = None  # None: 40 kernel scales
    edge_tol: float = EDGE_TOL
    clip_budget: float = CLIP_BUDGET
    lattice: bool = False

    def resolved_half_width(self, kernel) -> float:
        if self.half_width is not None:
            return float(self.half_width)
        return DEFAULT_HALF_WIDTH_SCALES * float(kernel.scale)


@dataclass(frozen=True)
class Diagnostics:
    levels: tuple = TRACE_LEVELS
    width_eps: float = 0.02
    lyapunov: object = None  # LyapunovParams or None


@dataclass(frozen=True)
class RecursionConfig:
    kernel: object
    q: QTransform
    mode: str = MOVE_FIRST
    grid: GridSpec = field(default_factory=GridSpec)
    iterations: int = 0
    diagnostics: Diagnostics = field(default_factory=Diagnostics)

    def __post_init__(self):
        if self.mode not in (MOVE_FIRST, BRANCH_FIRST):
            raise DomainError(f"unknown recursion mode {self.mode!r}")
        if self.iterations < 0:
            raise DomainError("iterations must be >= 0")
        hw = self.grid.resolved_half_width(self.kernel)
        if hw < 10.0 * float(self.kernel.scale):
            raise DomainError(
                f"window half-width {hw} is below 10 kernel scales ({self.kernel.scale})"
            )

    @property
    def half_width(self) -> float:
        return self.grid.resolved_half_width(self.kernel)

    def initial_curve(self) -> TailCurve:
        return TailCurve.step_at(0.0, self.grid.step, self.half_width,
                                 lattice=self.grid.lattice, edge_tol=self.grid.edge_tol)


@dataclass
class TraceRecord:
    n: int
    median: float
    quantiles: dict
    width: float
    lyapunov: float | None
    clipped_mass: float


# -- elementary operations -------------------------------------------------

def apply_q(q: QTransform, u: TailCurve) -> TailCurve:
    """Pointwise ``Q(u)``; grid and offset unchanged."""
    # rounding may break monotonicity at the 1e-16 level
    return u.with_values(np.minimum.accumulate(q(u.values)), clipped_mass=0.0)


def _cell_masses(u: TailCurve) -> np.ndarray:
    v = u.values
    m = np.concatenate([[1.0 - v[0]], v[:-1] - v[1:], [v[-1]]])
    return np.maximum(m, 0.0)


def kernel_weights(kernel, n: int, h: float):
    """Masses ``w_d = P(N in ((d - 1/2) h, (d + 1/2) h])`` and the first index ``d``.

    Ends carrying less than ``KERNEL_CUT`` of mass are trimmed.
    """
    fam_reach = float(kernel.family.reach) + abs(kernel.shift)
    cells = int(math.ceil(fam_reach / h)) + 2
    if 2 * cells > MAX_KERNEL_CELLS:
        raise WindowOverflowError(
            f"kernel {kernel.name} needs more than {MAX_KERNEL_CELLS} cells at step {h}"
        )
    d = np.arange(-cells, cells + 1)
    edges = (np.arange(-cells, cells + 2) - 0.5) * h
    tail = np.asarray(kernel.tail(n, 0.0, edges), dtype=float)
    cdf = np.asarray(kernel.cdf_rel(edges), dtype=float)
    right = edges[:-1] >= kernel.shift  # use whichever side is accurate
    w = np.where(right, tail[:-1] - tail[1:], cdf[1:] - cdf[:-1])
    w = np.maximum(w, 0.0)
    lo_cum = np.cumsum(w)
    hi_cum = np.cumsum(w[::-1])[::-1]
    keep = np.nonzero((lo_cum > KERNEL_CUT) & (hi_cum > KERNEL_CUT))[0]
    if keep.size == 0:
        # degenerate law concentrated in one cell
        keep = np.array([int(np.argmax(w))])
    i0, i1 = keep[0], keep[-1]
    return w[i0:i1 + 1], int(d[i0])


def _finish(raw_offset: float, h: float, raw: np.ndarray, like: TailCurve,
            half_width: float, clip_budget: float) -> TailCurve:
    """Clean the raw convolution and recentre it on its median."""
    raw = np.clip(raw, 0.0, 1.0)
    raw = np.minimum.accumulate(raw)
    raw[raw < TAIL_FLOOR] = 0.0
    # median index on the raw grid
    i = int(np.searchsorted(-raw, -0.5, side="left"))
    if i >= raw.size:
        raise WindowOverflowError("median escaped the convolution range")
    if like.lattice or i == 0:
        med_idx = float(i)
    else:
        drop = raw[i - 1] - raw[i]
        med_idx = (i - 1) + ((raw[i - 1] - 0.5) / drop if drop > 0 else 1.0)
    K = max(1, int(math.ceil(half_width / h - 1e-9)))
    c = int(round(med_idx))
    lo = c - K
    idx = np.arange(lo, c + K + 1)
    vals = np.where(idx < 0, 1.0, 0.0)
    inside = (idx >= 0) & (idx < raw.size)
    vals[inside] = raw[idx[inside]]
    clipped = (1.0 - vals[0]) + vals[-1]
    if clipped > clip_budget:
        raise WindowOverflowError(
            f"window clips mass {clipped:.3e} > budget {clip_budget:.1e}",
            clipped_mass=clipped,
        )
    if 1.0 - vals[0] > like.edge_tol:
        vals[0] = 1.0
    if vals[-1] > like.edge_tol:
        vals[-1] = 0.0
    return TailCurve(raw_offset + lo * h, h, vals, lattice=like.lattice,
                     edge_tol=like.edge_tol, clipped_mass=float(clipped))


def convolve(kernel, n: int, u: TailCurve, half_width: float | None = None,
             clip_budget: float = CLIP_BUDGET) -> TailCurve:
    """``(G_n (x) u)(x) = -int G_n(y, x - y) du(y)`` on the grid of ``u``.

    The result is recentred on its median with the given window half-width
    (default: the larger of 40 kernel scales and the input half-span).
    """
    h = u.step
    if half_width is None:
        half_width = max(DEFAULT_HALF_WIDTH_SCALES * float(kernel.scale),
                         0.5 * (u.right - u.offset))
    if kernel.translation_invariant:
        w, d_lo = kernel_weights(kernel, n, h)
        P = w.size - 1
        ext = np.concatenate([np.ones(P), u.values, np.zeros(P)])
        raw = np.convolve(ext, w, mode="valid")
        raw_offset = u.offset + d_lo * h
    else:
        m = _cell_masses(u)
        pos_idx = np.arange(-1, u.n)  # cell i sits at offset + (i + 1/2) h
        live = m > 0
        p = u.offset + (pos_idx[live] + 0.5) * h
        L = float(kernel.shift)
        left = float(np.min(p)) + L - 12.0
        right = float(max(np.max(p) + L, (n + 1) * L)) + 28.0
        k_lo = int(math.floor((left - u.offset) / h))
        k_hi = int(math.ceil((right - u.offset) / h))
        xs = u.offset + h * np.arange(k_lo, k_hi + 1)
        T = kernel.tail_matrix(n, p, xs)
        raw = m[live] @ T
        # mass left of the computed range moves right by construction
        raw_offset = u.offset + k_lo * h
    return _finish(raw_offset, h, raw, u, half_width, clip_budget)


def step(config: RecursionConfig, u: TailCurve, n: int) -> TailCurve:
    """One application of ``T_n`` in the configured order."""
    hw = config.half_width
    cb = config.grid.clip_budget
    if config.mode == MOVE_FIRST:
        return convolve(config.kernel, n, apply_q(config.q, u), hw, cb)
    out = convolve(config.kernel, n, u, hw, cb)
    return replace(apply_q(config.q, out), clipped_mass=out.clipped_mass)


def trace_record(n: int, u: TailCurve, diagnostics: Diagnostics) -> TraceRecord:
    from .lyapunov import lyap

    med = dist.median(u)
    qs = dist.quantile(u, np.array(diagnostics.levels))
    lv = None
    if diagnostics.lyapunov is not None:
        lv = lyap(u, diagnostics.lyapunov)
    return TraceRecord(
        n=n,
        median=med,
        quantiles={p: float(q - med) for p, q in zip(diagnostics.levels, qs)},
        width=dist.width(u, diagnostics.width_eps),
        lyapunov=lv,
        clipped_mass=float(u.clipped_mass),
    )


def iterate(config: RecursionConfig, u0: TailCurve | None = None,
            callback: Callable[[int, TailCurve], None] | None = None):
    """Apply ``T_0, T_1, ...`` ``config.iterations`` times.

    Returns ``(trace, final_curve)`` where the trace holds one record for the
    initial curve and one per iteration.
    """
    u = config.initial_curve() if u0 is None else u0
    trace = [trace_record(0, u, config.diagnostics)]
    if callback is not None:
        callback(0, u)
    for k in range(config.iterations):
        try:
            u = step(config, u, k)
            rec = trace_record(k + 1, u, config.diagnostics)
        except TightwaveError as exc:
            exc.iteration = k + 1
            exc.args = (f"iteration {k + 1}: {exc.args[0] if exc.args else exc}",)
            raise
        trace.append(rec)
        if callback is not None:
            callback(k + 1, u)
    return trace, u


def _level_name(p: float) -> str:
    return f"q{int(round(p * 100)):02d}"


def trace_to_csv(trace: Sequence[TraceRecord]) -> str:
    """CSV with columns n, median, q01..q99, width, lyapunov, clipped_mass."""
    levels = list(trace[0].quantiles) if trace else list(TRACE_LEVELS)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["n", "median"] + [_level_name(p) for p in levels]
               + ["width", "lyapunov", "clipped_mass"])
    for r in trace:
        lyv = "" if r.lyapunov is None else repr(float(r.lyapunov))
        w.writerow([r.n, repr(r.median)] + [repr(r.quantiles[p]) for p in levels]
                   + [repr(r.width), lyv, repr(r.clipped_mass)])
    return buf.getvalue()


def mean_increment(trace: Sequence[TraceRecord], start: int, stop: int) -> float:
    """Average median increment per step between iterations ``start`` and ``stop``."""
    by_n = {r.n: r.median for r in trace}
    return (by_n[stop] - by_n[start]) / (stop - start)
