"""Scan-based certificates for the growth, kernel and regularity assumptions.

Every validator evaluates its condition on finite grids and returns a report
listing, per condition, a pass flag, the worst margin, witness points and the
constants it estimated.  These are numerical certificates, not proofs; each
record carries the grid it used so a failure can be reproduced.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .dist import TailCurve, eval_curve
from .errors import DegenerateOffspringError, DomainError
from .kernels.cover import normal_half_tail
from .kernels.families import CoverTime
from .operators import QTransform, apply_q, convolve

MONO_SLACK = 1e-10
RATIO_SLACK = 1e-12
A_CAP = 0.99
TAIL_NOISE = 1e-250
COVER_G2_NOTE = ("cover kernel scanned on y - nL >= M only; for smaller y the "
                 "y < 0 convention gives ratio 1 near y - nL = 0")
PROBE_NOTE = ("certificate restricted to a probe family of step and exponential-tail "
              "curves; the condition quantifies over all tail functions")


@dataclass
class ConditionRecord:
    condition: str
    passed: bool
    margin: float
    witnesses: list = field(default_factory=list)
    constants: dict = field(default_factory=dict)
    grid: dict = field(default_factory=dict)
    note: str = ""

    def to_dict(self) -> dict:
        return {
            "condition": self.condition,
            "pass": bool(self.passed),
            "margin": _num(self.margin),
            "witnesses": self.witnesses,
            "constants": {k: _num(v) for k, v in self.constants.items()},
            "grid": self.grid,
            "note": self.note,
        }


@dataclass
class AssumptionReport:
    records: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(r.passed for r in self.records)

    @property
    def constants(self) -> dict:
        out = {}
        for r in self.records:
            out.update(r.constants)
        return out

    def __getitem__(self, condition: str) -> ConditionRecord:
        for r in self.records:
            if r.condition == condition:
                return r
        raise KeyError(condition)

    def failed(self) -> list[str]:
        return [r.condition for r in self.records if not r.passed]

    def extend(self, other: "AssumptionReport") -> "AssumptionReport":
        self.records.extend(other.records)
        return self

    def to_json(self) -> str:
        return json.dumps({"pass": self.passed,
                           "records": [r.to_dict() for r in self.records]},
                          indent=2, allow_nan=False)


def _num(v):
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return v


def _grid_info(arr) -> dict:
    a = np.asarray(arr, dtype=float)
    return {"min": float(a.min()), "max": float(a.max()), "size": int(a.size)}


# -- Q --------------------------------------------------------------------

def validate_q(q: QTransform, delta0: float, m: float, c_star: float, theta_star: float,
               n_grid: int = 400, n_pairs: int = 40) -> AssumptionReport:
    """Lower growth bound ``Q(x) >= m x`` and the concavity bound on ``(0, 2 delta0]``."""
    if not 0 < delta0 < 0.5:
        raise DomainError("delta0 must lie in (0, 1/2)")
    if not 1 < m <= 2:
        raise DomainError("m must lie in (1, 2]")
    if not (c_star > 0 and theta_star > 0):
        raise DomainError("c* and theta* must be positive")
    xs = np.geomspace(1e-12, 2 * delta0, n_grid)
    margin = q(xs) / xs - m
    i = int(np.argmin(margin))
    growth = ConditionRecord(
        "Q-growth", bool(margin[i] >= 0.0), float(margin[i]),
        witnesses=[] if margin[i] >= 0 else [{"x": float(xs[i]), "Q(x)/x": float(margin[i] + m)}],
        constants={"m": m, "delta0": delta0},
        grid={"x": _grid_info(xs)},
    )
    worst, wit = math.inf, None
    x1s = xs[xs < 2 * delta0]
    for x1 in x1s:
        top = 2.0 * min(delta0, x1)
        if top <= x1:
            continue
        x2 = np.linspace(x1, top, n_pairs + 1)[1:]
        q1 = q(x1)
        rhs = q(x2) / q1 * (1.0 + c_star * q1 ** theta_star)
        rel = rhs / (x2 / x1) - 1.0
        j = int(np.argmin(rel))
        if rel[j] < worst:
            worst, wit = float(rel[j]), {"x1": float(x1), "x2": float(x2[j])}
    conc = ConditionRecord(
        "Q-ratio", bool(worst >= -RATIO_SLACK), worst,
        witnesses=[] if worst >= -RATIO_SLACK else [wit],
        constants={"c_star": c_star, "theta_star": theta_star},
        grid={"x1": _grid_info(x1s), "pairs_per_x1": n_pairs},
    )
    return AssumptionReport([growth, conc])


def _moment_terms(p):
    if callable(p):
        return None
    if isinstance(p, Mapping):
        items = {int(k): float(v) for k, v in p.items()}
        size = max(items) + 1 if items else 0
        arr = np.zeros(max(size, 2))
        for k, v in items.items():
            if k < 0:
                raise DomainError("offspring counts must be nonnegative")
            arr[k] = v
        return arr
    return np.asarray(p, dtype=float)


def validate_moment(p, theta: float, max_terms: int = 1_000_000) -> float:
    """``m_theta = sum_k k^theta p_k``.

    ``p`` is a sequence indexed by ``k`` (``p[0]`` must be 0), a mapping
    ``k -> p_k`` or a callable ``k -> p_k`` for ``k >= 1``.  A callable is
    summed until the remaining probability times ``k^theta`` falls below 1e-14.
    """
    if not 1 < theta <= 2:
        raise DomainError("theta must lie in (1, 2]")
    arr = _moment_terms(p)
    if arr is not None:
        if np.any(arr < 0) or abs(arr.sum() - 1.0) > 1e-12:
            raise DomainError("offspring law must be a probability vector")
        if arr[0] != 0.0:
            raise DegenerateOffspringError("p_0 must be zero")
        if arr[1] >= 1.0:
            raise DegenerateOffspringError("p_1 = 1 is degenerate")
        k = np.arange(arr.size, dtype=float)
        return float(np.dot(k ** theta, arr))
    total, mass = 0.0, 0.0
    for k in range(1, max_terms + 1):
        pk = float(p(k))
        if pk < 0:
            raise DomainError("negative offspring probability")
        if k == 1 and pk >= 1.0:
            raise DegenerateOffspringError("p_1 = 1 is degenerate")
        mass += pk
        total += k ** theta * pk
        if (1.0 - mass) * (k + 1) ** theta < 1e-14 and pk * k ** theta < 1e-14:
            if abs(mass - 1.0) > 1e-12:
                raise DomainError("offspring probabilities do not sum to 1")
            return total
    raise DomainError(f"moment series did not converge within {max_terms} terms")


# -- kernels --------------------------------------------------------------

def default_y_grid() -> np.ndarray:
    return np.linspace(-10.0, 30.0, 81)


def default_x_grid() -> np.ndarray:
    return np.unique(np.concatenate([np.linspace(0.0, 20.0, 81), np.geomspace(20.0, 1e4, 40)]))


def _tail_table(kernel, n, ys, xs):
    """``T[j, i] = G_n(y_j, x_i)``."""
    ys = np.asarray(ys, dtype=float)
    xs = np.asarray(xs, dtype=float)
    Y, X = np.meshgrid(ys, xs, indexing="ij")
    return np.asarray(kernel.tail(n, Y, X), dtype=float)


def _g2_rows(kernel, n, ys, M):
    """Rows entering the (G2) scan.

    For the cover kernel, where the y < 0 convention makes the ratio exactly
    1, only kernel coordinates ``y - nL >= M`` are scanned.
    """
    if isinstance(kernel, CoverTime):
        keep = ys - n * kernel.shift >= M
        if not np.any(keep):
            return np.array([n * kernel.shift + M])
        return ys[keep]
    return ys


def _decay_rate(kernel, n, ys, xs, M):
    """Largest ``a`` with ``G(y - M, x + M) <= e^{-aM} G(y, x)`` on the scan, and its witness."""
    base = _tail_table(kernel, n, ys, xs)
    moved = _tail_table(kernel, n, np.asarray(ys) - M, np.asarray(xs) + M)
    live = (base > TAIL_NOISE) | (moved > TAIL_NOISE)
    if not np.any(live):
        return math.inf, None
    with np.errstate(divide="ignore"):
        rate = np.where(base > 0, -(np.log(np.maximum(moved, 1e-320)) - np.log(np.where(base > 0, base, 1.0))) / M, -np.inf)
    rate = np.where(live, rate, np.inf)
    j, i = np.unravel_index(int(np.argmin(rate)), rate.shape)
    return float(rate[j, i]), {"y": float(ys[j]), "x": float(xs[i]), "M": float(M),
                               "ratio": float(moved[j, i] / base[j, i]) if base[j, i] > 0 else "inf"}


def validate_kernel(kernel, y_grid=None, x_grid=None, M_candidates=None, n: int = 0,
                    m: float = 1.8, a_floor: float = 0.01,
                    L: float | None = None) -> AssumptionReport:
    """Monotonicity (G1), exponential domination (G2, G2'), centering (G3)."""
    ys = np.sort(np.asarray(default_y_grid() if y_grid is None else y_grid, dtype=float))
    xs = np.sort(np.asarray(default_x_grid() if x_grid is None else x_grid, dtype=float))
    shift = float(getattr(kernel, "shift", 0.0)) if L is None else float(L)
    if M_candidates is None:
        M_candidates = sorted({max(1.0, 4 * shift), 2.0, 5.0, 10.0, 20.0})
    Ms = np.sort(np.asarray(M_candidates, dtype=float))
    if np.any(Ms <= 0) or not np.all(np.isfinite(xs)) or not np.all(np.isfinite(ys)):
        raise DomainError("grids must be finite and M candidates positive")
    report = AssumptionReport()

    # (G1) on absolute coordinates spanning the y grid
    xabs = np.linspace(ys.min() - 5.0, ys.max() + 25.0, 121)
    Y, X = np.meshgrid(ys, xabs, indexing="ij")
    inc = np.asarray(kernel.tail(n, Y, X - Y), dtype=float)  # G(y, x - y) vs y
    Yr, Xr = np.meshgrid(ys, xs[xs <= 50.0], indexing="ij")
    dec = np.asarray(kernel.tail(n, Yr, Xr), dtype=float)
    d_inc = np.diff(inc, axis=0)  # must be >= 0
    d_dec = np.diff(dec, axis=0)  # must be <= 0
    worst_inc, worst_dec = float(d_inc.min()), float(-d_dec.max())
    wits = []
    if worst_inc < -MONO_SLACK:
        j, i = np.unravel_index(int(np.argmin(d_inc)), d_inc.shape)
        wits.append({"kind": "G(y, x - y) decreases", "y": float(ys[j]), "x": float(xabs[i]),
                     "drop": -worst_inc})
    if worst_dec < -MONO_SLACK:
        j, i = np.unravel_index(int(np.argmax(d_dec)), d_dec.shape)
        wits.append({"kind": "G(y, x) increases", "y": float(ys[j]), "x": float(Xr[0, i]),
                     "rise": -worst_dec})
    report.records.append(ConditionRecord(
        "(G1)", not wits, min(worst_inc, worst_dec), wits,
        grid={"y": _grid_info(ys), "x_abs": _grid_info(xabs)}))

    # (G2): a(M) per candidate; (a, M0) from the tail of the candidate list
    x_pos = xs[xs >= 0]
    per_M = [_decay_rate(kernel, n, _g2_rows(kernel, n, ys, M), x_pos, M) for M in Ms]
    rates = np.array([r for r, _ in per_M])
    suffix_min = np.minimum.accumulate(rates[::-1])[::-1]
    ok = np.nonzero(suffix_min >= a_floor)[0]
    if ok.size:
        k = int(ok[0])
        a_est = min(A_CAP, float(suffix_min[k]))
        rec = ConditionRecord("(G2)", True, float(suffix_min[k]) - a_floor,
                              constants={"a": a_est, "M0": float(Ms[k])})
    else:
        k = int(np.argmin(rates))
        rec = ConditionRecord("(G2)", False, float(suffix_min[0]) - a_floor,
                              witnesses=[per_M[-1][1] or {}, per_M[k][1] or {}],
                              constants={"a": float(max(suffix_min[-1], 0.0)), "M0": float(Ms[-1])})
    rec.grid = {"y": _grid_info(ys), "x": _grid_info(x_pos), "M": [float(v) for v in Ms],
                "a_per_M": [float(v) for v in rates], "a_floor": a_floor}
    rec.witnesses = [w for w in rec.witnesses if w]
    if isinstance(kernel, CoverTime):
        rec.note = COVER_G2_NOTE
    report.records.append(rec)

    # (G2'): single M' >= 2L on x >= L; converts to (G2) with a = a'/3, M0 = 2M'
    x_far = xs[xs >= shift]
    cands = Ms[Ms >= 2 * shift] if np.any(Ms >= 2 * shift) else np.array([max(2 * shift, Ms.max())])
    best = None
    for Mp in cands:
        r, w = _decay_rate(kernel, n, _g2_rows(kernel, n, ys, Mp), x_far, Mp)
        if best is None or r > best[0]:
            best = (r, w, Mp)
    r, w, Mp = best
    ap = min(A_CAP, r)
    passed = bool(ap >= a_floor)
    report.records.append(ConditionRecord(
        "(G2')", passed, float(r) - a_floor, [] if passed else [w or {}],
        constants={"a_prime": ap, "M_prime": float(Mp), "L": shift,
                   "a_from_G2prime": ap / 3.0, "M0_from_G2prime": 2.0 * float(Mp)},
        grid={"y": _grid_info(ys), "x": _grid_info(x_far), "M_prime": [float(v) for v in cands]}))

    # (G3)
    eps0 = math.log(m) / 100.0
    at0 = np.asarray(kernel.tail(n, ys, np.zeros_like(ys)), dtype=float)
    j = int(np.argmin(at0))
    margin = float(at0[j] - (1.0 - eps0))
    report.records.append(ConditionRecord(
        "(G3)", margin >= 0, margin,
        [] if margin >= 0 else [{"y": float(ys[j]), "G(y,0)": float(at0[j])}],
        constants={"eps0": eps0, "m": m}, grid={"y": _grid_info(ys)}))
    return report


# -- Q tilde --------------------------------------------------------------

@dataclass
class QTildeSpec:
    """A candidate ``Q~`` plus the constants estimated for it."""

    qtilde: Callable = None
    c_delta: dict = field(default_factory=dict)
    g_delta: dict = field(default_factory=dict)
    name: str = "Q"

    def __post_init__(self):
        if self.qtilde is None:
            self.qtilde = QTransform.binary()
        probe = np.linspace(0.0, 1.0, 1001)
        vals = np.asarray(self.qtilde(probe), dtype=float)
        if abs(vals[0]) > 1e-15 or abs(vals[-1] - 1.0) > 1e-15:
            raise DomainError("Q~ must fix 0 and 1")
        if np.any(np.diff(vals) <= 0):
            raise DomainError("Q~ must be strictly increasing")

    def inverse(self, y):
        if hasattr(self.qtilde, "inverse"):
            return self.qtilde.inverse(y)
        y = np.asarray(y, dtype=float)
        lo, hi = np.zeros_like(y), np.ones_like(y)
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            below = np.asarray(self.qtilde(mid)) < y
            lo = np.where(below, mid, lo)
            hi = np.where(below, hi, mid)
        return 0.5 * (lo + hi)


def identity_qtilde(x):
    return np.asarray(x, dtype=float) * 1.0


def validate_qtilde(spec: QTildeSpec, delta_grid=(0.05, 0.1, 0.2, 0.4),
                    eps_grid=(1e-4, 1e-3, 1e-2, 0.05, 0.1),
                    n_x: int = 2000) -> AssumptionReport:
    """(T1) via ``c_delta = min Q~(x)/x`` and (T2) via the least multiplier ``g_delta(eps)``."""
    deltas = np.asarray(delta_grid, dtype=float)
    epss = np.sort(np.asarray(eps_grid, dtype=float))
    if np.any((deltas <= 0) | (deltas >= 1)) or np.any((epss <= 0) | (epss >= 1)):
        raise DomainError("delta and eps grids must lie inside (0, 1)")
    q = spec.qtilde
    report = AssumptionReport()
    cs, wits = {}, []
    for d in deltas:
        x = np.geomspace(1e-12, 1.0 - d, n_x)
        ratio = np.asarray(q(x)) / x
        i = int(np.argmin(ratio))
        cs[float(d)] = float(ratio[i])
        if ratio[i] <= 1.0:
            wits.append({"delta": float(d), "x": float(x[i]), "Q~(x)/x": float(ratio[i])})
    spec.c_delta = cs
    worst = min(cs.values()) - 1.0
    report.records.append(ConditionRecord(
        "(T1)", not wits, worst, wits[:3],
        constants={f"c_delta[{d}]": c for d, c in cs.items()},
        grid={"delta": deltas.tolist(), "x_points": n_x}))

    g_table, t2_wits = {}, []
    for d in deltas:
        row = []
        for e in epss:
            x = np.linspace(d, 1.0, n_x)
            qx = np.asarray(q(x))
            adm = qx <= (1.0 - d) / (1.0 + e)
            if not np.any(adm):
                row.append(0.0)
                continue
            xa = x[adm]
            target = (1.0 + e) * qx[adm]
            g = np.asarray(spec.inverse(target)) / xa - 1.0
            row.append(float(max(0.0, g.max())))
        g_table[float(d)] = dict(zip(epss.tolist(), row))
        r = np.array(row)
        bad = []
        if np.any(r < 0) or not np.all(np.isfinite(r)):
            bad.append("negative or non-finite")
        if np.any(np.diff(r) < -1e-12):
            bad.append("not nondecreasing in eps")
        if r[-1] > 0 and r[0] / r[-1] > math.sqrt(epss[0] / epss[-1]):
            bad.append("no decay as eps -> 0")
        if bad:
            t2_wits.append({"delta": float(d), "problems": bad, "g": row})
    spec.g_delta = g_table
    report.records.append(ConditionRecord(
        "(T2)", not t2_wits, 0.0 if not t2_wits else -1.0, t2_wits,
        constants={f"g_delta[{d}][{e}]": v for d, tab in g_table.items() for e, v in tab.items()},
        grid={"delta": deltas.tolist(), "eps": epss.tolist(), "x_points": n_x}))
    return report


# -- Assumption 2.4 -------------------------------------------------------

def _probe_curves(step: float, half_width: float) -> list[tuple[str, TailCurve]]:
    out = []
    for c in (-2.0, 0.0, 3.0):
        out.append((f"step@{c}", TailCurve.step_at(c, step, half_width)))
    for rate in (0.5, 1.0, 2.0):
        def fn(x, r=rate):
            return np.minimum(1.0, np.exp(-r * x))
        lo, hi = -half_width, half_width + 700.0 / rate
        hi = min(hi, 60.0 / rate + half_width)
        v = fn(lo + step * np.arange(int(round((hi - lo) / step)) + 1))
        v[-1] = 0.0
        out.append((f"exp(rate={rate})", TailCurve(lo, step, v, edge_tol=1e-12)))
    return out


def estimate_B(kernel, q: QTransform, eta1: float, a: float | None = None,
               M: float | None = None, step: float = 0.01) -> float:
    """Least ``B`` (grid multiple) meeting the kernel-tail and decay bounds for ``eta1``."""
    if not 0 < eta1 <= 1:
        raise DomainError(f"eta1 must lie in (0, 1], got {eta1}")
    if eta1 >= 1.0:
        return 0.0
    if a is None or (M is None and isinstance(kernel, CoverTime)):
        rep = validate_kernel(kernel)
        a = rep["(G2)"].constants.get("a", A_CAP) if a is None else a
        M = rep["(G2)"].constants.get("M0", 4 * kernel.shift) if M is None else M
    if not a > 0:
        raise DomainError("decay rate a must be positive")
    decay_B = 3.0 * math.log(1.0 / eta1) / a
    if isinstance(kernel, CoverTime):
        from scipy.special import erfcinv
        # P(N(0,1/2) <= -B) = erfc(B)/2 < eta1
        tail_B = float(erfcinv(2.0 * eta1)) if eta1 < 0.5 else 0.0
        unit = M if M and M > 0 else 1.0
        B = max(tail_B, decay_B)
        k = math.floor(B / unit) + 1
        while normal_half_tail(k * unit) >= eta1 or math.exp(-a * k * unit / 3) >= eta1:
            k += 1
        return float(k * unit)
    from scipy.optimize import brentq
    f = lambda b: float(kernel.cdf_rel(-b)) - eta1  # noqa: E731
    if f(0.0) < 0:
        tail_B = 0.0
    else:
        hi = 1.0
        while f(hi) >= 0:
            hi *= 2.0
            if hi > 1e8:
                raise DomainError("kernel left tail too heavy for this eta1")
        tail_B = brentq(f, 0.0, hi, xtol=1e-14)
    B = max(tail_B, decay_B)
    k = math.floor(B / step + 1e-9) + 1
    while float(kernel.cdf_rel(-k * step)) >= eta1 or math.exp(-a * k * step / 3) >= eta1:
        k += 1
    return float(k * step)


def verify_B(kernel, q: QTransform, eta1: float, B: float, qtilde=None, n: int = 0,
             step: float = 0.02, half_width: float = 20.0) -> ConditionRecord:
    """Empirical check of both sandwich bounds on the probe family."""
    qt = q if qtilde is None else qtilde
    worst, wit = math.inf, None
    for name, u in _probe_curves(step, half_width):
        tu = convolve(kernel, n, apply_q(q, u), half_width=max(150.0, 40.0 * kernel.scale))
        xs = np.arange(u.offset - 5.0, u.right + 5.0, step)
        t = np.asarray(eval_curve(tu, xs))
        lower = np.asarray(qt(eval_curve(u, xs + B))) - eta1
        upper = np.asarray(qt(eval_curve(u, xs - B))) + eta1
        m_lo, m_hi = t - lower, upper - t
        for label, mm in (("lower", m_lo), ("upper", m_hi)):
            i = int(np.argmin(mm))
            if mm[i] < worst:
                worst, wit = float(mm[i]), {"curve": name, "x": float(xs[i]), "bound": label}
    passed = worst >= -1e-9
    return ConditionRecord("sandwich", passed, worst, [] if passed else [wit],
                           constants={"B": B, "eta1": eta1}, grid={"step": step},
                           note=PROBE_NOTE)
