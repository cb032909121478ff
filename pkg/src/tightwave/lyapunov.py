"""The functional ``ell(u; x)``, its supremum ``L(u)``, parameter selection and flatness.

``ell(u; x) = log(1/u(x)) + log_b(1 + eps1 - u(x - M)/u(x))_+`` with
``log 0 = -inf``.  ``L(u)`` is the supremum of ``ell`` over points where
``u(x) < delta0``; here the supremum is taken over grid points inside the
window with ``u(x) > lyap_floor`` so that the far right tail, where values
are rounding noise, does not dominate.
"""
from __future__ import annotations

import json
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .dist import TailCurve, eval_curve
from .errors import DomainError, InfeasibleParametersError

LYAP_FLOOR = 1e-12
DEFAULT_DELTA0 = 0.05
DEFAULT_GRID_STEP = 0.01
MIN_B_GAP = 1e-6


@dataclass(frozen=True)
class LyapunovParams:
    delta0: float
    eps1: float
    M: float
    b: float
    a: float = 1.0
    M0: float = 1.0
    kappa: float = 0.0
    m: float = 2.0
    eps0: float = float("nan")
    theta_star: float = float("inf")
    C1: float | None = None

    def __post_init__(self):
        if not 0 < self.delta0 < 1:
            raise DomainError("delta0 must lie in (0, 1)")
        if not self.eps1 > 0:
            raise DomainError("eps1 must be positive")
        if not self.M > 0:
            raise DomainError("M must be positive")
        if not self.b > 1:
            raise DomainError("b must exceed 1")
        if math.isnan(self.eps0):
            object.__setattr__(self, "eps0", math.log(self.m) / 100.0)

    def violations(self) -> list[str]:
        """Names of the parameter constraints that fail (empty when all hold)."""
        out = []
        lm, lb = math.log(self.m), math.log(self.b)
        if not 1 < self.m <= 2:
            out.append("m in (1, 2]")
        if abs(self.eps0 - lm / 100.0) > 1e-15:
            out.append("eps0 = log(m)/100")
        if not self.eps1 < lm / 100.0:
            out.append("eps1 < log(m)/100")
        if not (self.a * self.M > 100 and self.M > 2 * self.M0):
            out.append("aM > 100 and M > 2 M0")
        if not 1 < self.b < math.exp(self.theta_star):
            out.append("1 < b < exp(theta*)")
        if not 0 < self.kappa < 1:
            out.append("kappa in (0, 1)")
        out.extend(_bc_violations(self.a, self.M, self.b, self.m, self.eps1, self.kappa))
        return out

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text: str) -> "LyapunovParams":
        d = json.loads(text)
        return cls(**d)


def _bc_violations(a, M, b, m, eps1, kappa) -> list[str]:
    lm, lb = math.log(m), math.log(b)
    out = []
    if not lb * lm / 20.0 <= kappa:
        out.append("kappa: (log b)(log m)/20 <= kappa")
    if not a / (8.0 * lb) > 6.0 * eps1 + 6.0 * lm / (100.0 * M):
        out.append("drift: a/(8 log b) > 6 eps1 + 6 log(m)/(100 M)")
    if not a * M / 8.0 > -math.log(lb * lm / 20.0):
        out.append("mass: aM/8 > -log((log b)(log m)/20)")
    return out


def ell_value(ux: float, ux_minus_m: float, eps1: float, b: float) -> float:
    """``ell`` from the two tail values ``u(x)`` and ``u(x - M)``."""
    if ux <= 0.0:
        return -math.inf
    arg = 1.0 + eps1 - ux_minus_m / ux
    if arg <= 0.0:
        return -math.inf
    return math.log(1.0 / ux) + math.log(arg) / math.log(b)


def snapped_shift(u: TailCurve, M: float) -> float:
    """``M`` rounded to the nearest multiple of the grid step (at least one step)."""
    return max(1, round(M / u.step)) * u.step


def ell(u: TailCurve, x: float, params: LyapunovParams) -> float:
    M = snapped_shift(u, params.M)
    return ell_value(float(eval_curve(u, x)), float(eval_curve(u, x - M)), params.eps1, params.b)


def ell_profile(u: TailCurve, params: LyapunovParams,
                lyap_floor: float = LYAP_FLOOR) -> tuple[np.ndarray, np.ndarray]:
    """Grid points in the sup domain and the values of ``ell`` there."""
    v = u.values
    sel = np.nonzero((v > lyap_floor) & (v < params.delta0))[0]
    if sel.size == 0:
        return u.grid[sel], np.empty(0)
    k = max(1, int(round(params.M / u.step)))
    j = sel - k
    # left of the window u = 1
    back = np.where(j >= 0, v[np.clip(j, 0, None)], 1.0)
    ux = v[sel]
    arg = 1.0 + params.eps1 - back / ux
    with np.errstate(divide="ignore"):
        second = np.where(arg > 0, np.log(np.maximum(arg, 0.0)) / math.log(params.b), -np.inf)
    return u.grid[sel], -np.log(ux) + second


def lyap(u: TailCurve, params: LyapunovParams, lyap_floor: float = LYAP_FLOOR) -> float:
    """``L(u)``: supremum of ``ell`` over the sup domain, ``-inf`` when empty."""
    _, vals = ell_profile(u, params, lyap_floor)
    if vals.size == 0:
        return -math.inf
    return float(np.max(vals))


def select_params(a: float, M0: float, m: float, theta_star: float,
                  delta0: float = DEFAULT_DELTA0,
                  grid_step: float = DEFAULT_GRID_STEP) -> LyapunovParams:
    """Deterministic parameter choice meeting every constraint.

    ``M = max(101/a, 2 M0 + 1)`` rounded up to a multiple of ``grid_step``,
    ``eps1 = log(m)/200``, ``kappa = (log b)(log m)/20``; ``b`` is halved
    towards 1 (in ``b - 1``) from ``min(e^theta*, 2)``.
    """
    if not a > 0:
        raise InfeasibleParametersError("a must be positive", constraint="a > 0")
    if not M0 > 0:
        raise InfeasibleParametersError("M0 must be positive", constraint="M0 > 0")
    if not 1 < m <= 2:
        raise DomainError(f"m must lie in (1, 2], got {m}")
    if not theta_star > 0:
        raise InfeasibleParametersError("theta* must be positive", constraint="theta* > 0")
    raw_M = max(101.0 / a, 2.0 * M0 + 1.0)
    M = math.ceil(raw_M / grid_step - 1e-9) * grid_step
    lm = math.log(m)
    eps1 = lm / 200.0
    b_top = math.exp(theta_star)
    b0 = min(b_top, 2.0)
    gap = b0 - 1.0
    last: list[str] = []
    while gap >= MIN_B_GAP:
        b = 1.0 + gap
        gap *= 0.5
        if b >= b_top:
            continue
        kappa = lm * math.log(b) / 20.0
        last = _bc_violations(a, M, b, m, eps1, kappa)
        if not last:
            p = LyapunovParams(delta0=delta0, eps1=eps1, M=M, b=b, a=a, M0=M0,
                               kappa=kappa, m=m, eps0=lm / 100.0, theta_star=theta_star)
            bad = p.violations()
            if bad:  # self-check; should not happen
                raise InfeasibleParametersError(f"selected parameters violate {bad[0]}",
                                                constraint=bad[0])
            return p
    name = last[0] if last else "1 < b < exp(theta*)"
    raise InfeasibleParametersError(f"no feasible b: {name} fails down to b - 1 < {MIN_B_GAP}",
                                    constraint=name)


def flatness_check(u: TailCurve, delta1: float, M: float, eps1: float,
                   lyap_floor: float = LYAP_FLOOR) -> list[float]:
    """Grid points with ``lyap_floor < u(x) <= delta1`` and ``u(x - M) < (1 + eps1/2) u(x)``."""
    v = u.values
    sel = np.nonzero((v > lyap_floor) & (v <= delta1))[0]
    k = max(1, int(round(M / u.step)))
    j = sel - k
    back = np.where(j >= 0, v[np.clip(j, 0, None)], 1.0)
    bad = sel[back < (1.0 + 0.5 * eps1) * v[sel]]
    return [float(x) for x in u.grid[bad]]


def default_delta1(c0: float) -> float:
    """``e^{-C0 - 5}`` with ``C0`` the observed supremum of ``L``."""
    return math.exp(-c0 - 5.0)
