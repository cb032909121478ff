"""Regenerate ``frozen_oracles.json`` from the independent oracles (run by hand)."""
import json
import math
from fractions import Fraction
from pathlib import Path

from scipy.optimize import minimize_scalar

from oracles import (binary_tree_depth1, brw_max_cdf_dp, cover_time_pmf, expected_cover_time,
                     return_time_moments_bruteforce, torus_moves)


def bisect(f, lo, hi, iters=200):
    for _ in range(iters):
        mid = 0.5 * (lo + hi)
        if f(lo) * f(mid) <= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def erfc_series(x, terms=60):
    # erf(x) = 2/sqrt(pi) sum (-1)^n x^(2n+1) / (n! (2n+1))
    s = sum((-1) ** n * Fraction(x) ** (2 * n + 1) / (math.factorial(n) * (2 * n + 1))
            for n in range(terms))
    return 1.0 - 2.0 / math.sqrt(math.pi) * float(s)


def normal_cdf(x):
    return 0.5 * erfc_series(-x / math.sqrt(2))


def build():
    speed = minimize_scalar(lambda l: (math.log(2) + l * l / 2) / l, bounds=(0.1, 5),
                            method="bounded", options={"xatol": 1e-12}).fun
    return {
        "speed_binary_gaussian": speed,
        "sqrt_log2": bisect(lambda x: math.exp(-x * x) - 0.5, 0.0, 2.0),
        "normal_half_tail_1": 0.5 * erfc_series(1.0),
        "normal_q95": bisect(lambda a: normal_cdf(-a) - 0.05, 0.0, 5.0),
        "normal_q75": bisect(lambda a: normal_cdf(-a) - 0.25, 0.0, 5.0),
        "brw_cdf_n10": {str(k): str(v) for k, v in brw_max_cdf_dp(10).items()},
        "brw_cdf_n2": {str(k): str(v) for k, v in brw_max_cdf_dp(2).items()},
        "tree_depth1_mean": str(expected_cover_time(binary_tree_depth1(), 0)),
        "tree_depth1_p3": str(cover_time_pmf(binary_tree_depth1(), 0, 3)[3]),
        "torus_side2_mean": str(expected_cover_time(torus_moves(2), (0, 0))),
        "return_moments": {str(n): [str(x) for x in return_time_moments_bruteforce(n)]
                           for n in (1, 2, 3, 4)},
    }


if __name__ == "__main__":
    out = Path(__file__).with_name("frozen_oracles.json")
    out.write_text(json.dumps(build(), indent=1, sort_keys=True) + "\n")
