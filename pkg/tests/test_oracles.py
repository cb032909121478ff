"""Package results checked against frozen outputs of the independent oracles."""
import json
import math
from fractions import Fraction
from pathlib import Path

import numpy as np
import pytest

from oracles import brw_max_cdf_dp, brw_max_pmf_bruteforce
from tightwave import dist
from tightwave.dist import TailCurve
from tightwave.kernels import Gaussian, normal_half_tail
from tightwave.mc import return_time_moments

FROZEN = json.loads(Path(__file__).with_name("frozen_oracles.json").read_text())


def test_frozen_dp_still_reproduces():
    live = {str(k): str(v) for k, v in brw_max_cdf_dp(10).items()}
    assert live == FROZEN["brw_cdf_n10"]


@pytest.mark.parametrize("n", [1, 2, 3])
def test_dp_agrees_with_brute_force(n):
    pmf = brw_max_pmf_bruteforce(n)
    acc, cdf = Fraction(0), {}
    for x in sorted(pmf):
        acc += pmf[x]
        cdf[x] = acc
    assert cdf == brw_max_cdf_dp(n)


def test_hand_value_three_eighths():
    cdf = {int(k): Fraction(v) for k, v in FROZEN["brw_cdf_n2"].items()}
    assert 1 - cdf[0] == Fraction(3, 8)
    assert cdf[-2] == Fraction(1, 8)


def test_quantile_examples():
    g = Gaussian(1.0)
    u = TailCurve.from_function(g.tail, -40, 40, 0.001)
    assert dist.eval_curve(u, 0.0) == pytest.approx(0.5, abs=1e-12)
    e = TailCurve.from_function(lambda x: np.where(x < 0, 1.0, np.exp(-x * x)), -1, 10, 0.001)
    assert dist.median(e) == pytest.approx(FROZEN["sqrt_log2"], abs=1e-6)
    unif = TailCurve.from_function(lambda x: np.clip(1 - x, 0, 1), -1, 2, 0.01)
    assert dist.quantile(unif, 0.25) == pytest.approx(0.25, abs=1e-12)


def test_width_examples():
    h = 0.001
    u = TailCurve.from_function(Gaussian(1.0).tail, -40, 40, h)
    assert dist.width(u, 0.1) == pytest.approx(FROZEN["normal_q95"], abs=h)
    assert dist.width(u, 0.5) == pytest.approx(FROZEN["normal_q75"], abs=h)
    assert dist.width(TailCurve.step_at(0.0, h, 1.0), 0.1) <= 2 * h


def test_kolmogorov_examples():
    a = TailCurve.step_at(0.0, 0.5, 2.0)
    b = TailCurve.step_at(10.0, 0.5, 2.0)
    assert dist.kolmogorov(a, b) == 1.0
    two = TailCurve.from_pmf(-1, [0.5, 0.0, 0.5])
    pt = TailCurve.from_pmf(0, [1.0])
    assert dist.kolmogorov(pt, two) == pytest.approx(0.5)


def test_normal_half_tail_frozen():
    assert normal_half_tail(1.0) == pytest.approx(FROZEN["normal_half_tail_1"], rel=1e-12)


def test_speed_oracle_value():
    assert FROZEN["speed_binary_gaussian"] == pytest.approx(math.sqrt(2 * math.log(2)), abs=1e-9)


def test_return_moments_frozen():
    for n, (mean, var) in FROZEN["return_moments"].items():
        r = return_time_moments(int(n))
        assert r["mean"] == pytest.approx(float(Fraction(mean)), rel=1e-12)
        assert r["variance"] == pytest.approx(float(Fraction(var)), rel=1e-12)
        # reversibility: mean return time 2 * edges / deg(oo)
        assert r["mean"] == 2 ** (int(n) + 2) - 2
