import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from oracles import (binary_tree_depth1, cover_time_pmf, expected_cover_time,
                     return_time_moments_bruteforce, torus_moves)
from tightwave.errors import DegenerateOffspringError, DomainError, ResourceError
from tightwave.kernels import Gaussian, TranslationInvariant, TwoPoint, Uniform
from tightwave.mc import (KAryTree, McConfig, OffspringLaw, SampleSummary, binomial_halfwidth,
                          check_sandwich, dkw_band, gamma_poisson_sample, ks_vs_cdf,
                          return_time_moments, simulate_beta_chain, simulate_brw_max,
                          simulate_cover_time, simulate_return_epochs, simulate_torus_cover,
                          substream)

STEP = TranslationInvariant(TwoPoint(0.5))


def within_4sigma(est, exact, stderr):
    return abs(est - exact) <= 4.0 * stderr


# -- seeding ---------------------------------------------------------------

@given(st.integers(0, 2 ** 64 - 1), st.integers(0, 6), st.integers(0, 10 ** 6))
def test_substream_is_pure(seed, tag, idx):
    a = substream(seed, tag, idx).random(3)
    b = substream(seed, tag, idx).random(3)
    assert np.array_equal(a, b)


@settings(max_examples=5, deadline=None)
@given(st.integers(0, 2 ** 32), st.sampled_from([2, 3, 8]))
def test_brw_bit_identical_across_workers(seed, workers):
    one = simulate_brw_max(OffspringLaw.binary(), STEP, 6, McConfig(3000, seed, 1))
    many = simulate_brw_max(OffspringLaw.binary(), STEP, 6, McConfig(3000, seed, workers))
    assert np.array_equal(one.values, many.values)


def test_cover_bit_identical_across_workers():
    t = KAryTree(5, extended=True)
    a = simulate_cover_time(t, McConfig(40, 3, 1))
    b = simulate_cover_time(t, McConfig(40, 3, 4))
    assert np.array_equal(a.values, b.values)
    assert np.array_equal(a.extras["R_n"].values, b.extras["R_n"].values)


def test_mc_config_checks():
    with pytest.raises(DomainError):
        McConfig(reps=0)
    with pytest.raises(DomainError):
        McConfig(master_seed=2 ** 64)


# -- summaries ---------------------------------------------------------------

samples = st.lists(st.floats(-1e6, 1e6), min_size=2, max_size=50)


@given(samples, samples, samples)
def test_merge_associative(a, b, c):
    A, B, C = SampleSummary(a), SampleSummary(b), SampleSummary(c)
    left = A.merge(B).merge(C)
    right = A.merge(B.merge(C))
    assert np.array_equal(left.values, right.values)
    assert left.count == len(a) + len(b) + len(c)


def test_dump_csv_header():
    s = SampleSummary([1.0, 2.0], {"R_n": SampleSummary([3.0, 4.0])})
    assert s.dump_csv("R_n").splitlines()[0] == "replica,value,R_n"


def test_dkw_band_value():
    assert dkw_band(10 ** 6, 1e-3) == pytest.approx(math.sqrt(math.log(2000) / 2e6))
    assert 0.0019 < dkw_band(10 ** 6, 1e-3) < 0.002


# -- BRW -------------------------------------------------------------------

def test_brw_one_step_symmetric():
    s = simulate_brw_max(OffspringLaw.binary(), STEP, 1, McConfig(20000, 1))
    assert within_4sigma(s.mean, 0.0, s.stderr)


def test_brw_hand_value():
    reps = 100_000
    s = simulate_brw_max(OffspringLaw.binary(), STEP, 2, McConfig(reps, 11))
    p = float(np.mean(s.values == 2.0))
    assert abs(p - 3 / 8) <= binomial_halfwidth(3 / 8, reps)


def test_brw_degenerate_step():
    zero = TranslationInvariant(Uniform(0.0, 0.0))
    s = simulate_brw_max(OffspringLaw.binary(), zero, 5, McConfig(100, 1))
    assert np.all(s.values == 0.0) and s.variance == 0.0


def test_brw_resource_cap_names_replica():
    with pytest.raises(ResourceError, match="replica"):
        simulate_brw_max(OffspringLaw([0, 0, 0, 0, 1.0]), STEP, 12, McConfig(2, 1), pop_cap=1000)


def test_offspring_law_rejects_degenerate():
    with pytest.raises(DegenerateOffspringError):
        OffspringLaw([0.0, 1.0])


# -- cover times -------------------------------------------------------------

def test_depth1_tree_matches_chain_oracle():
    exact_mean = expected_cover_time(binary_tree_depth1(), 0)
    p3 = cover_time_pmf(binary_tree_depth1(), 0, 3)[3]
    assert exact_mean == 5 and p3 == 0.5
    s = simulate_cover_time(KAryTree(1), McConfig(20000, 5))
    assert within_4sigma(s.mean, float(exact_mean), s.stderr)
    freq = float(np.mean(s.values == 3))
    assert abs(freq - 0.5) <= binomial_halfwidth(0.5, s.count)


def test_torus_side2_matches_chain_oracle():
    exact = float(expected_cover_time(torus_moves(2), (0, 0)))
    s = simulate_torus_cover(2, McConfig(20000, 6))
    assert within_4sigma(s.mean, exact, s.stderr)


def test_torus_side1_rejected():
    with pytest.raises(DomainError):
        simulate_torus_cover(1, McConfig(1, 1))


def test_sandwich_every_sample():
    s = simulate_cover_time(KAryTree(6, extended=True), McConfig(100, 2))
    assert s.extras["R_n"].count == 100
    # the simulator checks each sample; confirm the helper on a hand case too
    assert check_sandwich(10, 2, np.array([3, 4, 5]))
    assert not check_sandwich(6, 2, np.array([3, 4, 5]))


def test_return_time_solver_small_n_matches_full_chain():
    for n in (1, 2, 3, 4):
        mean, var = return_time_moments_bruteforce(n)
        r = return_time_moments(n)
        assert r["mean"] == pytest.approx(float(mean), rel=1e-12)
        assert r["variance"] == pytest.approx(float(var), rel=1e-12)
    assert return_time_moments(1)["mean"] == 6.0


def test_return_time_solver_limits():
    r20 = return_time_moments(20)
    assert abs(r20["normalized_mean"] - (2 - 2.0 ** -20)) <= 1e-9
    assert abs(r20["normalized_variance"] - 12) / 12 <= 0.02
    nv = [return_time_moments(n)["normalized_variance"] for n in range(5, 21)]
    assert all(b >= a for a, b in zip(nv, nv[1:]))


def test_return_epochs_mean():
    s = simulate_return_epochs(6, 4000, McConfig(1, 4))
    exact = 2 ** 8 - 2
    assert within_4sigma(s.mean, exact, s.stderr)


# -- beta chain ----------------------------------------------------------------

def test_kernel_sampler_at_zero():
    rng = substream(1, 6, 0)
    x = gamma_poisson_sample(np.zeros(200_000), rng)
    p = float(np.mean(x > 1.0))
    assert abs(p - math.exp(-1)) <= binomial_halfwidth(math.exp(-1), x.size)


@pytest.mark.parametrize("y", [0.5, 2.0, 7.0])
def test_kernel_sampler_moments(y):
    rng = substream(2, 6, int(y * 10))
    x2 = gamma_poisson_sample(np.full(200_000, y), rng) ** 2
    # E x^2 = 1 + y^2, Var x^2 = 1 + y^2 (Gamma) + y^2 (Poisson) = 1 + 2 y^2
    se = math.sqrt((1 + 2 * y * y) / x2.size)
    assert within_4sigma(x2.mean(), 1 + y * y, se)
    var_se = math.sqrt(2.0 / x2.size) * (1 + 2 * y * y) * 2
    assert within_4sigma(x2.var(), 1 + 2 * y * y, var_se)


def test_kernel_sampler_normal_limit():
    x = gamma_poisson_sample(np.full(100_000, 50.0), substream(3, 6, 0))
    assert ks_vs_cdf(x - 50.0, norm(0, math.sqrt(0.5)).cdf) <= 0.02


def test_beta_chain_small_n():
    assert np.all(simulate_beta_chain(0, McConfig(10, 1)).values == 0)
    s = simulate_beta_chain(1, McConfig(40000, 1))
    med = float(np.median(s.values))
    # sd of the median of e^{-x^2}: 1 / (2 f(m) sqrt(n)) with f(m) = 2 m e^{-m^2}
    m = math.sqrt(math.log(2))
    se = 1 / (2 * (2 * m * 0.5) * math.sqrt(s.count))
    assert within_4sigma(med, m, se)


def test_beta_chain_depth_cap():
    with pytest.raises(ResourceError):
        simulate_beta_chain(23, McConfig(1, 1))
