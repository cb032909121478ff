import json
import math

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy.stats import norm

from tightwave.assumptions import (QTildeSpec, estimate_B, identity_qtilde, validate_kernel,
                                   validate_moment, validate_q, validate_qtilde, verify_B)
from tightwave.errors import DegenerateOffspringError, DomainError
from tightwave.kernels import (CoverTime, Gaussian, Pareto, TranslationInvariant,
                               shift_for_centering)
from tightwave.operators import QTransform

Q2 = QTransform.binary()


def test_q_growth_passes_at_m_18():
    rep = validate_q(Q2, 0.05, 1.8, 2.0, 1.0)
    assert rep["Q-growth"].passed and rep["Q-ratio"].passed
    # closed form margin: min over x <= 2 delta0 of (2 - x) - 1.8
    assert rep["Q-growth"].margin == pytest.approx(0.1, abs=1e-6)


def test_q_growth_fails_at_m_2():
    rep = validate_q(Q2, 0.05, 2.0, 2.0, 1.0)
    assert not rep["Q-growth"].passed
    assert rep["Q-growth"].witnesses


def test_moments():
    assert validate_moment([0, 0, 1.0], 2.0) == 4.0
    assert validate_moment(lambda k: 2.0 ** -k, 2.0) == pytest.approx(6.0, abs=1e-12)
    assert validate_moment({1: 0.5, 3: 0.5}, 2.0) == pytest.approx(5.0)
    with pytest.raises(DegenerateOffspringError):
        validate_moment([0, 1.0], 2.0)


def test_gaussian_kernel_passes_everything():
    k = TranslationInvariant(Gaussian(1.0))
    k = k.with_shift(shift_for_centering(k, 1.8))
    rep = validate_kernel(k, m=1.8)
    assert rep.passed, rep.failed()
    assert rep["(G2)"].constants["a"] > 0
    assert rep["(G2')"].constants["a_prime"] > 0


def test_gaussian_without_shift_fails_centering():
    rep = validate_kernel(TranslationInvariant(Gaussian(1.0)), m=1.8)
    assert not rep["(G3)"].passed


def test_pareto_fails_g2_with_witness():
    rep = validate_kernel(TranslationInvariant(Pareto(2.0)))
    g2 = rep["(G2)"]
    assert not g2.passed
    assert g2.witnesses and "ratio" in g2.witnesses[0]
    assert g2.witnesses[0]["ratio"] > 0.9


def test_cover_kernel_passes_at_m_4l():
    L = shift_for_centering(CoverTime(0.0), 1.8)
    k = CoverTime(L)
    rep = validate_kernel(k, M_candidates=[4 * L], m=1.8)
    assert rep["(G1)"].passed and rep["(G2)"].passed and rep["(G3)"].passed
    assert rep["(G2)"].constants["a"] > 0


def test_report_json_is_strict():
    rep = validate_kernel(TranslationInvariant(Pareto(2.0)))
    d = json.loads(rep.to_json())
    assert d["pass"] is False
    assert {r["condition"] for r in d["records"]} >= {"(G1)", "(G2)", "(G3)"}


def test_qtilde_binary_constants():
    spec = QTildeSpec(Q2)
    rep = validate_qtilde(spec)
    assert rep.passed, rep.failed()
    for d, c in spec.c_delta.items():
        assert c == pytest.approx(1.0 + d, abs=1e-9)
    for row in spec.g_delta.values():
        vals = list(row.values())
        assert all(v >= 0 for v in vals)
        assert all(b >= a - 1e-12 for a, b in zip(vals, vals[1:]))


def test_qtilde_identity_fails_t1():
    rep = validate_qtilde(QTildeSpec(identity_qtilde, name="identity"))
    assert "(T1)" in rep.failed()


def test_qtilde_must_fix_endpoints():
    with pytest.raises(DomainError):
        QTildeSpec(lambda x: 0.5 * np.asarray(x))


def test_estimate_b_gaussian():
    k = TranslationInvariant(Gaussian(1.0))
    B = estimate_B(k, Q2, 0.01, a=100.0)
    assert B >= -norm.ppf(0.01) - 1e-12
    assert B == pytest.approx(2.33, abs=0.011)
    assert estimate_B(k, Q2, 1.0) == 0.0
    with pytest.raises(DomainError):
        estimate_B(k, Q2, 0.0)


def test_verify_b_probe_family():
    k = TranslationInvariant(Gaussian(1.0))
    k = k.with_shift(shift_for_centering(k, 1.8))
    B = estimate_B(k, Q2, 0.05)
    rec = verify_B(k, Q2, 0.05, B)
    assert rec.passed
    assert math.isfinite(rec.margin)


def test_pass_reports_stable_under_refinement():
    coarse = validate_q(Q2, 0.05, 1.8, 2.0, 1.0, n_grid=400, n_pairs=40)
    fine = validate_q(Q2, 0.05, 1.8, 2.0, 1.0, n_grid=800, n_pairs=80)
    assert coarse.passed and fine.passed
    m0, m1 = coarse["Q-growth"].margin, fine["Q-growth"].margin
    assert abs(m1 - m0) <= 0.1 * abs(m0)

    k = TranslationInvariant(Gaussian(1.0))
    k = k.with_shift(shift_for_centering(k, 1.8))
    ys = np.linspace(-10.0, 30.0, 81)
    xs = np.linspace(0.0, 20.0, 81)
    a = validate_kernel(k, y_grid=ys, x_grid=xs, m=1.8)
    b = validate_kernel(k, y_grid=np.linspace(-10.0, 30.0, 161),
                        x_grid=np.linspace(0.0, 20.0, 161), m=1.8)
    assert a.passed and b.passed
    ca, cb = a["(G2)"].constants["a"], b["(G2)"].constants["a"]
    assert abs(ca - cb) <= 0.1 * ca


@settings(max_examples=15, deadline=None)
@given(st.sampled_from([Gaussian(0.7), Gaussian(2.0), Pareto(2.0), Pareto(3.5)]))
def test_translation_invariant_g1_always_passes(fam):
    rep = validate_kernel(TranslationInvariant(fam))
    assert rep["(G1)"].passed and not rep["(G1)"].witnesses


@settings(max_examples=25, deadline=None)
@given(st.lists(st.floats(0.0, 1.0), min_size=2, max_size=5).filter(lambda w: sum(w[1:]) > 0.05))
def test_offspring_growth_rate_rule(w):
    p = np.array([0.0] + w) / sum(w)
    q = QTransform(p.tolist())
    m = min(1 + (q.m1 - 1) / 2, 2.0)
    assume(m > 1.0 + 1e-6)
    rep = validate_q(q, 1e-3 * (m - 1), m, 2.0, 1.0, n_pairs=10)
    assert rep["Q-growth"].passed
