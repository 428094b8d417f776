import cmath
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

import oracles as o
from alsieve import sieve_checks as sc
from alsieve import bilinear as bl
from alsieve.weights import QuadratureError


def _lsi_brute(a, Q, M=0):
    N = len(a)
    out = []
    for q in range(1, Q + 1):
        for i in range(N):
            for j in range(N):
                ps = o.primitive_sum(q, M + i + 1, M + j + 1)
                if ps:
                    out.append(q / o.phi(q) * (a[i] * np.conj(a[j])).real * ps)
    return math.fsum(out)


@pytest.mark.parametrize("M", [0, 7, 1000])
def test_multiplicative_lhs_matches_divisor_formula(M):
    a = np.random.default_rng(M).standard_normal(12) + 0.5j
    r = sc.lsi_shifted(a, 9, M)
    assert r.lhs == pytest.approx(_lsi_brute(a, 9, M), rel=1e-12)
    assert r.rhs == pytest.approx((81 + 12) * float(np.sum(np.abs(a) ** 2)), rel=1e-14)
    assert r.config == {"Q": 9, "N": 12, "M": M}


def test_spike_gives_weighted_primitive_count():
    a = np.zeros(20)
    a[0] = 1.0  # n = 1
    r = sc.lsi_multiplicative(a, 15)
    assert r.lhs == pytest.approx(sum(q / o.phi(q) * o.phi_star(q) for q in range(1, 16)), rel=1e-13)


def test_additive_matches_direct_exponential_sums():
    rng = np.random.default_rng(2)
    a = rng.standard_normal(10) + 1j * rng.standard_normal(10)
    Q = 6
    ref = math.fsum(abs(sum(a[n - 1] * cmath.exp(2j * math.pi * n * b / q) for n in range(1, 11))) ** 2
                    for q in range(1, Q + 1) for b in range(q) if math.gcd(b, q) == 1)
    assert sc.lsi_additive(a, Q).lhs == pytest.approx(ref, rel=1e-12)


def test_farey_fractions():
    fr = sc.farey_fractions(7)
    assert len(fr) == sum(o.phi(q) for q in range(1, 8))
    assert fr[0] == (1, 1) and len(set(fr)) == len(fr)


def test_dual_spike_and_shape_check():
    Q, N = 8, 30
    R = len(sc.farey_fractions(Q))
    g = np.zeros(R)
    g[5] = 1.0
    assert sc.lsi_additive_dual(g, Q, N).lhs == pytest.approx(N, rel=1e-13)
    with pytest.raises(ValueError):
        sc.lsi_additive_dual(np.ones(R + 1), Q, N)


@pytest.mark.parametrize("T", [1.0, 4.0, 10.0])
def test_hybrid_quadrature_matches_closed_form(T):
    a = np.random.default_rng(int(T)).standard_normal(25)
    r = sc.hlsi(a, 8, T)
    assert r.lhs == pytest.approx(sc.hlsi_closed_form(a, 8, T), rel=1e-10)
    assert r.ok


def test_hybrid_rejects_bad_input_and_unconverged_rules():
    with pytest.raises(ValueError):
        sc.hlsi(np.ones(4), 3, 0.5)
    with pytest.raises(QuadratureError):
        sc.hlsi(np.random.default_rng(0).standard_normal(40), 4, 2.0, quad_tol=-1.0)


@settings(max_examples=25)
@given(st.integers(1, 12), st.integers(1, 25), st.integers(0, 10**6))
def test_inequalities_hold_for_random_vectors(Q, N, seed):
    rng = np.random.default_rng(seed)
    a = rng.standard_normal(N) + 1j * rng.standard_normal(N)
    assert sc.lsi_multiplicative(a, Q).ok
    assert sc.lsi_additive(a, Q).ok
    assert sc.lsi_additive_dual(rng.standard_normal(len(sc.farey_fractions(Q))), Q, N).ok


def test_bilinear_bound_check():
    cfg = bl.regime_config(50.0)
    r = sc.bilinear_bound_check(cfg, L=1.0)
    assert r.config["Q"] == 100 and r.config["N"] == cfg.N
    assert r.lhs == pytest.approx(abs(sc.bilinear_form(cfg.F, cfg.a(), cfg.b(), 100)))
    assert r.ok


@pytest.mark.parametrize("n", [1, 30, 10**6, 10**6 + 1, 10**6 + 3, 10**6 + 17])
def test_mobius_any(n):
    assert sc._mobius_any(n) == o.mu(n)


def test_make_vector_kinds():
    rng = np.random.default_rng(0)
    assert np.count_nonzero(sc.make_vector("spike", 9, rng)) == 1
    mob = sc.make_vector("mobius", 10, rng, offset=10**6)
    assert [int(x.real) for x in mob] == [o.mu(10**6 + k) for k in range(1, 11)]
    ch = sc.make_vector("character", 40, rng)
    assert np.all((np.abs(ch) < 1e-12) | (np.abs(np.abs(ch) - 1) < 1e-12))
    with pytest.raises(ValueError):
        sc.make_vector("nope", 3, rng)


def test_trials_are_seeded_and_summarized():
    a = sc.trial("hybrid", 4, 3, 20, 8, 2.0)
    b = sc.trial("hybrid", 4, 3, 20, 8, 2.0)
    assert a == b and a.config == {"Q": 8, "N": 20, "T": 2.0, "source": "character", "seed": 4, "trial": 3}
    results, summary = sc.run_suite("multiplicative", 10, 20, 10, seed=1)
    ratios = [r.ratio for r in results]
    assert summary.trials == 10 and summary.failures == 0
    assert summary.max_ratio == max(ratios) and results[summary.argmax_trial].ratio == max(ratios)
    assert summary.argmax_source == sc.VECTOR_KINDS[summary.argmax_trial % 5]
    empty, s0 = sc.run_suite("dual", 0, 20, 10)
    assert empty == [] and s0.trials == 0
    with pytest.raises(ValueError):
        sc.trial("nope", 0, 0, 5, 5)
