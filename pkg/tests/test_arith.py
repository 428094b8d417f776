import math

import pytest
from hypothesis import given
from hypothesis import strategies as st

import oracles as o
from alsieve import arith


@pytest.mark.parametrize("n, expected", [(1, 1), (12, 4), (97, 96)])
def test_euler_phi_examples(n, expected):
    assert arith.euler_phi(n) == expected


@pytest.mark.parametrize("n, expected", [(1, 1), (4, 0), (30, -1)])
def test_mobius_examples(n, expected):
    assert arith.mobius(n) == expected


@pytest.mark.parametrize("q, expected", [(1, 1), (2, 0), (8, 2)])
def test_phi_star_examples(q, expected):
    assert arith.phi_star(q) == expected


@pytest.mark.parametrize("n, g, expected", [(7, 1, 1), (6, 2, 4), (4, 3, 6)])
def test_divisor_power_examples(n, g, expected):
    assert arith.divisor_power(n, g) == expected


@given(st.integers(1, 2000))
def test_totient_mobius_phi_star_match_brute_force(n):
    assert arith.euler_phi(n) == o.phi(n)
    assert arith.mobius(n) == o.mu(n)
    assert arith.phi_star(n) == o.phi_star(n)


@given(st.integers(1, 400), st.integers(1, 4))
def test_divisor_power_counts_ordered_tuples(n, g):
    assert arith.divisor_power(n, g) == o.tau_g(n, g)


@given(st.integers(1, 10**6))
def test_factorize_round_trip(n):
    f = arith.factorize(n)
    assert math.prod(p**e for p, e in f.factors) == n
    assert all(o.mu(p) == -1 for p in f.primes)  # every listed factor is prime


def test_factorize_beyond_sieve_raises():
    with pytest.raises(arith.SieveBoundError):
        arith.factorize(arith.SIEVE_BOUND + 1)


@given(st.integers(1, 3000))
def test_divisor_lists(n):
    assert arith.divisors(n) == o.divisors(n)
    assert arith.squarefree_divisors(n) == [d for d in o.divisors(n) if o.mu(d) != 0]


def test_delta_factor_examples():
    assert arith.delta_factor(1) == 1.0
    assert arith.delta_factor(2) == pytest.approx(0.8, rel=1e-15)
    assert arith.delta_factor(6) == pytest.approx(o.delta_factor(6), rel=1e-15)


@given(st.integers(1, 5000))
def test_delta_factor_depends_on_radical(n):
    assert arith.delta_factor(n) == pytest.approx(o.delta_factor(arith.radical(n)), rel=1e-13)


def test_singular_series_partial_products():
    assert float(arith.singular_series(2)) == pytest.approx(0.625, rel=1e-15)
    assert float(arith.singular_series(3)) == pytest.approx(0.625 * (1 - 1 / 9 - 1 / 27), rel=1e-15)


def test_singular_series_converges_to_constant():
    limit = arith.singular_constant()
    for cutoff in (100, 10_000):
        s = arith.singular_series(cutoff)
        assert 0 <= s.value - limit <= s.tail_bound
    assert abs(arith.singular_series(100).value - arith.singular_series(10_000).value) <= 2 / 100


def test_singular_constant_frozen():
    # partial product to 10^6 plus the 1/p^2 tail, to double precision
    assert arith.singular_constant() == pytest.approx(0.479145344433413, rel=1e-13)


@given(st.integers(1, 2000))
def test_phi_star_is_mobius_convolution_of_phi(q):
    assert arith.phi_star(q) == sum(arith.mobius(q // d) * arith.euler_phi(d) for d in arith.divisors(q))
    if q % 4 == 2:
        assert arith.phi_star(q) == 0
