"""Exact multiplicative arithmetic.

Everything here works from a smallest-prime-factor table built once up to
``SIEVE_BOUND``; inputs above the bound are rejected rather than factored by
a slower general method.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from itertools import product

import numpy as np

SIEVE_BOUND = 10**6


class SieveBoundError(ValueError):
    """Raised when an input exceeds the factorization sieve."""


@dataclass(frozen=True)
class FactoredInteger:
    value: int
    factors: tuple[tuple[int, int], ...]

    def __post_init__(self):
        prod = 1
        last = 1
        for p, e in self.factors:
            if p <= last or e < 1:
                raise ValueError(f"malformed factorization {self.factors}")
            last = p
            prod *= p**e
        if prod != self.value:
            raise ValueError(f"factors do not multiply to {self.value}")

    @property
    def primes(self) -> tuple[int, ...]:
        return tuple(p for p, _ in self.factors)

    @property
    def radical(self) -> int:
        return math.prod(self.primes)

    def is_squarefree(self) -> bool:
        return all(e == 1 for _, e in self.factors)


class _Sieve:
    def __init__(self, bound: int):
        self.bound = bound
        spf = np.zeros(bound + 1, dtype=np.int32)
        for p in range(2, math.isqrt(bound) + 1):
            if spf[p] == 0:
                block = spf[p * p :: p]
                block[block == 0] = p
        idx = np.nonzero(spf == 0)[0]
        spf[idx] = idx
        self.spf = spf
        self.primes = np.nonzero(spf[2:] == np.arange(2, bound + 1))[0] + 2


_SIEVE: _Sieve | None = None


def _sieve() -> _Sieve:
    global _SIEVE
    if _SIEVE is None:
        _SIEVE = _Sieve(SIEVE_BOUND)
    return _SIEVE


def primes_up_to(x: int) -> np.ndarray:
    s = _sieve()
    if x > s.bound:
        raise SieveBoundError(f"{x} exceeds sieve bound {s.bound}")
    return s.primes[: np.searchsorted(s.primes, x, side="right")]


@lru_cache(maxsize=1 << 16)
def factorize(n: int) -> FactoredInteger:
    if n < 1:
        raise ValueError(f"factorize expects a positive integer, got {n}")
    s = _sieve()
    if n > s.bound:
        raise SieveBoundError(f"{n} exceeds sieve bound {s.bound}")
    factors = []
    m = n
    while m > 1:
        p = int(s.spf[m])
        e = 0
        while m % p == 0:
            m //= p
            e += 1
        factors.append((p, e))
    return FactoredInteger(n, tuple(factors))


def prime_factors(n: int) -> tuple[int, ...]:
    return factorize(n).primes


def divisors(n: int) -> list[int]:
    """Sorted divisors of ``n``."""
    ds = [1]
    for p, e in factorize(n).factors:
        ds = [d * p**k for d in ds for k in range(e + 1)]
    return sorted(ds)


def squarefree_divisors(n: int) -> list[int]:
    ps = prime_factors(n)
    out = []
    for mask in product((0, 1), repeat=len(ps)):
        out.append(math.prod(p for p, b in zip(ps, mask) if b))
    return sorted(out)


def euler_phi(n: int) -> int:
    result = 1
    for p, e in factorize(n).factors:
        result *= (p - 1) * p ** (e - 1)
    return result


def mobius(n: int) -> int:
    f = factorize(n)
    if not f.is_squarefree():
        return 0
    return -1 if len(f.factors) % 2 else 1


def phi_star(q: int) -> int:
    """Number of primitive characters modulo ``q`` (Dirichlet convolution mu * phi)."""
    result = 1
    for p, e in factorize(q).factors:
        if e == 1:
            result *= p - 2
        else:
            result *= p ** (e - 2) * (p - 1) ** 2
    return result


def divisor_power(n: int, g: int) -> int:
    """tau_g(n): ordered g-tuples of positive integers with product n."""
    if not 1 <= g <= 4:
        raise ValueError(f"divisor_power supports 1 <= g <= 4, got {g}")
    result = 1
    for _, e in factorize(n).factors:
        result *= math.comb(e + g - 1, g - 1)
    return result


def tau(n: int) -> int:
    return divisor_power(n, 2)


def radical(n: int) -> int:
    return factorize(n).radical


def local_diagonal_factor(p: int) -> float:
    return (1.0 - 1.0 / p) / (1.0 - 1.0 / p**2 - 1.0 / p**3)


def delta_factor(m: int) -> float:
    """Local diagonal density prod_{p | m} (1 - 1/p)(1 - 1/p^2 - 1/p^3)^{-1}."""
    result = 1.0
    for p in prime_factors(m):
        result *= local_diagonal_factor(p)
    return result


@dataclass(frozen=True)
class SingularSeries:
    value: float
    cutoff: int
    tail_bound: float  # |value - limit| <= tail_bound

    def __float__(self) -> float:
        return self.value


def singular_series(prime_cutoff: int) -> SingularSeries:
    """Partial Euler product prod_{p <= cutoff} (1 - 1/p^2 - 1/p^3).

    The omitted factors each lie in (1 - 2/p^2, 1), so the partial product
    exceeds the limit by at most sum_{p > cutoff} 2/p^2 < 2/cutoff.
    """
    if prime_cutoff < 2:
        raise ValueError(f"prime_cutoff must be >= 2, got {prime_cutoff}")
    ps = primes_up_to(prime_cutoff).astype(np.float64)
    logs = np.log1p(-1.0 / ps**2 - 1.0 / ps**3)
    value = math.exp(math.fsum(logs.tolist()))
    return SingularSeries(value, prime_cutoff, 2.0 / prime_cutoff)


@lru_cache(maxsize=None)
def singular_constant() -> float:
    """The full product to double precision.

    Primes up to the sieve bound are multiplied directly; beyond it the log of
    each factor is -1/p^2 + O(p^-3), and sum_{p > x} p^-2 comes from the prime
    zeta value P(2) minus the computed head.
    """
    import mpmath

    ps = primes_up_to(SIEVE_BOUND).astype(np.float64)
    head = math.fsum(np.log1p(-1.0 / ps**2 - 1.0 / ps**3).tolist())
    with mpmath.workdps(30):
        head_p2 = mpmath.fsum(mpmath.mpf(1) / mpmath.mpf(int(p)) ** 2 for p in ps)
        p2_tail = float(mpmath.primezeta(2) - head_p2)
    return math.exp(head - p2_tail)
