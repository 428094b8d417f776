"""The averaging operator Delta(m, n) over primitive characters and its exact
decompositions.

Delta(m, n) = sum_q Psi(q/Q)/phi(q) sum*_{chi mod q} chi(m) conj(chi(n)).

The split point C divides the divisor expansion into Delta' (c <= C) and
Delta'' (c > C). Delta'' is rewritten through characters of small conductor
k <= K, Delta' through the complementary divisor of |m - n|, and both are
then summed over a free variable l by Euler-Maclaurin, which produces the
pieces Delta_0', Delta_0'', Delta_1 and Delta_2.

Infinite sums over squarefree u are closed with the Euler product

    P_e(s) = sum_{u squarefree, (u, e) = 1} mu((u, s)) phi((u, s)) / (u phi(u))
           = A0 prod_{p | es} (1 + 1/(p(p-1)))^{-1} prod_{p | s, p not | e} (1 - 1/p),

with A0 = zeta(2) zeta(3) / zeta(6); only finitely many u see a nonzero
Euler-Maclaurin remainder, and the rest contribute through P_e(s).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache
from itertools import product

import numpy as np
from scipy.special import zeta

from .arith import divisors, euler_phi, mobius, phi_star, prime_factors, squarefree_divisors
from .characters import primitive_character_sum
from .weights import SmoothCutoff, bump_cutoff, psi1, psi2

ARTIN_A0 = float(zeta(2.0) * zeta(3.0) / zeta(6.0))
IMAG_TOL = 1e-10


class EmptyFamilyError(ValueError):
    """No modulus q has Psi(q/Q) > 0."""


def _int_window(lo: float, hi: float) -> range:
    """Integers that may lie in (lo, hi); callers weight by Psi, which vanishes at the ends."""
    return range(max(1, math.floor(lo * (1 - 1e-12))), math.ceil(hi * (1 + 1e-12)) + 1)


@dataclass(frozen=True)
class DeltaParams:
    Q: float
    C: float
    cutoff: SmoothCutoff = field(default_factory=bump_cutoff)

    def __post_init__(self):
        if self.Q <= 0:
            raise ValueError(f"Q must be positive, got {self.Q}")
        # the Mobius switch of the c > C range is exact only when no k <= K alone
        # reaches the support of Psi, i.e. C >= x_hi / x_lo
        c_min = self.cutoff.x_hi / self.cutoff.x_lo
        if self.C < c_min:
            raise ValueError(f"C must be at least x_hi/x_lo = {c_min}, got {self.C}")
        if not self.moduli:
            raise EmptyFamilyError(f"no modulus q with Psi(q/Q) > 0 for Q = {self.Q}")

    @property
    def K(self) -> int:
        return math.floor(self.cutoff.x_hi * self.Q / self.C)

    @cached_property
    def moduli(self) -> tuple[int, ...]:
        lo, hi = self.cutoff.support
        qs = np.array(_int_window(lo * self.Q, hi * self.Q), dtype=np.int64)
        w = self.cutoff(qs / self.Q)
        return tuple(int(q) for q in qs[w > 0])

    def psi(self, x: float) -> float:
        return float(self.cutoff(x))

    @cached_property
    def psi_hat0(self) -> float:
        return self.cutoff.mellin_at_zero

    @cached_property
    def c_range(self) -> tuple[int, ...]:
        return tuple(range(1, math.floor(self.C) + 1))


# ---------------------------------------------------------------------------
# arithmetic helpers


def _coprime(a: int, b: int) -> bool:
    return math.gcd(a, b) == 1


def _w(u: int, s: int) -> int:
    """mu((u, s)) phi((u, s)) for squarefree u."""
    d = math.gcd(u, s)
    return mobius(d) * euler_phi(d)


@lru_cache(maxsize=1 << 16)
def euler_product_u(e: int, s: int) -> float:
    """P_e(s): the full sum over squarefree u coprime to e of mu((u,s))phi((u,s))/(u phi(u))."""
    val = ARTIN_A0
    for p in prime_factors(e * s):
        val /= 1.0 + 1.0 / (p * (p - 1))
    for p in prime_factors(s):
        if e % p:
            val *= 1.0 - 1.0 / p
    return val


@lru_cache(maxsize=1 << 12)
def _squarefree_upto(limit: int) -> tuple[int, ...]:
    return tuple(u for u in range(1, limit + 1) if mobius(u) != 0)


def _prim(k: int, m: int, n: int) -> float:
    """sum over primitive chi mod k of chi(m) conj(chi(n)); real since the family is closed under conjugation."""
    z = primitive_character_sum(k, m, n)
    if abs(z.imag) > IMAG_TOL:
        raise ArithmeticError(f"primitive character sum has imaginary part {z.imag} at k={k}")
    return z.real


def _gh_pairs(m: int, n: int):
    """(g, h) with gh | (m, n) and g squarefree, giving the reduced pair m/(gh), n/(gh)."""
    d = math.gcd(m, n)
    for g in squarefree_divisors(d):
        for h in divisors(d // g):
            yield g, h, m // (g * h), n // (g * h)


def _ac_pairs(p: DeltaParams, mn: int):
    """(a, c) with ac <= C, (ac, mn) = 1 and ac squarefree (else mu(a) mu(ac) = 0)."""
    for b in _squarefree_upto(math.floor(p.C)):
        if not _coprime(b, mn):
            continue
        for a in divisors(b):
            yield a, b // a


# ---------------------------------------------------------------------------
# Delta itself


def delta_direct(m: int, n: int, p: DeltaParams) -> float:
    """Sum over the moduli in the support of Psi, with primitive characters enumerated."""
    if m < 1 or n < 1:
        raise ValueError("m and n must be positive")
    re, im = [], []
    for q in p.moduli:
        z = primitive_character_sum(q, m, n)
        w = p.psi(q / p.Q) / euler_phi(q)
        re.append(w * z.real)
        im.append(w * z.imag)
    imag = math.fsum(im)
    if abs(imag) > IMAG_TOL:
        raise ArithmeticError(f"Delta({m},{n}) has imaginary part {imag}")
    return math.fsum(re)


def _divisor_terms(m: int, n: int, p: DeltaParams, c_filter) -> list[float]:
    mn, diff = m * n, abs(m - n)
    lo, hi = p.cutoff.support
    terms = []
    for c in range(1, math.floor(hi * p.Q) + 1):
        if not c_filter(c) or mobius(c) == 0 or not _coprime(c, mn):
            continue
        for d in _int_window(lo * p.Q / c, hi * p.Q / c):
            if diff % d or not _coprime(d, mn):
                continue
            w = p.psi(c * d / p.Q)
            if w:
                terms.append(w * mobius(c) * euler_phi(d) / euler_phi(c * d))
    return terms


def delta_divisor(m: int, n: int, p: DeltaParams) -> float:
    """Delta from sum* chi(m) conj(chi(n)) = sum_{cd = q, d | m - n} mu(c) phi(d)."""
    return math.fsum(_divisor_terms(m, n, p, lambda c: True))


def delta_prime(m: int, n: int, p: DeltaParams) -> float:
    """The c <= C part of the divisor expansion."""
    return math.fsum(_divisor_terms(m, n, p, lambda c: c <= p.C))


def delta_double_prime_tail(m: int, n: int, p: DeltaParams) -> float:
    """The c > C part of the divisor expansion (the definition of Delta'')."""
    return math.fsum(_divisor_terms(m, n, p, lambda c: c > p.C))


def delta_double_prime(m: int, n: int, p: DeltaParams) -> float:
    """Delta'' after switching c > C to c <= C: characters of conductor k <= K only."""
    mn = m * n
    lo, hi = p.cutoff.support
    terms = []
    for c in p.c_range:
        if mobius(c) == 0 or not _coprime(c, mn):
            continue
        for k in range(1, p.K + 1):
            if not _coprime(k, mn):
                continue
            chi = _prim(k, m, n)
            if chi == 0:
                continue
            for l in _int_window(lo * p.Q / (c * k), hi * p.Q / (c * k)):
                if not _coprime(l, mn):
                    continue
                w = p.psi(c * k * l / p.Q)
                if w:
                    terms.append(-mobius(c) * w / euler_phi(c * k * l) * chi)
    return math.fsum(terms)


def delta_double_prime_unswitched(m: int, n: int, p: DeltaParams) -> float:
    """Delta'' with c > C, the l-sum over (l, mn) = 1 and k <= K, before the Mobius switch."""
    mn = m * n
    lo, hi = p.cutoff.support
    terms = []
    for c in range(math.floor(p.C) + 1, math.floor(hi * p.Q) + 1):
        if mobius(c) == 0 or not _coprime(c, mn):
            continue
        for k in range(1, min(p.K, math.floor(hi * p.Q / c)) + 1):
            chi = _prim(k, m, n)
            if chi == 0:
                continue
            for l in _int_window(lo * p.Q / (c * k), hi * p.Q / (c * k)):
                if not _coprime(l, mn):
                    continue
                w = p.psi(c * k * l / p.Q)
                if w:
                    terms.append(mobius(c) * w / euler_phi(c * k * l) * chi)
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# Delta' through the complementary divisor

VARIANTS = ("corrected", "printed")


def _a_power(a: int, variant: str) -> int:
    if variant not in VARIANTS:
        raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")
    return a * a if variant == "corrected" else a


def delta_prime_reduced(m: int, n: int, p: DeltaParams, variant: str = "corrected") -> float:
    """Delta'(m, n), m != n, as a sum over primitive characters of conductor k.

    The Psi argument is a^2 c |m-n| / (k l h Q); ``variant="printed"`` uses a
    single power of a instead, kept to report the difference.
    """
    _a_power(1, variant)
    if m == n:
        return 0.0
    mn, diff = m * n, abs(m - n)
    lo, hi = p.cutoff.support
    terms = []
    for a, c in _ac_pairs(p, mn):
        coef = mobius(a) * mobius(a * c) / (a * euler_phi(a * c))
        top = _a_power(a, variant) * c * diff
        for g, h, mr, nr in _gh_pairs(m, n):
            s = mr * nr
            # Psi(top / (j h Q)) with j = kl needs top/(hi h Q) < j < top/(lo h Q)
            for j in _int_window(top / (hi * h * p.Q), top / (lo * h * p.Q)):
                if j % a:
                    continue
                w = p.psi(top / (j * h * p.Q))
                if not w:
                    continue
                for k in divisors(j):
                    if not _coprime(j // k, s) or not _coprime(k, s):
                        continue
                    chi = _prim(k, mr, nr)
                    if chi:
                        terms.append(coef * mobius(g) * w / euler_phi(j) * chi)
    return math.fsum(terms)


def _lattice_large(p: DeltaParams, T: float) -> float:
    """sum_{l >= 1} l^{-1} Psi(T / l)."""
    lo, hi = p.cutoff.support
    return math.fsum(p.psi(T / l) / l for l in _int_window(T / hi, T / lo))


def _lattice_small(p: DeltaParams, T: float) -> float:
    """sum_{l >= 1} l^{-1} Psi(l / T)."""
    lo, hi = p.cutoff.support
    return math.fsum(p.psi(l / T) / l for l in _int_window(lo * T, hi * T))


def delta_double_prime_cor43(m: int, n: int, p: DeltaParams) -> float:
    """Delta'' with the l-sum freed through the squarefree variable u (finite l-sums kept)."""
    mn = m * n
    hi = p.cutoff.x_hi
    terms = []
    for c in p.c_range:
        if mobius(c) == 0 or not _coprime(c, mn):
            continue
        for k in range(1, p.K + 1):
            chi = _prim(k, m, n)
            if chi == 0:
                continue
            ck = c * k
            for u in _squarefree_upto(math.floor(hi * p.Q / ck)):
                if not _coprime(u, ck):
                    continue
                ls = _lattice_small(p, p.Q / (ck * u))
                if ls:
                    terms.append(-mobius(c) / euler_phi(ck) * _w(u, mn) / (u * euler_phi(u)) * ls * chi)
    return math.fsum(terms)


def delta_prime_cor44(m: int, n: int, p: DeltaParams, variant: str = "corrected") -> float:
    """Delta'(m, n), m != n, with l = l' a/(a,k) freed through u, all k (finite l-sums kept).

    The corrected Psi argument is a (a,k) c |m-n| / (k u l h Q); the printed
    variant drops the leading a.
    """
    _a_power(1, variant)
    if m == n:
        return 0.0
    mn, diff = m * n, abs(m - n)
    lo = p.cutoff.x_lo
    terms = []
    for a, c in _ac_pairs(p, mn):
        coef = mobius(a) * mobius(a * c) / (a * euler_phi(a * c))
        lead = a if variant == "corrected" else 1
        for g, h, mr, nr in _gh_pairs(m, n):
            s = mr * nr
            # T = lead (a,k) c diff / (k u h Q) must reach x_lo for some l
            kmax = math.floor(lead * a * c * diff / (h * p.Q * lo) * (1 + 1e-12))
            for k in range(1, kmax + 1):
                chi = _prim(k, mr, nr)
                if chi == 0:
                    continue
                ak = math.gcd(a, k)
                top = Fraction(lead * ak * c * diff, k * h)
                for u in _squarefree_upto(math.floor(top / (p.Q * lo) * (1 + 1e-12))):
                    if not _coprime(u, a * k):
                        continue
                    ls = _lattice_large(p, float(top / u) / p.Q)
                    if ls:
                        terms.append(
                            coef * mobius(g) / euler_phi(a * k // ak) * _w(u, s) / (u * euler_phi(u)) * ls * chi
                        )
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# Euler-Maclaurin pieces


@lru_cache(maxsize=1 << 16)
def _psi2_at(cutoff: SmoothCutoff, Q: float, j: int) -> float:
    return psi2(cutoff, Q / j)


@lru_cache(maxsize=1 << 18)
def _psi1_at(cutoff: SmoothCutoff, Q: float, num: int, den: int) -> float:
    return psi1(cutoff, num / den / Q)


def delta0_double_prime(m: int, n: int, p: DeltaParams) -> float:
    """Delta_0'': the Delta'' sum with the l-sum dropped."""
    mn = m * n
    terms = []
    for c in p.c_range:
        if mobius(c) == 0 or not _coprime(c, mn):
            continue
        for k in range(1, p.K + 1):
            chi = _prim(k, m, n)
            if chi:
                terms.append(-mobius(c) / euler_phi(c * k) * euler_product_u(c * k, mn) * chi)
    return math.fsum(terms)


def _prime_terms(m: int, n: int, p: DeltaParams):
    """Yield (weight, k, a, c, h, s, chi) for the k <= K terms of the Delta' forms."""
    mn = m * n
    for a, c in _ac_pairs(p, mn):
        coef = mobius(a) * mobius(a * c) / (a * euler_phi(a * c))
        for g, h, mr, nr in _gh_pairs(m, n):
            s = mr * nr
            for k in range(1, p.K + 1):
                chi = _prim(k, mr, nr)
                if chi:
                    ak = math.gcd(a, k)
                    yield coef * mobius(g) / euler_phi(a * k // ak) * chi, k, a, c, h, s, ak


def delta0_prime(m: int, n: int, p: DeltaParams) -> float:
    """Delta_0': the Delta' sum (k <= K) with the l-sum dropped; m != n."""
    if m == n:
        raise ValueError("Delta_0' is defined for m != n")
    return math.fsum(wt * euler_product_u(a * k, s) for wt, k, a, c, h, s, ak in _prime_terms(m, n, p))


def _delta1_terms(m: int, n: int, p: DeltaParams, k_filter=lambda k: True) -> list[float]:
    diff = abs(m - n)
    lo = p.cutoff.x_lo
    h0 = p.psi_hat0
    terms = []
    for wt, k, a, c, h, s, ak in _prime_terms(m, n, p):
        if not k_filter(k):
            continue
        num, den = a * ak * c * diff, k * h
        # Psi_1(T) = -Psi_hat(0) once T < x_lo, so only small u need quadrature
        inner = [-h0 * euler_product_u(a * k, s)]
        for u in _squarefree_upto(math.floor(num / (den * p.Q * lo) * (1 + 1e-12))):
            if not _coprime(u, a * k):
                continue
            g = math.gcd(num, den * u)
            val = _psi1_at(p.cutoff, p.Q, num // g, den * u // g)
            inner.append(_w(u, s) / (u * euler_phi(u)) * (val + h0))
        terms.append(wt * math.fsum(inner))
    return terms


def delta1(m: int, n: int, p: DeltaParams) -> float:
    """Delta_1: the Euler-Maclaurin remainder of Delta' (m != n)."""
    if m == n:
        raise ValueError("Delta_1 is defined for m != n")
    return math.fsum(_delta1_terms(m, n, p))


def delta2(m: int, n: int, p: DeltaParams) -> float:
    """Delta_2: the Euler-Maclaurin remainder of Delta''."""
    mn = m * n
    hi = p.cutoff.x_hi
    h0 = p.psi_hat0
    terms = []
    for c in p.c_range:
        if mobius(c) == 0 or not _coprime(c, mn):
            continue
        for k in range(1, p.K + 1):
            chi = _prim(k, m, n)
            if chi == 0:
                continue
            ck = c * k
            # Psi_2(T) = -T Psi_hat(0) once T < 1/x_hi; that part sums to -Psi_hat(0) Delta_0''
            terms.append(mobius(c) / euler_phi(ck) * euler_product_u(ck, mn) * chi * h0)
            inner = []
            for u in _squarefree_upto(math.floor(hi * p.Q / ck * (1 + 1e-12))):
                if not _coprime(u, ck):
                    continue
                j = ck * u
                inner.append(_w(u, mn) / euler_phi(u) * (_psi2_at(p.cutoff, p.Q, j) + p.Q / j * h0))
            terms.append(-mobius(c) * ck / (p.Q * euler_phi(ck)) * chi * math.fsum(inner))
    return math.fsum(terms)


def delta_plus(m: int, n: int, p: DeltaParams, singular: bool = True) -> float:
    """The trivial-character (k = 1) part of Delta_1, written out on its own; 0 unless singular."""
    if m == n:
        raise ValueError("Delta^+ is defined for m != n")
    if not singular:
        return 0.0
    mn, diff = m * n, abs(m - n)
    lo = p.cutoff.x_lo
    terms = []
    for a, c in _ac_pairs(p, mn):
        coef = mobius(a) * mobius(a * c) / (a * euler_phi(a) * euler_phi(a * c))
        for g, h, mr, nr in _gh_pairs(m, n):
            s = mr * nr
            ulim = math.floor(a * c * diff / (h * p.Q * lo) * (1 + 1e-12))
            # the u beyond ulim have Psi_1 = -Psi_hat(0); take them from the full product
            inner = [-p.psi_hat0 * euler_product_u(a, s)]
            for u in _squarefree_upto(ulim):
                if not _coprime(u, a):
                    continue
                T = a * c * diff / (u * h * p.Q)
                inner.append(_w(u, s) / (u * euler_phi(u)) * (psi1(p.cutoff, T) + p.psi_hat0))
            terms.append(coef * mobius(g) * math.fsum(inner))
    return math.fsum(terms)


def delta_star(m: int, n: int, p: DeltaParams, singular: bool = True) -> float:
    return delta1(m, n, p) - delta_plus(m, n, p, singular)


@dataclass(frozen=True)
class EMPieces:
    delta0_prime: float | None
    delta0_double_prime: float
    delta1: float | None
    delta2: float


def delta_em_pieces(m: int, n: int, p: DeltaParams) -> EMPieces:
    """The Euler-Maclaurin split of Delta' and Delta''; the Delta' pieces are None when m = n."""
    d0pp, d2 = delta0_double_prime(m, n, p), delta2(m, n, p)
    if m == n:
        return EMPieces(None, d0pp, None, d2)
    return EMPieces(delta0_prime(m, n, p), d0pp, delta1(m, n, p), d2)


def window_ok(m: int, n: int, p: DeltaParams) -> bool:
    """True when every k > K drops out of Delta' through the support of Psi.

    The Delta_1 reconstruction of Delta' keeps only k <= K; the largest Psi
    argument for k > K is a (a,k) c |m-n| / (k Q) <= a^2 c |m-n| / ((K+1) Q).
    """
    if m == n:
        return True
    top = max((a * a * c for a, c in _ac_pairs(p, m * n)), default=0)
    return top * abs(m - n) < p.cutoff.x_lo * (p.K + 1) * p.Q


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class DeltaReport:
    m: int
    n: int
    delta: float
    delta_prime: float
    delta_double_prime: float
    delta0_prime: float | None
    delta0_double_prime: float
    delta1: float | None
    delta2: float
    delta_plus: float | None
    delta_star: float | None
    residual_split: float
    residual_cancel: float | None
    residual_em: float | None
    residual_em_double: float
    residual_em_prime: float | None
    window_ok: bool

    def as_row(self) -> dict:
        return {k: getattr(self, k) for k in self.__dataclass_fields__}


def delta_report(m: int, n: int, p: DeltaParams, singular: bool = False) -> DeltaReport:
    d = delta_direct(m, n, p)
    dp = delta_prime(m, n, p)
    dpp = delta_double_prime(m, n, p)
    d0pp = delta0_double_prime(m, n, p)
    d2 = delta2(m, n, p)
    h0 = p.psi_hat0
    res_double = abs(dpp - h0 * d0pp - d2)
    if m == n:
        return DeltaReport(m, n, d, dp, dpp, None, d0pp, None, d2, None, None,
                           abs(d - dp - dpp), None, None, res_double, None, True)
    d0p = delta0_prime(m, n, p)
    d1 = delta1(m, n, p)
    dplus = delta_plus(m, n, p, singular)
    return DeltaReport(
        m, n, d, dp, dpp, d0p, d0pp, d1, d2, dplus, d1 - dplus,
        residual_split=abs(d - dp - dpp),
        residual_cancel=abs(d0p + d0pp),
        residual_em=abs(d - d1 - d2),
        residual_em_double=res_double,
        residual_em_prime=abs(dp - h0 * d0p - d1),
        window_ok=window_ok(m, n, p),
    )


def cardinality(p: DeltaParams) -> float:
    """Delta(1, 1) = sum_q Psi(q/Q) phi*(q)/phi(q)."""
    return math.fsum(p.psi(q / p.Q) * phi_star(q) / euler_phi(q) for q in p.moduli)


def diagonal_delta(m: int, p: DeltaParams) -> float:
    """Delta(m, m) = sum_{(q, m) = 1} Psi(q/Q) phi*(q)/phi(q)."""
    return math.fsum(p.psi(q / p.Q) * phi_star(q) / euler_phi(q) for q in p.moduli if _coprime(q, m))


# ---------------------------------------------------------------------------
# exact lemmas


def mobius_switch_check(l: int, a: int, s: int) -> bool:
    """sum over squarefree u | l, (u, a) = 1 of mu((u,s)) phi((u,s))/phi(u)
    against phi(a) l / phi(al) when (l, s) = 1 and 0 otherwise, in exact rationals."""
    if math.gcd(a, s) != 1:
        raise ValueError(f"requires gcd(a, s) = 1, got a={a}, s={s}")
    lhs = sum(
        (Fraction(_w(u, s), euler_phi(u)) for u in squarefree_divisors(l) if _coprime(u, a)),
        Fraction(0),
    )
    rhs = Fraction(euler_phi(a) * l, euler_phi(a * l)) if _coprime(l, s) else Fraction(0)
    return lhs == rhs


def gcd_expansion_check(u: int, m: int, n: int) -> bool:
    """mu((u,mn)) phi((u,mn)) against sum over alpha beta gamma | u, alpha beta | m,
    alpha gamma | n of alpha beta gamma mu(beta gamma), in exact integers."""
    if mobius(u) == 0:
        raise ValueError(f"u must be squarefree, got {u}")
    lhs = _w(u, m * n)
    rhs = 0
    ps = prime_factors(u)
    # u squarefree: each prime of u goes to alpha, beta, gamma or none
    for choice in product(range(4), repeat=len(ps)):
        al = math.prod(q for q, c in zip(ps, choice) if c == 1)
        be = math.prod(q for q, c in zip(ps, choice) if c == 2)
        ga = math.prod(q for q, c in zip(ps, choice) if c == 3)
        if m % (al * be) == 0 and n % (al * ga) == 0:
            rhs += al * be * ga * mobius(be * ga)
    return lhs == rhs


def _divisor_kernel(q: int) -> np.ndarray:
    """lut[g] = sum_{d | g} mu(q/d) phi(d) for g | q: the primitive sum at a unit pair with (q, m - n) = g."""
    lut = np.zeros(q + 1)
    for g in divisors(q):
        lut[g] = sum(mobius(q // d) * euler_phi(d) for d in divisors(g))
    return lut


def delta_matrix(ms, ns, p: DeltaParams) -> np.ndarray:
    """Delta(m_i, n_j) for all pairs, vectorized over the grid, summing the moduli in increasing order."""
    ms = np.asarray(ms, dtype=np.int64)
    ns = np.asarray(ns, dtype=np.int64)
    diff = np.abs(ms[:, None] - ns[None, :])
    out = np.zeros((len(ms), len(ns)))
    for q in p.moduli:
        w = p.psi(q / p.Q) / euler_phi(q)
        cm = np.gcd(ms, q) == 1
        cn = np.gcd(ns, q) == 1
        lut = _divisor_kernel(q)
        out += (w * lut[np.gcd(diff, q)]) * (cm[:, None] & cn[None, :])
    return out
