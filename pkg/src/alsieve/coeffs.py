"""Coefficient sequences a_m = m^{-1/2} sum_{lr = m} lambda(l) rho(r).

lambda comes from a degree-g L-function (built in: the coefficients of
zeta^g), rho from a mollifier. Also here: the partial-sum cancellation
check for rho, the twisted Dirichlet polynomials A_d(s, chi), and the
formal-division check that sum_l lambda(delta l) chi(l) l^{-s} is L(s, chi)
times a finite Euler-factor correction.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import lru_cache
from typing import Callable

import numpy as np

from .arith import divisor_power, divisors, mobius, prime_factors, tau
from .characters import DirichletCharacter


@dataclass(frozen=True)
class LCoefficients:
    g: int
    coefficient: Callable[[int], int] = field(repr=False)
    singular_trivial: bool = True
    name: str = ""

    def __post_init__(self):
        if self.g not in (1, 2, 3):
            raise ValueError(f"degree must be 1, 2 or 3, got {self.g}")

    def __call__(self, l: int) -> int:
        return self.coefficient(l)


@lru_cache(maxsize=None)
def zeta_power(g: int) -> LCoefficients:
    """Coefficients tau_g of zeta^g; the trivial character is singular."""
    return LCoefficients(g, lambda l: divisor_power(l, g), True, f"zeta^{g}")


Scalar = Fraction | float


@dataclass(frozen=True)
class MollifierCoefficients:
    values: dict[int, Scalar] = field(repr=False)
    support: tuple[int, int]
    A: float = 1.0
    name: str = ""

    def __post_init__(self):
        lo, hi = self.support
        for r in self.values:
            if not lo <= r <= hi:
                raise ValueError(f"rho({r}) lies outside the support {self.support}")

    def __call__(self, r: int) -> Scalar:
        return self.values.get(r, 0)

    def items(self):
        return sorted(self.values.items())

    def bound_ok(self) -> bool:
        """|rho(r)| <= tau(r)^A."""
        return all(abs(v) <= tau(r) ** self.A for r, v in self.values.items())


def _weight_one(r: int, X: int) -> Scalar:
    return Fraction(1)


def _weight_log(r: int, X: int) -> Scalar:
    # log(X/r)/log X: |w| <= 1 and r|w'(r)| = 1/log X <= 1
    return math.log(X / r) / math.log(X) if X > 1 else 1.0


MOLLIFIER_WEIGHTS: dict[str, Callable[[int, int], Scalar]] = {"one": _weight_one, "log": _weight_log}


def mollifier_mu_w(X: int, w: str | Callable[[int], Scalar] = "one", dyadic_start: int | None = None) -> MollifierCoefficients:
    """rho(r) = mu(r) w(r) on [1, X], or on [X_A, 2 X_A] when ``dyadic_start`` = X_A is given."""
    if X < 1:
        raise ValueError(f"X must be at least 1, got {X}")
    if isinstance(w, str):
        try:
            fn = MOLLIFIER_WEIGHTS[w]
        except KeyError:
            raise ValueError(f"unknown mollifier weight {w!r}; known: {sorted(MOLLIFIER_WEIGHTS)}") from None
        name = f"mu*{w}"
        weight = lambda r: fn(r, X)  # noqa: E731
    else:
        name, weight = "mu*custom", w
    lo, hi = (1, X) if dyadic_start is None else (dyadic_start, 2 * dyadic_start)
    values = {}
    for r in range(lo, hi + 1):
        mu = mobius(r)
        if mu:
            v = weight(r)
            if abs(v) > 1:
                raise ValueError(f"mollifier weight must satisfy |w| <= 1, got w({r}) = {v}")
            if v:
                values[r] = mu * v
    return MollifierCoefficients(values, (lo, hi), 1.0, name)


def unit_mollifier() -> MollifierCoefficients:
    """rho supported at r = 1 with rho(1) = 1 (no mollification)."""
    return MollifierCoefficients({1: Fraction(1)}, (1, 1), 0.0, "one")


@dataclass(frozen=True)
class CoefficientSequence:
    values: np.ndarray = field(repr=False)  # values[m] for 1 <= m <= N; values[0] = 0
    provenance: tuple = ("free",)
    alpha: float = 0.0

    @property
    def N(self) -> int:
        return len(self.values) - 1

    def __getitem__(self, m: int) -> float:
        return float(self.values[m]) if 1 <= m <= self.N else 0.0

    def growth_ok(self, A: float) -> bool:
        """|a_m| sqrt(m) <= tau(m)^A for every m (with a small allowance for rounding)."""
        ms = np.arange(1, self.N + 1)
        taus = np.array([tau(int(m)) for m in ms], dtype=np.float64)
        return bool(np.all(np.abs(self.values[1:]) * np.sqrt(ms) <= taus**A * (1 + 1e-12)))

    def scaled(self, c: float) -> CoefficientSequence:
        return CoefficientSequence(self.values * c, self.provenance + (("scale", c),), self.alpha)


def free_sequence(values) -> CoefficientSequence:
    vals = np.concatenate([[0.0], np.asarray(values, dtype=np.float64)])
    return CoefficientSequence(vals, ("free",))


def build_sequence(lam: LCoefficients, rho: MollifierCoefficients, N: int, alpha: float = 0.0) -> CoefficientSequence:
    """a_m = m^{-1/2} sum_{lr = m} lambda(l) l^{-alpha} rho(r) r^{-alpha} for m <= N."""
    if N < 2:
        raise ValueError(f"N must be at least 2, got {N}")
    conv = [[] for _ in range(N + 1)]
    for r, rv in rho.items():
        if r > N:
            break
        for l in range(1, N // r + 1):
            conv[l * r].append(float(lam(l) * rv))
    vals = np.zeros(N + 1)
    for m in range(1, N + 1):
        if conv[m]:
            vals[m] = math.fsum(conv[m]) * m ** (-0.5 - alpha)
    return CoefficientSequence(vals, (lam.name, rho.name, rho.support), alpha)


# ---------------------------------------------------------------------------
# cancellation in rho


@dataclass(frozen=True)
class CancellationReport:
    d: int
    C_exp: float
    ys: tuple[float, ...]
    partial_sums: tuple[float, ...]
    ratios: tuple[float, ...]  # |sum_{r <= y} rho(dr)| / (tau(d) y (log y)^{-C})
    fitted_constant: float
    violated: bool


def cancellation_check(rho: MollifierCoefficients, d: int, y, C_exp: float) -> CancellationReport:
    """Partial sums of rho(dr) against tau(d) y (log y)^{-C}.

    ``y`` may be a single value or a grid. The fitted constant is the largest
    ratio; the condition is flagged as violated when the ratios over the upper
    half of the grid exceed every ratio over the lower half, i.e. they grow.
    """
    ys = np.atleast_1d(np.asarray(y, dtype=np.float64))
    if np.any(ys < 2):
        raise ValueError("y must be at least 2")
    ys = np.sort(ys)
    rmax = int(ys[-1])
    vals = np.array([float(rho(d * r)) for r in range(1, rmax + 1)])
    csum = np.cumsum(vals)
    sums = np.array([csum[int(v) - 1] for v in ys])
    ratios = np.abs(sums) * np.log(ys) ** C_exp / (tau(d) * ys)
    half = len(ys) // 2
    violated = bool(half and np.max(ratios[half:]) > np.max(ratios[:half]) + 1e-15)
    return CancellationReport(d, C_exp, tuple(ys.tolist()), tuple(sums.tolist()), tuple(ratios.tolist()),
                              float(np.max(ratios)), violated)


# ---------------------------------------------------------------------------
# twisted Dirichlet polynomials


def dirichlet_polynomial_Ad(seq: CoefficientSequence, d: int, chi: DirichletCharacter | None, s: complex) -> complex:
    """sum_{m = 0 mod d, m <= N} a_m chi(m/d) m^{1/2 - s}; chi = None is the character mod 1."""
    if d > seq.N:
        return 0j
    ms = np.arange(d, seq.N + 1, d)
    if chi is None:
        cv = np.ones(len(ms))
    else:
        cv = chi.group.value_matrix(np.array([chi.exponents]), ms // d)[0]
    terms = seq.values[ms] * cv * np.exp((0.5 - s) * np.log(ms))
    return complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist()))


# ---------------------------------------------------------------------------
# Euler-factor check by formal division


@lru_cache(maxsize=None)
def cyclotomic(n: int) -> tuple[int, ...]:
    """Integer coefficients of Phi_n, lowest degree first."""
    num = [-1] + [0] * (n - 1) + [1]  # x^n - 1
    for dv in divisors(n):
        if dv < n:
            num = _poly_exact_div(num, list(cyclotomic(dv)))
    return tuple(num)


def _poly_exact_div(num: list[int], den: list[int]) -> list[int]:
    num = num[:]
    q = [0] * (len(num) - len(den) + 1)
    for i in range(len(q) - 1, -1, -1):
        c = num[i + len(den) - 1] // den[-1]
        q[i] = c
        for j, dc in enumerate(den):
            num[i + j] -= c * dc
    if any(num):
        raise ArithmeticError("inexact polynomial division")
    return q


def _is_zero_in_cyclotomic_field(v, L: int) -> bool:
    """Is sum_j v_j zeta_L^j zero? Reduce the integer polynomial modulo Phi_L."""
    rem = [int(x) for x in v]
    phi = cyclotomic(L)
    deg = len(phi) - 1
    for i in range(len(rem) - 1, deg - 1, -1):
        c = rem[i]
        if c:
            for j, pc in enumerate(phi):
                rem[i - deg + j] -= c * pc
    return not any(rem[:deg])


@dataclass(frozen=True)
class EulerFactorReport:
    g: int
    delta: int
    modulus: int
    truncation: int
    support_ok: bool
    bad_indices: tuple[int, ...]
    support: tuple[int, ...]  # indices with a nonzero quotient coefficient
    bound_ratio: float  # max sampled |P_delta(it, chi)| / tau(delta)^{2g}


def _twist_vectors(chi: DirichletCharacter | None, n_max: int) -> tuple[np.ndarray, int]:
    if chi is None or chi.modulus == 1:
        return np.zeros(n_max + 1, dtype=np.int64), 1
    ang = chi.group.angle_numerators(np.array([chi.exponents]), np.arange(n_max + 1))[0]
    return ang, chi.group.exponent


def euler_factor_check(lam: LCoefficients, delta: int, chi: DirichletCharacter | None, L_trunc: int,
                       t_samples: int = 64) -> EulerFactorReport:
    """Formal Dirichlet-series division P = (sum_l lambda(delta l) chi(l) l^-s) / L(s, chi) up to L_trunc.

    Coefficients live in Z[zeta_L] (L the exponent of the character group),
    stored as integer vectors over powers of zeta_L; zero tests reduce modulo
    the cyclotomic polynomial, so the support check is exact.
    """
    if delta < 1:
        raise ValueError("delta must be positive")
    n_max = L_trunc
    ang, L = _twist_vectors(chi, n_max)
    lam_vals = [0] + [lam(l) for l in range(1, n_max + 1)]
    num_vals = [0] + [lam(delta * l) for l in range(1, n_max + 1)]
    if lam_vals[1] != 1:
        raise ZeroDivisionError("lambda(1) must be 1")

    def mono(c: int, a: int) -> np.ndarray:
        v = np.zeros(L, dtype=object)
        if a >= 0:
            v[a % L] = c
        return v

    P = [None] * (n_max + 1)
    # quotient coefficient P(n) = D(n) - sum_{d | n, d > 1} L(d) P(n/d)
    acc = [mono(num_vals[n], int(ang[n])) if n else None for n in range(n_max + 1)]
    P[1] = acc[1]
    for n in range(1, n_max + 1):
        P[n] = acc[n]
        if not np.any(P[n]):
            continue
        for dd in range(2, n_max // n + 1):
            if ang[dd] < 0 or lam_vals[dd] == 0:
                continue
            acc[n * dd] = acc[n * dd] - lam_vals[dd] * np.roll(P[n], int(ang[dd]))
    primes = set(prime_factors(delta)) if delta > 1 else set()
    support, bad = [], []
    for n in range(1, n_max + 1):
        if L == 1:
            nz = P[n][0] != 0
        else:
            nz = not _is_zero_in_cyclotomic_field(P[n], L)
        if nz:
            support.append(n)
            if not set(prime_factors(n)) <= primes:
                bad.append(n)
    # sample P_delta(it) on a grid of t
    ts = np.linspace(-20.0, 20.0, t_samples)
    zs = np.exp(2j * np.pi * np.arange(L) / L)
    vals = np.zeros(len(ts), dtype=complex)
    for n in support:
        coef = complex(np.dot(P[n].astype(np.float64), zs))
        vals += coef * np.exp(-1j * ts * math.log(n))
    ratio = float(np.max(np.abs(vals))) / tau(delta) ** (2 * lam.g) if support else 0.0
    modulus = 1 if chi is None else chi.modulus
    return EulerFactorReport(lam.g, delta, modulus, L_trunc, not bad, tuple(bad), tuple(support), ratio)
