"""Dirichlet characters as exponent vectors over a cyclic decomposition of (Z/q)*.

A character mod q is stored by its exponent vector ``e``; on a unit ``n`` with
discrete-log vector ``x`` it takes the value exp(2 pi i sum_j e_j x_j / d_j).
The angle sum_j e_j x_j (L / d_j) mod L, with L the group exponent, is kept
as an exact integer so that comparisons between roots of unity never go
through floating point.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property, lru_cache

import numpy as np

from .arith import divisors, euler_phi, factorize, prime_factors


def _is_generator(g: int, modulus: int, order: int) -> bool:
    if math.gcd(g, modulus) != 1:
        return False
    return all(pow(g, order // ell, modulus) != 1 for ell in prime_factors(order))


def _smallest_primitive_root(pk: int) -> int:
    order = euler_phi(pk)
    g = 2
    while not _is_generator(g, pk, order):
        g += 1
    return g


def _crt_lift(r: int, pk: int, q: int) -> int:
    """The residue mod q congruent to r mod pk and to 1 mod q/pk."""
    rest = q // pk
    if rest == 1:
        return r % q
    # x = 1 + rest * t with 1 + rest * t = r (mod pk)
    t = ((r - 1) * pow(rest, -1, pk)) % pk
    return (1 + rest * t) % q


def _local_factors(p: int, e: int) -> list[tuple[int, int]]:
    pk = p**e
    if p == 2:
        if e == 1:
            return []
        if e == 2:
            return [(3, 2)]
        return [(pk - 1, 2), (5, 2 ** (e - 2))]
    return [(_smallest_primitive_root(pk), (p - 1) * p ** (e - 1))]


def _root_of_unity(k: int, L: int) -> complex:
    frac = Fraction(k % L, L)
    # exact values where they exist, so that real characters are exactly real
    exact = {Fraction(0): 1 + 0j, Fraction(1, 2): -1 + 0j, Fraction(1, 4): 1j, Fraction(3, 4): -1j}
    if frac in exact:
        return exact[frac]
    theta = 2.0 * math.pi * frac.numerator / frac.denominator
    return complex(math.cos(theta), math.sin(theta))


class CharacterGroup:
    """The dual of (Z/q)*, with a deterministic cyclic decomposition."""

    def __init__(self, modulus: int):
        if modulus < 1:
            raise ValueError(f"modulus must be positive, got {modulus}")
        self.modulus = q = modulus
        gens: list[tuple[int, int]] = []
        for p, e in factorize(q).factors:
            pk = p**e
            for g, d in _local_factors(p, e):
                gens.append((_crt_lift(g, pk, q), d))
        self.generators: tuple[tuple[int, int], ...] = tuple(gens)
        self.orders = np.array([d for _, d in gens], dtype=np.int64)
        self.exponent = math.lcm(*[d for _, d in gens]) if gens else 1
        self._weights = self.exponent // self.orders if gens else np.zeros(0, dtype=np.int64)

        r = len(gens)
        dlog = np.full((q, max(r, 1)), -1, dtype=np.int64)
        residues = np.array([1 % q], dtype=np.int64)
        vectors = np.zeros((1, r), dtype=np.int64)
        for j, (g, d) in enumerate(gens):
            powers = np.empty(d, dtype=np.int64)
            powers[0] = 1
            for x in range(1, d):
                powers[x] = (powers[x - 1] * g) % q
            residues = (residues[:, None] * powers[None, :] % q).reshape(-1)
            new = np.repeat(vectors, d, axis=0)
            new[:, j] = np.tile(np.arange(d), len(vectors))
            vectors = new
        if r == 0:
            dlog[residues, 0] = 0
        else:
            dlog[residues] = vectors
        self.dlog_table = dlog
        if len(residues) != euler_phi(q) or len(np.unique(residues)) != len(residues):
            raise AssertionError(f"unit group decomposition failed for q={q}")

    def __repr__(self) -> str:
        return f"CharacterGroup({self.modulus}, generators={list(self.generators)})"

    @property
    def order(self) -> int:
        return int(np.prod(self.orders)) if len(self.orders) else 1

    def is_unit(self, n: int) -> bool:
        return math.gcd(n, self.modulus) == 1

    def exponent_vector(self, n: int) -> tuple[int, ...] | None:
        if not self.is_unit(n):
            return None
        if not self.generators:
            return ()
        return tuple(int(v) for v in self.dlog_table[n % self.modulus])

    def angle_numerators(self, exps: np.ndarray, ns) -> np.ndarray:
        """Integer angles k (chi(n) = exp(2 pi i k / L)) for each row of ``exps`` and each n.

        Non-units get -1.
        """
        ns = np.asarray(ns, dtype=np.int64) % self.modulus
        exps = np.atleast_2d(np.asarray(exps, dtype=np.int64))
        if not self.generators:
            return np.zeros((exps.shape[0], ns.size), dtype=np.int64)
        x = self.dlog_table[ns]  # (len(ns), r)
        unit = x[:, 0] >= 0
        ang = (exps * self._weights) @ x.T % self.exponent
        ang[:, ~unit] = -1
        return ang

    def value_matrix(self, exps: np.ndarray, ns) -> np.ndarray:
        ang = self.angle_numerators(exps, ns)
        vals = np.exp(2j * np.pi * ang / self.exponent)
        vals[ang < 0] = 0
        return vals

    @cached_property
    def all_exponents(self) -> np.ndarray:
        if not self.generators:
            return np.zeros((1, 0), dtype=np.int64)
        grids = np.meshgrid(*[np.arange(d) for _, d in self.generators], indexing="ij")
        return np.stack([g.reshape(-1) for g in grids], axis=1).astype(np.int64)

    def characters(self) -> list[DirichletCharacter]:
        return [DirichletCharacter(self, tuple(int(v) for v in row)) for row in self.all_exponents]

    def _kernel_residues(self, f: int) -> np.ndarray:
        """Units mod q that are congruent to 1 mod f."""
        cand = np.arange(1, self.modulus, f, dtype=np.int64)
        return cand[self.dlog_table[cand, 0] >= 0]

    def trivial_on(self, exps: np.ndarray, f: int) -> np.ndarray:
        """Boolean mask: which characters factor through modulus f (f | q)."""
        exps = np.atleast_2d(exps)
        if not self.generators:
            return np.ones(exps.shape[0], dtype=bool)
        ang = self.angle_numerators(exps, self._kernel_residues(f))
        return np.all(ang == 0, axis=1)

    @cached_property
    def primitive_exponents(self) -> np.ndarray:
        exps = self.all_exponents
        keep = np.ones(exps.shape[0], dtype=bool)
        for p in prime_factors(self.modulus):
            keep &= ~self.trivial_on(exps, self.modulus // p)
        if self.modulus == 1:
            keep[:] = True
        return exps[keep]


@dataclass(frozen=True)
class DirichletCharacter:
    group: CharacterGroup = field(repr=False, compare=False)
    exponents: tuple[int, ...]

    def __post_init__(self):
        if len(self.exponents) != len(self.group.generators):
            raise ValueError("exponent vector length does not match the group")
        reduced = tuple(e % d for e, (_, d) in zip(self.exponents, self.group.generators))
        object.__setattr__(self, "exponents", reduced)

    @property
    def modulus(self) -> int:
        return self.group.modulus

    def __hash__(self):
        return hash((self.modulus, self.exponents))

    def __eq__(self, other):
        if not isinstance(other, DirichletCharacter):
            return NotImplemented
        return self.modulus == other.modulus and self.exponents == other.exponents

    def angle(self, n: int) -> Fraction | None:
        """chi(n) = exp(2 pi i * angle), or None when gcd(n, q) > 1."""
        ang = self.group.angle_numerators(np.array([self.exponents], dtype=np.int64), [n])[0, 0]
        if ang < 0:
            return None
        return Fraction(int(ang), self.group.exponent)

    def __call__(self, n: int) -> complex:
        return evaluate(self, n)

    def conjugate(self) -> DirichletCharacter:
        return DirichletCharacter(self.group, tuple(-e for e in self.exponents))

    def is_principal(self) -> bool:
        return all(e == 0 for e in self.exponents)

    @cached_property
    def conductor(self) -> int:
        return conductor(self)

    def is_primitive(self) -> bool:
        return self.conductor == self.modulus


@lru_cache(maxsize=2048)
def build_group(q: int) -> CharacterGroup:
    return CharacterGroup(q)


def principal_character(q: int) -> DirichletCharacter:
    g = build_group(q)
    return DirichletCharacter(g, (0,) * len(g.generators))


def evaluate(chi: DirichletCharacter, n: int) -> complex:
    a = chi.angle(n)
    if a is None:
        return 0j
    return _root_of_unity(a.numerator, a.denominator)


def conductor(chi: DirichletCharacter) -> int:
    exps = np.array([chi.exponents], dtype=np.int64)
    for f in divisors(chi.modulus):
        if chi.group.trivial_on(exps, f)[0]:
            return f
    raise AssertionError("unreachable: chi is always trivial on the kernel mod q")


def primitive_characters(q: int) -> list[DirichletCharacter]:
    g = build_group(q)
    return [DirichletCharacter(g, tuple(int(v) for v in row)) for row in g.primitive_exponents]


def orthogonality_sum(q: int, m: int, n: int) -> complex:
    """(1/phi(q)) sum over all chi mod q of chi(m) conj(chi(n))."""
    if math.gcd(m * n, q) != 1:
        raise ValueError(f"orthogonality requires gcd(mn, q) = 1, got m={m}, n={n}, q={q}")
    g = build_group(q)
    vals = g.value_matrix(g.all_exponents, [m, n])
    terms = vals[:, 0] * np.conj(vals[:, 1])
    return complex(math.fsum(terms.real.tolist()), math.fsum(terms.imag.tolist())) / euler_phi(q)


@lru_cache(maxsize=1 << 18)
def _primitive_sum_at(q: int, r: int) -> complex:
    g = build_group(q)
    exps = g.primitive_exponents
    if exps.shape[0] == 0:
        return 0j
    ang = g.angle_numerators(exps, [r])[:, 0]
    if ang[0] < 0:
        return 0j
    counts = np.bincount(ang, minlength=g.exponent)
    nz = np.nonzero(counts)[0]
    roots = [_root_of_unity(int(k), g.exponent) for k in nz]
    re = math.fsum(int(c) * z.real for c, z in zip(counts[nz], roots))
    im = math.fsum(int(c) * z.imag for c, z in zip(counts[nz], roots))
    return complex(re, im)


def primitive_character_sum(q: int, m: int, n: int) -> complex:
    """sum over primitive chi mod q of chi(m) conj(chi(n)), by enumeration.

    Memoized on (q, m * n^{-1} mod q), which determines the value.
    """
    if math.gcd(m * n, q) != 1:
        return 0j
    if q == 1:
        return 1 + 0j
    r = (m * pow(n, -1, q)) % q
    return _primitive_sum_at(q, r)
