"""Ratio tests for the classical large sieve inequalities.

Each check evaluates both sides for a given coefficient vector and reports
lhs/rhs; since the inequalities are theorems, a ratio above 1 + 1e-9 means a
bug. Vectors come from seeded complex Gaussians and from structured
families (spikes, Mobius, characters, constants) that sit closer to the
extremal shape Q^2 + N.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .arith import SIEVE_BOUND, euler_phi, mobius
from .characters import build_group
from .weights import GAUSS_ORDER, QuadratureError, TestFunction, _halve, _panel_nodes, mellin_l1_norm

RATIO_TOL = 1e-9
HLSI_QUAD_TOL = 1e-6
VECTOR_KINDS = ("gaussian", "spike", "mobius", "character", "constant")


@dataclass(frozen=True)
class SieveCheckResult:
    lhs: float
    rhs: float
    ratio: float
    config: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.ratio <= 1.0 + RATIO_TOL


def _result(lhs: float, rhs: float, **config) -> SieveCheckResult:
    ratio = lhs / rhs if rhs > 0 else 0.0
    return SieveCheckResult(float(lhs), float(rhs), float(ratio), config)


def _norm2(a: np.ndarray) -> float:
    return math.fsum((np.abs(a) ** 2).tolist())


def _fsum_abs2(v: np.ndarray) -> float:
    return math.fsum((v.real**2 + v.imag**2).ravel().tolist())


def _primitive_values(q: int, ns: np.ndarray) -> np.ndarray:
    g = build_group(q)
    return g.value_matrix(g.primitive_exponents, ns)


# ---------------------------------------------------------------------------
# multiplicative characters


def lsi_shifted(a, Q: int, M: int = 0, **echo) -> SieveCheckResult:
    """sum_{q<=Q} q/phi(q) sum*_chi |sum_{M<n<=M+N} a_n chi(n)|^2 against (Q^2+N) ||a||^2."""
    a = np.asarray(a, dtype=np.complex128)
    N, Q, M = a.size, int(Q), int(M)
    if N < 1 or Q < 1 or M < 0:
        raise ValueError(f"need N, Q >= 1 and M >= 0, got N={N}, Q={Q}, M={M}")
    ns = np.arange(M + 1, M + N + 1, dtype=np.int64)
    terms = []
    for q in range(1, Q + 1):
        V = _primitive_values(q, ns)
        if V.shape[0]:
            terms.append(q / euler_phi(q) * _fsum_abs2(V @ a))
    return _result(math.fsum(terms), (Q * Q + N) * _norm2(a), Q=Q, N=N, M=M, **echo)


def lsi_multiplicative(a, Q: int, **echo) -> SieveCheckResult:
    return lsi_shifted(a, Q, 0, **echo)


# ---------------------------------------------------------------------------
# additive characters


def farey_fractions(Q: int) -> list[tuple[int, int]]:
    """Reduced a/q with q <= Q and 1 <= a <= q, ordered by (q, a); 1/1 stands for 0 mod 1."""
    return [(a, q) for q in range(1, int(Q) + 1) for a in range(1, q + 1) if math.gcd(a, q) == 1]


def _additive_matrix(Q: int, N: int) -> np.ndarray:
    fr = farey_fractions(Q)
    alpha = np.array([a % q / q for a, q in fr])
    ns = np.arange(1, N + 1)
    return np.exp(2j * np.pi * np.outer(alpha, ns))


def lsi_additive(a, Q: int, **echo) -> SieveCheckResult:
    a = np.asarray(a, dtype=np.complex128)
    N, Q = a.size, int(Q)
    if N < 1 or Q < 1:
        raise ValueError(f"need N, Q >= 1, got N={N}, Q={Q}")
    lhs = _fsum_abs2(_additive_matrix(Q, N) @ a)
    return _result(lhs, (Q * Q + N) * _norm2(a), Q=Q, N=N, **echo)


def lsi_additive_dual(gamma, Q: int, N: int, **echo) -> SieveCheckResult:
    """gamma is indexed like ``farey_fractions(Q)``."""
    gamma = np.asarray(gamma, dtype=np.complex128)
    Q, N = int(Q), int(N)
    E = _additive_matrix(Q, N)
    if gamma.size != E.shape[0]:
        raise ValueError(f"gamma has {gamma.size} entries, expected {E.shape[0]} Farey fractions")
    lhs = _fsum_abs2(gamma @ E)
    return _result(lhs, (Q * Q + N) * _norm2(gamma), Q=Q, N=N, **echo)


# ---------------------------------------------------------------------------
# hybrid


def _hlsi_edges(T: float, N: int) -> np.ndarray:
    # the integrand is a trigonometric polynomial with frequencies log(m/n) <= log N
    width = T if N < 2 else min(T, math.pi / math.log(N))
    k = max(1, math.ceil(2 * T / width - 1e-12))
    return np.linspace(-T, T, k + 1)


def hlsi(a, Q: int, T: float, quad_tol: float = HLSI_QUAD_TOL, **echo) -> SieveCheckResult:
    """sum_{q<=Q} sum*_chi int_{-T}^{T} |sum a_n chi(n) n^{it}|^2 dt against (Q^2 T + N) ||a||^2.

    The t-integral is composite Gauss-Legendre with panels no wider than
    pi/log N, checked against halved panels; a disagreement beyond
    quad_tol * rhs raises QuadratureError.
    """
    a = np.asarray(a, dtype=np.complex128)
    N, Q, T = a.size, int(Q), float(T)
    if T < 1:
        raise ValueError(f"T must be at least 1, got {T}")
    rhs = (Q * Q * T + N) * _norm2(a)
    coarse = _hlsi_edges(T, N)
    logn = np.log(np.arange(1, N + 1, dtype=np.float64))
    rules = [_panel_nodes(e, GAUSS_ORDER) for e in (coarse, _halve(coarse))]
    phases = [np.exp(1j * np.outer(logn, t)) for t, _ in rules]
    totals = [[], []]
    ns = np.arange(1, N + 1, dtype=np.int64)
    for q in range(1, Q + 1):
        V = _primitive_values(q, ns)
        if not V.shape[0]:
            continue
        Va = V * a
        for k, ((_, w), E) in enumerate(zip(rules, phases)):
            P = Va @ E
            per_t = (P.real**2 + P.imag**2).sum(axis=0)
            totals[k].append(math.fsum((w * per_t).tolist()))
    lhs_coarse, lhs = math.fsum(totals[0]), math.fsum(totals[1])
    if abs(lhs - lhs_coarse) > quad_tol * max(rhs, 1e-300):
        raise QuadratureError(f"t-integral did not converge: {lhs_coarse!r} vs {lhs!r}")
    return _result(lhs, rhs, Q=Q, N=N, T=T, **echo)


def hlsi_closed_form(a, Q: int, T: float) -> float:
    """The left side of the hybrid inequality with the t-integral done exactly:
    int (m/n)^{it} dt = 2T when m = n and 2 sin(T log(m/n))/log(m/n) otherwise."""
    a = np.asarray(a, dtype=np.complex128)
    N = a.size
    logn = np.log(np.arange(1, N + 1, dtype=np.float64))
    L = logn[:, None] - logn[None, :]
    with np.errstate(invalid="ignore", divide="ignore"):
        K = np.where(L == 0, 2 * T, 2 * np.sin(T * L) / np.where(L == 0, 1, L))
    ns = np.arange(1, N + 1, dtype=np.int64)
    terms = []
    for q in range(1, int(Q) + 1):
        V = _primitive_values(q, ns) * a
        if V.shape[0]:
            terms.append(math.fsum(np.einsum("cm,mn,cn->c", V, K, np.conj(V)).real.tolist()))
    return math.fsum(terms)


# ---------------------------------------------------------------------------
# bilinear forms


def bilinear_form(F: TestFunction, a, b, Q: int) -> complex:
    """sum_{q<=Q} sum*_chi sum_{m,n} a_m b_n F(m, n) chi(m) conj(chi(n))."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    ms = np.arange(1, a.size + 1, dtype=np.int64)
    ns = np.arange(1, b.size + 1, dtype=np.int64)
    Fmat = F(ms[:, None].astype(np.float64), ns[None, :].astype(np.float64))
    re, im = [], []
    for q in range(1, int(Q) + 1):
        g = build_group(q)
        exps = g.primitive_exponents
        if not exps.shape[0]:
            continue
        Vm = g.value_matrix(exps, ms) * a
        Vn = np.conj(g.value_matrix(exps, ns)) * b
        v = np.einsum("cm,mn,cn->c", Vm, Fmat, Vn)
        re.append(math.fsum(v.real.tolist()))
        im.append(math.fsum(v.imag.tolist()))
    return complex(math.fsum(re), math.fsum(im))


def bilinear_bound_check(cfg, L: float | None = None, Q: int | None = None, **echo) -> SieveCheckResult:
    """|bilinear form| against L (Q^2+M)^{1/2} (Q^2+N)^{1/2} ||a|| ||b||, sharp q <= Q.

    ``cfg`` is a bilinear configuration; Q defaults to the top of its modulus
    range and L to the Mellin L1 norm of its test function.
    """
    a, b = cfg.a(), cfg.b()
    if Q is None:
        Q = int(math.floor(cfg.p.cutoff.x_hi * cfg.p.Q))
    if L is None:
        L = mellin_l1_norm(cfg.F)
    M = N = cfg.N
    lhs = abs(bilinear_form(cfg.F, a, b, Q))
    rhs = L * math.sqrt((Q * Q + M) * (Q * Q + N) * _norm2(a) * _norm2(b))
    return _result(lhs, rhs, Q=Q, N=N, M=M, L=float(L), **echo)


# ---------------------------------------------------------------------------
# vectors and suites


def _mobius_any(n: int) -> int:
    """mu(n), by trial division past the sieve range (shifted windows reach 10^6 + N)."""
    if n <= SIEVE_BOUND:
        return mobius(n)
    sign, p = 1, 2
    while p * p <= n:
        if n % p == 0:
            n //= p
            if n % p == 0:
                return 0
            sign = -sign
        p += 1
    return -sign if n > 1 else sign


def make_vector(kind: str, size: int, rng: np.random.Generator, offset: int = 0) -> np.ndarray:
    """A test vector indexed by offset < n <= offset + size."""
    ns = np.arange(offset + 1, offset + size + 1)
    if kind == "gaussian":
        return rng.standard_normal(size) + 1j * rng.standard_normal(size)
    if kind == "spike":
        v = np.zeros(size, dtype=np.complex128)
        v[rng.integers(size)] = 1.0
        return v
    if kind == "mobius":
        return np.array([_mobius_any(int(n)) for n in ns], dtype=np.complex128)
    if kind == "character":
        q = int(rng.integers(3, 30))
        g = build_group(q)
        exps = g.all_exponents
        return g.value_matrix(exps[rng.integers(exps.shape[0])], ns)[0]
    if kind == "constant":
        return np.ones(size, dtype=np.complex128)
    raise ValueError(f"unknown vector kind {kind!r}; expected one of {VECTOR_KINDS}")


SUITES = ("multiplicative", "shifted", "additive", "dual", "hybrid")


def trial(suite: str, seed: int, index: int, N: int, Q: int, T: float = 2.0, M: int = 10**6) -> SieveCheckResult:
    """One seeded trial; the vector kind cycles through VECTOR_KINDS."""
    rng = np.random.default_rng([seed, index])
    kind = VECTOR_KINDS[index % len(VECTOR_KINDS)]
    echo = {"source": kind, "seed": seed, "trial": index}
    if suite == "multiplicative":
        return lsi_multiplicative(make_vector(kind, N, rng), Q, **echo)
    if suite == "shifted":
        return lsi_shifted(make_vector(kind, N, rng, offset=M), Q, M, **echo)
    if suite == "additive":
        return lsi_additive(make_vector(kind, N, rng), Q, **echo)
    if suite == "dual":
        return lsi_additive_dual(make_vector(kind, len(farey_fractions(Q)), rng), Q, N, **echo)
    if suite == "hybrid":
        return hlsi(make_vector(kind, N, rng), Q, T, **echo)
    raise ValueError(f"unknown suite {suite!r}; expected one of {SUITES}")


@dataclass(frozen=True)
class SuiteSummary:
    suite: str
    trials: int
    min_ratio: float
    median_ratio: float
    max_ratio: float
    argmax_trial: int
    argmax_source: str
    failures: int

    def as_row(self) -> dict:
        return asdict(self)


def run_suite(suite: str, trials: int, N: int, Q: int, seed: int = 0, T: float = 2.0, M: int = 10**6):
    """Returns the per-trial results and their summary."""
    results = [trial(suite, seed, i, N, Q, T, M) for i in range(trials)]
    if not results:
        return results, SuiteSummary(suite, 0, math.nan, math.nan, math.nan, -1, "", 0)
    ratios = np.array([r.ratio for r in results])
    k = int(np.argmax(ratios))
    summary = SuiteSummary(
        suite,
        trials,
        float(ratios.min()),
        float(np.median(ratios)),
        float(ratios.max()),
        k,
        results[k].config["source"],
        sum(not r.ok for r in results),
    )
    return results, summary
