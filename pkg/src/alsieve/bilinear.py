"""Bilinear forms S(A x B) over the primitive-character family, their
diagonal main terms, the pieces S_1, S_2, S^+, S^*, the inner sums
S_chi(d1, d2) and V_{d1 d2}(y), the main term for factorized test
functions G, and asymptotic sweeps over Q.
"""

from __future__ import annotations

import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import delta as dl
from .arith import delta_factor, euler_phi, phi_star, singular_constant
from .characters import DirichletCharacter, build_group
from .coeffs import (
    CoefficientSequence,
    LCoefficients,
    MollifierCoefficients,
    build_sequence,
    mollifier_mu_w,
    zeta_power,
)
from .weights import (
    GAUSS_ORDER,
    SpecialTestFunction,
    TestFunction,
    _panel_nodes,
    default_test_function,
    integrate,
    localized_test_function,
)


@dataclass(frozen=True)
class BilinearConfig:
    p: dl.DeltaParams
    F: TestFunction
    A: CoefficientSequence
    B: CoefficientSequence
    N: int
    singular: bool = False
    lam: LCoefficients | None = None
    rho_A: MollifierCoefficients | None = None
    rho_B: MollifierCoefficients | None = None

    def __post_init__(self):
        if self.A.N < self.N or self.B.N < self.N:
            raise ValueError("sequences are shorter than N")
        if self.F.N > self.N + 1e-9:
            raise ValueError(f"F is supported up to {self.F.N}, beyond N = {self.N}")

    @property
    def ms(self) -> np.ndarray:
        return np.arange(1, self.N + 1)

    def a(self) -> np.ndarray:
        return self.A.values[1 : self.N + 1]

    def b(self) -> np.ndarray:
        return self.B.values[1 : self.N + 1]

    def F_matrix(self) -> np.ndarray:
        m = self.ms.astype(np.float64)
        return self.F(m[:, None], m[None, :])


def _fsum(arr) -> float:
    return math.fsum(np.ravel(arr).tolist())


# ---------------------------------------------------------------------------
# S and the diagonal


def s_full(cfg: BilinearConfig) -> float:
    """The character-side triple sum, accumulated modulus by modulus."""
    ms = cfg.ms
    a, b = cfg.a(), cfg.b()
    if cfg.F.separable:
        r1, r2 = cfg.F.factors
        fa = a * r1(ms.astype(np.float64)) * cfg.F.scale
        fb = b * r2(ms.astype(np.float64))
        Fmat = None
    else:
        Fmat = cfg.F_matrix()
    re, im = [], []
    for q in cfg.p.moduli:
        g = build_group(q)
        exps = g.primitive_exponents
        if exps.shape[0] == 0:
            continue
        V = g.value_matrix(exps, ms)
        if Fmat is None:
            per_chi = (V @ fa) * np.conj(V @ fb)
        else:
            per_chi = np.einsum("cm,mn,cn->c", V * a, Fmat, np.conj(V) * b)
        w = cfg.p.psi(q / cfg.p.Q) / euler_phi(q)
        re.append(w * _fsum(per_chi.real))
        im.append(w * _fsum(per_chi.imag))
    imag = math.fsum(im)
    if abs(imag) > 1e-10 * max(1.0, abs(math.fsum(re))):
        raise ArithmeticError(f"S has imaginary part {imag}")
    return math.fsum(re)


def weighted_matrix(cfg: BilinearConfig) -> np.ndarray:
    """a_m b_n F(m, n)."""
    return cfg.a()[:, None] * cfg.b()[None, :] * cfg.F_matrix()


def s_from_delta(cfg: BilinearConfig, D: np.ndarray | None = None) -> float:
    """sum_{m,n} a_m b_n F(m,n) Delta(m,n), with Delta from the divisor expansion."""
    if D is None:
        D = dl.delta_matrix(cfg.ms, cfg.ms, cfg.p)
    return _fsum(weighted_matrix(cfg) * D)


def s_diag(cfg: BilinearConfig, D: np.ndarray | None = None) -> float:
    ms = cfg.ms
    if D is None:
        dd = np.array([dl.diagonal_delta(int(m), cfg.p) for m in ms])
    else:
        dd = np.diag(D)
    w = cfg.a() * cfg.b() * cfg.F(ms.astype(np.float64), ms.astype(np.float64))
    return _fsum(w * dd)


def s_diag_main(cfg: BilinearConfig) -> float:
    """Psi_bar * singular constant * Q * sum_m a_m b_m delta(m) F(m, m)."""
    ms = cfg.ms
    dm = np.array([delta_factor(int(m)) for m in ms])
    w = cfg.a() * cfg.b() * dm * cfg.F(ms.astype(np.float64), ms.astype(np.float64))
    return cfg.p.cutoff.mean * singular_constant() * cfg.p.Q * _fsum(w)


@dataclass(frozen=True)
class Pieces:
    S: float
    S_diag: float
    S1: float
    S2: float
    S_plus: float
    S_star: float
    diagonal_correction: float
    residual: float
    window_ok: bool


def s_pieces(cfg: BilinearConfig) -> Pieces:
    """S_1, S_2, S^+, S^* and the bookkeeping residual.

    S - S_diag = S_1 + S_2 - sum_m a_m b_m F(m,m) Delta_2(m,m); the last term is
    written as the Delta' deficit on the diagonal plus Psi_hat(0) Delta_0''(m,m).
    """
    p = cfg.p
    W = weighted_matrix(cfg)
    N = cfg.N
    s1, s2, splus, corr = [], [], [], []
    window = True
    for i in range(N):
        for j in range(N):
            w = W[i, j]
            if w == 0:
                continue
            m, n = i + 1, j + 1
            s2.append(w * dl.delta2(m, n, p))
            if m == n:
                deficit = dl.delta_prime(m, m, p) - dl.diagonal_delta(m, p)
                corr.append(w * (deficit + p.psi_hat0 * dl.delta0_double_prime(m, m, p)))
            else:
                s1.append(w * dl.delta1(m, n, p))
                splus.append(w * dl.delta_plus(m, n, p, cfg.singular))
                window = window and dl.window_ok(m, n, p)
    D = dl.delta_matrix(cfg.ms, cfg.ms, p)
    S = s_from_delta(cfg, D)
    Sd = s_diag(cfg, D)
    S1, S2, Sp, C = math.fsum(s1), math.fsum(s2), math.fsum(splus), math.fsum(corr)
    resid = abs(S - Sd - S1 - S2 - C)
    return Pieces(S, Sd, S1, S2, Sp, S1 - Sp, C, resid, window)


# ---------------------------------------------------------------------------
# inner sums


def _divisible(ms: np.ndarray, d: int) -> np.ndarray:
    return ms[ms % d == 0]


def s_chi(cfg: BilinearConfig, d1: int, d2: int, b: int, y: float, chi: DirichletCharacter | None) -> complex:
    """sum over d1 | m, d2 | n, (mn, b) = 1 of a_m b_n F(m,n) Omega(|m-n|/y) chi(m/d1) conj(chi(n/d2))."""
    ms, ns = _divisible(cfg.ms, d1), _divisible(cfg.ms, d2)
    ms = ms[np.gcd(ms, b) == 1]
    ns = ns[np.gcd(ns, b) == 1]
    if len(ms) == 0 or len(ns) == 0:
        return 0j
    if chi is None:
        cm, cn = np.ones(len(ms)), np.ones(len(ns))
    else:
        ex = np.array([chi.exponents])
        cm = chi.group.value_matrix(ex, ms // d1)[0]
        cn = np.conj(chi.group.value_matrix(ex, ns // d2)[0])
    om = cfg.p.cutoff.omega(np.abs(ms[:, None] - ns[None, :]) / y)
    T = (cfg.A.values[ms] * cm)[:, None] * (cfg.B.values[ns] * cn)[None, :]
    T = T * cfg.F(ms[:, None].astype(np.float64), ns[None, :].astype(np.float64)) * om
    return complex(_fsum(T.real), _fsum(T.imag))


@dataclass(frozen=True)
class InnerSum:
    value: float
    approximation: float | None
    gap: float | None


def _rho_lcm_sum(rho: MollifierCoefficients, d: int) -> float:
    return math.fsum(float(v) / math.lcm(r, d) for r, v in rho.items())


def v_inner(cfg: BilinearConfig, d1: int, d2: int, y: float, compare: bool = False) -> InnerSum:
    """V_{d1 d2}(y); with ``compare`` the integral replacement
    (sum rho_A(r)/[r,d1]) (sum rho_B(r)/[r,d2]) iint F(u,v)/sqrt(uv) Omega(|u-v|/y) du dv
    is evaluated too (lambda = 1 sequences only)."""
    val = s_chi(cfg, d1, d2, 1, y, None).real
    if not compare:
        return InnerSum(val, None, None)
    if cfg.rho_A is None or cfg.rho_B is None:
        raise ValueError("the integral replacement needs the mollifier coefficients")
    approx = _rho_lcm_sum(cfg.rho_A, d1) * _rho_lcm_sum(cfg.rho_B, d2) * _strip_integral(cfg, y)
    return InnerSum(val, approx, abs(val - approx))


def _strip_integral(cfg: BilinearConfig, y: float) -> float:
    """iint F(u,v) (uv)^{-1/2} Omega(|u-v|/y) du dv over [1, N]^2."""
    N = float(cfg.F.N)
    width = min(y / 4, (N - 1) / 8)
    edges = np.linspace(1.0, N, max(2, math.ceil((N - 1) / width)) + 1)
    x, w = _panel_nodes(edges, GAUSS_ORDER)
    parts = []
    for lo in range(0, len(x), 256):  # row blocks keep memory linear in the node count
        u, wu = x[lo : lo + 256, None], w[lo : lo + 256]
        vals = cfg.F(u, x[None, :]) / np.sqrt(u * x[None, :]) * cfg.p.cutoff.omega(np.abs(u - x[None, :]) / y)
        parts.append(float(wu @ vals @ w))
    return math.fsum(parts)


# ---------------------------------------------------------------------------
# factorized test functions G


def _diag_pairs(lam: LCoefficients, rho_A: MollifierCoefficients, rho_B: MollifierCoefficients, m_max: int):
    """For each m <= m_max: (m, coefficient rho_A(r1) rho_B(r2) lambda(l1) lambda(l2), l1 l2) with r1 l1 = r2 l2 = m."""
    ms, coefs, lls = [], [], []
    for r1, v1 in rho_A.items():
        for r2, v2 in rho_B.items():
            step = math.lcm(r1, r2)
            for m in range(step, m_max + 1, step):
                l1, l2 = m // r1, m // r2
                c = float(v1) * float(v2) * lam(l1) * lam(l2)
                if c:
                    ms.append(m)
                    coefs.append(c)
                    lls.append(l1 * l2)
    return np.array(ms, dtype=np.int64), np.array(coefs), np.array(lls, dtype=np.float64)


def _m_cutoff(G: SpecialTestFunction, rho_A, rho_B, Q: float, g: int, hi: float) -> int:
    # l1 l2 >= m^2 / (r1 r2); stop once G(1, y) is negligible (y >= 60 for the default G)
    X = max(rho_A.support[1], rho_B.support[1])
    return int(math.ceil(X * math.sqrt(60 * (hi * Q) ** g))) + 1


def theorem25_main_term(p: dl.DeltaParams, G: SpecialTestFunction, g: int, lam: LCoefficients,
                        rho_A: MollifierCoefficients, rho_B: MollifierCoefficients) -> float:
    """S Q sum_{r1 l1 = r2 l2} rho_A rho_B lambda lambda (r1 l1)^{-1} delta(r1 l1) int Psi(t) G(1, l1 l2 (tQ)^{-g}) dt."""
    if G.name == "zero":
        return 0.0
    lo, hi = p.cutoff.support
    m_max = _m_cutoff(G, rho_A, rho_B, p.Q, g, hi)
    ms, coefs, lls = _diag_pairs(lam, rho_A, rho_B, m_max)
    if len(ms) == 0:
        return 0.0
    dens = np.array([delta_factor(int(m)) for m in ms])
    edges = np.linspace(lo, hi, 17)
    t, wt = _panel_nodes(edges, GAUSS_ORDER)
    psi_t = p.cutoff(t) * wt
    ints = np.array([float(psi_t @ G(np.ones_like(t), L / (t * p.Q) ** g)) for L in lls])
    terms = coefs / ms * dens * ints
    return singular_constant() * p.Q * _fsum(terms)


def theorem25_direct_diagonal(p: dl.DeltaParams, G: SpecialTestFunction, g: int, lam: LCoefficients,
                              rho_A: MollifierCoefficients, rho_B: MollifierCoefficients) -> float:
    """The diagonal m = n with the test function G(1, l1 l2 / q^g) evaluated per modulus q."""
    lo, hi = p.cutoff.support
    m_max = _m_cutoff(G, rho_A, rho_B, p.Q, g, hi)
    ms, coefs, lls = _diag_pairs(lam, rho_A, rho_B, m_max)
    out = []
    base = coefs / ms
    for q in p.moduli:
        w = p.psi(q / p.Q) * phi_star(q) / euler_phi(q)
        if w == 0:
            continue
        mask = np.gcd(ms, q) == 1
        vals = base[mask] * G(np.ones(mask.sum()), lls[mask] / float(q) ** g)
        out.append(w * _fsum(vals))
    return math.fsum(out)


# ---------------------------------------------------------------------------
# experiments

REGIMES = ("thm22", "thm24", "thm24_plain")


@dataclass(frozen=True)
class ExperimentRow:
    Q: float
    N: int
    X: int
    S: float
    S_diag: float
    main_term: float
    abs_error: float
    normalized_error: float


@dataclass(frozen=True)
class ExperimentTable:
    rows: tuple[ExperimentRow, ...]
    metadata: dict = field(default_factory=dict)

    COLUMNS = ("Q", "N", "X", "S", "S_diag", "main_term", "abs_error", "normalized_error")

    @property
    def decay_ratio(self) -> float | None:
        """last normalized error over the first; None for a single row."""
        if len(self.rows) < 2:
            return None
        first = self.rows[0].normalized_error
        return self.rows[-1].normalized_error / first if first else math.inf


def regime_config(Q: float, regime: str = "thm22", C: float | None = None, weight: str = "one") -> BilinearConfig:
    """Per-Q configuration: thm22 takes N = Q^{3/4}; thm24 takes N = Q^{7/4} with a
    dyadic mollifier and the localized F (thm24_plain keeps the plain F). X = Q^{1/2}."""
    if regime not in REGIMES:
        raise ValueError(f"regime must be one of {REGIMES}, got {regime!r}")
    C = Q**0.25 if C is None else C
    p = dl.DeltaParams(Q, max(C, 2.0))
    X = max(1, round(Q**0.5))
    lam = zeta_power(1)
    if regime == "thm22":
        N = max(2, round(Q**0.75))
        rho = mollifier_mu_w(X, weight)
        F = default_test_function(N)
    else:
        N = max(2, round(Q**1.75))
        XA = max(1, X // 2)
        rho = mollifier_mu_w(X, weight, dyadic_start=XA)
        if regime == "thm24":
            F = localized_test_function(N, Q=Q, delta=0.25, XA=XA, XB=XA)
        else:
            F = default_test_function(N)
    A = build_sequence(lam, rho, N)
    return BilinearConfig(p, F, A, A, N, singular=True, lam=lam, rho_A=rho, rho_B=rho)


def experiment_row(Q: float, regime: str = "thm22", weight: str = "one") -> ExperimentRow:
    cfg = regime_config(Q, regime, weight=weight)
    D = dl.delta_matrix(cfg.ms, cfg.ms, cfg.p)
    S = s_from_delta(cfg, D)
    Sd = s_diag(cfg, D)
    main = s_diag_main(cfg)
    err = abs(S - Sd)
    X = cfg.rho_A.support[1] if cfg.rho_A else 0
    return ExperimentRow(float(Q), cfg.N, X, S, Sd, main, err, err / Q)


def _row_worker(args):
    return experiment_row(*args)


def config_hash(obj) -> str:
    return hashlib.sha256(json.dumps(obj, sort_keys=True).encode()).hexdigest()[:16]


def run_experiment(grid, regime: str = "thm22", weight: str = "one", workers: int = 1, seed: int = 0) -> ExperimentTable:
    """One row per Q (sorted); rows are independent, so they may run in separate processes."""
    grid = sorted(float(q) for q in grid)
    args = [(q, regime, weight) for q in grid]
    if workers > 1 and len(grid) > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_row_worker, args))
    else:
        rows = [experiment_row(*a) for a in args]
    meta = {
        "regime": regime,
        "test_function": "localized" if regime == "thm24" else "default",
        "mollifier_weight": weight,
        "grid": grid,
        "seed": seed,
        "workers": workers,
        "reduction": "fsum (correctly rounded, order independent)",
    }
    meta["config_hash"] = config_hash({k: meta[k] for k in ("regime", "mollifier_weight", "grid", "seed")})
    return ExperimentTable(tuple(rows), meta)


def row_dict(row: ExperimentRow) -> dict:
    return asdict(row)
