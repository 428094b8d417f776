"""Smooth weights: the cutoff Psi, test functions F and G, the kernel Omega,
the Euler-Maclaurin remainders Psi_1 and Psi_2, and Mellin transforms.

All integrals use composite Gauss-Legendre rules. Integrands carrying a
fractional part {.} are split at its jumps so every panel is smooth; each
result is compared against a rerun on halved panels and a
``QuadratureError`` is raised when the two disagree beyond tolerance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property, lru_cache
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import expit

ABS_TOL = 1e-10
REL_TOL = 1e-8
GAUSS_ORDER = 20


class QuadratureError(RuntimeError):
    """A composite rule failed to reach the requested tolerance."""


@lru_cache(maxsize=None)
def _gauss(order: int) -> tuple[np.ndarray, np.ndarray]:
    return np.polynomial.legendre.leggauss(order)


def _panel_nodes(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    xg, wg = _gauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    half = (b - a) / 2
    return ((a + b) / 2 + half * xg).ravel(), (half * wg).ravel()


def _refine(breaks: np.ndarray, max_width: float) -> np.ndarray:
    out = [breaks[:1]]
    for a, b in zip(breaks[:-1], breaks[1:]):
        k = max(1, math.ceil((b - a) / max_width - 1e-12))
        out.append(np.linspace(a, b, k + 1)[1:])
    return np.concatenate(out)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    breaks,
    max_width: float,
    order: int = GAUSS_ORDER,
    abs_tol: float = ABS_TOL,
    rel_tol: float = REL_TOL,
) -> float:
    """Composite Gauss-Legendre over the sorted breakpoints, with a halving check."""
    breaks = np.unique(np.asarray(breaks, dtype=np.float64))
    if breaks.size < 2:
        return 0.0
    coarse = _refine(breaks, max_width)
    fine = _halve(coarse)
    x1, w1 = _panel_nodes(coarse, order)
    x2, w2 = _panel_nodes(fine, order)
    v1 = math.fsum((w1 * f(x1)).tolist())
    v2 = math.fsum((w2 * f(x2)).tolist())
    if not math.isfinite(v2) or abs(v2 - v1) > max(abs_tol, rel_tol * abs(v2)):
        raise QuadratureError(f"composite rule did not converge: {v1!r} vs {v2!r}")
    return v2


def _halve(edges: np.ndarray) -> np.ndarray:
    mids = (edges[:-1] + edges[1:]) / 2
    out = np.empty(2 * edges.size - 1)
    out[0::2] = edges
    out[1::2] = mids
    return out


# ---------------------------------------------------------------------------
# smooth building blocks


def smooth_step(t):
    """C-infinity step: 0 for t <= 0, 1 for t >= 1."""
    t = np.asarray(t, dtype=np.float64)
    tc = np.clip(t, 1e-300, 1 - 1e-16)
    phi = 1.0 / tc - 1.0 / (1.0 - tc)
    out = expit(-phi)
    return np.where(t <= 0, 0.0, np.where(t >= 1, 1.0, out))


def smooth_step_derivatives(t):
    """(h, h', h'') for ``smooth_step``."""
    t = np.asarray(t, dtype=np.float64)
    inside = (t > 1e-3) & (t < 1 - 1e-3)
    tc = np.where(inside, t, 0.5)
    phi = 1.0 / tc - 1.0 / (1.0 - tc)
    h = expit(-phi)
    hh = h * expit(phi)
    d1phi = -1.0 / tc**2 - 1.0 / (1.0 - tc) ** 2
    d2phi = 2.0 / tc**3 - 2.0 / (1.0 - tc) ** 3
    h1 = -hh * d1phi
    h2 = -h1 * (1 - 2 * h) * d1phi - hh * d2phi
    # outside (1e-3, 1 - 1e-3) the derivatives are below 1e-400
    h = np.where(inside, h, smooth_step(t))
    return h, np.where(inside, h1, 0.0), np.where(inside, h2, 0.0)


# ---------------------------------------------------------------------------
# the cutoff Psi


@dataclass(frozen=True)
class SmoothCutoff:
    name: str
    evaluator: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    derivative: Callable[[np.ndarray], np.ndarray] = field(repr=False)
    support: tuple[float, float]
    params: tuple = ()

    def __post_init__(self):
        lo, hi = self.support
        if not 0 < lo < hi:
            raise ValueError(f"support must satisfy 0 < lo < hi, got {self.support}")

    def __call__(self, x):
        return self.evaluator(np.asarray(x, dtype=np.float64))

    @property
    def x_lo(self) -> float:
        return self.support[0]

    @property
    def x_hi(self) -> float:
        return self.support[1]

    @property
    def panel_width(self) -> float:
        return (self.x_hi - self.x_lo) / 8

    def _integrate(self, f, extra_breaks=()) -> float:
        breaks = np.concatenate([[self.x_lo, self.x_hi], np.asarray(extra_breaks, dtype=np.float64)])
        return integrate(f, breaks, self.panel_width)

    @cached_property
    def mean(self) -> float:
        """int Psi(x) dx."""
        return self._integrate(self.evaluator)

    @cached_property
    def mellin_at_zero(self) -> float:
        """int Psi(t) t^{-1} dt."""
        return self._integrate(lambda t: self.evaluator(t) / t)

    def omega(self, x):
        """(x Psi(x))' = Psi(x) + x Psi'(x)."""
        x = np.asarray(x, dtype=np.float64)
        return self.evaluator(x) + x * self.derivative(x)

    def weight_derivative(self, t):
        """(t^{-1} Psi(t))'."""
        t = np.asarray(t, dtype=np.float64)
        return self.derivative(t) / t - self.evaluator(t) / t**2

    @cached_property
    def psi2_constant(self) -> float:
        """c with |Psi_2(T)| <= c min(1, T): int |(t^{-1}Psi)'| max(1, t) dt.

        The panels are split where the derivative changes sign, so that the
        absolute value leaves no kink inside a panel.
        """
        grid = np.linspace(self.x_lo, self.x_hi, 2049)[1:-1]
        vals = self.weight_derivative(grid)
        flips = np.nonzero(np.sign(vals[:-1]) * np.sign(vals[1:]) < 0)[0]
        roots = [brentq(lambda t: float(self.weight_derivative(t)), grid[i], grid[i + 1], xtol=1e-15) for i in flips]
        return self._integrate(lambda t: np.abs(self.weight_derivative(t)) * np.maximum(1.0, t), roots)


@lru_cache(maxsize=None)
def bump_cutoff(lo: float = 1.0, hi: float = 2.0) -> SmoothCutoff:
    """exp(-1/((x-lo)(hi-x))) rescaled to peak value 1."""
    peak = ((hi - lo) / 2) ** 2

    def h(x):
        return (x - lo) * (hi - x)

    def f(x):
        x = np.asarray(x, dtype=np.float64)
        hx = h(x)
        inside = hx > 0
        safe = np.where(inside, hx, 1.0)
        return np.where(inside, np.exp(1.0 / peak - 1.0 / safe), 0.0)

    def df(x):
        x = np.asarray(x, dtype=np.float64)
        hx = h(x)
        inside = hx > 0
        safe = np.where(inside, hx, 1.0)
        return np.where(inside, f(x) * (lo + hi - 2 * x) / safe**2, 0.0)

    return SmoothCutoff("bump", f, df, (float(lo), float(hi)), (lo, hi))


CUTOFFS: dict[str, Callable[..., SmoothCutoff]] = {"bump": bump_cutoff}


def make_cutoff(name: str = "bump", **params) -> SmoothCutoff:
    try:
        factory = CUTOFFS[name]
    except KeyError:
        raise ValueError(f"unknown cutoff {name!r}; known: {sorted(CUTOFFS)}") from None
    return factory(**params)


@dataclass(frozen=True)
class OmegaKernel:
    base: SmoothCutoff

    def __call__(self, x):
        return self.base.omega(x)

    @property
    def support(self) -> tuple[float, float]:
        return self.base.support


# ---------------------------------------------------------------------------
# Euler-Maclaurin remainders


def _integer_breaks(lo: float, hi: float) -> np.ndarray:
    return np.arange(math.floor(lo) + 1, math.ceil(hi), dtype=np.float64)


def psi2(cutoff: SmoothCutoff, T: float) -> float:
    """Psi_2(T) = int_0^inf (t^{-1} Psi(t))' {tT} dt.

    With this, sum_{l >= 1} l^{-1} Psi(l/T) = Psi_hat(0) + Psi_2(T)/T.
    """
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    lo, hi = cutoff.support
    breaks = _integer_breaks(lo * T, hi * T) / T

    def integrand(t):
        s = t * T
        return cutoff.weight_derivative(t) * (s - np.floor(s))

    return cutoff._integrate(integrand, breaks)


def psi1(cutoff: SmoothCutoff, T: float) -> float:
    """Psi_1(T) with sum_{l >= 1} l^{-1} Psi(T/l) = Psi_hat(0) + Psi_1(T).

    Written as -int_0^inf Omega(tT) {1/t} dt and evaluated in s = 1/t,
    where the fractional part jumps at integers.
    """
    if T <= 0:
        raise ValueError(f"T must be positive, got {T}")
    lo, hi = cutoff.support
    s_lo, s_hi = T / hi, T / lo
    breaks = np.concatenate([[s_lo, s_hi], _integer_breaks(s_lo, s_hi)])

    def integrand(s):
        return cutoff.omega(T / s) * (s - np.floor(s)) / s**2

    width = (s_hi - s_lo) / 8
    return -integrate(integrand, breaks, width)


def lattice_sum_small_arg(cutoff: SmoothCutoff, T: float) -> float:
    """sum_{l >= 1} l^{-1} Psi(l/T), summed directly."""
    lo, hi = cutoff.support
    ls = np.arange(max(1, math.floor(lo * T)), math.ceil(hi * T) + 1, dtype=np.float64)
    return math.fsum((cutoff(ls / T) / ls).tolist())


def lattice_sum_large_arg(cutoff: SmoothCutoff, T: float) -> float:
    """sum_{l >= 1} l^{-1} Psi(T/l), summed directly."""
    lo, hi = cutoff.support
    ls = np.arange(max(1, math.floor(T / hi)), math.ceil(T / lo) + 1, dtype=np.float64)
    return math.fsum((cutoff(T / ls) / ls).tolist())


def euler_maclaurin_check(f, fprime, support: tuple[float, float]) -> float:
    """|sum_{l >= 1} f(l) - int_0^inf [f(t) + {t} f'(t)] dt| for f supported in ``support``."""
    lo, hi = support
    ls = np.arange(max(1, math.ceil(lo)), math.floor(hi) + 1, dtype=np.float64)
    lhs = math.fsum(np.asarray(f(ls), dtype=np.float64).tolist()) if ls.size else 0.0
    breaks = np.concatenate([[lo, hi], _integer_breaks(lo, hi)])
    width = max((hi - lo) / 64, 1e-3)
    rhs = integrate(lambda t: f(t) + (t - np.floor(t)) * fprime(t), breaks, width)
    return abs(lhs - rhs)


# ---------------------------------------------------------------------------
# test functions F(x, y)


def _log_ramp(N: float):
    """r(x) rising over [1, 2] and falling over [N/2, N], smooth in log x.

    Returns r together with x r'(x) and x^2 r''(x).
    """
    log2, logN = math.log(2.0), math.log(N)

    def parts(x):
        th = np.log(np.maximum(np.asarray(x, dtype=np.float64), 1e-300))
        a, a1, a2 = smooth_step_derivatives(th / log2)
        b, b1, b2 = smooth_step_derivatives((logN - th) / log2)
        a1, a2 = a1 / log2, a2 / log2**2
        b1, b2 = -b1 / log2, b2 / log2**2
        r = a * b
        r_th = a1 * b + a * b1
        r_thth = a2 * b + 2 * a1 * b1 + a * b2
        return r, r_th, r_thth - r_th

    return parts


@dataclass(frozen=True)
class TestFunction:
    name: str
    evaluator: Callable = field(repr=False)
    N: float
    derivative_bound_order: int = 2
    factors: tuple | None = field(default=None, repr=False)
    scale: float = 1.0
    params: tuple = ()

    __test__ = False  # not a pytest class

    def __call__(self, x, y):
        return self.evaluator(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))

    @property
    def separable(self) -> bool:
        return self.factors is not None


def default_test_function(N: float) -> TestFunction:
    """kappa r(x) r(y), with kappa chosen so x^i y^j |d^{i,j}F| <= 1 for i, j <= 2."""
    if N < 2:
        raise ValueError(f"N must be at least 2, got {N}")
    parts = _log_ramp(N)
    grid = np.exp(np.linspace(0.0, math.log(N), 20001))
    _, d1, d2 = parts(grid)
    sup = max(1.0, float(np.max(np.abs(d1))), float(np.max(np.abs(d2))))
    kappa = 1.0 / (sup * 1.001) ** 2

    def r(x):
        return parts(x)[0]

    def F(x, y):
        return kappa * r(x) * r(y)

    return TestFunction("default", F, float(N), 2, (r, r), kappa, (N,))


def localized_test_function(N: float, Q: float, delta: float, XA: float, XB: float) -> TestFunction:
    """Default F times smooth indicators of |log(x/y)| <= delta log Q and
    xy <= XA XB Q^{2 - 2 delta}."""
    base = default_test_function(N)
    ratio_edge = delta * math.log(Q)
    w1 = min(math.log(2.0), ratio_edge / 2)
    prod_edge = math.log(XA * XB) + (2 - 2 * delta) * math.log(Q)
    w2 = math.log(2.0)

    def F(x, y):
        lx, ly = np.log(x), np.log(y)
        ind1 = smooth_step((ratio_edge - np.abs(lx - ly)) / w1)
        ind2 = smooth_step((prod_edge - (lx + ly)) / w2)
        return base(x, y) * ind1 * ind2

    return TestFunction("localized", F, float(N), 2, None, base.scale, (N, Q, delta, XA, XB))


def make_test_function(name: str, N: float, **params) -> TestFunction:
    if name == "default":
        return default_test_function(N)
    if name == "localized":
        return localized_test_function(N, **params)
    raise ValueError(f"unknown test function {name!r}")


def derivative_sup(F: TestFunction, points: int = 50, h: float = 1e-3) -> np.ndarray:
    """max over a log-spaced grid of x^i y^j |d^{i,j} F|, 0 <= i, j <= 2, by finite differences.

    Works in theta = log x, where x d/dx = d/dtheta and x^2 d^2/dx^2 = d^2/dtheta^2 - d/dtheta.
    """
    th = np.linspace(0.0, math.log(F.N), points)
    T, P = np.meshgrid(th, th, indexing="ij")
    offs = (-h, 0.0, h)
    vals = np.stack([np.stack([F(np.exp(T + a), np.exp(P + b)) for b in offs]) for a in offs])

    def diff(v, order):
        # v has the stencil offsets on axis 0
        if order == 0:
            return v[1]
        if order == 1:
            return (v[2] - v[0]) / (2 * h)
        return (v[2] - 2 * v[1] + v[0]) / h**2

    theta = {}
    for a in range(3):
        for b in range(3):
            inner = np.stack([diff(vals[k], b) for k in range(3)])
            theta[a, b] = diff(inner, a)
    # x^i d_x^i in terms of theta derivatives
    to_x = {0: {0: 1.0}, 1: {1: 1.0}, 2: {2: 1.0, 1: -1.0}}
    out = np.zeros((3, 3))
    for i in range(3):
        for j in range(3):
            total = sum(ca * cb * theta[a, b] for a, ca in to_x[i].items() for b, cb in to_x[j].items())
            out[i, j] = float(np.max(np.abs(total)))
    return out


def mellin_transform_F(F: TestFunction, u: float, v: float, max_doublings: int = 6) -> complex:
    """F_hat(iu, iv) = iint F(x, y) x^{iu-1} y^{iv-1} dx dy, in log coordinates.

    Tensor Gauss-Legendre; the panel count doubles until two successive
    rules agree to REL_TOL (QuadratureError otherwise).
    """
    L = math.log(F.N)
    panels = max(16, math.ceil(max(abs(u), abs(v)) * L / math.pi) * 2)

    def rule(k):
        th, w = _panel_nodes(np.linspace(0.0, L, k + 1), GAUSS_ORDER)
        T, P = np.meshgrid(th, th, indexing="ij")
        vals = F(np.exp(T), np.exp(P))
        return complex((np.exp(1j * u * th) * w) @ vals @ (np.exp(1j * v * th) * w))

    prev = rule(panels)
    for _ in range(max_doublings):
        panels *= 2
        cur = rule(panels)
        if abs(cur - prev) <= max(ABS_TOL * 1e-2, REL_TOL * 1e-2 * abs(cur)):
            return cur
        prev = cur
    raise QuadratureError(f"Mellin transform did not converge at (u, v) = ({u}, {v})")


def _ramp_transform_l1(r, N: float, samples: int = 1 << 14, pad: int = 8) -> float:
    """int |R(u)| du for R(u) = int r(e^theta) e^{i u theta} dtheta, plus a tail bound."""
    L = math.log(N)
    dth = L / samples
    th = np.arange(samples + 1) * dth
    vals = r(np.exp(th))
    size = pad * (samples + 1)
    spectrum = np.fft.fft(vals, n=size) * dth
    du = 2 * math.pi / (size * dth)
    U = math.pi / dth
    body = float(np.sum(np.abs(spectrum))) * du
    # |R(u)| <= int |r_thetatheta| / u^2 beyond the Nyquist band
    d2 = np.gradient(np.gradient(vals, dth), dth)
    tail = 2 * float(np.sum(np.abs(d2)) * dth) / U
    return body + tail


def mellin_l1_norm(F: TestFunction) -> float:
    """(2 pi)^{-2} iint |F_hat(iu, iv)| du dv (an upper estimate including a tail bound)."""
    if F.separable:
        r1, r2 = F.factors
        return F.scale * _ramp_transform_l1(r1, F.N) * _ramp_transform_l1(r2, F.N) / (2 * math.pi) ** 2
    L = math.log(F.N)
    n = 512
    dth = L / n
    th = np.arange(n + 1) * dth
    T, P = np.meshgrid(th, th, indexing="ij")
    vals = F(np.exp(T), np.exp(P))
    size = 4 * (n + 1)
    spectrum = np.fft.fft2(vals, s=(size, size)) * dth**2
    du = 2 * math.pi / (size * dth)
    U = math.pi / dth
    body = float(np.sum(np.abs(spectrum))) * du**2
    lap = np.abs(np.gradient(np.gradient(vals, dth, axis=0), dth, axis=0)).sum() * dth**2
    lap2 = np.abs(np.gradient(np.gradient(vals, dth, axis=1), dth, axis=1)).sum() * dth**2
    tail = 8 * (lap + lap2) / U * (2 * U)
    return (body + tail) / (2 * math.pi) ** 2


# ---------------------------------------------------------------------------
# G(x, y) for the factorized test functions


@dataclass(frozen=True)
class SpecialTestFunction:
    name: str
    evaluator: Callable = field(repr=False)
    c: float = 2.0
    A: float = 1.0

    def __call__(self, x, y):
        return self.evaluator(np.asarray(x, dtype=np.float64), np.asarray(y, dtype=np.float64))


def default_special_function() -> SpecialTestFunction:
    """G(x, y) = exp(-(log x)^2) exp(-y)."""

    def G(x, y):
        return np.exp(-np.log(x) ** 2) * np.exp(-y)

    return SpecialTestFunction("gaussian_log", G)


def zero_special_function() -> SpecialTestFunction:
    return SpecialTestFunction("zero", lambda x, y: np.zeros(np.broadcast(x, y).shape))


def special_decay_constants(G: SpecialTestFunction, c: float | None = None, h: float = 1e-4) -> dict:
    """sup of x^a y^b |G^{(a,b)}| (1+|log x|)^c (1+y)^c over a sample grid, (a, b) in {0,1}^2."""
    c = G.c if c is None else c
    lx = np.linspace(-8, 8, 161)
    ys = np.concatenate([[1e-6], np.geomspace(1e-3, 40, 160)])
    LX, Y = np.meshgrid(lx, ys, indexing="ij")
    X = np.exp(LX)
    weight = (1 + np.abs(LX)) ** c * (1 + Y) ** c
    out = {}
    g = G(X, Y)
    gx = (G(np.exp(LX + h), Y) - G(np.exp(LX - h), Y)) / (2 * h)  # x d/dx
    gy = Y * (G(X, Y * math.exp(h)) - G(X, Y * math.exp(-h))) / (2 * h * Y)  # y d/dy
    gxy = (
        G(np.exp(LX + h), Y * math.exp(h))
        - G(np.exp(LX + h), Y * math.exp(-h))
        - G(np.exp(LX - h), Y * math.exp(h))
        + G(np.exp(LX - h), Y * math.exp(-h))
    ) / (4 * h * h)
    for key, arr in {(0, 0): g, (1, 0): gx, (0, 1): gy, (1, 1): gxy}.items():
        out[key] = float(np.max(np.abs(arr) * weight))
    return out
