"""Acceptance gate: one test per criterion, each printing a single PASS/FAIL line.

Run with ``pytest tests/test_acceptance.py -s`` to see the lines inline; they
are also repeated in the terminal summary.
"""

import filecmp
import math
import time

import numpy as np
import pytest

import oracles as o
from conftest import CRITERIA_LINES
from alsieve import bilinear as bl
from alsieve import characters as ch
from alsieve import cli
from alsieve import delta as dl
from alsieve.arith import delta_factor, singular_constant, tau
from alsieve.coeffs import euler_factor_check, mollifier_mu_w, zeta_power
from alsieve.config import ExperimentConfig, parse_config
from alsieve.sieve_checks import RATIO_TOL, SUITES, run_suite
from alsieve.weights import default_special_function

GRID = (100.0, 200.0, 400.0, 800.0, 1600.0)


def report(k: int, ok: bool, text: str) -> None:
    line = f"{'PASS' if ok else 'FAIL'} criterion {k}: {text}"
    CRITERIA_LINES.append(line)
    print(line)
    assert ok, line


@pytest.fixture(scope="module")
def identity_run():
    start = time.perf_counter()
    rows = cli.identity_rows(ExperimentConfig())
    return rows, time.perf_counter() - start


def test_criterion_1_split(identity_run):
    rows, elapsed = identity_run
    worst = max(r["residual_split"] / r["scale"] for r in rows)
    Qs = sorted({r["Q"] for r in rows})
    ok = len(rows) == 150 and Qs == [50.0, 100.0, 200.0] and worst <= 1e-9 and elapsed <= 120
    report(1, ok, f"{len(rows)} cases, max |D - D' - D''|/D(1,1) = {worst:.2e} (tol 1e-9), {elapsed:.1f} s (limit 120 s)")


def test_criterion_2_cancellation_and_euler_maclaurin(identity_run):
    rows, _ = identity_run
    off = [r for r in rows if r["m"] != r["n"]]
    cancel = max(r["residual_cancel"] / r["scale"] for r in off)
    em_double = max(r["residual_em_double"] / r["scale"] for r in rows)
    windowed = [r for r in rows if r["window_ok"]]
    em_prime = max((r["residual_em_prime"] / r["scale"] for r in windowed if r["residual_em_prime"] is not None), default=0.0)
    em = max((r["residual_em"] / r["scale"] for r in windowed if r["residual_em"] is not None), default=0.0)
    ok = cancel <= 1e-9 and max(em_double, em_prime, em) <= 1e-8 and len(windowed) > 0
    report(2, ok, f"{len(off)} off-diagonal cases, cancellation {cancel:.2e} (tol 1e-9); "
                  f"Euler-Maclaurin D'' {em_double:.2e}, D' {em_prime:.2e}, D {em:.2e} over "
                  f"{len(windowed)} in-window cases (tol 1e-8, relative to D(1,1))")


def test_criterion_3_exact_lemmas():
    rows = cli.lemma_rows(200, seed=0, top=100)
    switch = [r for r in rows if r["lemma"] == "mobius_switch"]
    expand = [r for r in rows if r["lemma"] == "gcd_expansion"]
    failures = sum(not r["ok"] for r in rows)
    ok = failures == 0 and len(switch) == 200 and len(expand) == sum(o.mu(u) != 0 for u in range(1, 201))
    report(3, ok, f"{len(switch)} Mobius-switch and {len(expand)} gcd-expansion checks in exact arithmetic, {failures} failures")


def test_criterion_4_orthogonality_and_counts():
    rng = np.random.default_rng([0, 4])
    worst, checked = 0.0, 0
    for q in range(1, 201):
        pairs = 0
        while pairs < 20:
            m, n = (int(x) for x in rng.integers(1, 10 * q + 2, size=2))
            if math.gcd(m * n, q) != 1:
                continue
            expected = 1.0 if (m - n) % q == 0 else 0.0
            if pairs == 0:
                n = m + q  # make sure the m = n (mod q) branch is exercised
                expected = 1.0
            worst = max(worst, abs(ch.orthogonality_sum(q, m, n) - expected))
            pairs += 1
            checked += 1
    bad_counts = [q for q in range(1, 501) if len(ch.primitive_characters(q)) != o.phi_star(q)]
    ok = worst <= 1e-12 and not bad_counts
    report(4, ok, f"{checked} orthogonality sums, max error {worst:.2e} (tol 1e-12); "
                  f"primitive counts vs phi*(q) for q <= 500: {len(bad_counts)} mismatches")


@pytest.fixture(scope="module")
def grid_params():
    return {Q: dl.DeltaParams(Q, Q**0.25) for Q in GRID}


def test_criterion_5_cardinality(grid_params):
    start = time.perf_counter()
    S = singular_constant()
    vals = []
    for Q, p in grid_params.items():
        vals.append((dl.cardinality(p) - p.cutoff.mean * S * Q) / math.sqrt(Q))
    elapsed = time.perf_counter() - start
    mags = [abs(v) for v in vals]
    const = max(mags)
    # no growth: the larger half of the grid stays within the bound seen on the smaller half
    ok = max(mags[3:]) <= max(mags[:2]) and elapsed <= 300
    report(5, ok, "|D(1,1) - Psi_bar S Q|/Q^(1/2) = " + ", ".join(f"{v:+.5f}" for v in vals)
                  + f" on Q = {GRID}; constant {const:.5f}; {elapsed:.1f} s")


def test_criterion_6_diagonal(grid_params):
    per_Q = []
    for Q, p in grid_params.items():
        d11 = dl.cardinality(p)
        per_Q.append(max(abs(dl.diagonal_delta(m, p) - delta_factor(m) * d11) / (tau(m) * math.sqrt(Q))
                         for m in range(1, 51)))
    ok = max(per_Q[3:]) <= max(per_Q[:2])
    report(6, ok, "max_{m<=50} |D(m,m) - delta(m) D(1,1)|/(tau(m) Q^(1/2)) = "
                  + ", ".join(f"{v:.5f}" for v in per_Q) + f"; constant {max(per_Q):.5f}")


def test_criterion_7_sieve_suites():
    start = time.perf_counter()
    parts, ok = [], True
    for suite in SUITES:
        results, s = run_suite(suite, 100, 60, 60, seed=0, T=4.0)
        ok = ok and s.trials >= 100 and s.failures == 0 and s.max_ratio <= 1 + RATIO_TOL
        parts.append(f"{suite} {s.max_ratio:.4f}")
    elapsed = time.perf_counter() - start
    ok = ok and elapsed <= 300
    report(7, ok, "max ratio over 100 trials (N = Q = 60, T = 4): " + ", ".join(parts) + f"; {elapsed:.1f} s")


def test_criterion_8_decay():
    start = time.perf_counter()
    table = bl.run_experiment([100.0, 200.0, 400.0, 800.0], "thm22")
    elapsed = time.perf_counter() - start
    errs = [r.normalized_error for r in table.rows]
    ratio = table.decay_ratio
    ok = ratio is not None and ratio <= 0.5 and elapsed <= 900
    report(8, ok, "normalized errors " + ", ".join(f"{e:.3e}" for e in errs) + f"; last/first {ratio:.4f} (limit 0.5); {elapsed:.1f} s")


def test_criterion_9_main_term_consistency():
    G = default_special_function()
    fits = []
    for g in (1, 2):
        for X in (1, 5):
            rho = mollifier_mu_w(X)
            for Q in (100.0, 400.0):
                p = dl.DeltaParams(Q, Q**0.25)
                main = bl.theorem25_main_term(p, G, g, zeta_power(g), rho, rho)
                direct = bl.theorem25_direct_diagonal(p, G, g, zeta_power(g), rho, rho)
                fits.append((abs(main - direct) / Q**0.6, g, X, Q))
    c = max(f[0] for f in fits)
    ok = c <= 1.0
    detail = ", ".join(f"g={g} X={X} Q={Q:g}: {v:.4f}" for v, g, X, Q in fits)
    report(9, ok, f"fitted c = {c:.4f} (rule c <= 1); {detail}")


def test_criterion_10_euler_factor_support():
    bad, runs = [], 0
    twists = [None, ch.primitive_characters(7)[0], ch.primitive_characters(8)[0]]
    for g in (1, 2, 3):
        lam = zeta_power(g)
        for delta in range(1, 31):
            for chi in (twists if delta in (6, 12, 30) else twists[:1]):
                r = euler_factor_check(lam, delta, chi, 10_000)
                runs += 1
                if not r.support_ok:
                    bad.append((g, delta, None if chi is None else chi.modulus))
    report(10, not bad, f"{runs} formal divisions (g in 1..3, delta <= 30, truncation 10^4, "
                        f"twists mod 7 and 8 at delta = 6, 12, 30): {len(bad)} failures")


def test_criterion_11_determinism(tmp_path):
    cfg = tmp_path / "det.ini"
    cfg.write_text("[run]\nseed = 5\n\n[identities]\nQ = 50\npairs = 10\nlemma_bound = 30\n\n"
                   "[asymptotics]\ngrid = 100, 200\n\n[sieve]\ntrials = 20\nN = 30\nQ = 20\n")
    parse_config(cfg.read_text())
    dirs = []
    for run, workers in (("a", "1"), ("b", "1"), ("c", "2"), ("d", "2")):
        out = tmp_path / run
        for cmd in ("identities", "asymptotics", "sieve"):
            cli.main([cmd, "--config", str(cfg), "--out", str(out), "--workers", workers])
        dirs.append(out)
    names = sorted(p.name for p in dirs[0].iterdir())
    same_workers = all(filecmp.cmp(dirs[0] / n, dirs[1] / n, shallow=False) for n in names) and \
        all(filecmp.cmp(dirs[2] / n, dirs[3] / n, shallow=False) for n in names)
    report(11, same_workers and len(names) == 8,
           f"{len(names)} output files byte-identical across reruns with 1 and with 2 workers")
