import math

import numpy as np
import pytest

import oracles as o
from alsieve import bilinear as bl
from alsieve import delta as dl
from alsieve.coeffs import build_sequence, free_sequence, mollifier_mu_w, unit_mollifier, zeta_power
from alsieve.weights import default_special_function, default_test_function


def _config(Q=12.0, N=10, seed=0, **kw):
    rng = np.random.default_rng(seed)
    A = free_sequence(rng.standard_normal(N))
    B = free_sequence(rng.standard_normal(N))
    return bl.BilinearConfig(dl.DeltaParams(Q, 2.0), default_test_function(N), A, B, N, **kw)


def _s_brute(cfg):
    out = []
    for q in o.moduli(cfg.p.Q):
        w = o.bump(q / cfg.p.Q) / o.phi(q)
        for m in range(1, cfg.N + 1):
            for n in range(1, cfg.N + 1):
                ps = o.primitive_sum(q, m, n)
                if ps:
                    out.append(w * ps * cfg.A[m] * cfg.B[n] * float(cfg.F(float(m), float(n))))
    return math.fsum(out)


@pytest.mark.parametrize("Q, N, seed", [(12.0, 10, 0), (20.0, 14, 1)])
def test_s_full_matches_brute_force(Q, N, seed):
    cfg = _config(Q, N, seed)
    ref = _s_brute(cfg)
    assert bl.s_full(cfg) == pytest.approx(ref, rel=1e-11, abs=1e-13)
    assert bl.s_from_delta(cfg) == pytest.approx(ref, rel=1e-11, abs=1e-13)


def test_s_diag_against_brute_delta():
    cfg = _config(15.0, 9, 3)
    ref = math.fsum(cfg.A[m] * cfg.B[m] * float(cfg.F(float(m), float(m))) * o.delta_brute(m, m, 15.0)
                    for m in range(1, 10))
    assert bl.s_diag(cfg) == pytest.approx(ref, rel=1e-12)


def test_s_diag_main_formula():
    cfg = _config(30.0, 12, 4)
    s = math.fsum(cfg.A[m] * cfg.B[m] * o.delta_factor(m) * float(cfg.F(float(m), float(m))) for m in range(1, 13))
    ref = cfg.p.cutoff.mean * 0.479145344433413 * 30.0 * s
    assert bl.s_diag_main(cfg) == pytest.approx(ref, rel=1e-12)


def test_pieces_bookkeeping():
    cfg = _config(40.0, 12, 5)
    pc = bl.s_pieces(cfg)
    assert pc.residual <= 1e-9 * dl.cardinality(cfg.p)
    assert pc.S_star == pytest.approx(pc.S1 - pc.S_plus)
    assert pc.S == pytest.approx(bl.s_full(cfg), rel=1e-10)


def test_s_chi_filters_and_kernel():
    cfg = _config(20.0, 12, 6)
    y = 3.0
    val = bl.s_chi(cfg, 2, 3, 5, y, None)
    ref = math.fsum(cfg.A[m] * cfg.B[n] * float(cfg.F(float(m), float(n))) * float(cfg.p.cutoff.omega(abs(m - n) / y))
                    for m in range(2, 13, 2) for n in range(3, 13, 3) if m % 5 and n % 5)
    assert val.real == pytest.approx(ref, rel=1e-13, abs=1e-15) and val.imag == 0
    assert bl.s_chi(cfg, 13, 1, 1, y, None) == 0


@pytest.mark.parametrize("d1, d2", [(1, 1), (2, 3)])
def test_v_inner_integral_replacement_is_close(d1, d2):
    N = 200
    rho = unit_mollifier()
    A = build_sequence(zeta_power(1), rho, N)
    cfg = bl.BilinearConfig(dl.DeltaParams(100.0, 2.0), default_test_function(N), A, A, N,
                            lam=zeta_power(1), rho_A=rho, rho_B=rho)
    r = bl.v_inner(cfg, d1, d2, N / 8, compare=True)
    assert r.gap == pytest.approx(abs(r.value - r.approximation))
    assert r.gap <= 0.02 * abs(r.value)
    with pytest.raises(ValueError):
        bl.v_inner(_config(), 1, 1, 2.0, compare=True)


def test_theorem25_main_term_close_to_direct_diagonal():
    p = dl.DeltaParams(100.0, 2.0)
    G, lam, rho = default_special_function(), zeta_power(2), mollifier_mu_w(1)
    main = bl.theorem25_main_term(p, G, 2, lam, rho, rho)
    direct = bl.theorem25_direct_diagonal(p, G, 2, lam, rho, rho)
    assert main > 0
    assert abs(main - direct) <= 100.0**0.6


def test_regime_config_shapes():
    c = bl.regime_config(256.0)
    assert c.N == 64 and c.rho_A.support == (1, 16)
    c4 = bl.regime_config(16.0, "thm24")
    assert c4.N == round(16**1.75) and c4.rho_A.support == (2, 4)
    with pytest.raises(ValueError):
        bl.regime_config(16.0, "nope")


def test_run_experiment_deterministic_across_workers():
    t1 = bl.run_experiment([100.0, 50.0], workers=1, seed=3)
    t2 = bl.run_experiment([50.0, 100.0], workers=2, seed=3)
    assert t1.rows == t2.rows
    assert t1.metadata["config_hash"] == t2.metadata["config_hash"]
    assert [r.Q for r in t1.rows] == [50.0, 100.0]
    for r in t1.rows:
        assert r.normalized_error == pytest.approx(r.abs_error / r.Q)
    assert bl.run_experiment([50.0]).decay_ratio is None
