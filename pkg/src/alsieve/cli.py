"""Command-line front end.

    alsieve identities  [--config FILE] [--out DIR] [--seed S] [--workers W] [--tolerance T]
    alsieve asymptotics [...]
    alsieve sieve       [...]

Exit status: 0 when every check passes, 1 when a residual or ratio exceeds
its tolerance, 2 for configuration or domain errors. Each command writes a
CSV table (floats at 17 significant digits, LF line endings) and a JSON
mirror that embeds the resolved configuration. Timings are printed but never
written, so reruns with the same config, seed and worker count produce
identical files.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import json
import math
import os
import sys
import time

import numpy as np

from . import __version__
from . import delta as dl
from .arith import mobius
from .bilinear import ExperimentTable, row_dict, run_experiment
from .config import ConfigError, ExperimentConfig, load_config, output_dir
from .sieve_checks import RATIO_TOL, run_suite
from .weights import make_cutoff

EXIT_OK, EXIT_VIOLATION, EXIT_CONFIG = 0, 1, 2


def _cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return format(float(v), ".17g")
    return str(v)


def write_csv(path: str, columns, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            w.writerow([_cell(row.get(c)) for c in columns])


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else str(v)
    if isinstance(v, np.integer):
        return int(v)
    return v


def write_json(path: str, payload: dict) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(_jsonable(payload), fh, indent=2, sort_keys=True)
        fh.write("\n")


def _header(cfg: ExperimentConfig, command: str) -> dict:
    return {"command": command, "version": __version__, "config": cfg.as_dict()}


# ---------------------------------------------------------------------------
# identities

IDENTITY_COLUMNS = (
    "Q", "C", "m", "n", "delta", "scale", "residual_split", "residual_cancel", "residual_em",
    "residual_em_double", "residual_em_prime", "window_ok", "ok",
)
LEMMA_COLUMNS = ("lemma", "x", "y", "z", "ok")


def identity_rows(cfg: ExperimentConfig) -> list[dict]:
    """Delta split, cancellation and Euler-Maclaurin residuals on seeded random pairs.

    Residuals are compared with tolerance * Delta(1, 1) (em_tolerance for the
    Euler-Maclaurin ones); the Delta' reconstructions (Delta' from Delta_1,
    Delta = Delta_1 + Delta_2) are only asserted inside their validity window.
    """
    sec, run = cfg.identities, cfg.run
    cutoff = make_cutoff(sec.cutoff)
    rng = np.random.default_rng([run.seed, 1])
    rows = []
    for Q in sec.Q:
        C = Q**0.25 if sec.C is None else sec.C
        p = dl.DeltaParams(Q, C, cutoff)
        scale = dl.cardinality(p)
        for _ in range(sec.pairs):
            m, n = (int(x) for x in rng.integers(1, sec.max_mn + 1, size=2))
            r = dl.delta_report(m, n, p)
            checks = [(r.residual_split, run.tolerance), (r.residual_cancel, run.tolerance),
                      (r.residual_em_double, run.em_tolerance)]
            if r.window_ok:
                checks += [(r.residual_em_prime, run.em_tolerance), (r.residual_em, run.em_tolerance)]
            ok = all(res is None or res <= tol * scale for res, tol in checks)
            rows.append({
                "Q": float(Q), "C": float(C), "m": m, "n": n, "delta": r.delta, "scale": scale,
                "residual_split": r.residual_split, "residual_cancel": r.residual_cancel,
                "residual_em": r.residual_em, "residual_em_double": r.residual_em_double,
                "residual_em_prime": r.residual_em_prime, "window_ok": r.window_ok, "ok": ok,
            })
    return rows


def lemma_rows(bound: int, seed: int, top: int = 100) -> list[dict]:
    """Exact checks: every l <= bound with a random coprime pair (a, s), and every
    squarefree u <= bound with a random pair (m, n), entries up to ``top``."""
    rng = np.random.default_rng([seed, 2])
    rows = []
    for l in range(1, bound + 1):
        while True:
            a, s = (int(x) for x in rng.integers(1, top + 1, size=2))
            if math.gcd(a, s) == 1:
                break
        rows.append({"lemma": "mobius_switch", "x": l, "y": a, "z": s, "ok": dl.mobius_switch_check(l, a, s)})
    for u in range(1, bound + 1):
        if mobius(u) == 0:
            continue
        m, n = (int(x) for x in rng.integers(1, top + 1, size=2))
        rows.append({"lemma": "gcd_expansion", "x": u, "y": m, "z": n, "ok": dl.gcd_expansion_check(u, m, n)})
    return rows


def cmd_identities(cfg: ExperimentConfig, out: str) -> int:
    rows = identity_rows(cfg)
    lemmas = lemma_rows(cfg.identities.lemma_bound, cfg.run.seed)
    write_csv(os.path.join(out, "identities.csv"), IDENTITY_COLUMNS, rows)
    write_csv(os.path.join(out, "lemmas.csv"), LEMMA_COLUMNS, lemmas)
    bad = [r for r in rows if not r["ok"]]
    bad_lemmas = [r for r in lemmas if not r["ok"]]
    payload = _header(cfg, "identities")
    payload.update(cases=rows, lemmas=lemmas, failures=len(bad) + len(bad_lemmas))
    write_json(os.path.join(out, "identities.json"), payload)
    print(f"identities: {len(rows)} cases, {len(bad)} over tolerance; {len(lemmas)} exact lemma checks, {len(bad_lemmas)} failed")
    for r in bad:
        print(f"  Q={r['Q']:g} m={r['m']} n={r['n']} split={r['residual_split']:.3e} "
              f"cancel={_cell(r['residual_cancel'])} em={_cell(r['residual_em'])} scale={r['scale']:.6g}")
    for r in bad_lemmas:
        print(f"  {r['lemma']} at ({r['x']}, {r['y']}, {r['z']})")
    return EXIT_VIOLATION if bad or bad_lemmas else EXIT_OK


# ---------------------------------------------------------------------------
# asymptotics


def cmd_asymptotics(cfg: ExperimentConfig, out: str) -> int:
    sec = cfg.asymptotics
    table: ExperimentTable = run_experiment(sec.grid, sec.regime, sec.weight, cfg.run.workers, cfg.run.seed)
    rows = [row_dict(r) for r in table.rows]
    write_csv(os.path.join(out, "asymptotics.csv"), ExperimentTable.COLUMNS, rows)
    payload = _header(cfg, "asymptotics")
    payload.update(metadata=table.metadata, rows=rows, decay_ratio=table.decay_ratio)
    write_json(os.path.join(out, "asymptotics.json"), payload)
    for r in rows:
        print(f"  Q={r['Q']:g} N={r['N']} X={r['X']} normalized_error={r['normalized_error']:.6e}")
    ratio = table.decay_ratio
    print("decay ratio (last/first normalized error): " + ("n/a" if ratio is None else f"{ratio:.4f}"))
    return EXIT_OK


# ---------------------------------------------------------------------------
# sieve

TRIAL_COLUMNS = ("suite", "trial", "source", "seed", "Q", "N", "M", "T", "lhs", "rhs", "ratio", "ok")
SUMMARY_COLUMNS = ("suite", "trials", "min_ratio", "median_ratio", "max_ratio", "argmax_trial", "argmax_source", "failures")


def cmd_sieve(cfg: ExperimentConfig, out: str) -> int:
    sec, seed = cfg.sieve, cfg.run.seed
    trial_rows, summaries = [], []
    for suite in sec.suites:
        results, summary = run_suite(suite, sec.trials, sec.N, sec.Q, seed, sec.T, sec.M)
        if not results:
            continue
        summaries.append(summary.as_row())
        for r in results:
            trial_rows.append({"suite": suite, **r.config, "lhs": r.lhs, "rhs": r.rhs, "ratio": r.ratio, "ok": r.ok})
    write_csv(os.path.join(out, "sieve_trials.csv"), TRIAL_COLUMNS, trial_rows)
    write_csv(os.path.join(out, "sieve_summary.csv"), SUMMARY_COLUMNS, summaries)
    payload = _header(cfg, "sieve")
    payload.update(seed=seed, ratio_tolerance=RATIO_TOL, summary=summaries, trials=trial_rows)
    write_json(os.path.join(out, "sieve.json"), payload)
    failures = 0
    for s in summaries:
        failures += s["failures"]
        print(f"  {s['suite']}: {s['trials']} trials, max ratio {_cell(s['max_ratio'])}, failures {s['failures']}")
    print(f"sieve: seed {seed}, {len(trial_rows)} trials, {failures} over 1 + {RATIO_TOL:g}")
    return EXIT_VIOLATION if failures else EXIT_OK


COMMANDS = {"identities": cmd_identities, "asymptotics": cmd_asymptotics, "sieve": cmd_sieve}


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="alsieve", description=__doc__.split("\n\n")[0])
    ap.add_argument("--version", action="version", version=f"alsieve {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in COMMANDS:
        sp = sub.add_parser(name)
        sp.add_argument("--config", help="INI experiment file (defaults apply when omitted)")
        sp.add_argument("--out", help="output directory (overrides the config and the environment)")
        sp.add_argument("--seed", type=int, help="unsigned 64-bit seed")
        sp.add_argument("--workers", type=int, help="worker processes")
        sp.add_argument("--tolerance", type=float, help="relative tolerance for identity residuals")
    return ap


def resolve(args) -> ExperimentConfig:
    cfg = load_config(args.config)
    updates = {k: getattr(args, k) for k in ("seed", "workers", "tolerance") if getattr(args, k) is not None}
    if updates:
        cfg = dataclasses.replace(cfg, run=dataclasses.replace(cfg.run, **updates))
    return cfg


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = resolve(args)
        out = output_dir(cfg, args.out)
        os.makedirs(out, exist_ok=True)
        start = time.perf_counter()
        status = COMMANDS[args.command](cfg, out)
    except dl.EmptyFamilyError as exc:
        print(f"alsieve: empty family: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, ValueError, OSError) as exc:
        print(f"alsieve: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    print(f"{args.command} finished in {time.perf_counter() - start:.1f} s; outputs in {out}")
    return status


if __name__ == "__main__":
    sys.exit(main())
