import csv
import dataclasses
import json
import os
import subprocess
import sys

import pytest

from alsieve import cli
from alsieve.config import OUT_ENV, ConfigError, ExperimentConfig, IdentitiesSection, load_config, parse_config

SMALL = """
[run]
seed = 7
tolerance = 1e-9

[identities]
Q = 30, 40
pairs = 4
max_mn = 12
lemma_bound = 12

[asymptotics]
grid = 50, 100

[sieve]
suites = multiplicative, additive, hybrid
trials = 6
N = 15
Q = 10
T = 2.0
"""


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "small.ini"
    path.write_text(SMALL)
    return str(path)


def _run(args, out):
    return cli.main([*args, "--out", str(out)])


def test_config_round_trip():
    cfg = parse_config(SMALL)
    assert cfg.run.seed == 7 and cfg.identities.Q == (30.0, 40.0) and cfg.identities.C is None
    assert parse_config(cfg.to_ini()) == cfg
    explicit = dataclasses.replace(cfg, identities=IdentitiesSection(C=3.5))
    assert parse_config(explicit.to_ini()) == explicit
    assert load_config(None) == ExperimentConfig()


@pytest.mark.parametrize("text", [
    "[nope]\nx = 1\n",
    "[run]\ncolour = red\n",
    "[run]\nseed = many\n",
    "[run]\nseed = -1\n",
    "[run]\nworkers = 0\n",
    "[identities]\ncutoff = square\n",
    "[asymptotics]\nregime = thm99\n",
    "[sieve]\nsuites = multiplicative, psychic\n",
    "not an ini file",
])
def test_bad_configs_rejected(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_identities_exit_codes(small_config, tmp_path):
    assert _run(["identities", "--config", small_config], tmp_path / "a") == cli.EXIT_OK
    assert _run(["identities", "--config", small_config, "--tolerance", "0"], tmp_path / "b") == cli.EXIT_VIOLATION
    with open(tmp_path / "a" / "identities.csv", newline="") as fh:
        rows = list(csv.DictReader(fh))
    assert len(rows) == 8 and tuple(rows[0]) == cli.IDENTITY_COLUMNS
    assert all(r["ok"] == "true" for r in rows)


def test_config_and_domain_errors_exit_2(tmp_path, capsys):
    bad_q = tmp_path / "q.ini"
    bad_q.write_text("[identities]\nQ = 0.4\npairs = 1\n")
    assert _run(["identities", "--config", str(bad_q)], tmp_path / "o") == cli.EXIT_CONFIG
    assert _run(["sieve", "--config", str(tmp_path / "missing.ini")], tmp_path / "o") == cli.EXIT_CONFIG
    assert _run(["sieve", "--workers", "0"], tmp_path / "o") == cli.EXIT_CONFIG
    assert "alsieve:" in capsys.readouterr().err


def test_sieve_outputs_are_deterministic_and_echo_the_seed(small_config, tmp_path):
    for d in ("x", "y"):
        assert _run(["sieve", "--config", small_config, "--seed", "11"], tmp_path / d) == cli.EXIT_OK
    for name in ("sieve_trials.csv", "sieve_summary.csv", "sieve.json"):
        assert (tmp_path / "x" / name).read_bytes() == (tmp_path / "y" / name).read_bytes()
    payload = json.loads((tmp_path / "x" / "sieve.json").read_text())
    assert payload["seed"] == 11 and payload["config"]["run"]["seed"] == 11
    assert {t["seed"] for t in payload["trials"]} == {11}
    assert len(payload["trials"]) == 18 and len(payload["summary"]) == 3
    raw = (tmp_path / "x" / "sieve_trials.csv").read_bytes()
    assert b"\r\n" not in raw
    row = next(csv.DictReader(raw.decode().splitlines()))
    assert float(row["ratio"]) == payload["trials"][0]["ratio"]
    assert row["ratio"] == format(payload["trials"][0]["ratio"], ".17g")


def test_empty_sieve_is_not_a_failure(tmp_path):
    cfg = tmp_path / "e.ini"
    cfg.write_text("[sieve]\ntrials = 0\n")
    assert _run(["sieve", "--config", str(cfg)], tmp_path / "o") == cli.EXIT_OK
    assert (tmp_path / "o" / "sieve_summary.csv").read_text() == ",".join(cli.SUMMARY_COLUMNS) + "\n"


def test_asymptotics_writes_rows(small_config, tmp_path):
    assert _run(["asymptotics", "--config", small_config], tmp_path / "o") == cli.EXIT_OK
    payload = json.loads((tmp_path / "o" / "asymptotics.json").read_text())
    assert [r["Q"] for r in payload["rows"]] == [50.0, 100.0]
    assert payload["decay_ratio"] == pytest.approx(payload["rows"][1]["normalized_error"] / payload["rows"][0]["normalized_error"])


def test_output_directory_precedence(small_config, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    env_dir = tmp_path / "from_env"
    monkeypatch.setenv(OUT_ENV, str(env_dir))
    args = ["sieve", "--config", small_config]
    assert cli.main(args) == cli.EXIT_OK
    assert (env_dir / "sieve.json").exists()
    assert cli.main([*args, "--out", str(tmp_path / "flag")]) == cli.EXIT_OK
    assert (tmp_path / "flag" / "sieve.json").exists()
    monkeypatch.delenv(OUT_ENV)
    assert cli.main(args) == cli.EXIT_OK
    assert (tmp_path / "results" / "sieve.json").exists()


def test_module_entry_point_reports_version():
    out = subprocess.run([sys.executable, "-m", "alsieve.cli", "--version"], capture_output=True, text=True, check=True)
    assert out.stdout.strip().startswith("alsieve ")
