"""Experiment configuration: one INI file with a section per subcommand.

Every run is described by the file alone; the only environment hook is
ALSIEVE_OUT_DIR, which overrides the output directory (the --out flag
overrides both).
"""

from __future__ import annotations

import configparser
import os
from dataclasses import dataclass, field, fields

from .bilinear import REGIMES
from .coeffs import MOLLIFIER_WEIGHTS
from .sieve_checks import SUITES
from .weights import CUTOFFS

OUT_ENV = "ALSIEVE_OUT_DIR"


class ConfigError(ValueError):
    """The configuration file is malformed or names something unknown."""


def _floats(text: str) -> tuple[float, ...]:
    return tuple(float(t) for t in text.replace(",", " ").split())


def _names(text: str) -> tuple[str, ...]:
    return tuple(t for t in text.replace(",", " ").split())


def _fmt(value) -> str:
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    if value is None:
        return "auto"
    return repr(value) if isinstance(value, float) else str(value)


@dataclass(frozen=True)
class RunSection:
    seed: int = 0
    workers: int = 1
    out: str = "results"
    tolerance: float = 1e-9
    em_tolerance: float = 1e-8


@dataclass(frozen=True)
class IdentitiesSection:
    Q: tuple[float, ...] = (50.0, 100.0, 200.0)
    C: float | None = None  # None means Q^{1/4}
    cutoff: str = "bump"
    pairs: int = 50
    max_mn: int = 30
    lemma_bound: int = 40


@dataclass(frozen=True)
class AsymptoticsSection:
    grid: tuple[float, ...] = (100.0, 200.0, 400.0, 800.0)
    regime: str = "thm22"
    weight: str = "one"


@dataclass(frozen=True)
class SieveSection:
    suites: tuple[str, ...] = SUITES
    trials: int = 100
    N: int = 60
    Q: int = 60
    T: float = 4.0
    M: int = 10**6


_SECTIONS = {
    "run": RunSection,
    "identities": IdentitiesSection,
    "asymptotics": AsymptoticsSection,
    "sieve": SieveSection,
}

_PARSERS = {
    ("identities", "Q"): _floats,
    ("identities", "C"): lambda t: None if t.strip() == "auto" else float(t),
    ("asymptotics", "grid"): _floats,
    ("sieve", "suites"): _names,
}


@dataclass(frozen=True)
class ExperimentConfig:
    run: RunSection = field(default_factory=RunSection)
    identities: IdentitiesSection = field(default_factory=IdentitiesSection)
    asymptotics: AsymptoticsSection = field(default_factory=AsymptoticsSection)
    sieve: SieveSection = field(default_factory=SieveSection)

    def __post_init__(self):
        if self.identities.cutoff not in CUTOFFS:
            raise ConfigError(f"unknown cutoff {self.identities.cutoff!r}; known: {sorted(CUTOFFS)}")
        if self.asymptotics.regime not in REGIMES:
            raise ConfigError(f"unknown regime {self.asymptotics.regime!r}; known: {REGIMES}")
        if self.asymptotics.weight not in MOLLIFIER_WEIGHTS:
            raise ConfigError(f"unknown mollifier weight {self.asymptotics.weight!r}; known: {sorted(MOLLIFIER_WEIGHTS)}")
        bad = [s for s in self.sieve.suites if s not in SUITES]
        if bad:
            raise ConfigError(f"unknown sieve suites {bad}; known: {SUITES}")
        if self.run.workers < 1:
            raise ConfigError(f"workers must be at least 1, got {self.run.workers}")
        if self.run.seed < 0 or self.run.seed >= 2**64:
            raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.run.seed}")

    def to_ini(self) -> str:
        cp = configparser.ConfigParser()
        cp.optionxform = str
        for name in _SECTIONS:
            sec = getattr(self, name)
            cp[name] = {f.name: _fmt(getattr(sec, f.name)) for f in fields(sec)}
        lines = []
        for name in cp.sections():
            lines.append(f"[{name}]")
            lines.extend(f"{k} = {v}" for k, v in cp[name].items())
            lines.append("")
        return "\n".join(lines)

    def as_dict(self) -> dict:
        return {name: {f.name: getattr(getattr(self, name), f.name) for f in fields(getattr(self, name))} for name in _SECTIONS}


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser()
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config: {exc}") from exc
    unknown = set(cp.sections()) - set(_SECTIONS)
    if unknown:
        raise ConfigError(f"unknown sections {sorted(unknown)}")
    sections = {}
    for name, cls in _SECTIONS.items():
        kwargs = {}
        known = {f.name: f for f in fields(cls)}
        if cp.has_section(name):
            for key, raw in cp[name].items():
                if key not in known:
                    raise ConfigError(f"unknown key {key!r} in [{name}]")
                conv = _PARSERS.get((name, key), _scalar_parser(cls, key))
                try:
                    kwargs[key] = conv(raw)
                except ValueError as exc:
                    raise ConfigError(f"bad value for {name}.{key}: {raw!r}") from exc
        sections[name] = cls(**kwargs)
    return ExperimentConfig(**sections)


def _scalar_parser(cls, key: str):
    default = getattr(cls(), key)
    if isinstance(default, bool):
        return lambda t: t.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(default, int):
        return lambda t: int(float(t)) if float(t).is_integer() else int(t)
    if isinstance(default, float):
        return float
    return str.strip


def load_config(path: str | None) -> ExperimentConfig:
    if path is None:
        return ExperimentConfig()
    try:
        with open(path, encoding="utf-8") as fh:
            return parse_config(fh.read())
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc


def output_dir(cfg: ExperimentConfig, flag: str | None) -> str:
    return flag or os.environ.get(OUT_ENV) or cfg.run.out
