"""Experiment configuration: a flat ``key = value`` text file.

Lists are comma separated. Unknown keys and invalid values are reported
together before any work starts.
"""
from __future__ import annotations

import configparser
import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path

ALGORITHMS = ("EIM", "IMM-static", "HD", "Earliest")
GENERATORS = ("nettide", "sn", "file")
ORACLES = ("auto", "exact", "proxy", "none")


class ConfigError(ValueError):
    pass


@dataclass
class ExperimentConfig:
    # trials and budget
    R: int = 10
    K: list[int] = field(default_factory=lambda: [10])
    seed: int = 0
    algorithms: list[str] = field(default_factory=lambda: ["EIM", "IMM-static", "HD", "Earliest"])
    # world generator
    generator: str = "nettide"
    n0: int = 1000
    beta: float = 5e-8
    theta: float = 0.0
    capacity: float = 1e6
    m: int = 1
    t0: float = 1.0
    sn_arrivals: int = 500
    graph_file: str = ""
    bidirectional: bool = True
    # particle filter; growth_learning = false pins every predicted increment to 0
    growth_learning: bool = True
    M: int = 500
    beta_range: list[float] = field(default_factory=lambda: [1e-8, 1.0])
    theta_range: list[float] = field(default_factory=lambda: [1e-4, 10.0])
    capacity_range: list[float] = field(default_factory=lambda: [1e5, 1e8])
    delta: float = 1.0
    # edge weights
    w0: float = 0.05
    sigma0: float = 0.008
    k: float = 2.0
    c: float = 1.0
    # sampler
    epsilon: float = 0.1
    l: float = 1.0
    # oracle / output
    oracle: str = "auto"
    oracle_mc: int = 200
    record_timing: bool = False
    plot: bool = False

    def validate(self) -> None:
        errs = []
        if self.R < 1:
            errs.append("R must be >= 1")
        if not self.K or min(self.K) < 1:
            errs.append("K values must be >= 1")
        for a in self.algorithms:
            if a not in ALGORITHMS:
                errs.append(f"unknown algorithm {a!r} (choose from {', '.join(ALGORITHMS)})")
        if not self.algorithms:
            errs.append("algorithm roster is empty")
        if self.generator not in GENERATORS:
            errs.append(f"generator must be one of {GENERATORS}")
        if self.generator == "file" and not self.graph_file:
            errs.append("generator=file needs graph_file")
        if self.generator != "file" and self.n0 < 2:
            errs.append("n0 must be >= 2")
        if self.beta < 0 or self.theta < 0 or self.capacity <= self.n0:
            errs.append("need beta >= 0, theta >= 0 and capacity > n0")
        if self.m < 1:
            errs.append("m must be >= 1")
        if self.t0 <= 0:
            errs.append("t0 must be positive")
        if self.M < 1:
            errs.append("M must be >= 1")
        for name in ("beta_range", "theta_range", "capacity_range"):
            r = getattr(self, name)
            if len(r) != 2 or not 0 < r[0] <= r[1]:
                errs.append(f"{name} must be two positive increasing values")
        if self.delta <= 0:
            errs.append("delta must be positive")
        if not 0 <= self.w0 <= 1 or self.sigma0 <= 0:
            errs.append("need w0 in [0,1] and sigma0 > 0")
        if self.k < 0 or self.c < 0:
            errs.append("k and c must be nonnegative")
        if not 0 < self.epsilon < 1 or self.l < 1:
            errs.append("need 0 < epsilon < 1 and l >= 1")
        if self.oracle not in ORACLES:
            errs.append(f"oracle must be one of {ORACLES}")
        if errs:
            raise ConfigError("; ".join(errs))

    def with_K(self, K: int) -> "ExperimentConfig":
        return dataclasses.replace(self, K=[K])


def _convert(f, raw: str):
    t = f.type if isinstance(f.type, str) else str(f.type)
    raw = raw.strip()
    if t.startswith("list"):
        inner = t[5:-1]
        items = [x.strip() for x in raw.split(",") if x.strip()]
        conv = {"int": int, "float": float, "str": str}[inner]
        return [conv(x) for x in items]
    if t == "bool":
        low = raw.lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise ValueError(f"not a boolean: {raw!r}")
    if t == "int":
        return int(raw)
    if t == "float":
        # 'frozen' is the k -> infinity limit: no drift at all
        return math.inf if raw.lower() in ("frozen", "inf") else float(raw)
    return raw


def parse_config(text: str) -> ExperimentConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    cp.read_string("[experiment]\n" + text)
    known = {f.name: f for f in fields(ExperimentConfig)}
    kwargs, errs = {}, []
    for key, raw in cp["experiment"].items():
        f = known.get(key)
        if f is None:
            errs.append(f"unknown key {key!r}")
            continue
        try:
            kwargs[key] = _convert(f, raw)
        except ValueError as exc:
            errs.append(f"{key}: {exc}")
    if errs:
        raise ConfigError("; ".join(errs))
    cfg = ExperimentConfig(**kwargs)
    cfg.validate()
    return cfg


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


def format_config(cfg: ExperimentConfig) -> str:
    lines = []
    for f in fields(cfg):
        v = getattr(cfg, f.name)
        if isinstance(v, list):
            v = ",".join(str(x) for x in v)
        elif isinstance(v, bool):
            v = str(v).lower()
        elif isinstance(v, float) and math.isinf(v):
            v = "frozen"
        lines.append(f"{f.name} = {v}")
    return "\n".join(lines) + "\n"
