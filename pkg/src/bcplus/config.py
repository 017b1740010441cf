"""Settings for every module, read from an INI file with one section per module.

Example::

    [solver]
    backend = glucose4
    conflict_budget = 10000000

    [pipeline]
    sat_budget = 10
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional, Union

from .encode import SolverConfig
from .query import QueryConfig


@dataclass
class OracleConfig:
    state_cap: int = 5_000_000
    bound: int = 30


@dataclass
class ClientConfig:
    model: str = "o1-preview"
    base_url: str = "https://api.openai.com/v1/chat/completions"
    api_key_env: str = "BCPLUS_API_KEY"
    temperature: float = 1.0
    max_tokens: int = 8192
    timeout: float = 300.0
    retries: int = 2


@dataclass
class PipelineConfig:
    sat_budget: int = 10
    feedback_budget: int = 3
    stage_retries: int = 3  # attempts for a stage whose answer does not parse
    max_sample_queries: int = 5
    templates_dir: Optional[str] = None
    transcript_dir: Optional[str] = None
    review_file: Optional[str] = None  # the final program is written here
    corrected_file: Optional[str] = None  # and read back from here when present


@dataclass
class BenchConfig:
    workers: int = 1
    run_oracle: bool = True


@dataclass
class Config:
    solver: SolverConfig = field(default_factory=SolverConfig)
    query: QueryConfig = field(default_factory=QueryConfig)
    oracle: OracleConfig = field(default_factory=OracleConfig)
    client: ClientConfig = field(default_factory=ClientConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)
    bench: BenchConfig = field(default_factory=BenchConfig)

    def __post_init__(self) -> None:
        self.query.solver = self.solver


def _coerce(raw: str, current):
    if isinstance(current, bool):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    if isinstance(current, int):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if raw.strip().lower() in ("", "none"):
        return None
    return raw.strip()


def _apply(section: configparser.SectionProxy, target) -> None:
    known = {f.name: f for f in fields(target)}
    for key, raw in section.items():
        if key not in known:
            raise ValueError(f"unknown setting [{section.name}] {key}")
        if known[key].name == "solver":
            continue
        setattr(target, key, _coerce(raw, getattr(target, key)))


def load_config(path: Optional[Union[str, Path]] = None) -> Config:
    cfg = Config()
    if path is None:
        return cfg
    parser = configparser.ConfigParser()
    with open(path, encoding="utf-8") as fh:
        parser.read_file(fh)
    for name in parser.sections():
        target = getattr(cfg, name, None)
        if target is None:
            raise ValueError(f"unknown config section [{name}]")
        _apply(parser[name], target)
    cfg.query.solver = cfg.solver
    return cfg
