"""Run configuration read from key=value text with [sections]."""
from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass, field, fields
from pathlib import Path

from ..errors import ConfigError


@dataclass(frozen=True)
class GridConfig:
    x_min: float = -2.0
    x_max: float = 2.0
    t_min: float = -2.0
    t_max: float = 1.0
    spacing: float = 0.05
    dt: float = 0.05

    @property
    def window(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.x_max, self.t_min, self.t_max)


@dataclass(frozen=True)
class LPPConfig:
    n: int = 200
    horizon: int = 600
    replicas: int = 200
    depth: int = 50
    x_min: float = -1.0
    x_max: float = 1.0
    t_min: float = -0.75
    t_max: float = 0.5
    samples: int = 50
    workers: int = 1
    max_sites: int = 20_000_000


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    backend: str = "parabolic"
    corpus: str = "three-color"
    weights_file: str | None = None
    name: str = "run"
    output: str = "out"
    grid: GridConfig = field(default_factory=GridConfig)
    lpp: LPPConfig = field(default_factory=LPPConfig)
    source_text: str = ""

    def digest(self) -> str:
        return hashlib.sha256(self.source_text.encode()).hexdigest()


_RUN_KEYS = {"seed": int, "backend": str, "corpus": str, "weights_file": str, "name": str, "output": str}


def _section(parser, name, cls):
    if not parser.has_section(name):
        return cls()
    types = {f.name: f.type for f in fields(cls)}
    kwargs = {}
    for key, raw in parser.items(name):
        if key not in types:
            raise ConfigError(f"unknown key {key!r} in [{name}]")
        conv = int if types[key] in ("int", int) else float
        try:
            kwargs[key] = conv(raw)
        except ValueError:
            raise ConfigError(f"[{name}] {key}={raw!r} is not a number") from None
    return cls(**kwargs)


def parse_config(text: str) -> RunConfig:
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"malformed configuration: {exc}") from None
    unknown = set(parser.sections()) - {"run", "grid", "lpp"}
    if unknown:
        raise ConfigError(f"unknown sections: {sorted(unknown)}")
    run = {}
    if parser.has_section("run"):
        for key, raw in parser.items("run"):
            if key not in _RUN_KEYS:
                raise ConfigError(f"unknown key {key!r} in [run]")
            try:
                run[key] = _RUN_KEYS[key](raw)
            except ValueError:
                raise ConfigError(f"[run] {key}={raw!r} is malformed") from None
    if run.get("backend", "parabolic") not in ("parabolic", "lpp"):
        raise ConfigError(f"unknown backend {run['backend']!r}")
    grid = _section(parser, "grid", GridConfig)
    lpp = _section(parser, "lpp", LPPConfig)
    if grid.spacing <= 0 or grid.dt <= 0 or grid.x_min >= grid.x_max or grid.t_min >= grid.t_max:
        raise ConfigError("grid window or spacing is degenerate")
    if lpp.n < 2 or lpp.replicas < 1 or lpp.horizon < 1 or lpp.workers < 1:
        raise ConfigError("lpp parameters out of range")
    return RunConfig(grid=grid, lpp=lpp, source_text=text, **run)


def load_config(path) -> RunConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from None
    return parse_config(text)
