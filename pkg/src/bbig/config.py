"""Flat ``key = value`` experiment configuration.

Lines are ``key = value`` pairs; ``#`` starts a comment. Unknown keys and
malformed values are rejected before anything runs. Command-line overrides
use the same ``key=value`` syntax.
"""

from __future__ import annotations

import dataclasses
import hashlib
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path

from .machine import Backend
from .temporal_graph import as_fraction, small_diameter_bound


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class GraphSpec:
    kind: str  # static_complete | static_ring | small_diameter | gated_complete | edgeless | file
    param: float | int | None = None
    path: str | None = None

    KINDS = ("static_complete", "static_ring", "small_diameter", "gated_complete", "edgeless", "file")

    @classmethod
    def parse(cls, text: str) -> "GraphSpec":
        m = re.fullmatch(r"\s*([a-z_]+)\s*(?:\(\s*(.*?)\s*\))?\s*", text)
        if not m or m.group(1) not in cls.KINDS:
            raise ConfigError(f"unknown graph {text!r}; expected one of {', '.join(cls.KINDS)}")
        kind, arg = m.groups()
        if kind == "file":
            if not arg:
                raise ConfigError("graph file(path) needs a path")
            return cls(kind, None, arg)
        if kind == "small_diameter":
            k = float(arg) if arg else 3.0
            if k <= 0:
                raise ConfigError("small_diameter(k) needs k > 0")
            return cls(kind, k)
        if kind == "gated_complete":
            if arg is None or not arg.isdigit():
                raise ConfigError("gated_complete(t) needs a nonnegative integer instant")
            return cls(kind, int(arg))
        if arg:
            raise ConfigError(f"graph {kind} takes no parameter")
        return cls(kind)

    def __str__(self) -> str:
        if self.kind == "file":
            return f"file({self.path})"
        if self.param is None:
            return self.kind
        p = self.param
        return f"{self.kind}({int(p) if float(p).is_integer() else p})"


@dataclass(frozen=True)
class ExperimentConfig:
    seed: int = 0
    N_grid: tuple[int, ...] = (16, 64, 256, 1024)
    T: int = 0  # 0 picks a default per graph kind
    graph: GraphSpec = GraphSpec("small_diameter", 3.0)
    degree_param: float = 2.0
    tau: Fraction = Fraction(1)
    w: int = 0
    budget: int = 10_000
    binding_samples: int = 8
    estimator: Backend = Backend.COMPRESS_PROXY
    exact_cap: int = 24
    omega_samples: int = 500
    epsilon: float = 0.01
    c0: int = 0
    replicates: int = 1
    validate_cases: int = 200
    out: str = "out"

    def __post_init__(self):
        if not 0 <= self.seed < 1 << 64:
            raise ConfigError("seed must be an unsigned 64-bit integer")
        if not self.N_grid or any(n < 1 for n in self.N_grid):
            raise ConfigError("N_grid needs positive population sizes")
        if list(self.N_grid) != sorted(set(self.N_grid)):
            raise ConfigError("N_grid must be strictly ascending")
        if self.T < 0 or self.T == 1:
            raise ConfigError("T must be 0 (auto) or >= 2")
        if not 0 < self.tau <= 1:
            raise ConfigError("tau must lie in (0, 1]")
        for name in ("budget", "binding_samples", "omega_samples", "replicates", "validate_cases", "exact_cap"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.exact_cap > 30:
            raise ConfigError("exact_cap must be <= 30")
        if self.w < 0 or self.c0 < 0:
            raise ConfigError("w and c0 must be >= 0")
        if self.epsilon <= 0:
            raise ConfigError("epsilon must be positive")
        if self.degree_param <= 0:
            raise ConfigError("degree_param must be positive")
        if self.graph.kind == "gated_complete" and self.T and self.T < self.graph.param + 2:
            raise ConfigError("gated_complete(t) needs T >= t + 2")

    def instants_for(self, n: int) -> int:
        if self.T:
            return self.T
        if self.graph.kind == "small_diameter":
            return small_diameter_bound(max(n, 2), self.graph.param) + 1
        if self.graph.kind == "gated_complete":
            return self.graph.param + 4
        return 8

    def canonical(self, include_out: bool = False) -> str:
        """Stable text form; identical configs give identical text."""
        lines = []
        for f in dataclasses.fields(self):
            if f.name == "out" and not include_out:
                continue
            lines.append(f"{f.name} = {_render(getattr(self, f.name))}")
        return "\n".join(lines) + "\n"

    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()


def _render(v) -> str:
    if isinstance(v, tuple):
        return ", ".join(map(str, v))
    if isinstance(v, Backend):
        return v.value
    return str(v)


def _parse_int(text: str) -> int:
    return int(text.replace("_", ""), 0)


_PARSERS = {
    "seed": _parse_int,
    "N_grid": lambda s: tuple(_parse_int(x) for x in re.split(r"[\s,]+", s.strip("[] ")) if x),
    "T": _parse_int,
    "graph": GraphSpec.parse,
    "degree_param": float,
    "tau": as_fraction,
    "w": _parse_int,
    "budget": lambda s: int(float(s)) if "e" in s.lower() else _parse_int(s),
    "binding_samples": _parse_int,
    "estimator": Backend,
    "exact_cap": _parse_int,
    "omega_samples": _parse_int,
    "epsilon": float,
    "c0": _parse_int,
    "replicates": _parse_int,
    "validate_cases": _parse_int,
    "out": str,
}


def parse_pairs(pairs, source: str = "<override>") -> dict:
    """Parse ``(lineno, key, value)`` triples into typed fields."""
    out = {}
    for lineno, key, value in pairs:
        if key not in _PARSERS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        try:
            out[key] = _PARSERS[key](value)
        except ConfigError as exc:
            raise ConfigError(f"{source}:{lineno}: {exc}") from None
        except (ValueError, ZeroDivisionError) as exc:
            raise ConfigError(f"{source}:{lineno}: bad value for {key}: {value!r} ({exc})") from None
    return out


def _split_line(line: str, where: str) -> tuple[str, str]:
    if "=" not in line:
        raise ConfigError(f"{where}: expected 'key = value', got {line!r}")
    key, value = line.split("=", 1)
    return key.strip(), value.strip()


def read_config_text(text: str, source: str = "<config>") -> dict:
    pairs = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if line:
            pairs.append((lineno, *_split_line(line, f"{source}:{lineno}")))
    return parse_pairs(pairs, source)


def load_config(path: str | Path | None = None, overrides: list[str] = (), **fixed) -> ExperimentConfig:
    """Defaults, then the file, then ``key=value`` overrides, then ``fixed`` keyword values."""
    values = {}
    if path is not None:
        try:
            text = Path(path).read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        values.update(read_config_text(text, str(path)))
    pairs = [(i, *_split_line(o, f"override {o!r}")) for i, o in enumerate(overrides, 1)]
    values.update(parse_pairs(pairs))
    values.update({k: v for k, v in fixed.items() if v is not None})
    try:
        return ExperimentConfig(**values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None
