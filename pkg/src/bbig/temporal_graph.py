"""Time-varying graphs as composite edges and their diffusion measures.

An edge ``(t, u, v)`` is an arrow leaving ``u`` at instant ``t`` and landing
on ``v`` at instant ``t + 1``; information moves one hop per time interval.
Distances count intervals after the starting instant. Unreachable targets
and uncovered diffusions are reported with the ``INFINITE`` sentinel.
"""

from __future__ import annotations

import functools
import math
import random
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Iterable

from .seeding import hash64

INFINITE = math.inf

Edge = tuple[int, int, int]  # (t, u, v)


class GraphParseError(ValueError):
    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


class GenerationError(RuntimeError):
    pass


def as_fraction(x) -> Fraction:
    """Exact fraction from an int, Fraction or decimal literal (float/str)."""
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    return Fraction(str(x))


def _check_tau(tau) -> Fraction:
    tau = as_fraction(tau)
    if not 0 < tau <= 1:
        raise ValueError(f"tau must lie in (0, 1], got {tau}")
    return tau


@dataclass(frozen=True)
class TemporalGraph:
    vertex_count: int
    instant_count: int
    edges: tuple[Edge, ...]
    undirected: bool = False

    def __post_init__(self):
        if self.vertex_count < 1 or self.instant_count < 1:
            raise ValueError("vertex_count and instant_count must be positive")

    @classmethod
    def build(cls, n: int, T: int, edges: Iterable[Edge], undirected: bool = False) -> "TemporalGraph":
        """Validate, expand undirected pairs into two arrows, dedupe and sort."""
        out = set()
        for t, u, v in edges:
            if not (0 <= u < n and 0 <= v < n):
                raise ValueError(f"vertex index out of range in edge {(t, u, v)} for N={n}")
            if not 0 <= t < T - 1:
                raise ValueError(f"departure instant {t} out of range [0, {T - 1})")
            out.add((t, u, v))
            if undirected:
                out.add((t, v, u))
        return cls(n, T, tuple(sorted(out)), undirected)

    @functools.cached_property
    def arrows_at(self) -> tuple[tuple[tuple[int, int], ...], ...]:
        """``arrows_at[t]``: the (u, v) arrows departing instant t."""
        per: list[list[tuple[int, int]]] = [[] for _ in range(self.instant_count)]
        for t, u, v in self.edges:
            per[t].append((u, v))
        return tuple(tuple(a) for a in per)

    def _check_start(self, start: int) -> None:
        if not 0 <= start < self.instant_count:
            raise ValueError(f"start instant {start} out of range [0, {self.instant_count})")

    def _check_vertex(self, v: int) -> None:
        if not 0 <= v < self.vertex_count:
            raise ValueError(f"vertex {v} out of range [0, {self.vertex_count})")


@dataclass(frozen=True)
class ReachProfile:
    source: int
    start: int
    arrival: tuple[int | None, ...]  # None means unreachable


@dataclass(frozen=True)
class DiffusionSummary:
    cover_time: Fraction | float
    diameter: int | float
    per_source_dt: tuple[int | float, ...]


def temporal_bfs(g: TemporalGraph, start: int, source: int) -> ReachProfile:
    """Earliest arrival (in intervals after ``start``) at every vertex."""
    g._check_start(start)
    g._check_vertex(source)
    arrival: list[int | None] = [None] * g.vertex_count
    arrival[source] = 0
    reached = [source]
    arrows = g.arrows_at
    for t in range(start, g.instant_count - 1):
        if len(reached) == g.vertex_count:
            break
        step = t + 1 - start
        fresh = []
        for u, v in arrows[t]:
            if arrival[v] is None and arrival[u] is not None and arrival[u] < step:
                arrival[v] = step
                fresh.append(v)
        reached.extend(fresh)
    return ReachProfile(source, start, tuple(arrival))


def _dt_from_profile(profile: ReachProfile, n: int, tau: Fraction) -> int | float:
    need = math.ceil(tau * n)
    times = sorted(a for a in profile.arrival if a is not None)
    if len(times) < need:
        return INFINITE
    return times[need - 1]


def dt(g: TemporalGraph, start: int, source: int, tau=1) -> int | float:
    """Least number of intervals for a diffusion from ``source`` to cover fraction ``tau``."""
    tau = _check_tau(tau)
    return _dt_from_profile(temporal_bfs(g, start, source), g.vertex_count, tau)


def per_source_dt(g: TemporalGraph, start: int, tau=1) -> tuple[int | float, ...]:
    tau = _check_tau(tau)
    g._check_start(start)
    return tuple(
        _dt_from_profile(temporal_bfs(g, start, u), g.vertex_count, tau)
        for u in range(g.vertex_count)
    )


def cover_time(g: TemporalGraph, start: int, tau=1) -> Fraction | float:
    times = per_source_dt(g, start, tau)
    if any(x == INFINITE for x in times):
        return INFINITE
    return Fraction(sum(times), g.vertex_count)


def temporal_diameter(g: TemporalGraph, start: int) -> int | float:
    return max(per_source_dt(g, start, 1))


def diffusion_summary(g: TemporalGraph, start: int, tau=1) -> DiffusionSummary:
    times = per_source_dt(g, start, tau)
    ct = INFINITE if INFINITE in times else Fraction(sum(times), g.vertex_count)
    return DiffusionSummary(ct, temporal_diameter(g, start), times)


# -- generators ----------------------------------------------------------

def gen_static(n: int, base_edges: Iterable[tuple[int, int]], T: int, undirected: bool = False) -> TemporalGraph:
    """Replicate one snapshot at every departing instant."""
    base = list(base_edges)
    return TemporalGraph.build(
        n, T, ((t, u, v) for t in range(T - 1) for u, v in base), undirected
    )


def complete_edges(n: int) -> list[tuple[int, int]]:
    return [(u, v) for u in range(n) for v in range(n) if u != v]


def gen_complete(n: int, T: int) -> TemporalGraph:
    return gen_static(n, complete_edges(n), T)


def gen_ring(n: int, T: int, directed: bool = True) -> TemporalGraph:
    return gen_static(n, [(u, (u + 1) % n) for u in range(n) if n > 1], T, undirected=not directed)


def gen_gated_complete(n: int, T: int, t_star: int) -> TemporalGraph:
    """No arrows before ``t_star``; complete snapshots from ``t_star`` on."""
    base = complete_edges(n)
    return TemporalGraph.build(n, T, ((t, u, v) for t in range(t_star, T - 1) for u, v in base))


def small_diameter_bound(n: int, k: float) -> int:
    return max(1, math.ceil(k * math.log2(n))) if n > 1 else 0


def gen_small_diameter(
    n: int,
    T: int,
    seed: int,
    degree_param: float = 2,
    k: float = 3,
    max_retries: int = 32,
) -> TemporalGraph:
    """Directed ring plus fresh random out-chords in every snapshot.

    Each vertex adds ``ceil(degree_param)`` uniform out-chords per snapshot.
    A draw is accepted when its temporal diameter from instant 0 is at most
    ``ceil(k * lg n)``; otherwise it is redrawn with the next sub-seed.
    """
    if n < 2:
        raise ValueError("small-diameter family needs n >= 2")
    bound = small_diameter_bound(n, k)
    chords = math.ceil(degree_param)
    ring = [(u, (u + 1) % n) for u in range(n)]
    measured = INFINITE
    for attempt in range(max_retries):
        rng = random.Random(hash64(seed, f"small_diameter/{n}", attempt))
        edges = []
        for t in range(T - 1):
            edges.extend((t, u, v) for u, v in ring)
            for u in range(n):
                for _ in range(chords):
                    v = rng.randrange(n - 1)
                    edges.append((t, u, v if v < u else v + 1))
        g = TemporalGraph.build(n, T, edges)
        measured = temporal_diameter(g, 0)
        if measured <= bound:
            return g
    raise GenerationError(
        f"no small-diameter graph for n={n}, T={T} after {max_retries} draws; "
        f"last measured diameter {measured} > {bound}"
    )


# -- file format ---------------------------------------------------------

def store_graph(g: TemporalGraph, path: str | Path) -> None:
    lines = ["tvg 1", f"n {g.vertex_count}", f"t {g.instant_count}"]
    if g.undirected:
        lines.append("undirected")
        edges = sorted({(t, min(u, v), max(u, v)) for t, u, v in g.edges})
    else:
        edges = list(g.edges)
    lines.extend(f"e {t} {u} {v}" for t, u, v in edges)
    Path(path).write_text("\n".join(lines) + "\n")


def load_graph(path: str | Path) -> TemporalGraph:
    n = T = None
    undirected = False
    seen_header = False
    edges: list[Edge] = []
    for lineno, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        tok = line.split()
        if not seen_header:
            if tok != ["tvg", "1"]:
                raise GraphParseError(lineno, f"expected header 'tvg 1', got {line!r}")
            seen_header = True
            continue
        try:
            if tok[0] == "n" and len(tok) == 2:
                n = int(tok[1])
            elif tok[0] == "t" and len(tok) == 2:
                T = int(tok[1])
            elif tok == ["undirected"]:
                undirected = True
            elif tok[0] == "e" and len(tok) == 4:
                if n is None or T is None:
                    raise GraphParseError(lineno, "edge before 'n' and 't' lines")
                t, u, v = map(int, tok[1:])
                if not (0 <= u < n and 0 <= v < n):
                    raise GraphParseError(lineno, f"vertex index out of range for n={n}")
                if not 0 <= t < T - 1:
                    raise GraphParseError(lineno, f"departure instant {t} out of range for t={T}")
                edges.append((t, u, v))
            else:
                raise GraphParseError(lineno, f"unrecognised line {line!r}")
        except ValueError as exc:
            if isinstance(exc, GraphParseError):
                raise
            raise GraphParseError(lineno, str(exc)) from None
    if not seen_header:
        raise GraphParseError(0, "missing 'tvg 1' header")
    if n is None or T is None:
        raise GraphParseError(0, "missing 'n' or 't' line")
    if n < 1 or T < 1:
        raise GraphParseError(0, "n and t must be positive")
    return TemporalGraph.build(n, T, edges, undirected)
