"""Brute-force reference computations used by the validation suite.

These enumerate temporal paths explicitly instead of sweeping instants, so
they share no code with the fast routines they check. Only practical for
small graphs (N <= 8, T <= 5 or so).
"""

from __future__ import annotations

from typing import Sequence

from .temporal_graph import TemporalGraph


def path_arrivals(g: TemporalGraph, start: int, source: int, horizon: int | None = None) -> list[int | None]:
    """Minimal arrival over every temporal path leaving ``source`` at ``start``.

    A path waits or takes one arrow per interval. ``horizon`` limits the
    number of intervals considered (default: up to the last instant).
    """
    last = g.instant_count - 1 if horizon is None else min(start + horizon, g.instant_count - 1)
    out_arrows: dict[tuple[int, int], list[int]] = {}
    for t, u, v in g.edges:
        out_arrows.setdefault((t, u), []).append(v)
    best: list[int | None] = [None] * g.vertex_count

    def walk(v: int, t: int) -> None:
        k = t - start
        if best[v] is None or k < best[v]:
            best[v] = k
        if t >= last:
            return
        walk(v, t + 1)
        for nxt in out_arrows.get((t, v), ()):
            walk(nxt, t + 1)

    walk(source, start)
    return best


def reachable_sources(g: TemporalGraph, start: int, stop: int) -> list[set[int]]:
    """``result[v]``: vertices with a temporal path to ``v`` within ``[start, stop]``."""
    into: list[set[int]] = [set() for _ in range(g.vertex_count)]
    for u in range(g.vertex_count):
        arr = path_arrivals(g, start, u, stop - start)
        for v, a in enumerate(arr):
            if a is not None:
                into[v].add(u)
    return into


def contagion_finals(
    g: TemporalGraph,
    values: Sequence[int],
    labels: Sequence[int],
    start: int,
    stop: int,
) -> list[tuple[int, int]]:
    """(value, carrier) each vertex should hold after diffusion over ``[start, stop]``.

    The value is the maximum first-cycle value over the vertex's temporal
    in-reachable set, the carrier the lowest label among the holders of it.
    """
    out = []
    for v, srcs in enumerate(reachable_sources(g, start, stop)):
        top = max(values[u] for u in srcs)
        out.append((top, min(labels[u] for u in srcs if values[u] == top)))
    return out
