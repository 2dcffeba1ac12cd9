"""Synchronous Busy Beaver Imitation Game over a temporal graph.

Every node runs its own program once on the network input (the first
cycle), then only imitates: at each instant a node receives the partial
outputs of its in-neighbours and keeps the largest value, breaking ties
by the lowest carrier label. At the end each node returns the value it
carries, except nodes whose first-cycle run exhausted the step budget,
which return 0.

Instant ``t`` corresponds to cycle ``c0 + t + 1``; the first computing
cycle lands on instant 0 and the final output cycle follows the last
instant of diffusion.
"""

from __future__ import annotations

import math
import random
import statistics
from dataclasses import dataclass
from itertools import permutations
from typing import Iterable, Sequence

from .machine import Backend, Estimator, ExecOutcome, Program, run_bounded, sample_program
from .temporal_graph import TemporalGraph


@dataclass(frozen=True)
class Population:
    """Ordered multiset of suffix programs; member ``i`` has label ``i + 1``."""

    programs: tuple[Program, ...]

    @property
    def size(self) -> int:
        return len(self.programs)

    @property
    def labels(self) -> range:
        return range(1, len(self.programs) + 1)

    def program(self, label: int) -> Program:
        return self.programs[label - 1]


def sample_population(n: int, rng: random.Random) -> Population:
    if n < 1:
        raise ValueError("population size must be >= 1")
    return Population(tuple(sample_program(rng) for _ in range(n)))


@dataclass(frozen=True)
class Binding:
    vertex_to_label: tuple[int, ...]
    c0: int = 0
    n: int | None = None  # total cycles; None means as few as the run needs

    def __post_init__(self):
        size = len(self.vertex_to_label)
        if sorted(self.vertex_to_label) != list(range(1, size + 1)):
            raise ValueError("binding must be a bijection from vertices onto labels 1..N")
        if self.c0 < 0:
            raise ValueError("c0 must be >= 0")

    @property
    def size(self) -> int:
        return len(self.vertex_to_label)

    @classmethod
    def identity(cls, n: int, c0: int = 0) -> "Binding":
        return cls(tuple(range(1, n + 1)), c0)


def bindings_for(n: int, m: int, rng: random.Random, c0: int = 0) -> list[Binding]:
    """All N! bindings when that is at most ``m``, else ``m`` uniform draws."""
    if m < 1:
        raise ValueError("need at least one binding")
    if math.factorial(n) <= m:
        return [Binding(tuple(p), c0) for p in permutations(range(1, n + 1))]
    out = []
    labels = list(range(1, n + 1))
    for _ in range(m):
        rng.shuffle(labels)
        out.append(Binding(tuple(labels), c0))
    return out


@dataclass(frozen=True)
class PartialOutput:
    w: int
    carrier: int
    value: int


@dataclass(frozen=True)
class RunTrace:
    """Per-instant states of one networked run, indexed by vertex.

    ``values[t][v]`` and ``carriers[t][v]`` hold vertex ``v``'s partial output
    at instant ``t`` for ``t`` in ``0..stop``; before ``start`` they equal the
    first-cycle values. The carrier is also the lineage: the label whose
    first-cycle value is being carried.
    """

    w: int
    start: int
    stop: int
    c0: int
    n: int
    vertex_to_label: tuple[int, ...]
    values: tuple[tuple[int, ...], ...]
    carriers: tuple[tuple[int, ...], ...]
    oracle_triggered: tuple[bool, ...]
    final_outputs: dict[int, int]

    @property
    def size(self) -> int:
        return len(self.vertex_to_label)

    def cycle_of(self, t: int) -> int:
        return self.c0 + t + 1

    def lineage_at(self, t: int) -> tuple[int, ...]:
        return self.carriers[t]

    def first_cycle_values(self) -> tuple[int, ...]:
        return self.values[0]

    def argmax_label(self) -> int:
        """Label of the largest first-cycle value, ties to the lowest label."""
        return min(zip(self.values[0], self.vertex_to_label), key=lambda p: (-p[0], p[1]))[1]

    def partial_output(self, cycle: int, label: int) -> PartialOutput | int:
        """Partial output of ``label`` at ``cycle``; the last cycle returns the bare final value."""
        if cycle == self.n:
            return self.final_outputs[label]
        t = cycle - self.c0 - 1
        if t < 0 or cycle > self.n:
            raise ValueError(f"cycle {cycle} is idle or beyond the last cycle {self.n}")
        t = min(t, self.stop)
        v = self.vertex_to_label.index(label)
        return PartialOutput(self.w, self.carriers[t][v], self.values[t][v])

    def rows(self, run_id: str = "0") -> Iterable[tuple]:
        """CSV rows: run_id, cycle, node, value, carrier, lineage, oracle_flag."""
        for t in range(self.stop + 1):
            for v, label in enumerate(self.vertex_to_label):
                yield (run_id, self.cycle_of(t), label, self.values[t][v],
                       self.carriers[t][v], self.carriers[t][v], int(self.oracle_triggered[v]))


def first_cycle(pop: Population, w: int, budget: int) -> tuple[ExecOutcome, ...]:
    return tuple(run_bounded(p, w, budget) for p in pop.programs)


def diffuse_step(values: Sequence[int], carriers: Sequence[int], arrows, blocked=()) -> tuple[list[int], list[int]]:
    """One synchronous exchange: receivers read only the previous snapshot."""
    new_vals = list(values)
    new_cars = list(carriers)
    for u, v in arrows:
        if u in blocked:
            continue
        val, car = values[u], carriers[u]
        if val > new_vals[v] or (val == new_vals[v] and car < new_cars[v]):
            new_vals[v] = val
            new_cars[v] = car
    return new_vals, new_cars


def run_networked(
    g: TemporalGraph,
    pop: Population,
    binding: Binding,
    w: int = 0,
    budget: int = 10_000,
    start: int = 0,
    stop: int | None = None,
    relay_when_triggered: bool = True,
    first: Sequence[ExecOutcome] | None = None,
) -> RunTrace:
    """Play the imitation game with diffusion from instant ``start`` through ``stop``.

    ``first`` may pass precomputed first-cycle outcomes (by label order) so
    that several bindings of one population share them.
    """
    n_vert = g.vertex_count
    if binding.size != n_vert or pop.size != n_vert:
        raise ValueError(f"binding ({binding.size}), population ({pop.size}) and graph ({n_vert}) sizes differ")
    if budget < 1:
        raise ValueError("budget must be >= 1")
    stop = g.instant_count - 1 if stop is None else stop
    if not 0 <= start <= stop < g.instant_count:
        raise ValueError(f"need 0 <= start <= stop < {g.instant_count}, got start={start} stop={stop}")
    total = binding.c0 + stop + 2
    if binding.n is not None:
        if binding.n < total:
            raise ValueError(f"binding allows {binding.n} cycles, run needs {total}")
        total = binding.n
    if first is None:
        first = first_cycle(pop, w, budget)

    labels = binding.vertex_to_label
    vals = [first[label - 1].output for label in labels]
    cars = list(labels)
    triggered = tuple(not first[label - 1].halted for label in labels)
    blocked = () if relay_when_triggered else frozenset(v for v in range(n_vert) if triggered[v])

    values = [tuple(vals)]
    carriers = [tuple(cars)]
    arrows = g.arrows_at
    for t in range(1, stop + 1):
        if t - 1 >= start:
            vals, cars = diffuse_step(vals, cars, arrows[t - 1], blocked)
        values.append(tuple(vals))
        carriers.append(tuple(cars))

    finals = {label: (0 if triggered[v] else vals[v]) for v, label in enumerate(labels)}
    return RunTrace(w, start, stop, binding.c0, total, labels, tuple(values), tuple(carriers), triggered, finals)


def run_isolated(pop: Population, w: int, c: int, budget: int = 10_000) -> dict[int, int]:
    """Each program fed its own previous output for ``c`` cycles; any overrun gives 0."""
    if c < 1:
        raise ValueError("need at least one cycle")
    out = {}
    for label, p in zip(pop.labels, pop.programs):
        x = w
        for _ in range(c):
            res = run_bounded(p, x, budget)
            if not res.halted:
                x = 0
                break
            x = res.value
        out[label] = x
    return out


@dataclass(frozen=True)
class EACReport:
    by_label: dict[int, int]
    fallbacks: frozenset[int]  # labels estimated with the proxy instead of the exact backend

    @property
    def mean(self) -> float:
        return statistics.fmean(self.by_label.values())


def eac_estimates(net_finals: dict[int, int], iso_finals: dict[int, int], estimator: Estimator) -> EACReport:
    """Per-node complexity of the networked output minus that of the isolated output."""
    if net_finals.keys() != iso_finals.keys():
        raise ValueError("networked and isolated outputs cover different labels")
    proxy = Estimator(Backend.COMPRESS_PROXY)
    cache: dict[int, int] = {}
    out, fell = {}, set()
    for label in sorted(net_finals):
        a, b = net_finals[label], iso_finals[label]
        if estimator.available(a) and estimator.available(b):
            use = estimator
        else:
            use = proxy
            fell.add(label)
        key_a, key_b = (use.backend, a), (use.backend, b)
        for key, val in ((key_a, a), (key_b, b)):
            if key not in cache:
                cache[key] = use.estimate(val)[0].bits
        out[label] = cache[key_a] - cache[key_b]
    return EACReport(out, frozenset(fell))


@dataclass(frozen=True)
class EEACResult:
    mean: float
    stderr: float
    per_binding: tuple[float, ...]
    exhaustive: bool
    fallback_count: int


def _iso_cycles(c0: int, stop: int) -> int:
    return c0 + stop + 2


def binding_traces(
    g: TemporalGraph,
    pop: Population,
    bindings: Sequence[Binding],
    w: int,
    budget: int,
    start: int = 0,
    stop: int | None = None,
    first: Sequence[ExecOutcome] | None = None,
) -> list[RunTrace]:
    if first is None:
        first = first_cycle(pop, w, budget)
    return [run_networked(g, pop, b, w, budget, start, stop, first=first) for b in bindings]


def eeac_from_traces(traces: Sequence[RunTrace], iso: dict[int, int], estimator: Estimator, exhaustive: bool) -> EEACResult:
    aeacs, fallbacks = [], 0
    for tr in traces:
        rep = eac_estimates(tr.final_outputs, iso, estimator)
        aeacs.append(rep.mean)
        fallbacks += len(rep.fallbacks)
    mean = statistics.fmean(aeacs)
    se = statistics.stdev(aeacs) / math.sqrt(len(aeacs)) if len(aeacs) > 1 else 0.0
    return EEACResult(mean, se, tuple(aeacs), exhaustive, fallbacks)


def eeac_estimate(
    g: TemporalGraph,
    pop: Population,
    w: int,
    budget: int,
    binding_samples: int,
    rng: random.Random,
    estimator: Estimator,
    c0: int = 0,
    start: int = 0,
    stop: int | None = None,
) -> EEACResult:
    """Mean over bindings of the node-averaged EAC, with its standard error.

    When N! <= ``binding_samples`` every binding is enumerated, giving the
    exact average over bindings.
    """
    stop = g.instant_count - 1 if stop is None else stop
    bindings = bindings_for(g.vertex_count, binding_samples, rng, c0)
    traces = binding_traces(g, pop, bindings, w, budget, start, stop)
    iso = run_isolated(pop, w, _iso_cycles(c0, stop), budget)
    exhaustive = len(bindings) == math.factorial(g.vertex_count)
    return eeac_from_traces(traces, iso, estimator, exhaustive)
