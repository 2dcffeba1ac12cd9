"""Diffusion densities, halting fractions, the EEAC lower bound and time centrality."""

from __future__ import annotations

import math
import random
from collections import Counter
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .machine import Estimator, Program, run_bounded, sample_program
from .runner import (
    Population,
    RunTrace,
    binding_traces,
    bindings_for,
    first_cycle,
    sample_population,
)
from .temporal_graph import INFINITE, TemporalGraph, as_fraction, cover_time


class Inapplicable(ValueError):
    """A check whose precondition does not hold for the given input."""


# -- diffusion density ---------------------------------------------------

@dataclass(frozen=True)
class DiffusionDensity:
    t_start: int
    t: int
    t_end: int
    fraction: Fraction


def _holders(trace: RunTrace, t: int, source: int) -> set[int]:
    return {v for v, car in enumerate(trace.carriers[t]) if car == source}


def tau_max(trace: RunTrace, t: int, t_end: int) -> DiffusionDensity:
    """Fraction of nodes taking on the first-cycle maximum during ``(t, t_end]``.

    When ``t`` is the diffusion start the window also counts the source
    itself, so the fraction is the cumulative coverage at ``t_end``.
    """
    if not trace.start <= t <= t_end <= trace.stop:
        raise ValueError(f"need {trace.start} <= t <= t_end <= {trace.stop}, got t={t}, t_end={t_end}")
    source = trace.argmax_label()
    reached = _holders(trace, t_end, source)
    if t > trace.start:
        reached -= _holders(trace, t, source)
    return DiffusionDensity(trace.start, t, t_end, Fraction(len(reached), trace.size))


def tau_from_traces(traces: Sequence[RunTrace], t: int, t_end: int) -> Fraction:
    return sum((tau_max(tr, t, t_end).fraction for tr in traces), Fraction(0)) / len(traces)


def tau_expected(
    g: TemporalGraph,
    pop: Population,
    w: int,
    budget: int,
    binding_samples: int,
    rng: random.Random,
    t: int,
    t_end: int,
) -> Fraction:
    """Mean singleton diffusion density over bindings, diffusion starting at ``t``."""
    bindings = bindings_for(g.vertex_count, binding_samples, rng)
    traces = binding_traces(g, pop, bindings, w, budget, start=t, stop=t_end)
    return tau_from_traces(traces, t, t_end)


def full_coverage_instant(trace: RunTrace) -> int | None:
    source = trace.argmax_label()
    for t in range(trace.start, trace.stop + 1):
        if all(car == source for car in trace.carriers[t]):
            return t
    return None


def complement_identity_check(trace: RunTrace, t: int, t_mid: int) -> bool:
    """Coverage by ``t_mid`` plus coverage gained afterwards equals exactly 1.

    ``t`` is the diffusion start. The second term counts the nodes first
    reached in ``(t_mid, D]`` where ``D`` is the instant of full coverage.
    Raises Inapplicable when the maximum never covers every node in the trace.
    """
    if t != trace.start:
        raise ValueError(f"the identity is stated from the diffusion start {trace.start}, got t={t}")
    d = full_coverage_instant(trace)
    if d is None:
        raise Inapplicable("diffusion of the maximum never covers the network within the trace")
    first = tau_max(trace, t, t_mid).fraction
    source = trace.argmax_label()
    end = max(d, t_mid)
    gained = _holders(trace, end, source) - _holders(trace, t_mid, source)
    return first + Fraction(len(gained), trace.size) == 1


# -- halting -------------------------------------------------------------

@dataclass(frozen=True)
class HaltingEstimate:
    w: int
    c: int
    budget: int
    omega_hat: Fraction
    sample_count: int


def halting_profile(programs: Iterable[Program], w: int, c_max: int, budget: int) -> list[int]:
    """Per program, the number of consecutive isolated cycles (up to ``c_max``) that halt."""
    out = []
    for p in programs:
        x, k = w, 0
        while k < c_max:
            res = run_bounded(p, x, budget)
            if not res.halted:
                break
            x = res.value
            k += 1
        out.append(k)
    return out


def omega_from_profile(profile: Sequence[int], c: int) -> Fraction:
    return Fraction(sum(1 for k in profile if k >= c), len(profile))


def halting_fraction(w: int, c: int, budget: int, samples: int, rng: random.Random) -> HaltingEstimate:
    """Share of sampled programs halting in every one of ``c`` isolated cycles."""
    if samples < 1 or c < 1:
        raise ValueError("need samples >= 1 and c >= 1")
    programs = [sample_program(rng) for _ in range(samples)]
    prof = halting_profile(programs, w, c, budget)
    return HaltingEstimate(w, c, budget, omega_from_profile(prof, c), samples)


def gibbs_entropy_check(halting_samples: Sequence[Program]) -> bool:
    """Entropy of the empirical distribution over distinct programs is at most lg(support).

    With counts ``c_i`` summing to ``n`` over ``k`` distinct programs the
    inequality is equivalent to ``n**n <= k**n * prod(c_i**c_i)``, which is
    checked in exact integer arithmetic.
    """
    counts = Counter(p.bits for p in halting_samples)
    if not counts:
        raise Inapplicable("no halting programs")
    n, k = sum(counts.values()), len(counts)
    rhs = k ** n
    for c in counts.values():
        rhs *= c ** c
    return n ** n <= rhs


def empirical_entropy(halting_samples: Sequence[Program]) -> float:
    counts = Counter(p.bits for p in halting_samples)
    n = sum(counts.values())
    return -sum(c / n * math.log2(c / n) for c in counts.values())


# -- lower bound ---------------------------------------------------------

@dataclass(frozen=True)
class LowerBoundParams:
    tau_E: float
    omega: float
    N: int
    x: float
    A_w: float = 0.0
    C5: float = 0.0
    epsilon: float = 0.01
    epsilon2: float = 0.01

    def __post_init__(self):
        for name in ("tau_E", "omega"):
            if not 0 <= getattr(self, name) <= 1:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.N < 2:
            raise ValueError("N must be >= 2")
        if self.x < 2:
            raise ValueError("x must be >= 2 so that lg lg x is defined")


@dataclass(frozen=True)
class LowerBound:
    value: float
    leading_coefficient: float


def lower_bound_eval(params: LowerBoundParams) -> LowerBound:
    """(tau_E - omega) lg N - omega lg x - 2 omega lg lg x - A(w) - C5."""
    p = params
    lead = float(p.tau_E) - float(p.omega)
    lgx = math.log2(p.x)
    value = lead * math.log2(p.N) - p.omega * lgx - 2 * p.omega * math.log2(lgx) - p.A_w - p.C5
    return LowerBound(value, lead)


# -- time centrality -----------------------------------------------------

@dataclass(frozen=True)
class CentralityRow:
    z: int
    cover_time: Fraction | float
    score: float
    tau_E: Fraction | None
    omega_hat: Fraction | None
    coefficient: float | None
    bound: float | None


@dataclass(frozen=True)
class CentralityResult:
    t_cen: int | None
    t_cen2: int | None
    rows: tuple[CentralityRow, ...]
    diagnostic: str = ""


def _argmin_instant(rows: Sequence[CentralityRow]) -> int | None:
    # fewest total cycles, then fewest diffusion rounds, then earliest
    if not rows:
        return None
    return min(rows, key=lambda r: (r.score, r.cover_time, r.z)).z


def time_centrality(
    g: TemporalGraph,
    tau,
    w: int,
    budget: int,
    rng: random.Random,
    epsilon: float = 0.01,
    c_map: Callable[[int], int] | None = None,
    binding_samples: int = 8,
    omega_samples: int = 500,
    c0: int = 0,
    A_w: float = 0.0,
    C5: float = 0.0,
    pop: Population | None = None,
) -> CentralityResult:
    """Score every start instant and pick the central one.

    For each ``t_z`` with finite cover time ``f``: score ``z + f + 2``,
    expected singleton density over ``[t_z, t_{z + ceil f}]``, halting
    fraction at ``c_map(z + ceil f + 2)`` cycles, and coefficient
    ``C = (tau_E - omega - epsilon) / omega``. ``t_cen`` minimises the score
    over instants with ``C > 0``.
    """
    tau = as_fraction(tau)
    n = g.vertex_count
    if c_map is None:
        c_map = lambda x: c0 + x  # noqa: E731
    if pop is None:
        pop = sample_population(n, rng)
    omega_programs = [sample_program(rng) for _ in range(omega_samples)]
    bindings = bindings_for(n, binding_samples, rng, c0)
    first = first_cycle(pop, w, budget)

    plans = []
    for z in range(g.instant_count):
        f = cover_time(g, z, tau)
        if f == INFINITE:
            plans.append((z, f, None))
            continue
        span = math.ceil(f)
        x = z + span + 2
        cycles = c_map(x)
        if cycles < c0 + x:
            raise ValueError(f"c_map({x}) = {cycles} < c0 + x = {c0 + x}")
        plans.append((z, f, (span, x, cycles)))

    max_cycles = max((p[2][2] for p in plans if p[2]), default=0)
    profile = halting_profile(omega_programs, w, max_cycles, budget) if max_cycles else []

    rows = []
    for z, f, plan in plans:
        if plan is None:
            rows.append(CentralityRow(z, INFINITE, INFINITE, None, None, None, None))
            continue
        span, x, cycles = plan
        traces = binding_traces(g, pop, bindings, w, budget, start=z, stop=z + span, first=first)
        tau_E = tau_from_traces(traces, z, z + span)
        omega = omega_from_profile(profile, cycles)
        coeff = math.inf if omega == 0 else float(tau_E - omega - as_fraction(epsilon)) / float(omega)
        bound = lower_bound_eval(LowerBoundParams(float(tau_E), float(omega), max(n, 2), x, A_w, C5, epsilon))
        rows.append(CentralityRow(z, f, float(z + f + 2), tau_E, omega, coeff, bound.value))

    finite = [r for r in rows if r.coefficient is not None]
    qualifying = [r for r in finite if r.coefficient > 0]
    t_cen = _argmin_instant(qualifying)
    if qualifying:
        t_cen2 = _argmin_instant(qualifying)
    elif finite:
        best = max(float(r.tau_E - r.omega_hat) for r in finite)
        t_cen2 = _argmin_instant([r for r in finite if float(r.tau_E - r.omega_hat) == best])
    else:
        t_cen2 = None
    diag = ""
    if not finite:
        diag = "cover time is infinite at every start instant"
    elif t_cen is None:
        diag = "no start instant has a positive coefficient"
    return CentralityResult(t_cen, t_cen2, tuple(rows), diag)


# -- A_max ---------------------------------------------------------------

def amax_estimate(pop: Population, w: int, budget: int, estimator: Estimator) -> tuple[int, int]:
    """Largest first-cycle value in the population and its complexity estimate."""
    if pop.size < 1:
        raise ValueError("empty population")
    value = max(o.output for o in first_cycle(pop, w, budget))
    return value, estimator.estimate(value)[0].bits
