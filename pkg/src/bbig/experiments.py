"""Experiment drivers behind the command-line subcommands.

Each driver is a pure function of the configuration and returns rows; the
CLI owns file output. Random streams are derived from the master seed with
:func:`bbig.seeding.hash64`, keyed by stream name and population size, so
every (N, replicate) run is reproducible on its own.
"""

from __future__ import annotations

import math
import random
import statistics
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import permutations

from scipy.stats import spearmanr

from .config import ExperimentConfig
from .machine import (
    SAMPLE_BIT_CAP,
    Estimator,
    IncompleteProgram,
    SamplingError,
    decode,
    enumerate_programs,
    kraft_sum,
    run_bounded,
    sample_program,
)
from .metrics import (
    Inapplicable,
    LowerBoundParams,
    amax_estimate,
    complement_identity_check,
    gibbs_entropy_check,
    halting_profile,
    lower_bound_eval,
    omega_from_profile,
    tau_from_traces,
    time_centrality,
)
from .oracles import contagion_finals, path_arrivals
from .runner import (
    Binding,
    Population,
    binding_traces,
    bindings_for,
    eac_estimates,
    eeac_estimate,
    eeac_from_traces,
    first_cycle,
    run_isolated,
    run_networked,
    sample_population,
)
from .seeding import BitSource, hash64, rng_for
from .temporal_graph import (
    INFINITE,
    TemporalGraph,
    cover_time,
    gen_complete,
    gen_gated_complete,
    gen_ring,
    gen_small_diameter,
    load_graph,
    temporal_bfs,
)


def _stream(n: int, replicate: int) -> str:
    return f"N={n}/r={replicate}"


def sub_seed(cfg: ExperimentConfig, name: str, n: int, replicate: int = 0) -> int:
    return hash64(cfg.seed, f"{name}/{_stream(n, replicate)}")


def _rng(cfg: ExperimentConfig, name: str, n: int, replicate: int = 0) -> random.Random:
    return random.Random(sub_seed(cfg, name, n, replicate))


def build_graph(cfg: ExperimentConfig, n: int, replicate: int = 0) -> TemporalGraph:
    spec = cfg.graph
    T = cfg.instants_for(n)
    if spec.kind == "static_complete":
        return gen_complete(n, T)
    if spec.kind == "static_ring":
        return gen_ring(n, T)
    if spec.kind == "gated_complete":
        return gen_gated_complete(n, T, spec.param)
    if spec.kind == "edgeless":
        return TemporalGraph.build(n, T, ())
    if spec.kind == "small_diameter":
        return gen_small_diameter(n, T, sub_seed(cfg, "graph", n, replicate), cfg.degree_param, spec.param)
    g = load_graph(spec.path)
    if g.vertex_count != n:
        raise ValueError(f"graph file {spec.path} has {g.vertex_count} vertices, N_grid asks for {n}")
    return g


# -- growth --------------------------------------------------------------

GROWTH_COLUMNS = (
    "experiment_id", "N", "replicate", "seed", "T", "cover_time", "stop", "cycles",
    "eeac", "eeac_stderr", "fallbacks", "amax_value", "amax_bits",
    "tau_E", "omega_hat", "leading_term", "lower_bound",
)


@dataclass
class GrowthRun:
    row: dict
    trace_rows: list = field(default_factory=list)
    final_rows: list = field(default_factory=list)


def growth_run(cfg: ExperimentConfig, n: int, replicate: int = 0) -> GrowthRun:
    """One (N, replicate) point of the growth experiment.

    Diffusion starts at instant 0 and runs for ceil(cover time) intervals
    (capped by the graph's last instant). Isolated runs and the halting
    fraction use the same total cycle count as the networked run.
    """
    run_id = f"N{n}-r{replicate}"
    g = build_graph(cfg, n, replicate)
    pop = sample_population(n, _rng(cfg, "population", n, replicate))
    estimator = Estimator(cfg.estimator, cfg.budget, cfg.exact_cap)

    ct = cover_time(g, 0, cfg.tau)
    stop = g.instant_count - 1 if ct == INFINITE else min(math.ceil(ct), g.instant_count - 1)
    cycles = cfg.c0 + stop + 2
    bindings = bindings_for(n, cfg.binding_samples, _rng(cfg, "bindings", n, replicate), cfg.c0)
    first = first_cycle(pop, cfg.w, cfg.budget)
    traces = binding_traces(g, pop, bindings, cfg.w, cfg.budget, 0, stop, first=first)
    iso = run_isolated(pop, cfg.w, cycles, cfg.budget)
    exhaustive = len(bindings) == math.factorial(n)
    eeac = eeac_from_traces(traces, iso, estimator, exhaustive)
    tau_E = tau_from_traces(traces, 0, stop)

    orng = _rng(cfg, "omega", n, replicate)
    omega_programs = [sample_program(orng) for _ in range(cfg.omega_samples)]
    omega = omega_from_profile(halting_profile(omega_programs, cfg.w, cycles, cfg.budget), cycles)
    amax_value, amax_bits = amax_estimate(pop, cfg.w, cfg.budget, estimator)

    x = stop + 2
    lead = float(tau_E - omega) * math.log2(n) if n > 1 else 0.0
    bound = (
        lower_bound_eval(LowerBoundParams(float(tau_E), float(omega), n, x, 0.0, 0.0, cfg.epsilon)).value
        if n >= 2 else float("nan")
    )
    row = {
        "experiment_id": "growth",
        "N": n,
        "replicate": replicate,
        "seed": sub_seed(cfg, "population", n, replicate),
        "T": g.instant_count,
        "cover_time": _fmt(ct),
        "stop": stop,
        "cycles": cycles,
        "eeac": _fmt(eeac.mean),
        "eeac_stderr": _fmt(eeac.stderr),
        "fallbacks": eeac.fallback_count,
        "amax_value": amax_value,
        "amax_bits": amax_bits,
        "tau_E": _fmt(tau_E),
        "omega_hat": _fmt(omega),
        "leading_term": _fmt(lead),
        "lower_bound": _fmt(bound),
    }
    run = GrowthRun(row)
    tr = traces[0]
    run.trace_rows = list(tr.rows(run_id))
    rep = eac_estimates(tr.final_outputs, iso, estimator)
    run.final_rows = [
        (run_id, label, tr.final_outputs[label], iso[label], rep.by_label[label])
        for label in sorted(tr.final_outputs)
    ]
    return run


@dataclass(frozen=True)
class Trend:
    metric: str
    means: tuple[float, ...]
    monotone: bool
    spearman: float


def trend(rows: list[dict], metric: str) -> Trend | None:
    """Per-N mean monotonicity plus pooled Spearman correlation of (N, value)."""
    ns = sorted({r["N"] for r in rows})
    if len(ns) < 2:
        return None
    means = tuple(statistics.fmean(float(r[metric]) for r in rows if r["N"] == n) for n in ns)
    monotone = all(a <= b for a, b in zip(means, means[1:]))
    rho = spearmanr([r["N"] for r in rows], [float(r[metric]) for r in rows])[0]
    return Trend(metric, means, monotone, float(rho))


# -- centrality ----------------------------------------------------------

METRICS_COLUMNS = (
    "experiment_id", "N", "seed", "t_z", "cover_time", "tau_E", "omega_hat",
    "coefficient_C", "lower_bound", "t_cen", "t_cen2",
)


def centrality_rows(cfg: ExperimentConfig, n: int) -> tuple[list[tuple], str]:
    g = build_graph(cfg, n)
    seed = sub_seed(cfg, "centrality", n)
    res = time_centrality(
        g, cfg.tau, cfg.w, cfg.budget, random.Random(seed), cfg.epsilon,
        binding_samples=cfg.binding_samples, omega_samples=cfg.omega_samples, c0=cfg.c0,
    )
    rows = [
        ("centrality", n, seed, r.z, _fmt(r.cover_time), _fmt(r.tau_E), _fmt(r.omega_hat),
         _fmt(r.coefficient), _fmt(r.bound), _fmt(res.t_cen), _fmt(res.t_cen2))
        for r in res.rows
    ]
    return rows, res.diagnostic


# -- validation ----------------------------------------------------------

@dataclass(frozen=True)
class CheckResult:
    name: str
    cases: int
    failures: int
    detail: str = ""

    @property
    def passed(self) -> bool:
        return self.failures == 0


def random_tvg(rng: random.Random, max_n: int = 8, max_t: int = 5, density: float | None = None) -> TemporalGraph:
    n = rng.randint(1, max_n)
    T = rng.randint(1, max_t)
    p = rng.random() if density is None else density
    edges = [(t, u, v) for t in range(T - 1) for u in range(n) for v in range(n) if u != v and rng.random() < p]
    return TemporalGraph.build(n, T, edges)


def check_bfs_oracle(cases: int, rng: random.Random) -> CheckResult:
    bad = []
    for i in range(cases):
        g = random_tvg(rng)
        for start in range(g.instant_count):
            for s in range(g.vertex_count):
                if list(temporal_bfs(g, start, s).arrival) != path_arrivals(g, start, s):
                    bad.append(f"case {i} start {start} source {s}")
    return CheckResult("temporal_bfs_oracle", cases, len(bad), "; ".join(bad[:3]))


def check_contagion(cases: int, rng: random.Random, budget: int, w: int) -> CheckResult:
    bad = []
    for i in range(cases):
        g = random_tvg(rng)
        n = g.vertex_count
        pop = sample_population(n, rng)
        b = bindings_for(n, 1, rng)[0] if math.factorial(n) > 1 else Binding.identity(n)
        start = rng.randrange(g.instant_count)
        stop = rng.randint(start, g.instant_count - 1)
        tr = run_networked(g, pop, b, w, budget, start, stop)
        first = tr.first_cycle_values()
        want = contagion_finals(g, first, b.vertex_to_label, start, stop)
        for v, label in enumerate(b.vertex_to_label):
            ok = (tr.values[stop][v], tr.carriers[stop][v]) == want[v]
            ok &= tr.final_outputs[label] == (0 if tr.oracle_triggered[v] else want[v][0])
            if not ok:
                bad.append(f"case {i} vertex {v}")
    return CheckResult("contagion_oracle", cases, len(bad), "; ".join(bad[:3]))


def check_cover_closed_forms() -> CheckResult:
    bad = []
    for n in range(2, 33):
        if cover_time(gen_complete(n, 3), 0, 1) != 1:
            bad.append(f"K{n}")
    for n in range(3, 9):
        if cover_time(gen_ring(n, n + 1), 0, 1) != n - 1:
            bad.append(f"C{n}")
    return CheckResult("cover_time_closed_forms", 31 + 6, len(bad), ", ".join(bad))


def check_complement(cases: int, rng: random.Random, budget: int, w: int) -> CheckResult:
    bad, applicable = [], 0
    for i in range(cases):
        g = random_tvg(rng, density=0.5)
        n = g.vertex_count
        pop = sample_population(n, rng)
        tr = run_networked(g, pop, bindings_for(n, 1, rng)[0], w, budget)
        for t_mid in range(tr.stop + 1):
            try:
                if not complement_identity_check(tr, tr.start, t_mid):
                    bad.append(f"case {i} t_mid={t_mid}")
                applicable += 1
            except Inapplicable:
                break
    return CheckResult("complement_identity", applicable, len(bad), "; ".join(bad[:3]))


def check_kraft(max_len: int = 24, prefix_len: int = 15) -> CheckResult:
    """Kraft partial sums bounded by 1 and nondecreasing; enumeration agrees; prefix-free."""
    bad = []
    sums = [kraft_sum(L) for L in range(max_len + 1)]
    if any(s > 1 for s in sums):
        bad.append("sum exceeds 1")
    if any(a > b for a, b in zip(sums, sums[1:])):
        bad.append("sum decreases")
    progs = sorted(p.bits for p in enumerate_programs(prefix_len))
    if sum((Fraction(1, 2 ** len(b)) for b in progs), Fraction(0)) != sums[prefix_len]:
        bad.append("enumeration disagrees with counting")
    # a prefix sorts immediately before its extensions, so adjacent pairs suffice
    for a, b in zip(progs, progs[1:]):
        if b.startswith(a):
            bad.append(f"{a} prefixes {b}")
            break
    return CheckResult("kraft_prefix_free", max_len, len(bad), "; ".join(bad))


def check_decoding(cases: int, rng: random.Random) -> CheckResult:
    """Fair bit streams seeded by random 64-bit words all decode to a program."""
    fails = 0
    for _ in range(cases):
        try:
            decode(BitSource(random.Random(rng.getrandbits(64))), max_bits=SAMPLE_BIT_CAP)
        except (IncompleteProgram, SamplingError):
            fails += 1
    return CheckResult("random_stream_decoding", cases, fails)


def check_omega_monotone(samples: int, rng: random.Random, budget: int, w: int) -> CheckResult:
    progs = [sample_program(rng) for _ in range(samples)]
    prof = halting_profile(progs, w, 8, budget)
    omegas = [omega_from_profile(prof, c) for c in (1, 2, 4, 8)]
    ok = all(a >= b for a, b in zip(omegas, omegas[1:]))
    return CheckResult("omega_monotone", samples, 0 if ok else 1, " ".join(str(o) for o in omegas))


def check_gibbs(rounds: int, rng: random.Random, budget: int, w: int) -> CheckResult:
    bad = 0
    for _ in range(rounds):
        halting = [p for p in (sample_program(rng) for _ in range(200)) if run_bounded(p, w, budget).halted]
        try:
            bad += not gibbs_entropy_check(halting)
        except Inapplicable:
            continue
    return CheckResult("gibbs_entropy", rounds, bad)


def exhaustive_aeac(g: TemporalGraph, pop: Population, w: int, budget: int, estimator: Estimator) -> float:
    """Mean over every binding of the node-averaged EAC, written out directly."""
    n = g.vertex_count
    stop = g.instant_count - 1
    iso = run_isolated(pop, w, stop + 2, budget)
    total = 0.0
    perms = list(permutations(range(1, n + 1)))
    for perm in perms:
        tr = run_networked(g, pop, Binding(perm), w, budget)
        total += statistics.fmean(
            estimator.estimate(tr.final_outputs[k])[0].bits - estimator.estimate(iso[k])[0].bits
            for k in pop.labels
        )
    return total / len(perms)


def check_exhaustive_eeac(rng: random.Random, budget: int, w: int, estimator: Estimator) -> CheckResult:
    bad = []
    path = TemporalGraph.build(3, 3, [(t, u, v) for t in range(2) for u, v in ((0, 1), (1, 2))], undirected=True)
    for i in range(20):
        pop = sample_population(3, rng)
        sampled = eeac_estimate(path, pop, w, budget, 6, rng, estimator)
        direct = exhaustive_aeac(path, pop, w, budget, estimator)
        if not sampled.exhaustive or not math.isclose(sampled.mean, direct, rel_tol=1e-12, abs_tol=1e-12):
            bad.append(f"case {i}: {sampled.mean} != {direct}")
    return CheckResult("exhaustive_eeac_N3", 20, len(bad), "; ".join(bad[:3]))


def run_validation(cfg: ExperimentConfig) -> list[CheckResult]:
    k = cfg.validate_cases
    b, w = cfg.budget, cfg.w

    def r(name):
        return rng_for(cfg.seed, f"validate/{name}")

    est = Estimator(cfg.estimator, cfg.budget, cfg.exact_cap)
    return [
        check_bfs_oracle(k, r("bfs")),
        check_contagion(k, r("contagion"), b, w),
        check_cover_closed_forms(),
        check_complement(k, r("complement"), b, w),
        check_kraft(),
        check_decoding(k * 10, r("decode")),
        check_omega_monotone(k * 10, r("omega"), b, w),
        check_gibbs(10, r("gibbs"), b, w),
        check_exhaustive_eeac(r("eeac"), b, w, est),
    ]


def _fmt(x) -> str:
    if x is None:
        return "None"
    if isinstance(x, Fraction):
        return str(x.numerator) if x.denominator == 1 else f"{float(x):.6f}"
    if isinstance(x, float):
        if math.isinf(x):
            return "inf"
        if math.isnan(x):
            return "nan"
        return f"{x:.6f}"
    return str(x)
