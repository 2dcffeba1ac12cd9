import math
import random
import statistics
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from bbig.machine import Backend, Estimator, Program, run_bounded, sample_program
from bbig.metrics import (
    Inapplicable,
    LowerBoundParams,
    amax_estimate,
    complement_identity_check,
    empirical_entropy,
    gibbs_entropy_check,
    halting_fraction,
    halting_profile,
    lower_bound_eval,
    omega_from_profile,
    tau_expected,
    tau_max,
    time_centrality,
)
from bbig.oracles import path_arrivals
from bbig.runner import Binding, Population, bindings_for, run_networked, sample_population
from bbig.temporal_graph import (
    TemporalGraph,
    dt,
    gen_complete,
    gen_gated_complete,
    gen_ring,
    gen_static,
)

from conftest import tvgs

P = Program.from_instructions


def const(v):
    return P(["INC"] * v + ["HALT"])


def path3(T=3):
    return gen_static(3, [(0, 1), (1, 2)], T, undirected=True)


def test_tau_max_examples():
    pop = Population((const(5), const(1), const(2)))
    tr = run_networked(gen_complete(3, 3), pop, Binding.identity(3))
    assert tau_max(tr, 0, 1).fraction == 1
    assert tau_max(tr, 0, 0).fraction == Fraction(1, 3)
    tr = run_networked(path3(), pop, Binding.identity(3))
    assert tau_max(tr, 0, 1).fraction == Fraction(2, 3)
    # from a later instant only newly reached nodes count
    assert tau_max(tr, 1, 2).fraction == Fraction(1, 3)
    with pytest.raises(ValueError):
        tau_max(tr, 0, 3)


def test_tau_max_ties_go_to_lowest_label():
    pop = Population((const(2), const(2), const(0)))
    tr = run_networked(path3(), pop, Binding((3, 2, 1)))
    assert tr.argmax_label() == 1  # vertex 2
    assert tau_max(tr, 0, 1).fraction == Fraction(2, 3)


@given(tvgs(min_n=2), st.integers(0, 2**32))
def test_tau_max_monotone_and_full_at_dt(g, seed):
    rng = random.Random(seed)
    n = g.vertex_count
    b = bindings_for(n, 1, rng)[0]
    tr = run_networked(g, sample_population(n, rng), b, budget=1000)
    fr = [tau_max(tr, 0, t).fraction for t in range(tr.stop + 1)]
    assert fr == sorted(fr)
    src = b.vertex_to_label.index(tr.argmax_label())
    d = dt(g, 0, src, 1)
    for t, f in enumerate(fr):
        assert (f == 1) == (t >= d)


def test_tau_expected_symmetric_graphs():
    for g in (gen_complete(5, 3), gen_ring(5, 4)):
        pop = sample_population(5, random.Random(2))
        one = run_networked(g, pop, Binding.identity(5))
        stop = g.instant_count - 1
        assert tau_expected(g, pop, 0, 1000, 7, random.Random(9), 0, stop) == tau_max(one, 0, stop).fraction


def test_tau_expected_single_binding():
    g = path3()
    pop = Population((const(1), const(4), const(2)))
    b = bindings_for(3, 1, random.Random(5))[0]
    want = tau_max(run_networked(g, pop, b), 0, 1).fraction
    assert tau_expected(g, pop, 0, 100, 1, random.Random(5), 0, 1) == want


def test_tau_expected_exhaustive_path():
    # max in the middle covers 3/3 after one interval, at an end 2/3
    g = path3()
    pop = Population((const(9), const(1), const(2)))
    assert tau_expected(g, pop, 0, 100, 6, random.Random(0), 0, 1) == Fraction(1 * 2 + Fraction(2, 3) * 4, 6)


def test_complement_examples():
    pop = Population((const(5), const(1), const(2)))
    tr = run_networked(gen_complete(3, 4), pop, Binding.identity(3))
    assert complement_identity_check(tr, 0, 2)
    tr = run_networked(path3(), pop, Binding.identity(3))
    assert tau_max(tr, 0, 1).fraction == Fraction(2, 3)
    assert complement_identity_check(tr, 0, 1)
    cut = TemporalGraph.build(3, 3, [(0, 0, 1), (1, 1, 0)])
    with pytest.raises(Inapplicable):
        complement_identity_check(run_networked(cut, pop, Binding.identity(3)), 0, 1)


def test_halting_fraction_examples():
    est = halting_fraction(0, 1, 10_000, 100_000, random.Random(1))
    assert 0 < est.omega_hat < 1 and est.sample_count == 100_000
    progs = [sample_program(random.Random(i)) for i in range(2000)]
    prof = halting_profile(progs, 0, 4, 5000)
    assert omega_from_profile(prof, 4) <= omega_from_profile(prof, 2)
    assert omega_from_profile(halting_profile([P(["HALT"])], 0, 3, 10), 3) == 1
    with pytest.raises(ValueError):
        halting_fraction(0, 0, 10, 10, random.Random(0))


def test_omega_monotone_in_budget():
    progs = [sample_program(random.Random(100 + i)) for i in range(1000)]
    om = [omega_from_profile(halting_profile(progs, 1, 3, b), 3) for b in (5, 20, 100, 10_000)]
    assert om == sorted(om)


def test_gibbs_examples():
    a, b = P(["HALT"]), P(["INC", "HALT"])
    assert gibbs_entropy_check([a, a, a])
    assert empirical_entropy([a, a]) == 0
    assert gibbs_entropy_check([a, b]) and empirical_entropy([a, b]) == 1
    with pytest.raises(Inapplicable):
        gibbs_entropy_check([])
    rng = random.Random(3)
    halting = [p for p in (sample_program(rng) for _ in range(1500)) if run_bounded(p).halted]
    assert len(halting) >= 1000
    assert gibbs_entropy_check(halting)
    assert empirical_entropy(halting) <= math.log2(len({p.bits for p in halting})) + 1e-9


def test_lower_bound_examples():
    assert lower_bound_eval(LowerBoundParams(1, 0.5, 1024, 4)).value == pytest.approx(3.0, abs=1e-12)
    r = lower_bound_eval(LowerBoundParams(0.3, 0.3, 64, 8, A_w=1.5, C5=2))
    assert r.leading_coefficient == 0
    assert r.value == pytest.approx(-0.3 * 3 - 2 * 0.3 * math.log2(3) - 1.5 - 2, abs=1e-12)
    assert lower_bound_eval(LowerBoundParams(0, 1, 4, 4)).value == pytest.approx(-6, abs=1e-12)


def test_lower_bound_argument_errors():
    with pytest.raises(ValueError):
        LowerBoundParams(1, 0.5, 16, 1.5)
    with pytest.raises(ValueError):
        LowerBoundParams(1.2, 0.5, 16, 4)
    with pytest.raises(ValueError):
        LowerBoundParams(1, 0.5, 1, 4)


def test_lower_bound_monotone_on_grid():
    h = 1e-3
    grid = [i / 10 for i in range(1, 10)]
    for n in (4, 64, 1024):
        for x in (4, 9, 100):
            for t in grid:
                for o in grid:
                    base = lower_bound_eval(LowerBoundParams(t, o, n, x)).value
                    assert lower_bound_eval(LowerBoundParams(t + h, o, n, x)).value > base
                    assert lower_bound_eval(LowerBoundParams(t, o + h, n, x)).value < base


def _brute_scores(g, tau=1):
    """score z + CT + 2 per instant from explicit path enumeration."""
    out = {}
    n = g.vertex_count
    for z in range(g.instant_count):
        times = []
        for s in range(n):
            arr = sorted(a for a in path_arrivals(g, z, s) if a is not None)
            need = math.ceil(Fraction(tau) * n)
            times.append(arr[need - 1] if len(arr) >= need else None)
        if None not in times:
            ct = Fraction(sum(times), n)
            out[z] = (z + ct + 2, ct)
    return out


@pytest.mark.parametrize("t_star", [0, 1, 2, 3])
def test_centrality_gated(t_star):
    g = gen_gated_complete(5, t_star + 4, t_star)
    res = time_centrality(g, 1, 0, 1000, random.Random(t_star), omega_samples=300)
    assert res.t_cen == t_star == res.t_cen2
    scores = _brute_scores(g)
    assert min(scores, key=lambda z: (scores[z], z)) == t_star
    for row in res.rows:
        if row.z in scores:
            assert row.score == float(scores[row.z][0])


def test_centrality_static_complete_and_never():
    res = time_centrality(gen_complete(4, 5), 1, 0, 1000, random.Random(0), omega_samples=200)
    assert res.t_cen == 0
    none = time_centrality(TemporalGraph.build(4, 5, ()), 1, 0, 1000, random.Random(0), omega_samples=50)
    assert none.t_cen is None and none.t_cen2 is None
    assert "infinite" in none.diagnostic


def test_centrality_second_variant_without_qualifying_instant():
    # a huge epsilon disqualifies every instant; the second variant still picks one
    res = time_centrality(gen_gated_complete(4, 6, 2), 1, 0, 1000, random.Random(0), epsilon=5, omega_samples=200)
    assert res.t_cen is None and res.t_cen2 == 2
    assert "positive" in res.diagnostic


def test_centrality_c_map_precondition():
    with pytest.raises(ValueError):
        time_centrality(gen_complete(3, 3), 1, 0, 100, random.Random(0), c_map=lambda x: x - 1, omega_samples=10)


def test_amax_examples():
    ex = Estimator(Backend.EXACT_TINY)
    pop = Population((P(["HALT"]), P(["DEC", "HALT"])))
    assert amax_estimate(pop, 0, 100, ex) == (0, 3)
    assert amax_estimate(Population((P(["INC", "INC", "HALT"]), P(["HALT"]))), 0, 100, ex)[0] == 2
    with pytest.raises(ValueError):
        amax_estimate(Population(()), 0, 100, ex)


def test_amax_median_grows():
    def med(n):
        return statistics.median(
            amax_estimate(sample_population(n, random.Random(1000 * n + s)), 0, 10_000, Estimator())[0]
            for s in range(20))
    assert med(1024) >= med(64)
