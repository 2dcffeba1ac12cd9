import random

import pytest
from hypothesis import HealthCheck, settings
from hypothesis import strategies as st

from bbig.temporal_graph import TemporalGraph

settings.register_profile(
    "repo", derandomize=True, deadline=None, max_examples=150,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")


@st.composite
def tvgs(draw, max_n=8, max_t=5, min_n=1):
    n = draw(st.integers(min_n, max_n))
    T = draw(st.integers(1, max_t))
    cells = [(t, u, v) for t in range(T - 1) for u in range(n) for v in range(n) if u != v]
    mask = draw(st.lists(st.booleans(), min_size=len(cells), max_size=len(cells)))
    return TemporalGraph.build(n, T, [c for c, keep in zip(cells, mask) if keep])


@pytest.fixture
def rng():
    return random.Random(20240611)
