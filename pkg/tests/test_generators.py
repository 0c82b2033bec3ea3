import io
import math
from itertools import permutations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from kcohesion.connectivity import node_connectivity
from kcohesion.decomposition import bicomponent_node_sets, core_numbers
from kcohesion.generators import (
    bipartite_configuration_null,
    bipartite_stub_matching,
    erdos_renyi,
    powerlaw_configuration,
    powerlaw_degree_sequence,
    random_bipartite,
)
from kcohesion.graph import PART_A, PART_B, NotBipartiteError, build_bipartite, write_edge_list
from kcohesion.heuristic import k_components_heuristic

seeds = st.integers(0, 2**32 - 1)


def dump(g):
    buf = io.StringIO()
    write_edge_list(g, buf)
    return buf.getvalue()


def test_fixture_properties(fixture_graph):
    g = fixture_graph
    assert (len(g), g.number_of_edges()) == (99, 200)
    assert len(bicomponent_node_sets(g)) == 1
    assert min(core_numbers(g).values()) == 3 and max(core_numbers(g).values()) == 4
    assert node_connectivity(g) == 2
    grid = [v for v in g.nodes if g.label(v).startswith("g")]
    assert all(g.degree(v) > 2 for v in grid)
    # the Petersen graphs are the only outside neighbours of grid corners
    for r, c in ((0, 0), (0, 4), (4, 0), (4, 4)):
        outside = {g.label(w)[0] for w in g.neighbors(g.index_of(f"g{r}_{c}"))} - {"g"}
        assert outside == {"p"}


def test_erdos_renyi_ranges():
    with pytest.raises(ValueError):
        erdos_renyi(10, 0)
    with pytest.raises(ValueError):
        erdos_renyi(10, 9)
    with pytest.raises(ValueError):
        erdos_renyi(1, 0.5)


def test_erdos_renyi_edge_count_concentration():
    n, d = 1000, 6.0
    pairs = n * (n - 1) // 2
    p = d / (n - 1)
    mean, sd = pairs * p, math.sqrt(pairs * p * (1 - p))
    for seed in range(3):
        m = erdos_renyi(n, d, seed).number_of_edges()
        assert abs(m - mean) <= 3 * sd


def test_erdos_renyi_core_is_four_connected():
    # at average degree 6 the 4-core is itself 4-connected, so these graphs
    # do have a level-4 block; the hierarchy is flat above that
    for seed in range(2):
        g = erdos_renyi(1000, 6.0, seed)
        cores = core_numbers(g)
        assert max(cores.values()) == 4
        core = g.subgraph(v for v in g.nodes if cores[v] == 4)
        assert len(bicomponent_node_sets(core)) == 1
        assert node_connectivity(core) == 4


def test_powerlaw_depth():
    comps, _ = k_components_heuristic(powerlaw_configuration(1000, 2.0, 1), "approx", compute_average=False)
    assert max(comps) > 3


@given(st.integers(2, 300), st.floats(1.2, 3.5), seeds)
def test_powerlaw_simple_and_bounded(n, alpha, seed):
    deg = powerlaw_degree_sequence(n, alpha, seed)
    assert deg.sum() % 2 == 0 and deg.max() <= n - 1 and deg.min() >= 1
    g = powerlaw_configuration(n, alpha, seed)
    for v in g.nodes:
        assert v not in g.neighbors(v)
        assert g.degree(v) <= deg[v]
    with pytest.raises(ValueError):
        powerlaw_degree_sequence(10, 1.0)


@given(seeds)
def test_seed_determinism(seed):
    assert dump(erdos_renyi(60, 4.0, seed)) == dump(erdos_renyi(60, 4.0, seed))
    assert dump(powerlaw_configuration(80, 2.0, seed)) == dump(powerlaw_configuration(80, 2.0, seed))
    b = random_bipartite(30, 20, 3.0, seed)
    assert dump(b) == dump(random_bipartite(30, 20, 3.0, seed))
    assert dump(bipartite_configuration_null(b, seed)) == dump(bipartite_configuration_null(b, seed))


@given(st.integers(1, 40), st.integers(1, 40), st.floats(1.0, 5.0), seeds)
def test_random_bipartite_shape(n_a, n_b, d, seed):
    g = random_bipartite(n_a, n_b, d, seed)
    assert len(g.side(PART_A)) == n_a and len(g.side(PART_B)) == n_b
    assert all(g.degree(v) >= 1 for v in g.nodes)
    parts = g.bipartite_part
    assert all(parts[u] != parts[v] for u, v in g.edges())


def test_null_single_edge():
    g = build_bipartite([("a", "b")])
    h = bipartite_configuration_null(g, 5)
    assert h.edges() == g.edges()


def test_null_needs_bipartite():
    with pytest.raises(NotBipartiteError):
        bipartite_configuration_null(erdos_renyi(10, 3.0, 0))


def test_null_k22_outcomes_match_enumeration():
    g = build_bipartite([("a1", "b1"), ("a1", "b2"), ("a2", "b1"), ("a2", "b2")])
    a1, b1, a2, b2 = (g.index_of(x) for x in ("a1", "b1", "a2", "b2"))
    stubs_a = [a1, a1, a2, a2]
    allowed = set()
    for perm in permutations([b1, b1, b2, b2]):
        allowed.add(frozenset(frozenset(p) for p in zip(stubs_a, perm)))
    assert len(allowed) == 3
    seen = set()
    for seed in range(60):
        h = bipartite_configuration_null(g, seed)
        edges = frozenset(frozenset(e) for e in h.edges())
        assert edges in allowed
        assert all(h.degree(v) <= 2 for v in h.nodes)
        seen.add(edges)
    assert seen == allowed


@given(st.integers(1, 30), st.integers(1, 30), seeds, seeds)
def test_null_degree_preservation(n_a, n_b, gseed, seed):
    g = random_bipartite(n_a, n_b, 3.0, gseed)
    pairs = bipartite_stub_matching(g, seed)
    stub = {}
    for a, b in pairs:
        stub[a] = stub.get(a, 0) + 1
        stub[b] = stub.get(b, 0) + 1
    assert all(stub[v] == g.degree(v) for v in g.nodes)
    sample = bipartite_configuration_null(g, seed, full=True)
    h = sample.graph
    assert h.labels == g.labels and h.bipartite_part == g.bipartite_part
    assert all(h.degree(v) <= g.degree(v) for v in g.nodes)
    assert sample.removed == g.number_of_edges() - h.number_of_edges()
    assert 0 <= sample.removed_fraction < 1
