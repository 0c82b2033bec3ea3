import pytest
from hypothesis import given
from hypothesis import strategies as st

from kcohesion.decomposition import (
    articulation_points,
    biconnected_components,
    bicomponent_node_sets,
    connected_components,
    core_numbers,
    k_core_subgraph,
)
from kcohesion.generators import complete_graph, cycle_graph, erdos_renyi, path_graph
from kcohesion.graph import build_graph

seeds = st.integers(0, 100_000)
sizes = st.integers(2, 50)
degrees = st.floats(0.5, 8.0)


def _random(n, d, seed):
    return erdos_renyi(n, min(d, n - 1.5) if n > 2 else 0.5, seed)


def naive_cores(g):
    # independent reference: repeated minimum-degree peeling
    alive = set(g.nodes)
    deg = {v: g.degree(v) for v in alive}
    core = {}
    k = 0
    while alive:
        v = min(alive, key=lambda x: (deg[x], x))
        k = max(k, deg[v])
        core[v] = k
        alive.remove(v)
        for w in g.neighbors(v):
            if w in alive:
                deg[w] -= 1
    return core


def test_components_examples(fixture_graph):
    two = build_graph([("a", "b"), ("b", "c"), ("c", "a"), ("x", "y"), ("y", "z"), ("z", "x")])
    assert sorted(len(c) for c in connected_components(two)) == [3, 3]
    empty = build_graph([], nodes=list("abcde"))
    assert [len(c) for c in connected_components(empty)] == [1] * 5
    assert [len(c) for c in connected_components(fixture_graph)] == [99]


def test_bicomponent_examples(fixture_graph):
    p = path_graph(3)
    bc = biconnected_components(p)
    assert sorted(map(sorted, bc.node_sets)) == [[0, 1], [1, 2]]
    assert bc.articulation_points == {1}
    c5 = biconnected_components(cycle_graph(5))
    assert len(c5) == 1 and not c5.articulation_points
    fx = biconnected_components(fixture_graph)
    assert len(fx) == 1 and len(fx.node_sets[0]) == 99


def test_core_examples(fixture_graph):
    assert set(core_numbers(complete_graph(5)).values()) == {4}
    cores = core_numbers(fixture_graph)
    grid = [v for v in fixture_graph.nodes if fixture_graph.label(v).startswith("g")]
    assert {cores[v] for v in grid} == {3}
    assert max(cores.values()) == 4
    assert len(k_core_subgraph(complete_graph(5), 5)) == 0
    assert len(k_core_subgraph(fixture_graph, 3)) == 99
    four = k_core_subgraph(fixture_graph, 4)
    k5_labels = {fixture_graph.label(v) for v in four.nodes}
    assert k5_labels == {l for l in fixture_graph.labels if l[0] in "io"}


def test_negative_k_rejected():
    with pytest.raises(ValueError):
        k_core_subgraph(path_graph(3), -1)


@given(sizes, degrees, seeds)
def test_cores_match_naive_peeling(n, d, seed):
    g = _random(n, d, seed)
    assert core_numbers(g) == naive_cores(g)


@given(sizes, degrees, seeds)
def test_core_invariants(n, d, seed):
    g = _random(n, d, seed)
    cores = core_numbers(g)
    top = max(cores.values())
    prev = set(g.nodes)
    for k in range(top + 2):
        sub = k_core_subgraph(g, k, cores)
        assert set(sub.nodes) <= prev
        prev = set(sub.nodes)
        if len(sub):
            assert sub.min_degree >= k
    assert all(cores[v] <= g.degree(v) for v in g.nodes)


@given(sizes, degrees, seeds)
def test_components_partition(n, d, seed):
    g = _random(n, d, seed)
    comps = connected_components(g)
    assert sum(len(c) for c in comps) == len(g)
    owner = {v: i for i, c in enumerate(comps) for v in c}
    assert all(owner[u] == owner[v] for u, v in g.edges())


@given(sizes, degrees, seeds)
def test_bicomponents_partition_edges(n, d, seed):
    g = _random(n, d, seed)
    bc = biconnected_components(g)
    assert sum(len(e) for e in bc.edge_sets) == g.number_of_edges()
    all_edges = [e for es in bc.edge_sets for e in es]
    assert len(set(all_edges)) == len(all_edges)
    for ap in bc.articulation_points:
        assert sum(ap in s for s in bc.node_sets) >= 2


@given(st.integers(3, 25), degrees, seeds)
def test_articulation_soundness(n, d, seed):
    g = _random(n, d, seed)
    base = len(connected_components(g))
    aps = articulation_points(g)
    for v in g.nodes:
        rest = g.subgraph(w for w in g.nodes if w != v)
        # an isolated node vanishing lowers the count by one
        expected = base - 1 if g.degree(v) == 0 else base
        grows = len(connected_components(rest)) > expected
        assert grows == (v in aps)


def test_networkx_agreement():
    nx = pytest.importorskip("networkx")
    for seed in range(20):
        g = erdos_renyi(40, 3.0, seed)
        h = nx.Graph()
        h.add_nodes_from(g.nodes)
        h.add_edges_from(g.edges())
        assert core_numbers(g) == nx.core_number(h)
        ours = {s for s in bicomponent_node_sets(g)}
        theirs = {frozenset(c) for c in nx.biconnected_components(h)}
        assert ours == theirs
        assert articulation_points(g) == set(nx.articulation_points(h))
