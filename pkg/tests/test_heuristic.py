from collections import Counter
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from kcohesion.connectivity import node_connectivity
from kcohesion.decomposition import bicomponent_node_sets, connected_components, core_numbers, k_core_subgraph
from kcohesion.exact import k_components_exact
from kcohesion.generators import complete_graph, erdos_renyi, path_graph, powerlaw_configuration
from kcohesion.graph import ComplementView, build_graph, density
from kcohesion.heuristic import build_auxiliary_graph, extract_candidates, k_components_heuristic
from kcohesion.hierarchy import build_block_tree, k_number_map, level_sets

seeds = st.integers(0, 100_000)


def labelled(g, comps, k):
    return sorted(sorted(g.label(v) for v in c.nodes) for c in comps.get(k, []))


def cluster(g, prefixes):
    return frozenset(v for v in g.nodes if g.label(v).split("_")[0] in prefixes)


# -- examples -----------------------------------------------------------------------


@pytest.mark.parametrize("estimator", ["approx", "exact-flow"])
def test_k5(estimator):
    comps, knum = k_components_heuristic(complete_graph(5), estimator)
    assert sorted(comps) == [1, 2, 3, 4]
    assert all(len(comps[k]) == 1 and len(comps[k][0]) == 5 for k in comps)
    assert comps[4][0].average_connectivity == 4
    assert set(knum.values()) == {(4, Fraction(4))}


def test_fixture_exact_flow_matches_documented_behaviour(fixture_graph):
    g = fixture_graph
    heur, _ = k_components_heuristic(g, "exact-flow", min_density=Fraction(95, 100))
    exact, _ = k_components_exact(g, compute_average=False)
    assert level_sets(heur)[3] == level_sets(exact)[3]
    # only the single-overlap K5 pairs survive at level 4
    found = level_sets(heur)[4]
    assert len(found) == 4
    assert found < level_sets(exact)[4]
    corners = {g.label(v).split("_")[0][1] for c in found for v in c}
    assert corners == {"0", "1"}


def test_fixture_approx_needs_relaxation(fixture_graph):
    g = fixture_graph
    exact, _ = k_components_exact(g, compute_average=False)
    relaxed, _ = k_components_heuristic(g, "approx", min_density=0.95)
    assert level_sets(relaxed)[3] == level_sets(exact)[3]
    strict, _ = k_components_heuristic(g, "approx", min_density=1)
    # the P-with-inner-K5 blocks of the two-overlap corners come out short
    sizes = Counter(len(c) for c in strict[3])
    assert sizes[15] == 2 and sizes[10] == 2


def test_degree_spread_relaxation(fixture_graph):
    exact, _ = k_components_exact(fixture_graph, compute_average=False)
    comps, _ = k_components_heuristic(fixture_graph, "approx", relaxation="degree-spread")
    assert level_sets(comps)[3] == level_sets(exact)[3]
    with pytest.raises(ValueError):
        list(extract_candidates(complete_graph(5), 3, relaxation="vibes"))


def test_auxiliary_graph_examples(fixture_graph):
    h = build_auxiliary_graph(complete_graph(5), 4)
    assert isinstance(h, ComplementView) and h.number_of_edges() == 10
    g = fixture_graph
    for est in ("exact", "approx"):
        h3 = build_auxiliary_graph(g, 3, est)
        assert sorted(len(c) for c in connected_components(h3)) == [18, 18, 19, 19, 25]
        corners = [g.index_of(x) for x in ("g0_0", "g0_4", "g4_0", "g4_4")]
        assert [h3.degree(v) for v in corners] == [1, 1, 1, 1]


def test_approx_loses_pairs_in_two_overlap_clusters(fixture_graph):
    g = fixture_graph
    exact_h = build_auxiliary_graph(g, 3, "exact")
    approx_h = build_auxiliary_graph(g, 3, "approx")
    exact_cores, approx_cores = core_numbers(exact_h), core_numbers(approx_h)
    for i in "23":
        nodes = cluster(g, {f"p{i}", f"i{i}"})
        assert {exact_cores[v] for v in nodes} == {14}
        assert {approx_cores[v] for v in nodes} == {12}
        sub = approx_h.subgraph(nodes)
        assert Counter(sub.degree(v) for v in nodes) == {14: 9, 13: 4, 12: 2}
        assert round(float(density(sub)), 2) == 0.96


def test_candidates_clique_branch():
    assert list(extract_candidates(complete_graph(6), 3)) == [frozenset(range(6))]


def test_two_overlap_pair_rejected(fixture_graph):
    g = fixture_graph
    nodes = cluster(g, {"i2", "o2"})
    sub = g.subgraph(nodes)
    h4 = build_auxiliary_graph(sub, 4, "exact")
    degs = [h4.degree(v) for v in h4.nodes]
    assert set(core_numbers(h4).values()) == {4}
    assert round(float(density(h4)), 2) == 0.68 and max(degs) - min(degs) == 3
    for relax in ("density", "degree-spread"):
        assert list(extract_candidates(h4, 4, relaxation=relax, g_sub=sub)) == []


def test_k_numbers_examples(fixture_graph):
    _, knum = k_components_heuristic(path_graph(3))
    assert {k for k, _ in knum.values()} == {1}
    g = build_graph([("a", "b")], nodes=["z"])
    _, knum = k_components_heuristic(g)
    assert knum[g.index_of("z")] == (0, 0)
    assert knum[g.index_of("a")] == (1, 1)


def test_cache_policies(fixture_graph):
    g = fixture_graph
    stored, _ = k_components_heuristic(g, "exact-flow", cache_policy="store")
    recomputed, _ = k_components_heuristic(g, "exact-flow", cache_policy="recompute")
    off, knum = k_components_heuristic(g, "exact-flow", compute_average=False)
    assert level_sets(stored) == level_sets(recomputed) == level_sets(off)
    assert all(c.average_connectivity is None for cs in off.values() for c in cs)
    for cs in recomputed.values():
        for c in cs:
            if c.k >= 3:
                from kcohesion.connectivity import average_node_connectivity

                assert c.average_connectivity == average_node_connectivity(g.subgraph(c.nodes), "exact")
    # stored values come from the enclosing block, so they can only be larger
    by_nodes = {(c.k, c.nodes): c.average_connectivity for cs in recomputed.values() for c in cs}
    for cs in stored.values():
        for c in cs:
            assert c.average_connectivity >= by_nodes[c.k, c.nodes]
    with pytest.raises(ValueError):
        k_components_heuristic(g, min_density=0)


def test_rebuild_aux_on_fixture(fixture_graph):
    plain, _ = k_components_heuristic(fixture_graph, "approx")
    rebuilt, _ = k_components_heuristic(fixture_graph, "approx", rebuild_aux=True)
    assert level_sets(rebuilt)[3] == level_sets(plain)[3]


def test_workers_do_not_change_output(fixture_graph):
    a = k_components_heuristic(fixture_graph, "approx", workers=1)
    b = k_components_heuristic(fixture_graph, "approx", workers=3)
    assert a == b


# -- properties ---------------------------------------------------------------------------


def _random(seed):
    import numpy as np

    rng = np.random.default_rng(seed)
    if rng.random() < 0.5:
        return erdos_renyi(int(rng.integers(20, 80)), float(rng.uniform(2, 7)), seed)
    return powerlaw_configuration(int(rng.integers(30, 150)), 2.0, seed)


@settings(max_examples=25)
@given(seeds, st.sampled_from(["approx", "exact-flow"]))
def test_components_are_biconnected_k_cores(seed, est):
    g = _random(seed)
    comps, knum = k_components_heuristic(g, est, compute_average=False)
    top = max(core_numbers(g).values(), default=0)
    for k, cs in comps.items():
        assert k <= max(top, 1)
        for c in cs:
            sub = g.subgraph(c.nodes)
            assert len(c) > k
            if k >= 2:
                assert sub.min_degree >= k
                assert bicomponent_node_sets(sub) == [c.nodes]
            assert len(connected_components(sub)) == 1
    # k-numbers are the deepest containing level
    for v, (k, _) in knum.items():
        levels = [c.k for cs in comps.values() for c in cs if v in c.nodes]
        assert k == max(levels, default=0)


@settings(max_examples=20)
@given(seeds)
def test_approx_blocks_inside_exact_flow_blocks(seed):
    g = _random(seed)
    approx, _ = k_components_heuristic(g, "approx", compute_average=False)
    exact, _ = k_components_heuristic(g, "exact-flow", compute_average=False)
    for k, cs in approx.items():
        for c in cs:
            assert any(c.nodes <= d.nodes for d in exact.get(k, []))


@settings(max_examples=20)
@given(seeds)
def test_exact_flow_hierarchy_nests(seed):
    g = _random(seed)
    comps, _ = k_components_heuristic(g, "exact-flow", compute_average=False)
    tree = build_block_tree(comps, warn=False)
    assert tree.problems == []
