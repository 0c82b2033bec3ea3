"""Fast detection of the k-component hierarchy through auxiliary graphs.

For every ``k`` from 3 up to the largest core number, each bicomponent of the
k-core is examined on its own. Pairs of its nodes joined by at least ``k``
node-independent paths become the edges of an auxiliary graph ``H``; dense
clusters of equal core number in ``H`` are candidate blocks, which are then
cut back to k-cores of the input graph. Levels 1 and 2 are exact
(connected and biconnected components).
"""
from __future__ import annotations

import logging
from collections.abc import Iterator
from fractions import Fraction

import numpy as np

from .connectivity import (
    PairBlock,
    PairConnectivityCache,
    average_node_connectivity,
    normalize_estimator,
    pairwise_connectivity,
)
from .decomposition import bicomponent_node_sets, connected_components, core_numbers, k_core_subgraph
from .graph import ComplementView, density
from .hierarchy import (
    CohesiveBlockTree,
    KComponent,
    assemble,
    build_block_tree,
    k_number_map,
)

__all__ = [
    "k_components_heuristic",
    "build_auxiliary_graph",
    "extract_candidates",
    "KComponent",
    "CohesiveBlockTree",
    "build_block_tree",
    "k_number_map",
    "RELAXATIONS",
]

log = logging.getLogger(__name__)

RELAXATIONS = ("density", "degree-spread")
MAX_DEGREE_SPREAD = 2


def _uniform(values) -> bool:
    it = iter(values)
    first = next(it, None)
    return all(v == first for v in it)


def _pair_arrays(n):
    offsets = np.arange(n, dtype=np.int64)
    return offsets * (2 * n - offsets - 1) // 2


def build_auxiliary_graph(subgraph, k: int, estimator="approx", cache: PairConnectivityCache | None = None, block: PairBlock | None = None, workers: int = 1) -> ComplementView:
    """Auxiliary graph of pairs with at least ``k`` node-independent paths.

    Parameters
    ----------
    subgraph : graph interface
        Usually one bicomponent of the k-core.
    k : int
    estimator : {"approx", "exact"}
    cache : PairConnectivityCache, optional
        With policy ``"store"`` the uncapped pair values are kept in the cache
        under the key ``(k, nodes)``; otherwise values are capped at ``k``.
    block : PairBlock, optional
        Precomputed pair values over ``subgraph``'s nodes.

    Returns
    -------
    ComplementView
        Stored through the pairs *below* ``k``, which are few in practice.
    """
    if block is None:
        store = cache is not None and cache.stores
        block = pairwise_connectivity(subgraph, estimator=estimator, cutoff=None if store else k, workers=workers)
        if store:
            cache.add((k, block.nodes), block)
    nodes = block.nodes
    n = len(nodes)
    absent: dict[int, set[int]] = {v: set() for v in nodes}
    if n > 1:
        low = np.flatnonzero(block.values < k)
        if len(low):
            offsets = _pair_arrays(n)
            rows = np.searchsorted(offsets, low, side="right") - 1
            cols = low - offsets[rows] + rows + 1
            for i, j in zip(rows.tolist(), cols.tolist()):
                absent[nodes[i]].add(nodes[j])
                absent[nodes[j]].add(nodes[i])
    labels = subgraph.labels if hasattr(subgraph, "labels") else None
    return ComplementView._trusted(frozenset(nodes), absent, labels)


def _overlap(h, cands: set[int]) -> set[int]:
    # nodes outside cands adjacent (in h) to every node of cands
    if isinstance(h, ComplementView):
        out = set(h.nodes) - cands
        for v in cands:
            out -= h.absent(v)
        return out
    sets = [set(h.neighbors(v)) - cands for v in cands]
    return set.intersection(*sets) if sets else set()


def _accepts(hc, min_density, relaxation) -> bool:
    if not _uniform(core_numbers(hc).values()):
        return False
    if relaxation == "degree-spread":
        degs = [hc.degree(v) for v in hc.nodes]
        return max(degs) - min(degs) <= MAX_DEGREE_SPREAD
    return density(hc) >= min_density


def extract_candidates(h, k: int, min_density=Fraction(95, 100), relaxation: str = "density", g_sub=None) -> Iterator[frozenset[int]]:
    """Candidate blocks inside one bicomponent of the auxiliary graph.

    Parameters
    ----------
    h : graph interface
        A bicomponent of the auxiliary graph, with more than ``k`` nodes.
    k : int
    min_density : rational
        Density a non-clique candidate needs (``"density"`` relaxation).
    relaxation : {"density", "degree-spread"}
        Alternative acceptance of a non-clique candidate with uniform core
        numbers: density at least ``min_density``, or a spread of at most 2
        between its largest and smallest degree.
    g_sub : Graph, optional
        The input-graph subgraph ``h`` was built from. Candidates are cut back
        to the k-core of ``g_sub`` at every pruning round. Without it, pruning
        happens in ``h`` alone.

    Yields
    ------
    frozenset
        Node sets of accepted candidates, largest core value first.

    Notes
    -----
    A candidate starts from the nodes whose core number in ``h`` is exactly
    ``c``. From the second core value on, it also takes the nodes adjacent
    to all of them, provided there are fewer than ``k`` such nodes. A clique
    is accepted at once; otherwise every minimum-degree node is removed
    per round until the candidate passes the relaxed test or vanishes.
    """
    if relaxation not in RELAXATIONS:
        raise ValueError(f"unknown relaxation {relaxation!r}")

    def cut_back(nodes):
        if g_sub is None:
            return frozenset(nodes)
        return frozenset(k_core_subgraph(g_sub.subgraph(nodes), k).nodes)

    cores = core_numbers(h)
    first = True
    for c_value in sorted(set(cores.values()), reverse=True):
        cands = {v for v, c in cores.items() if c == c_value}
        overlap: set[int] = set()
        if first:
            first = False
        else:
            overlap = _overlap(h, cands)
        if overlap and len(overlap) < k:
            cands |= overlap
        if len(cands) <= k:
            continue
        hc = h.subgraph(cands)
        if _uniform(core_numbers(hc).values()) and density(hc) == 1:
            gc = cut_back(hc.nodes)
        else:
            gc = frozenset()
            while len(hc):
                gc = cut_back(hc.nodes)
                hc = h.subgraph(gc)
                if not len(hc):
                    break
                if _accepts(hc, min_density, relaxation):
                    break
                degs = {v: hc.degree(v) for v in hc.nodes}
                low = min(degs.values())
                hc = hc.subgraph(v for v, d in degs.items() if d != low)
        if not len(hc) or len(gc) <= k:
            continue
        yield gc


def _blocks_from_candidate(g_sub, gc_nodes, k):
    for piece in bicomponent_node_sets(g_sub.subgraph(gc_nodes)):
        if len(piece) <= k:
            continue
        gk = k_core_subgraph(g_sub.subgraph(piece), k)
        if len(gk) > k:
            yield frozenset(gk.nodes)


class _Run:
    def __init__(self, g, estimator, min_density, relaxation, cache, rebuild_aux, workers):
        self.g = g
        self.estimator = estimator
        self.min_density = min_density
        self.relaxation = relaxation
        self.cache = cache
        self.rebuild_aux = rebuild_aux
        self.workers = workers

    def unit(self, k, nodes, depth=0):
        """Blocks of level ``k`` found in the subgraph induced by ``nodes``."""
        sg = self.g.subgraph(nodes)
        store = self.cache.stores
        block = pairwise_connectivity(sg, estimator=self.estimator, cutoff=None if store else k, workers=self.workers)
        if store:
            self.cache.add((k, block.nodes), block)
        h = build_auxiliary_graph(sg, k, block=block)
        found = []
        for h_nodes in bicomponent_node_sets(h):
            if len(h_nodes) <= k:
                continue
            hs = h.subgraph(h_nodes)
            for gc in extract_candidates(hs, k, self.min_density, self.relaxation, g_sub=sg):
                for gk in _blocks_from_candidate(sg, gc, k):
                    if self.rebuild_aux and gk != frozenset(nodes) and depth < len(nodes):
                        found.extend(self.unit(k, gk, depth + 1))
                    else:
                        found.append((gk, self.average(block, gk)))
        return found

    def average(self, block, nodes):
        policy = self.cache.policy
        if policy == "off":
            return None
        if policy == "store":
            return block.average(nodes)
        return average_node_connectivity(self.g.subgraph(nodes), self.estimator, workers=self.workers)


def k_components_heuristic(
    g,
    estimator: str = "approx",
    min_density=Fraction(95, 100),
    compute_average: bool = True,
    cache_policy: str | None = None,
    relaxation: str = "density",
    rebuild_aux: bool = False,
    workers: int = 1,
    cache: PairConnectivityCache | None = None,
):
    """Approximate the k-component hierarchy of ``g``.

    Parameters
    ----------
    g : Graph
    estimator : {"approx", "exact"}
        Local connectivity estimator used to build the auxiliary graphs:
        shortest-path marking (fast lower bound) or maximum flow.
    min_density : rational, default 0.95
        Density a candidate with uniform core numbers needs to be accepted
        without being a clique.
    compute_average : bool
        Annotate each component with its average node connectivity.
    cache_policy : {"store", "recompute", "off"}, optional
        ``"store"`` keeps the uncapped pair values of every auxiliary graph
        and averages them (fast; values come from the enclosing bicomponent).
        ``"recompute"`` caps pair values at ``k`` and recomputes averages
        inside each component. ``"off"`` skips averages. Defaults to
        ``"store"`` when ``compute_average`` is true, else ``"off"``.
    relaxation : {"density", "degree-spread"}
    rebuild_aux : bool
        Re-run detection on every found block with an auxiliary graph rebuilt
        from pair values inside the block, until it is stable. Slower, more
        accurate.
    workers : int
        Threads for the pairwise computations. Results do not depend on it.

    Returns
    -------
    components : dict
        ``k -> list of KComponent``, maximal node sets per level.
    k_numbers : dict
        ``node -> (k-number, average k-number)``.

    Examples
    --------
    >>> from kcohesion.generators import complete_graph
    >>> comps, knum = k_components_heuristic(complete_graph(5))
    >>> sorted(comps)
    [1, 2, 3, 4]
    >>> comps[4][0].average_connectivity
    Fraction(4, 1)
    """
    estimator = normalize_estimator(estimator)
    if cache_policy is None:
        cache_policy = "store" if compute_average else "off"
    if not compute_average:
        cache_policy = "off"
    if cache is None:
        cache = PairConnectivityCache(cache_policy)
    elif cache.policy != cache_policy:
        raise ValueError("cache policy does not match cache_policy")
    min_density = Fraction(str(min_density)) if isinstance(min_density, float) else Fraction(min_density)
    if not 0 < min_density <= 1:
        raise ValueError("min_density must lie in (0, 1]")
    method = "heuristic-approx" if estimator == "approx" else "heuristic-exact-flow"
    averages = cache_policy != "off"

    found: dict[int, list] = {}
    found[1] = [(c, Fraction(1) if averages else None) for c in connected_components(g) if len(c) > 1]
    found[2] = [(c, Fraction(2) if averages else None) for c in bicomponent_node_sets(g) if len(c) > 2]
    cores = core_numbers(g)
    max_core = max(cores.values(), default=0)
    run = _Run(g, estimator, min_density, relaxation, cache, rebuild_aux, workers)
    for k in range(3, max_core + 1):
        kcore = k_core_subgraph(g, k, cores)
        level = []
        for nodes in bicomponent_node_sets(kcore):
            if len(nodes) <= k:
                continue
            level.extend(run.unit(k, nodes))
        log.debug("k=%d: %d blocks", k, len(level))
        found[k] = level
    comps = assemble(found, method)
    return comps, k_number_map(comps, g.nodes)
