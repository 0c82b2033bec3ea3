"""Deterministic graph generators.

Every random generator takes a ``seed`` and draws from its own
``numpy.random.Generator``; identical parameters and seed give an identical
graph, node labels and edge order included.
"""
from __future__ import annotations

from collections.abc import Sequence

import numpy as np

from .graph import PART_A, PART_B, Graph, NotBipartiteError, build_bipartite, build_graph

__all__ = [
    "complete_graph",
    "path_graph",
    "cycle_graph",
    "star_graph",
    "grid_graph",
    "petersen_graph",
    "appendix_a_fixture",
    "erdos_renyi",
    "powerlaw_configuration",
    "powerlaw_degree_sequence",
    "random_bipartite",
    "bipartite_stub_matching",
    "bipartite_configuration_null",
    "NullSample",
]


def _labels(n, prefix=""):
    return [f"{prefix}{i}" for i in range(n)]


def _from_pairs(n, pairs, labels=None) -> Graph:
    labels = labels or _labels(n)
    return build_graph(((labels[u], labels[v]) for u, v in pairs), nodes=labels)


def complete_graph(n: int) -> Graph:
    return _from_pairs(n, ((u, v) for u in range(n) for v in range(u + 1, n)))


def path_graph(n: int) -> Graph:
    return _from_pairs(n, ((i, i + 1) for i in range(n - 1)))


def cycle_graph(n: int) -> Graph:
    if n < 3:
        raise ValueError("a cycle needs at least 3 nodes")
    return _from_pairs(n, ((i, (i + 1) % n) for i in range(n)))


def star_graph(leaves: int) -> Graph:
    """Star with centre ``0`` and ``leaves`` leaves."""
    return _from_pairs(leaves + 1, ((0, i) for i in range(1, leaves + 1)))


def grid_graph(rows: int, cols: int) -> Graph:
    labels = [f"{r}_{c}" for r in range(rows) for c in range(cols)]
    pairs = []
    for r in range(rows):
        for c in range(cols):
            i = r * cols + c
            if c + 1 < cols:
                pairs.append((i, i + 1))
            if r + 1 < rows:
                pairs.append((i, i + cols))
    return _from_pairs(rows * cols, pairs, labels)


def _petersen_edges():
    for i in range(5):
        yield i, (i + 1) % 5
        yield i, i + 5
        yield i + 5, (i + 2) % 5 + 5


def petersen_graph() -> Graph:
    return _from_pairs(10, _petersen_edges())


def appendix_a_fixture() -> Graph:
    """The 99-node, 200-edge illustration graph.

    A 5x5 grid with a Petersen graph hanging off each corner. The Petersen
    graph is attached by two edges, one to the corner and one to a neighbour
    of the corner, and by a three-edge matching to an inner ``K5``. An outer
    ``K5`` overlaps the inner one in a single node (first two corners, where
    one extra edge joins the outer ``K5`` to the Petersen graph) or in two
    nodes (last two corners). The matching ends on the Petersen side differ
    between the two kinds, which fixes how shortest-path marking behaves on
    them.

    Labels: grid ``g<r>_<c>``, Petersen ``p<i>_<j>``, inner clique
    ``i<i>_<j>``, outer clique ``o<i>_<j>`` (shared nodes keep their inner
    label).
    """
    edges = []
    for r in range(5):
        for c in range(5):
            if c < 4:
                edges.append((f"g{r}_{c}", f"g{r}_{c + 1}"))
            if r < 4:
                edges.append((f"g{r}_{c}", f"g{r + 1}_{c}"))
    corners = [((0, 0), (0, 1)), ((0, 4), (0, 3)), ((4, 0), (4, 1)), ((4, 4), (4, 3))]
    for i, ((cr, cc), (ar, ac)) in enumerate(corners):
        p = [f"p{i}_{j}" for j in range(10)]
        edges.extend((p[a], p[b]) for a, b in _petersen_edges())
        edges.append((f"g{cr}_{cc}", p[0]))
        edges.append((f"g{ar}_{ac}", p[2]))
        inner = [f"i{i}_{j}" for j in range(5)]
        edges.extend((inner[a], inner[b]) for a in range(5) for b in range(a + 1, 5))
        shared = 1 if i < 2 else 2
        ends = (1, 3, 7) if shared == 1 else (1, 4, 6)
        edges.extend((inner[j], p[e]) for j, e in enumerate(ends))
        outer = inner[5 - shared:] + [f"o{i}_{j}" for j in range(5 - shared)]
        edges.extend((outer[a], outer[b]) for a in range(5) for b in range(a + 1, 5))
        if shared == 1:
            edges.append((outer[1], p[9]))
    # drop the duplicate edge between the two shared nodes
    seen = set()
    unique = []
    for a, b in edges:
        key = frozenset((a, b))
        if key not in seen:
            seen.add(key)
            unique.append((a, b))
    return build_graph(unique)


# -- random models ---------------------------------------------------------------


def erdos_renyi(n: int, avg_degree: float, seed: int = 0) -> Graph:
    """Random graph ``G(n, p)`` with ``p = avg_degree / (n - 1)``.

    Parameters
    ----------
    n : int
        Number of nodes, at least 2.
    avg_degree : float
        Expected average degree, strictly between 0 and ``n - 1``.
    seed : int

    Returns
    -------
    Graph
        Nodes are labelled ``"0"`` to ``str(n - 1)``.

    Raises
    ------
    ValueError
        If a parameter is out of range.
    """
    if n < 2:
        raise ValueError("n must be at least 2")
    if not 0 < avg_degree < n - 1:
        raise ValueError("avg_degree must lie strictly between 0 and n - 1")
    p = avg_degree / (n - 1)
    rng = np.random.default_rng(seed)
    pairs = []
    for u in range(n - 1):
        width = n - 1 - u
        count = rng.binomial(width, p)
        if count:
            chosen = np.sort(rng.choice(width, size=count, replace=False))
            pairs.extend((u, u + 1 + int(j)) for j in chosen)
    return _from_pairs(n, pairs)


def powerlaw_degree_sequence(n: int, alpha: float = 2.0, seed: int = 0) -> np.ndarray:
    """Degrees drawn from ``P(d) ~ d**-alpha`` on ``1..n-1`` with an even sum."""
    if alpha <= 1:
        raise ValueError("alpha must be greater than 1")
    if n < 2:
        raise ValueError("n must be at least 2")
    rng = np.random.default_rng(seed)
    support = np.arange(1, n, dtype=np.float64)
    cdf = np.cumsum(support ** -alpha)
    cdf /= cdf[-1]
    deg = np.searchsorted(cdf, rng.random(n), side="right") + 1
    deg = np.minimum(deg, n - 1).astype(np.int64)
    if deg.sum() % 2:
        deg[0] += 1 if deg[0] < n - 1 else -1
    return deg


def powerlaw_configuration(n: int, alpha: float = 2.0, seed: int = 0) -> Graph:
    """Configuration model over a power-law degree sequence.

    Stubs are shuffled and paired; self-loops and repeated edges are then
    dropped, so the result is simple and degrees can only shrink.
    """
    deg = powerlaw_degree_sequence(n, alpha, seed)
    rng = np.random.default_rng([seed, 1])
    stubs = np.repeat(np.arange(n), deg)
    rng.shuffle(stubs)
    pairs = set()
    for u, v in stubs.reshape(-1, 2).tolist():
        if u != v:
            pairs.add((u, v) if u < v else (v, u))
    return _from_pairs(n, sorted(pairs))


def random_bipartite(n_a: int, n_b: int, avg_degree_a: float = 3.0, seed: int = 0) -> Graph:
    """Random two-mode graph with no isolated node.

    Every A node is tied to one uniform B node and every B node left empty
    to one uniform A node; further A-B pairs are added independently so that
    the expected A-side degree is about ``avg_degree_a``.
    Labels are ``a<i>`` and ``b<j>``.
    """
    if n_a < 1 or n_b < 1:
        raise ValueError("both parts need at least one node")
    rng = np.random.default_rng(seed)
    pairs = set()
    for a, b in enumerate(rng.integers(0, n_b, size=n_a).tolist()):
        pairs.add((a, b))
    touched = {b for _, b in pairs}
    for b in range(n_b):
        if b not in touched:
            pairs.add((int(rng.integers(0, n_a)), b))
    extra = max(avg_degree_a - len(pairs) / n_a, 0.0)
    p = min(extra / n_b, 1.0)
    if p > 0:
        mask = rng.random((n_a, n_b)) < p
        pairs.update(zip(*(x.tolist() for x in np.nonzero(mask))))
    edges = [(f"a{a}", f"b{b}") for a, b in sorted(pairs)]
    return build_bipartite(edges)


# -- bipartite configuration null model --------------------------------------


def _sides(g: Graph) -> tuple[list[int], list[int]]:
    if g.bipartite_part is None:
        raise NotBipartiteError("the null model needs a bipartite graph")
    return g.side(PART_A), g.side(PART_B)


def bipartite_stub_matching(g: Graph, seed: int = 0) -> list[tuple[int, int]]:
    """Uniform random matching of A-stubs to B-stubs, before any cleanup.

    Returns one ``(a, b)`` pair per edge of ``g``; repeated pairs are kept, so
    every node's stub count equals its degree in ``g``.
    """
    side_a, side_b = _sides(g)
    stubs_a = np.repeat(np.array(side_a, dtype=np.int64), [g.degree(v) for v in side_a])
    stubs_b = np.repeat(np.array(side_b, dtype=np.int64), [g.degree(v) for v in side_b])
    rng = np.random.default_rng(seed)
    rng.shuffle(stubs_b)
    return list(zip(stubs_a.tolist(), stubs_b.tolist()))


class NullSample:
    """One null-model replicate: the stub matching and its cleaned graph."""

    __slots__ = ("pairs", "graph", "removed")

    def __init__(self, pairs, graph, removed):
        self.pairs = pairs
        self.graph = graph
        self.removed = removed

    @property
    def removed_fraction(self) -> float:
        return self.removed / len(self.pairs) if self.pairs else 0.0

    def stub_degrees(self) -> dict[int, int]:
        deg: dict[int, int] = {}
        for a, b in self.pairs:
            deg[a] = deg.get(a, 0) + 1
            deg[b] = deg.get(b, 0) + 1
        return deg


def bipartite_configuration_null(g: Graph, seed: int = 0, full: bool = False):
    """Bipartite configuration-model replicate of ``g``.

    Parameters
    ----------
    g : Graph
        Two-mode graph with a part assignment.
    seed : int
    full : bool
        Return a :class:`NullSample` (stub matching, cleaned graph and the
        number of removed repeated pairs) instead of the graph alone.

    Returns
    -------
    Graph or NullSample
        The cleaned graph keeps ``g``'s node indices, labels and parts.
        Repeated A-B pairs collapse into one edge, so a node's degree never
        exceeds its degree in ``g``.

    Raises
    ------
    NotBipartiteError
        If ``g`` carries no part assignment.
    """
    pairs = bipartite_stub_matching(g, seed)
    adj: dict[int, set[int]] = {v: set() for v in g.nodes}
    for a, b in pairs:
        adj[a].add(b)
        adj[b].add(a)
    kept = sum(len(adj[v]) for v in g.side(PART_A))
    out = Graph._trusted(
        {v: frozenset(n) for v, n in adj.items()}, g.labels, g.bipartite_part, None
    )
    if full:
        return NullSample(pairs, out, len(pairs) - kept)
    return out


def degree_sequence(g: Graph, nodes: Sequence[int] | None = None) -> list[int]:
    return [g.degree(v) for v in (g.nodes if nodes is None else nodes)]
