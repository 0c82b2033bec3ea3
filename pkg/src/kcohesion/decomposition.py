"""Linear-time decompositions: connected components, bicomponents, k-cores.

Every function accepts any graph exposing ``nodes``, ``neighbors(v)`` and
``degree(v)`` (a :class:`~kcohesion.graph.Graph` or a
:class:`~kcohesion.graph.ComplementView`).
"""
from __future__ import annotations

from dataclasses import dataclass

__all__ = [
    "BicomponentSet",
    "connected_components",
    "biconnected_components",
    "bicomponent_node_sets",
    "articulation_points",
    "core_numbers",
    "k_core_subgraph",
]


@dataclass(frozen=True)
class BicomponentSet:
    """Biconnected components as an exact partition of the edge set.

    ``node_sets[i]`` is the node set spanned by ``edge_sets[i]``. Isolated
    nodes belong to no bicomponent; a bridge is a two-node bicomponent.
    """

    edge_sets: list[frozenset[tuple[int, int]]]
    node_sets: list[frozenset[int]]
    articulation_points: frozenset[int]

    def __len__(self) -> int:
        return len(self.node_sets)


def connected_components(g) -> list[set[int]]:
    """Node sets of the connected components, ordered by smallest node."""
    seen: set[int] = set()
    out = []
    for root in g.nodes:
        if root in seen:
            continue
        comp = {root}
        stack = [root]
        while stack:
            v = stack.pop()
            for w in g.neighbors(v):
                if w not in comp:
                    comp.add(w)
                    stack.append(w)
        seen |= comp
        out.append(comp)
    return out


def _tarjan(g):
    # Iterative lowpoint DFS with a node stack. Returns the node sets of the
    # bicomponents and the articulation points.
    disc: dict[int, int] = {}
    low: dict[int, int] = {}
    comps: list[frozenset[int]] = []
    cut: set[int] = set()
    counter = 0
    for root in g.nodes:
        if root in disc or g.degree(root) == 0:
            continue
        disc[root] = low[root] = counter
        counter += 1
        root_children = 0
        stack = [(root, -1, iter(g.neighbors(root)))]
        nstack = [root]
        while stack:
            v, parent, it = stack[-1]
            descended = False
            for w in it:
                if w == parent:
                    continue
                if w not in disc:
                    disc[w] = low[w] = counter
                    counter += 1
                    stack.append((w, v, iter(g.neighbors(w))))
                    nstack.append(w)
                    descended = True
                    break
                if disc[w] < low[v]:
                    low[v] = disc[w]
            if descended:
                continue
            stack.pop()
            if not stack:
                break
            p = stack[-1][0]
            if low[v] < low[p]:
                low[p] = low[v]
            if low[v] >= disc[p]:
                comp = [p]
                while True:
                    x = nstack.pop()
                    comp.append(x)
                    if x == v:
                        break
                comps.append(frozenset(comp))
                if p == root:
                    root_children += 1
                else:
                    cut.add(p)
        if root_children > 1:
            cut.add(root)
    return comps, cut


def bicomponent_node_sets(g) -> list[frozenset[int]]:
    """Node sets of the biconnected components (bridges give 2-node sets).

    Ordered by their sorted member lists.
    """
    return sorted(_tarjan(g)[0], key=sorted)


def articulation_points(g) -> frozenset[int]:
    return frozenset(_tarjan(g)[1])


def biconnected_components(g) -> BicomponentSet:
    """Biconnected components with their articulation points.

    Two bicomponents share at most one node, so each edge lies in exactly one
    bicomponent: the one whose node set contains both endpoints.
    """
    comps, cut = _tarjan(g)
    comps.sort(key=sorted)
    edge_sets = []
    for nodes in comps:
        edge_sets.append(
            frozenset((u, v) for u in nodes for v in g.neighbors(u) if u < v and v in nodes)
        )
    return BicomponentSet(edge_sets, comps, frozenset(cut))


def core_numbers(g) -> dict[int, int]:
    """Core number of every node (Batagelj-Zaversnik bucket peeling, O(m))."""
    nodes = list(g.nodes)
    if not nodes:
        return {}
    deg = {v: g.degree(v) for v in nodes}
    maxdeg = max(deg.values())
    counts = [0] * (maxdeg + 1)
    for d in deg.values():
        counts[d] += 1
    start = [0] * (maxdeg + 1)
    total = 0
    for d in range(maxdeg + 1):
        start[d] = total
        total += counts[d]
    order = [0] * len(nodes)
    pos: dict[int, int] = {}
    fill = start[:]
    for v in nodes:
        d = deg[v]
        pos[v] = fill[d]
        order[fill[d]] = v
        fill[d] += 1
    for i in range(len(order)):
        v = order[i]
        dv = deg[v]
        for u in g.neighbors(v):
            du = deg[u]
            if du > dv:
                # move u to the front of its bucket, then shrink its degree
                pu = pos[u]
                pw = start[du]
                w = order[pw]
                if u != w:
                    order[pu], order[pw] = w, u
                    pos[u], pos[w] = pw, pu
                start[du] += 1
                deg[u] = du - 1
    return deg


def k_core_subgraph(g, k: int, cores: dict[int, int] | None = None):
    """Subgraph induced by nodes with core number >= ``k`` (possibly empty)."""
    if k < 0:
        raise ValueError("k must be non-negative")
    if cores is None:
        cores = core_numbers(g)
    return g.subgraph(v for v in g.nodes if cores[v] >= k)
