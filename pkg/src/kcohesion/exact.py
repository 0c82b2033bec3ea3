"""Exact k-component detection and verification.

* :func:`k_components_exact` follows the cut-set recursion of Moody and
  White: split a piece along each of its minimum node cuts and recurse.
* :func:`k_components_bruteforce` is a definitional oracle for tiny graphs
  that shares no code with the flow routines.
* :func:`verify_components` checks detected components against their exact
  node connectivity.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import combinations

from .connectivity import SplitFlow, average_node_connectivity, node_connectivity
from .decomposition import bicomponent_node_sets, connected_components, k_core_subgraph
from .hierarchy import KComponent, assemble, k_number_map

__all__ = [
    "BRUTE_FORCE_MAX_NODES",
    "SizeRefusedError",
    "all_min_cutsets",
    "minimum_st_node_cuts",
    "k_components_exact",
    "k_components_bruteforce",
    "local_node_connectivity_bruteforce",
    "verify_components",
    "VerificationRecord",
    "VerificationReport",
]

BRUTE_FORCE_MAX_NODES = 14


class SizeRefusedError(ValueError):
    """The brute-force oracle refuses graphs above its size cap."""


# -- minimum node cuts -----------------------------------------------------------


def _sccs(states, succ):
    # iterative Tarjan; returns list of SCCs (lists of states)
    index: dict[int, int] = {}
    low: dict[int, int] = {}
    on_stack: set[int] = set()
    stack: list[int] = []
    out = []
    counter = 0
    for root in states:
        if root in index:
            continue
        work = [(root, iter(succ[root]))]
        index[root] = low[root] = counter
        counter += 1
        stack.append(root)
        on_stack.add(root)
        while work:
            v, it = work[-1]
            pushed = False
            for w in it:
                if w not in index:
                    index[w] = low[w] = counter
                    counter += 1
                    stack.append(w)
                    on_stack.add(w)
                    work.append((w, iter(succ[w])))
                    pushed = True
                    break
                if w in on_stack and index[w] < low[v]:
                    low[v] = index[w]
            if pushed:
                continue
            work.pop()
            if work and low[v] < low[work[-1][0]]:
                low[work[-1][0]] = low[v]
            if low[v] == index[v]:
                comp = []
                while True:
                    w = stack.pop()
                    on_stack.discard(w)
                    comp.append(w)
                    if w == v:
                        break
                out.append(comp)
    return out


def _closure(start, succ):
    seen = set(start)
    stack = list(start)
    while stack:
        for w in succ[stack.pop()]:
            if w not in seen:
                seen.add(w)
                stack.append(w)
    return seen


def minimum_st_node_cuts(g, s, t) -> tuple[int, list[frozenset[int]]]:
    """All minimum node sets separating non-adjacent ``s`` and ``t``.

    Returns the separation number and the list of distinct minimum cuts.
    Cuts correspond to the closed sets of the residual network of a maximum
    flow; they are enumerated by branching over its strongly connected
    components.
    """
    if g.has_edge(s, t):
        raise ValueError("adjacent nodes cannot be separated")
    flow = SplitFlow(g, s, t, edge_capacity=None)
    value = flow.run()
    # s_in and t_out never decide a cut; leave them out of the state space
    states = [st for v in g.nodes for st in (2 * v, 2 * v + 1) if st not in (2 * s, 2 * t + 1)]
    allowed = set(states)
    succ = {st: [w for w, _ in flow.successors(st) if w in allowed] for st in states}
    pred: dict[int, list[int]] = {st: [] for st in states}
    for st, ws in succ.items():
        for w in ws:
            pred[w].append(st)
    forced_in = _closure([flow.src], succ)
    forced_out = _closure([flow.dst], pred)
    free = [st for st in states if st not in forced_in and st not in forced_out]
    free_set = set(free)
    comps = _sccs(free, {st: [w for w in succ[st] if w in free_set] for st in free})
    comp_of = {st: i for i, comp in enumerate(comps) for st in comp}
    down = [set() for _ in comps]
    up = [set() for _ in comps]
    for i, comp in enumerate(comps):
        for st in comp:
            for w in succ[st]:
                j = comp_of.get(w)
                if j is not None and j != i:
                    down[i].add(j)
                    up[j].add(i)

    def reach(i, edges):
        return _closure([i], edges)

    down_all = [reach(i, down) for i in range(len(comps))]
    up_all = [reach(i, up) for i in range(len(comps))]

    def cut_of(chosen):
        inside = set(forced_in)
        for i in chosen:
            inside.update(comps[i])
        return frozenset(v for v in g.nodes if 2 * v in inside and 2 * v + 1 not in inside and v != s)

    cuts: set[frozenset[int]] = set()
    # branch over ideals of the free components: include i with everything
    # below it, or exclude i with everything above it
    order = list(range(len(comps)))
    stack = [(frozenset(), frozenset(), 0)]
    while stack:
        inc, exc, pos = stack.pop()
        while pos < len(order) and (order[pos] in inc or order[pos] in exc):
            pos += 1
        if pos == len(order):
            cuts.add(cut_of(inc))
            continue
        i = order[pos]
        stack.append((inc, exc | up_all[i], pos + 1))
        stack.append((inc | down_all[i], exc, pos + 1))
    return value, sorted(cuts, key=sorted)


def _disconnects(g, removed) -> bool:
    rest = [v for v in g.nodes if v not in removed]
    return len(rest) > 1 and len(connected_components(g.subgraph(rest))) > 1


def all_min_cutsets(g) -> list[frozenset[int]]:
    """All minimum-size node cut sets of a connected, non-complete graph.

    Parameters
    ----------
    g : graph interface

    Returns
    -------
    list of frozenset
        Every node set of size ``kappa(g)`` whose removal disconnects ``g``,
        without duplicates, sorted by their sorted member lists.

    Raises
    ------
    ValueError
        If ``g`` is complete (no cut set exists) or disconnected.

    Notes
    -----
    Let ``X`` be ``kappa`` nodes of highest degree. A minimum cut ``T`` is
    either ``X`` itself or misses some ``x`` in ``X``; then ``T`` is a
    minimum cut between ``x`` and a node on another side. So the minimum
    ``x``-``y`` cuts of value ``kappa`` over ``x`` in ``X`` and
    non-neighbours ``y`` of ``x`` cover every minimum cut.
    """
    n = len(g)
    if n < 2 or all(g.degree(v) == n - 1 for v in g.nodes):
        raise ValueError("a complete graph has no node cut set")
    if len(connected_components(g)) > 1:
        raise ValueError("graph must be connected")
    kappa = node_connectivity(g)
    top = sorted(g.nodes, key=lambda v: (-g.degree(v), v))[:kappa]
    found: set[frozenset[int]] = set()
    if _disconnects(g, set(top)):
        found.add(frozenset(top))
    for x in top:
        for y in g.nodes:
            if y == x or g.has_edge(x, y):
                continue
            value, cuts = minimum_st_node_cuts(g, x, y)
            if value == kappa:
                found.update(cuts)
    return sorted(found, key=sorted)


# -- Moody-White recursion ----------------------------------------------------------


def _pieces(g, nodes, cut):
    sub = g.subgraph(n for n in nodes if n not in cut)
    for comp in connected_components(sub):
        attached = {t for t in cut if any(w in comp for w in g.neighbors(t))}
        yield frozenset(comp | attached)


def _exact_averages(g, found, compute_average, average_fn):
    out = {}
    for k, sets in found.items():
        level = []
        for nodes in sets:
            if not compute_average:
                avg = None
            elif k <= 2:
                avg = Fraction(k)
            else:
                avg = average_fn(g.subgraph(nodes))
            level.append((nodes, avg))
        out[k] = level
    return out


def _maximal_by_level(records):
    # records: piece -> kappa; keep, per level, the maximal pieces with kappa >= k
    found = {}
    top = max(records.values(), default=0)
    for k in range(3, top + 1):
        cands = sorted((p for p, kap in records.items() if kap >= k and len(p) > k), key=len, reverse=True)
        keep: list[frozenset[int]] = []
        for p in cands:
            if not any(p <= q for q in keep):
                keep.append(p)
        if keep:
            found[k] = keep
    return found


def _reduced(g, piece, level):
    # bicomponents of the level-core of the piece, big enough to matter
    core = k_core_subgraph(g.subgraph(piece), level)
    return [b for b in bicomponent_node_sets(core) if len(b) > level]


def k_components_exact(g, compute_average: bool = True):
    """Exact k-component hierarchy by recursive cut-set splitting.

    Parameters
    ----------
    g : Graph
    compute_average : bool
        Annotate components of level 3 and above with their exact average
        node connectivity (levels 1 and 2 carry their nominal level).

    Returns
    -------
    components : dict
        ``k -> list of KComponent``.
    k_numbers : dict
        ``node -> (k-number, average k-number)``.

    Notes
    -----
    Levels 1 and 2 are the connected and biconnected components. Every
    bicomponent is then processed recursively: its connectivity ``kappa`` is
    recorded; unless it is complete, all of its minimum node cut sets are
    enumerated and each one splits it into one piece per connected component
    of the remainder, each piece keeping the cut nodes adjacent to it. The
    k-components are the maximal recorded pieces whose connectivity is at
    least ``k``. Splitting along every cut separately (not along all cuts at
    once) keeps every k-component inside some piece at each step.

    A piece only needs to hold what is more cohesive than its parent, which
    has minimum degree above ``kappa`` and no articulation point. So each new
    piece is reduced to the bicomponents of its ``(kappa + 1)``-core before
    it is processed. Without this, grid-like regions split into
    exponentially many pieces.

    Examples
    --------
    >>> from kcohesion.generators import complete_graph
    >>> comps, _ = k_components_exact(complete_graph(5))
    >>> {k: [len(c) for c in v] for k, v in comps.items()}
    {1: [5], 2: [5], 3: [5], 4: [5]}
    """
    found: dict[int, list[frozenset[int]]] = {
        1: [frozenset(c) for c in connected_components(g) if len(c) > 1],
        2: [c for c in bicomponent_node_sets(g) if len(c) > 2],
    }
    records: dict[frozenset[int], int] = {}
    todo = [c for c in found[2]]
    while todo:
        piece = todo.pop()
        if piece in records:
            continue
        sub = g.subgraph(piece)
        n = len(piece)
        kappa = node_connectivity(sub)
        records[piece] = kappa
        if kappa == n - 1:
            continue
        seen = set()
        for cut in all_min_cutsets(sub):
            for p in _pieces(sub, piece, cut):
                if p in seen:
                    continue
                seen.add(p)
                todo.extend(b for b in _reduced(sub, p, kappa + 1) if b not in records)
    found.update(_maximal_by_level(records))
    avg = lambda h: average_node_connectivity(h, "exact")  # noqa: E731
    comps = assemble(_exact_averages(g, found, compute_average, avg), "moody-white")
    return comps, k_number_map(comps, g.nodes)


# -- brute-force oracle ---------------------------------------------------------------


def _bit_adjacency(g):
    nodes = list(g.nodes)
    pos = {v: i for i, v in enumerate(nodes)}
    adj = [0] * len(nodes)
    for v in nodes:
        for w in g.neighbors(v):
            adj[pos[v]] |= 1 << pos[w]
    return nodes, adj


def _connected_mask(adj, mask) -> bool:
    if mask == 0:
        return False
    start = mask & -mask
    seen = start
    frontier = start
    while frontier:
        low = frontier & -frontier
        frontier ^= low
        i = low.bit_length() - 1
        new = adj[i] & mask & ~seen
        seen |= new
        frontier |= new
    return seen == mask


def _check_size(g):
    if len(g) > BRUTE_FORCE_MAX_NODES:
        raise SizeRefusedError(
            f"brute force is limited to {BRUTE_FORCE_MAX_NODES} nodes, graph has {len(g)}"
        )


def _subset_kappa(adj, n):
    """kappa of every induced subgraph, by subset dynamic programming."""
    full = 1 << n
    popcount = [bin(m).count("1") for m in range(full)]
    connected = [_connected_mask(adj, m) for m in range(full)]
    # largest disconnected induced subset of each mask
    maxdisc = [0] * full
    for m in range(1, full):
        if popcount[m] >= 2 and not connected[m]:
            maxdisc[m] = popcount[m]
            continue
        best = 0
        rest = m
        while rest:
            low = rest & -rest
            rest ^= low
            d = maxdisc[m ^ low]
            if d > best:
                best = d
        maxdisc[m] = best
    kappa = [0] * full
    for m in range(1, full):
        size = popcount[m]
        if not connected[m]:
            kappa[m] = 0
        elif maxdisc[m] == 0:
            kappa[m] = size - 1  # complete
        else:
            kappa[m] = size - maxdisc[m]
    return kappa, popcount


def local_node_connectivity_bruteforce(g, u, v) -> int:
    """Local node connectivity by exhaustive separator search (tiny graphs).

    For non-adjacent nodes this is the size of the smallest node set whose
    removal separates them; an edge ``u-v`` adds one path to the value of
    the graph without that edge.
    """
    _check_size(g)
    nodes, adj = _bit_adjacency(g)
    pos = {w: i for i, w in enumerate(nodes)}
    a, b = pos[u], pos[v]
    bonus = 0
    if adj[a] >> b & 1:
        adj = list(adj)
        adj[a] &= ~(1 << b)
        adj[b] &= ~(1 << a)
        bonus = 1
    others = [i for i in range(len(nodes)) if i not in (a, b)]
    everything = (1 << len(nodes)) - 1
    for size in range(len(others) + 1):
        for cut in combinations(others, size):
            mask = everything
            for i in cut:
                mask &= ~(1 << i)
            if not _reaches(adj, mask, a, b):
                return size + bonus
    return len(others) + bonus


def _reaches(adj, mask, a, b) -> bool:
    seen = 1 << a
    frontier = seen
    while frontier:
        low = frontier & -frontier
        frontier ^= low
        new = adj[low.bit_length() - 1] & mask & ~seen
        if new >> b & 1:
            return True
        seen |= new
        frontier |= new
    return False


def _bruteforce_average(h):
    nodes = list(h.nodes)
    total = sum(local_node_connectivity_bruteforce(h, u, v) for u, v in combinations(nodes, 2))
    return Fraction(total, len(nodes) * (len(nodes) - 1) // 2)


def k_components_bruteforce(g, compute_average: bool = True):
    """k-components by exhaustive search over node subsets.

    Parameters
    ----------
    g : Graph
        At most 14 nodes.
    compute_average : bool
        Average connectivity of components of level 3 and above, by
        exhaustive separator search.

    Returns
    -------
    components, k_numbers
        As :func:`k_components_exact`.

    Raises
    ------
    SizeRefusedError
        If ``g`` has more than 14 nodes.

    Notes
    -----
    The connectivity of every induced subgraph ``S`` is ``|S|`` minus the
    size of its largest disconnected induced subgraph (``|S| - 1`` if ``S``
    is complete). A k-component is a node set of more than ``k`` nodes with
    connectivity at least ``k`` that no larger such set contains.
    """
    _check_size(g)
    nodes, adj = _bit_adjacency(g)
    n = len(nodes)
    if n == 0:
        return {}, {}
    kappa, popcount = _subset_kappa(adj, n)
    full = 1 << n
    top = max(kappa)
    found: dict[int, list[frozenset[int]]] = {}
    for k in range(1, top + 1):
        cands = sorted((m for m in range(1, full) if kappa[m] >= k and popcount[m] > k), key=lambda m: -popcount[m])
        keep: list[int] = []
        for m in cands:
            if not any(m & q == m for q in keep):
                keep.append(m)
        if keep:
            found[k] = [frozenset(nodes[i] for i in range(n) if m >> i & 1) for m in keep]
    comps = assemble(_exact_averages(g, found, compute_average, _bruteforce_average), "brute-force")
    return comps, k_number_map(comps, g.nodes)


# -- verification -------------------------------------------------------------------


@dataclass
class VerificationRecord:
    id: int
    k: int
    claimed_k: int
    order: int
    actual_kappa: int
    verdict: str
    refinement: list[KComponent] | None = None

    def as_dict(self, labels=None) -> dict:
        out = {
            "id": self.id,
            "k": self.k,
            "claimed_k": self.claimed_k,
            "order": self.order,
            "actual_kappa": self.actual_kappa,
            "verdict": self.verdict,
        }
        if self.refinement is not None:
            out["refinement"] = [
                {
                    "k": c.k,
                    "order": len(c),
                    "nodes": sorted((labels[v] if labels else v) for v in c.nodes),
                }
                for c in self.refinement
            ]
        return out


@dataclass
class VerificationReport:
    records: list[VerificationRecord] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.records)

    @property
    def confirmed(self) -> int:
        return sum(r.verdict == "confirmed" for r in self.records)

    @property
    def confirmed_fraction(self) -> float | None:
        return self.confirmed / len(self.records) if self.records else None

    def as_dict(self, labels=None) -> dict:
        return {
            "checked": len(self.records),
            "confirmed": self.confirmed,
            "confirmed_fraction": self.confirmed_fraction,
            "components": [r.as_dict(labels) for r in self.records],
        }


def verify_components(g, detected, min_level: int = 3, refine: bool = True) -> VerificationReport:
    """Check detected components against their exact node connectivity.

    Parameters
    ----------
    g : Graph
    detected : mapping
        ``k -> list of KComponent`` from any detector.
    min_level : int
        Components below this level are skipped (levels 1 and 2 are exact
        by construction in every detector).
    refine : bool
        For an under-connected component, run the exact algorithm on its
        induced subgraph and attach the true components of level ``k`` and
        above that it contains.

    Returns
    -------
    VerificationReport
    """
    report = VerificationReport()
    for k in sorted(detected):
        if k < min_level:
            continue
        for c in detected[k]:
            sub = g.subgraph(c.nodes)
            actual = node_connectivity(sub)
            ok = actual >= c.k
            refinement = None
            if not ok and refine:
                inner, _ = k_components_exact(sub, compute_average=False)
                refinement = [x for lvl in sorted(inner) if lvl >= c.k for x in inner[lvl]]
            report.records.append(
                VerificationRecord(c.id, c.k, c.k, len(c), actual, "confirmed" if ok else "under-connected", refinement)
            )
    return report
