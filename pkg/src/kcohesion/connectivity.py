"""Local, global and average node connectivity.

Two estimators of local node connectivity are provided:

* ``exact``: maximum flow on the node-split network of the graph;
* ``approx``: the shortest-path marking lower bound, in which shortest paths
  are found one at a time by breadth-first search and their interior nodes
  are excluded from later searches.

Single-pair routines are pure Python and accept any graph interface
(:class:`~kcohesion.graph.Graph` or :class:`~kcohesion.graph.ComplementView`).
Bulk all-pairs computations run in compiled kernels that follow exactly the
same conventions, so both routes return identical values.
"""
from __future__ import annotations

import threading
from collections import deque
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

import numpy as np

from . import _kernels
from .decomposition import connected_components

__all__ = [
    "ESTIMATORS",
    "normalize_estimator",
    "local_node_connectivity_exact",
    "local_node_connectivity_approx",
    "local_node_connectivity",
    "local_edge_connectivity",
    "node_connectivity",
    "edge_connectivity",
    "average_node_connectivity",
    "pairwise_connectivity",
    "PairBlock",
    "PairConnectivityCache",
    "ConnectivityReport",
    "connectivity_report",
]

ESTIMATORS = ("exact", "approx")
CACHE_POLICIES = ("store", "recompute", "off")

_ALIASES = {"exact": "exact", "exact-flow": "exact", "flow": "exact", "approx": "approx"}


def normalize_estimator(estimator: str) -> str:
    try:
        return _ALIASES[estimator]
    except KeyError:
        raise ValueError(f"unknown estimator {estimator!r}") from None


def _check_pair(g, u, v):
    if u == v:
        raise ValueError("local connectivity needs two distinct nodes")
    if u not in g or v not in g:
        raise KeyError(f"node {u if u not in g else v} is not in the graph")


def _limit(g, s, t, cutoff):
    limit = min(g.degree(s), g.degree(t))
    if cutoff is not None and cutoff > 0:
        limit = min(limit, cutoff)
    return limit


# -- exact: node-split flow network -------------------------------------------


class SplitFlow:
    """Unit node-capacity flow network built implicitly over ``g``.

    Node ``w`` is split into the states ``2w`` (in) and ``2w + 1`` (out)
    joined by a unit arc; each edge ``x-y`` gives arcs ``x_out -> y_in`` and
    ``y_out -> x_in``. With ``edge_capacity=None`` the edge arcs are
    uncapacitated, so every finite cut consists of node arcs only.
    """

    def __init__(self, g, s, t, edge_capacity=1):
        self.g = g
        self.s = s
        self.t = t
        self.cap = edge_capacity
        self.node_flow: set[int] = set()
        self.edge_flow: dict[tuple[int, int], int] = {}
        self.src = 2 * s + 1
        self.dst = 2 * t
        self.value = 0

    def _forward_open(self, x, y):
        return self.cap is None or self.edge_flow.get((x, y), 0) < self.cap

    def successors(self, state):
        """Residual successors of ``state`` with the arc kind that leads there."""
        g, s = self.g, self.s
        x = state >> 1
        if state & 1:
            for y in g.sorted_neighbors(x):
                if y != s and self._forward_open(x, y):
                    yield 2 * y, ("e+", x, y)
            if x != s and x in self.node_flow:
                yield 2 * x, ("n-", x)
        else:
            if x not in self.node_flow and x != self.t:
                yield 2 * x + 1, ("n+", x)
            for y in g.sorted_neighbors(x):
                if self.edge_flow.get((y, x), 0) > 0:
                    yield 2 * y + 1, ("e-", y, x)

    def _augment_once(self) -> bool:
        prev = {self.src: None}
        queue = deque([self.src])
        while queue:
            state = queue.popleft()
            for nxt, arc in self.successors(state):
                if nxt in prev:
                    continue
                prev[nxt] = (state, arc)
                if nxt == self.dst:
                    self._push(prev)
                    return True
                queue.append(nxt)
        return False

    def _push(self, prev):
        state = self.dst
        while state != self.src:
            state, arc = prev[state]
            kind = arc[0]
            if kind == "n+":
                self.node_flow.add(arc[1])
            elif kind == "n-":
                self.node_flow.discard(arc[1])
            elif kind == "e+":
                key = (arc[1], arc[2])
                self.edge_flow[key] = self.edge_flow.get(key, 0) + 1
            else:
                key = (arc[1], arc[2])
                self.edge_flow[key] -= 1

    def run(self, limit=None) -> int:
        while limit is None or self.value < limit:
            if not self._augment_once():
                break
            self.value += 1
        return self.value

    def reachable(self) -> set[int]:
        """States reachable from the source in the residual network."""
        seen = {self.src}
        stack = [self.src]
        while stack:
            for nxt, _ in self.successors(stack.pop()):
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        return seen


def local_node_connectivity_exact(g, u, v, cutoff=None) -> int:
    """Exact local node connectivity between two nodes.

    Parameters
    ----------
    g : graph interface
    u, v : node
        Distinct nodes of ``g``.
    cutoff : int, optional
        Stop once this many node-independent paths are found.

    Returns
    -------
    int
        Maximum number of node-independent ``u``-``v`` paths. A direct edge
        counts as one path. Nodes in different components give 0.

    Notes
    -----
    Maximum flow by shortest augmenting paths on the node-split network,
    where every node other than ``u`` and ``v`` has unit capacity.
    """
    _check_pair(g, u, v)
    s, t = (u, v) if u < v else (v, u)
    return SplitFlow(g, s, t).run(_limit(g, s, t, cutoff))


# -- approximation: shortest-path marking -------------------------------------


def local_node_connectivity_approx(g, u, v, cutoff=None) -> int:
    """Lower bound on local node connectivity by shortest-path marking.

    Parameters
    ----------
    g : graph interface
    u, v : node
        Distinct nodes of ``g``.
    cutoff : int, optional
        Stop once this many paths are found.

    Returns
    -------
    int
        Number of node-independent paths found. Never larger than the exact
        local node connectivity.

    Notes
    -----
    The search always starts at the lower-indexed node of the pair and expands
    neighbours in ascending node order, so the path found at each round is
    the lexicographically smallest shortest path avoiding the nodes already
    used. A direct edge counts as one path with no interior nodes.
    """
    _check_pair(g, u, v)
    s, t = (u, v) if u < v else (v, u)
    limit = _limit(g, s, t, cutoff)
    k = 1 if limit > 0 and g.has_edge(s, t) else 0
    used: set[int] = set()
    while k < limit:
        pred = {s: s}
        queue = deque([s])
        found = False
        while queue and not found:
            x = queue.popleft()
            for y in g.sorted_neighbors(x):
                if y == t:
                    if x == s:
                        continue
                    pred[t] = x
                    found = True
                    break
                if y in pred or y in used:
                    continue
                pred[y] = x
                queue.append(y)
        if not found:
            break
        k += 1
        w = pred[t]
        while w != s:
            used.add(w)
            w = pred[w]
    return k


def local_node_connectivity(g, u, v, estimator="exact", cutoff=None) -> int:
    if normalize_estimator(estimator) == "exact":
        return local_node_connectivity_exact(g, u, v, cutoff)
    return local_node_connectivity_approx(g, u, v, cutoff)


# -- edge connectivity ---------------------------------------------------------


def local_edge_connectivity(g, s, t, cutoff=None) -> int:
    """Maximum number of edge-disjoint ``s``-``t`` paths (unit edge capacities)."""
    _check_pair(g, s, t)
    flow: dict[tuple[int, int], int] = {}
    limit = _limit(g, s, t, cutoff)
    value = 0
    while value < limit:
        pred = {s: None}
        queue = deque([s])
        while queue and t not in pred:
            x = queue.popleft()
            for y in g.sorted_neighbors(x):
                if y not in pred and flow.get((x, y), 0) < 1:
                    pred[y] = x
                    queue.append(y)
        if t not in pred:
            break
        y = t
        while y != s:
            x = pred[y]
            flow[(x, y)] = flow.get((x, y), 0) + 1
            flow[(y, x)] = flow.get((y, x), 0) - 1
            y = x
        value += 1
    return value


def edge_connectivity(g) -> int:
    """Edge connectivity of ``g``.

    Every minimum edge cut separates a fixed node from some other node, so
    the minimum of the local edge connectivities from one node suffices.
    """
    n = len(g)
    if n < 2:
        raise ValueError("edge connectivity needs at least 2 nodes")
    nodes = list(g.nodes)
    v = nodes[0]
    best = g.min_degree
    for w in nodes[1:]:
        if best == 0:
            break
        best = min(best, local_edge_connectivity(g, v, w, cutoff=best))
    return best


# -- global node connectivity -------------------------------------------------


def _is_connected(g) -> bool:
    return len(connected_components(g)) <= 1


def node_connectivity(g) -> int:
    """Node connectivity of ``g``.

    Parameters
    ----------
    g : graph interface
        Graph with at least 2 nodes.

    Returns
    -------
    int
        Minimum number of nodes whose removal disconnects ``g``; ``n - 1``
        for a complete graph and 0 for a disconnected one.

    Notes
    -----
    Fixes a node ``v`` of minimum degree. A minimum cut either avoids ``v``,
    and then separates ``v`` from a non-neighbour, or contains ``v``, and
    then separates two non-adjacent neighbours of ``v``. The running minimum
    is used as a flow cutoff.
    """
    n = len(g)
    if n < 2:
        raise ValueError("node connectivity needs at least 2 nodes")
    if not _is_connected(g):
        return 0
    csr = _kernels.CSR(g)
    degrees = np.diff(csr.indptr)
    v = int(np.argmin(degrees))
    best = int(degrees[v])
    if best == n - 1:
        return n - 1
    nbrs = set(csr.indices[csr.indptr[v]:csr.indptr[v + 1]].tolist())
    others = np.array([w for w in range(n) if w != v and w not in nbrs], dtype=np.int64)
    if len(others):
        out = np.empty(len(others), dtype=np.int64)
        _kernels.exact_pairs_from(csr.indptr, csr.indices, csr.rev, v, others, best, out)
        best = min(best, int(out.min()))
    for x, y in combinations(sorted(nbrs), 2):
        if best <= 1:
            break
        lo, hi = csr.indptr[x], csr.indptr[x + 1]
        if y in csr.indices[lo:hi]:
            continue
        best = min(best, int(_kernels.exact_pair(csr.indptr, csr.indices, csr.rev, x, y, best)))
    return best


# -- bulk pair values -----------------------------------------------------------


@dataclass
class PairBlock:
    """Pair values for every unordered pair of ``nodes``.

    ``values`` is the row-major upper triangle over the sorted node tuple.
    ``cutoff`` is the cap used while computing (``None`` for none).
    """

    nodes: tuple[int, ...]
    values: np.ndarray
    estimator: str
    cutoff: int | None = None

    def __post_init__(self):
        self.local = {v: i for i, v in enumerate(self.nodes)}

    def __len__(self):
        return len(self.nodes)

    def __contains__(self, v):
        return v in self.local

    def covers(self, nodes) -> bool:
        return all(v in self.local for v in nodes)

    def get(self, u, v) -> int:
        i, j = self.local[u], self.local[v]
        if i > j:
            i, j = j, i
        return int(self.values[_kernels.pair_index(i, j, len(self.nodes))])

    def total(self, nodes) -> int:
        idx = np.array(sorted(self.local[v] for v in nodes), dtype=np.int64)
        n = len(self.nodes)
        acc = 0
        for a in range(len(idx) - 1):
            i = idx[a]
            rest = idx[a + 1:]
            acc += int(self.values[i * (2 * n - i - 1) // 2 + (rest - i - 1)].sum(dtype=np.int64))
        return acc

    def average(self, nodes=None) -> Fraction:
        nodes = self.nodes if nodes is None else tuple(nodes)
        c = len(nodes)
        if c < 2:
            raise ValueError("average connectivity needs at least 2 nodes")
        return Fraction(self.total(nodes), c * (c - 1) // 2)


def _row_chunks(n, parts):
    # split rows so each chunk holds about the same number of pairs
    total = n * (n - 1) // 2
    if parts <= 1 or total == 0:
        return [(0, n)]
    bounds = [0]
    target = total / parts
    acc = 0
    for i in range(n):
        acc += n - 1 - i
        if acc >= target * len(bounds) and len(bounds) < parts:
            bounds.append(i + 1)
    if bounds[-1] != n:
        bounds.append(n)
    return list(zip(bounds[:-1], bounds[1:]))


def pairwise_connectivity(g, nodes=None, estimator="approx", cutoff=None, workers=1) -> PairBlock:
    """Local node connectivity of every pair of ``nodes`` within ``g``.

    Parameters
    ----------
    g : graph interface
    nodes : iterable of nodes, optional
        Restrict to the subgraph induced by these nodes (default: all).
    estimator : {"exact", "approx"}
    cutoff : int, optional
        Cap every value at ``cutoff``; enough to decide ``kappa >= cutoff``.
    workers : int
        Threads sharing the rows of the pair triangle. Results do not depend
        on the number of workers.

    Returns
    -------
    PairBlock
    """
    estimator = normalize_estimator(estimator)
    csr = _kernels.CSR(g, nodes)
    n = len(csr)
    maxdeg = int(np.diff(csr.indptr).max(initial=0))
    dtype = np.int16 if maxdeg < np.iinfo(np.int16).max else np.int32
    out = np.zeros(n * (n - 1) // 2, dtype=dtype)
    cut = 0 if cutoff is None else int(cutoff)

    def run(bounds):
        r0, r1 = bounds
        if estimator == "approx":
            _kernels.approx_all_pairs(csr.indptr, csr.indices, cut, r0, r1, out)
        else:
            _kernels.exact_all_pairs(csr.indptr, csr.indices, csr.rev, cut, r0, r1, out)

    chunks = _row_chunks(n, workers)
    if len(chunks) == 1:
        run(chunks[0])
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            list(pool.map(run, chunks))
    return PairBlock(csr.nodes, out, estimator, cutoff)


class PairConnectivityCache:
    """Store of pair connectivity blocks shared by a detection run.

    ``policy`` is one of ``"store"`` (keep full pair values and reuse them),
    ``"recompute"`` (keep nothing; averages are recomputed on demand) or
    ``"off"`` (keep nothing; averages are not wanted). Blocks are added under
    a lock, so concurrent workers may insert distinct blocks safely.
    """

    def __init__(self, policy: str = "store"):
        if policy not in CACHE_POLICIES:
            raise ValueError(f"unknown cache policy {policy!r}")
        self.policy = policy
        self._blocks: dict[object, PairBlock] = {}
        self._lock = threading.Lock()

    @property
    def stores(self) -> bool:
        return self.policy == "store"

    def add(self, key, block: PairBlock) -> None:
        if not self.stores:
            return
        with self._lock:
            self._blocks[key] = block

    def block(self, key) -> PairBlock | None:
        return self._blocks.get(key)

    def find(self, nodes, estimator=None) -> PairBlock | None:
        """Smallest stored uncapped block covering all of ``nodes``."""
        nodes = tuple(nodes)
        best = None
        with self._lock:
            blocks = list(self._blocks.values())
        for b in blocks:
            if b.cutoff is not None or (estimator is not None and b.estimator != estimator):
                continue
            if b.covers(nodes) and (best is None or len(b) < len(best)):
                best = b
        return best

    def get(self, u, v, estimator=None) -> int | None:
        b = self.find((u, v), estimator)
        return None if b is None else b.get(u, v)

    def __len__(self) -> int:
        return sum(len(b.values) for b in self._blocks.values())


def average_node_connectivity(g, estimator="exact", cache: PairConnectivityCache | None = None, workers=1) -> Fraction:
    """Average local node connectivity over all unordered node pairs.

    Parameters
    ----------
    g : graph interface
        Graph with at least 2 nodes.
    estimator : {"exact", "approx"}
    cache : PairConnectivityCache, optional
        With policy ``"store"``, pair values already stored for a block that
        covers ``g`` are reused (they may come from a larger graph), and newly
        computed values are stored.

    Returns
    -------
    Fraction
        Sum of local node connectivities divided by ``n (n - 1) / 2``.

    Examples
    --------
    >>> from kcohesion.generators import complete_graph
    >>> average_node_connectivity(complete_graph(5))
    Fraction(4, 1)
    """
    if len(g) < 2:
        raise ValueError("average connectivity needs at least 2 nodes")
    estimator = normalize_estimator(estimator)
    if cache is not None and cache.stores:
        block = cache.find(g.nodes, estimator)
        if block is not None:
            return block.average(g.nodes)
    block = pairwise_connectivity(g, estimator=estimator, workers=workers)
    if cache is not None:
        cache.add(("graph", block.nodes, estimator), block)
    return block.average()


@dataclass(frozen=True)
class ConnectivityReport:
    kappa: int
    lambda_: int
    delta: int
    average_kappa: Fraction

    def whitney_holds(self) -> bool:
        return self.kappa <= self.lambda_ <= self.delta


def connectivity_report(g, estimator="exact") -> ConnectivityReport:
    """Node, edge and average connectivity together with the minimum degree."""
    return ConnectivityReport(
        node_connectivity(g),
        edge_connectivity(g),
        g.min_degree,
        average_node_connectivity(g, estimator),
    )
