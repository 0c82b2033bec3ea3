"""Graph containers: an immutable simple graph and a complement-backed view.

Nodes are dense integer indices; every graph carries the label table of the
graph it was derived from, so subgraphs keep their parent's indices and the
label of any node can always be recovered.
"""
from __future__ import annotations

from collections.abc import Iterable, Iterator, Mapping, Sequence
from fractions import Fraction
from itertools import combinations
from typing import TextIO

__all__ = [
    "Graph",
    "ComplementView",
    "InputError",
    "NotBipartiteError",
    "build_graph",
    "build_bipartite",
    "infer_bipartite",
    "read_edge_list",
    "parse_edge_list",
    "write_edge_list",
    "one_mode_projection",
    "complement_view",
    "density",
]

PART_A = "A"
PART_B = "B"


class InputError(ValueError):
    """Malformed edge-list input; ``line`` is the 1-based offending line."""

    def __init__(self, message: str, line: int | None = None):
        self.reason = message
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class NotBipartiteError(ValueError):
    pass


class Graph:
    """Undirected simple graph over integer node indices.

    Instances are immutable. ``labels`` maps index -> external label and is
    shared (not copied) with every subgraph.
    """

    __slots__ = ("_adj", "_nodes", "_labels", "_index", "_parts", "_sorted")

    def __init__(
        self,
        adjacency: Mapping[int, Iterable[int]],
        labels: Sequence[str] | None = None,
        parts: Mapping[int, str] | None = None,
    ):
        adj = {int(v): frozenset(nbrs) for v, nbrs in adjacency.items()}
        for v, nbrs in adj.items():
            if v in nbrs:
                raise ValueError(f"self-loop on node {v}")
            for w in nbrs:
                if w not in adj or v not in adj[w]:
                    raise ValueError(f"asymmetric adjacency between {v} and {w}")
        if labels is None:
            top = max(adj, default=-1)
            labels = [str(i) for i in range(top + 1)]
        self._init(adj, labels, parts)
        if parts is not None:
            for v in adj:
                if self._parts.get(v) not in (PART_A, PART_B):
                    raise ValueError(f"node {v} has no bipartite part")
            for u, v in self.edges():
                if self._parts[u] == self._parts[v]:
                    raise NotBipartiteError(
                        f"edge {self.label(u)}-{self.label(v)} joins nodes of the same part"
                    )

    def _init(self, adj, labels, parts, index=None):
        self._adj = adj
        self._nodes = tuple(sorted(adj))
        self._labels = labels
        self._index = index
        self._parts = dict(parts) if parts is not None else None
        self._sorted = {}

    @classmethod
    def _trusted(cls, adj, labels, parts=None, index=None) -> Graph:
        g = cls.__new__(cls)
        g._init(adj, labels, parts, index)
        return g

    # -- read interface shared with ComplementView --------------------------

    @property
    def nodes(self) -> tuple[int, ...]:
        return self._nodes

    def __len__(self) -> int:
        return len(self._adj)

    def __iter__(self) -> Iterator[int]:
        return iter(self._nodes)

    def __contains__(self, v) -> bool:
        return v in self._adj

    def neighbors(self, v: int) -> frozenset[int]:
        return self._adj[v]

    def sorted_neighbors(self, v: int) -> tuple[int, ...]:
        s = self._sorted.get(v)
        if s is None:
            s = self._sorted[v] = tuple(sorted(self._adj[v]))
        return s

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return u in self._adj and v in self._adj[u]

    def number_of_edges(self) -> int:
        return sum(len(n) for n in self._adj.values()) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u in self._nodes for v in self.sorted_neighbors(u) if u < v]

    def subgraph(self, nodes: Iterable[int]) -> Graph:
        keep = frozenset(nodes) & self._adj.keys()
        adj = {v: self._adj[v] & keep for v in keep}
        parts = None
        if self._parts is not None:
            parts = {v: self._parts[v] for v in keep}
        return Graph._trusted(adj, self._labels, parts, self._index)

    # -- labels and bipartite data ------------------------------------------

    @property
    def labels(self) -> Sequence[str]:
        return self._labels

    def label(self, v: int) -> str:
        return self._labels[v]

    def index_of(self, label: str) -> int:
        if self._index is None:
            self._index = {lab: i for i, lab in enumerate(self._labels)}
        i = self._index[label]
        if i not in self._adj:
            raise KeyError(label)
        return i

    @property
    def bipartite_part(self) -> dict[int, str] | None:
        return self._parts

    @property
    def is_bipartite_labelled(self) -> bool:
        return self._parts is not None

    def side(self, part: str) -> list[int]:
        if self._parts is None:
            raise NotBipartiteError("graph has no bipartite partition")
        return [v for v in self._nodes if self._parts[v] == part]

    # -- misc ---------------------------------------------------------------

    @property
    def min_degree(self) -> int:
        return min((len(n) for n in self._adj.values()), default=0)

    def complement(self) -> Graph:
        everyone = frozenset(self._adj)
        adj = {v: everyone - self._adj[v] - {v} for v in self._adj}
        return Graph._trusted(adj, self._labels, None, self._index)

    def relabeled(self) -> Graph:
        """Copy with nodes renumbered 0..n-1 (order preserved)."""
        order = self._nodes
        pos = {v: i for i, v in enumerate(order)}
        adj = {pos[v]: frozenset(pos[w] for w in self._adj[v]) for v in order}
        labels = [self._labels[v] for v in order]
        parts = None
        if self._parts is not None:
            parts = {pos[v]: self._parts[v] for v in order}
        return Graph._trusted(adj, labels, parts)

    def __repr__(self) -> str:
        return f"<Graph n={len(self)} m={self.number_of_edges()}>"


class ComplementView:
    """A graph given by the pairs that are *not* adjacent.

    Memory is proportional to the number of absent pairs, which keeps the
    dense auxiliary graphs of the k-component heuristic affordable. The view
    answers the same queries as :class:`Graph`.
    """

    __slots__ = ("_nodes", "_nodeset", "_absent", "_labels")

    def __init__(
        self,
        nodes: Iterable[int],
        absent_edges: Mapping[int, Iterable[int]] | None = None,
        labels: Sequence[str] | None = None,
    ):
        self._nodeset = frozenset(nodes)
        self._nodes = tuple(sorted(self._nodeset))
        absent = {v: set() for v in self._nodes}
        for v, others in (absent_edges or {}).items():
            for w in others:
                if v == w or v not in absent or w not in absent:
                    continue
                absent[v].add(w)
                absent[w].add(v)
        self._absent = absent
        self._labels = labels

    @classmethod
    def _trusted(cls, nodeset, absent, labels) -> ComplementView:
        h = cls.__new__(cls)
        h._nodeset = nodeset
        h._nodes = tuple(sorted(nodeset))
        h._absent = absent
        h._labels = labels
        return h

    @property
    def nodes(self) -> tuple[int, ...]:
        return self._nodes

    def __len__(self) -> int:
        return len(self._nodes)

    def __iter__(self) -> Iterator[int]:
        return iter(self._nodes)

    def __contains__(self, v) -> bool:
        return v in self._nodeset

    def absent(self, v: int) -> set[int]:
        return self._absent[v]

    def neighbors(self, v: int) -> frozenset[int]:
        return self._nodeset.difference(self._absent[v], (v,))

    def sorted_neighbors(self, v: int) -> tuple[int, ...]:
        return tuple(sorted(self.neighbors(v)))

    def degree(self, v: int) -> int:
        return len(self._nodes) - 1 - len(self._absent[v])

    def has_edge(self, u: int, v: int) -> bool:
        return u != v and u in self._nodeset and v in self._nodeset and v not in self._absent[u]

    def number_of_edges(self) -> int:
        n = len(self._nodes)
        missing = sum(len(a) for a in self._absent.values()) // 2
        return n * (n - 1) // 2 - missing

    def number_of_absent_edges(self) -> int:
        return sum(len(a) for a in self._absent.values()) // 2

    def edges(self) -> list[tuple[int, int]]:
        return [(u, v) for u, v in combinations(self._nodes, 2) if v not in self._absent[u]]

    def subgraph(self, nodes: Iterable[int]) -> ComplementView:
        keep = frozenset(nodes) & self._nodeset
        absent = {v: self._absent[v] & keep for v in keep}
        return ComplementView._trusted(keep, absent, self._labels)

    def label(self, v: int) -> str:
        return self._labels[v] if self._labels is not None else str(v)

    @property
    def min_degree(self) -> int:
        return min((self.degree(v) for v in self._nodes), default=0)

    def materialize(self) -> Graph:
        adj = {v: self.neighbors(v) for v in self._nodes}
        labels = self._labels
        if labels is None:
            labels = [str(i) for i in range(max(self._nodes, default=-1) + 1)]
        return Graph._trusted(adj, labels)

    def __repr__(self) -> str:
        return f"<ComplementView n={len(self)} absent={self.number_of_absent_edges()}>"


def complement_view(g: Graph) -> ComplementView:
    """View that behaves as the complement of ``g`` while storing only ``g``'s edges."""
    return ComplementView._trusted(
        frozenset(g.nodes), {v: set(g.neighbors(v)) for v in g.nodes}, g.labels
    )


def density(g) -> Fraction:
    """Return ``2m / (n (n - 1))`` as an exact fraction."""
    n = len(g)
    if n < 2:
        raise ValueError("density is undefined for graphs with fewer than 2 nodes")
    return Fraction(2 * g.number_of_edges(), n * (n - 1))


# -- construction ---------------------------------------------------------


def build_graph(
    edge_list: Iterable[tuple[str, str]],
    nodes: Iterable[str] = (),
    strict: bool = True,
) -> Graph:
    """Build a simple graph from ``(label, label)`` pairs.

    Labels are indexed in order of first appearance (``nodes`` first, so
    isolated nodes can be declared). Duplicate edges collapse. Self-loops
    raise :class:`InputError` in strict mode and are dropped otherwise.
    """
    index: dict[str, int] = {}
    labels: list[str] = []
    adj: dict[int, set[int]] = {}

    def idx(label: str) -> int:
        if not label:
            raise InputError("empty node label")
        i = index.get(label)
        if i is None:
            i = index[label] = len(labels)
            labels.append(label)
            adj[i] = set()
        return i

    for label in nodes:
        idx(label)
    for lineno, (a, b) in enumerate(edge_list, 1):
        if a == b:
            if strict:
                raise InputError(f"self-loop on node {a!r}", lineno)
            idx(a)
            continue
        u, v = idx(a), idx(b)
        adj[u].add(v)
        adj[v].add(u)
    frozen = {v: frozenset(n) for v, n in adj.items()}
    return Graph._trusted(frozen, labels, None, index)


def build_bipartite(edge_list: Iterable[tuple[str, str]]) -> Graph:
    """Two-mode graph: the left label of each pair is in part A, the right in B."""
    index: dict[str, int] = {}
    labels: list[str] = []
    parts: dict[int, str] = {}
    adj: dict[int, set[int]] = {}
    for lineno, (a, b) in enumerate(edge_list, 1):
        ids = []
        for label, part in ((a, PART_A), (b, PART_B)):
            if not label:
                raise InputError("empty node label", lineno)
            i = index.get(label)
            if i is None:
                i = index[label] = len(labels)
                labels.append(label)
                parts[i] = part
                adj[i] = set()
            elif parts[i] != part:
                raise NotBipartiteError(f"line {lineno}: node {label!r} appears in both columns")
            ids.append(i)
        u, v = ids
        adj[u].add(v)
        adj[v].add(u)
    frozen = {v: frozenset(n) for v, n in adj.items()}
    return Graph._trusted(frozen, labels, parts, index)


def infer_bipartite(g: Graph) -> Graph:
    """Return ``g`` with a part assignment found by 2-colouring.

    The lowest-index node of every connected component goes to part A.
    """
    colour: dict[int, str] = {}
    for root in g.nodes:
        if root in colour:
            continue
        colour[root] = PART_A
        stack = [root]
        while stack:
            v = stack.pop()
            other = PART_B if colour[v] == PART_A else PART_A
            for w in g.neighbors(v):
                c = colour.get(w)
                if c is None:
                    colour[w] = other
                    stack.append(w)
                elif c != other:
                    raise NotBipartiteError(
                        f"odd cycle through {g.label(v)!r} and {g.label(w)!r}"
                    )
    return Graph._trusted(g._adj, g.labels, colour, g._index)


def parse_edge_list(lines: Iterable[str]) -> Iterator[tuple[int, str, str]]:
    """Yield ``(line_number, left, right)`` for each edge line."""
    for lineno, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        tokens = line.split()
        if len(tokens) != 2:
            raise InputError(f"expected 2 tokens, found {len(tokens)}", lineno)
        yield lineno, tokens[0], tokens[1]


def read_edge_list(
    source: str | TextIO,
    bipartite: bool = False,
    strict: bool = True,
) -> Graph:
    """Read the whitespace-separated edge-list format.

    With ``bipartite=True`` the column position defines the part (left = A).
    Errors carry the line number of the offending input line.
    """
    if isinstance(source, str):
        with open(source, encoding="utf-8") as fh:
            return read_edge_list(fh, bipartite=bipartite, strict=strict)
    rows = list(parse_edge_list(source))
    pairs = [(a, b) for _, a, b in rows]
    try:
        if bipartite:
            return build_bipartite(pairs)
        return build_graph(pairs, strict=strict)
    except InputError as exc:
        if exc.line is not None:
            raise InputError(exc.reason, rows[exc.line - 1][0]) from None
        raise


def write_edge_list(g: Graph, fh: TextIO) -> None:
    for u, v in g.edges():
        if g.bipartite_part is not None and g.bipartite_part[u] == PART_B:
            u, v = v, u
        fh.write(f"{g.label(u)}\t{g.label(v)}\n")


def one_mode_projection(g: Graph, side: str = PART_A) -> Graph:
    """Project a two-mode graph onto ``side``.

    Two nodes of ``side`` are adjacent iff they share at least one neighbour
    in ``g``. Multiplicity is discarded. The result is a fresh graph whose
    indices follow the original order of the projected nodes.
    """
    if g.bipartite_part is None:
        raise NotBipartiteError("one-mode projection needs a bipartite graph")
    if side not in (PART_A, PART_B):
        raise ValueError(f"side must be 'A' or 'B', not {side!r}")
    keep = g.side(side)
    pos = {v: i for i, v in enumerate(keep)}
    adj: dict[int, set[int]] = {i: set() for i in range(len(keep))}
    for v in keep:
        pv = pos[v]
        for event in g.neighbors(v):
            for w in g.neighbors(event):
                if w != v:
                    adj[pv].add(pos[w])
    labels = [g.label(v) for v in keep]
    return Graph._trusted({v: frozenset(n) for v, n in adj.items()}, labels)
