"""k-component records, the cohesive-block tree and k-number maps."""
from __future__ import annotations

import warnings
from collections.abc import Iterable, Mapping
from dataclasses import dataclass, field
from fractions import Fraction

__all__ = [
    "METHODS",
    "KComponent",
    "CohesiveBlockTree",
    "StructureWarning",
    "assemble",
    "build_block_tree",
    "k_number_map",
    "level_sets",
]

METHODS = ("heuristic-approx", "heuristic-exact-flow", "moody-white", "brute-force")


class StructureWarning(UserWarning):
    """A component is not nested where the k-component hierarchy expects it."""


@dataclass(frozen=True)
class KComponent:
    """One detected k-component.

    ``average_connectivity`` is ``None`` when averages were not requested.
    """

    id: int
    k: int
    nodes: frozenset[int]
    average_connectivity: Fraction | None
    method: str

    def __post_init__(self):
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if len(self.nodes) <= self.k:
            raise ValueError(f"a {self.k}-component needs more than {self.k} nodes")

    def __len__(self) -> int:
        return len(self.nodes)

    @property
    def order(self) -> int:
        return len(self.nodes)


def _maximal(sets: list[tuple[frozenset[int], object]]) -> list[tuple[frozenset[int], object]]:
    # drop duplicates and sets nested in another set of the same level
    keep: list[tuple[frozenset[int], object]] = []
    for nodes, avg in sorted(sets, key=lambda x: -len(x[0])):
        if any(nodes <= other for other, _ in keep):
            continue
        keep.append((nodes, avg))
    return keep


def assemble(found: Mapping[int, Iterable[tuple[Iterable[int], object]]], method: str) -> dict[int, list[KComponent]]:
    """Turn raw ``k -> [(nodes, average)]`` findings into numbered components.

    Per level, only maximal node sets survive. Components are ordered by
    level and then by their sorted member lists; ids follow that order.
    """
    if method not in METHODS:
        raise ValueError(f"unknown method {method!r}")
    out: dict[int, list[KComponent]] = {}
    next_id = 0
    for k in sorted(found):
        sets = _maximal([(frozenset(n), a) for n, a in found[k] if len(frozenset(n)) > k])
        sets.sort(key=lambda x: sorted(x[0]))
        level = []
        for nodes, avg in sets:
            level.append(KComponent(next_id, k, nodes, avg, method))
            next_id += 1
        if level:
            out[k] = level
    return out


def level_sets(components: Mapping[int, list[KComponent]]) -> dict[int, set[frozenset[int]]]:
    """``k -> {node sets}``, the shape used to compare detectors."""
    return {k: {c.nodes for c in comps} for k, comps in components.items() if comps}


@dataclass
class CohesiveBlockTree:
    """Nesting forest of k-components.

    ``parent[c.id]`` is the id of the enclosing component of the highest
    lower level, or ``None`` for a root.
    """

    components: list[KComponent]
    parent: dict[int, int | None]
    problems: list[str] = field(default_factory=list)

    def __post_init__(self):
        self._by_id = {c.id: c for c in self.components}

    def __len__(self) -> int:
        return len(self.components)

    def __getitem__(self, cid: int) -> KComponent:
        return self._by_id[cid]

    def roots(self) -> list[KComponent]:
        return [c for c in self.components if self.parent[c.id] is None]

    def children(self, cid: int) -> list[KComponent]:
        return [c for c in self.components if self.parent[c.id] == cid]

    def depth(self) -> int:
        return max((c.k for c in self.components), default=0)


def build_block_tree(components: Mapping[int, list[KComponent]], warn: bool = True) -> CohesiveBlockTree:
    """Arrange components into the cohesive-block tree.

    Parameters
    ----------
    components : mapping
        ``k -> list of KComponent`` as returned by any detector.
    warn : bool
        Emit a :class:`StructureWarning` for every nesting problem.

    Returns
    -------
    CohesiveBlockTree
        Each component hangs below the containing component of the highest
        level smaller than its own (ties go to the smallest id). A component
        of level ``k > 1`` that no level ``k - 1`` component contains is
        reported in ``problems``; this can happen with approximate detection.
    """
    flat = sorted((c for comps in components.values() for c in comps), key=lambda c: (c.k, c.id))
    parent: dict[int, int | None] = {}
    problems = []
    for c in flat:
        best = None
        for other in flat:
            if other.k >= c.k:
                break
            if c.nodes <= other.nodes and (best is None or other.k > best.k):
                best = other
        parent[c.id] = None if best is None else best.id
        if c.k > 1 and (best is None or best.k != c.k - 1):
            msg = f"component {c.id} (k={c.k}, n={len(c)}) is not inside any {c.k - 1}-component"
            problems.append(msg)
            if warn:
                warnings.warn(msg, StructureWarning, stacklevel=2)
    return CohesiveBlockTree(flat, parent, problems)


def k_number_map(components: Mapping[int, list[KComponent]], nodes: Iterable[int] = ()) -> dict[int, tuple[int, Fraction | None]]:
    """Component number and average k-number of every node.

    The k-number is the deepest level of a component containing the node;
    the average is the average connectivity of that component (the largest
    one when several components of the deepest level contain the node).
    Nodes listed in ``nodes`` but contained in no component get ``(0, 0)``.
    """
    out: dict[int, tuple[int, Fraction | None]] = {v: (0, Fraction(0)) for v in nodes}
    for k in sorted(components):
        for c in components[k]:
            avg = c.average_connectivity
            for v in c.nodes:
                prev = out.get(v)
                if prev is None or prev[0] < k:
                    out[v] = (k, avg)
                elif prev[0] == k and avg is not None and (prev[1] is None or avg > prev[1]):
                    out[v] = (k, avg)
    return out
