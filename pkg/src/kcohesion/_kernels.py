"""Compiled pairwise connectivity kernels over CSR adjacency.

Both kernels follow the same conventions as the pure-Python routines in
:mod:`kcohesion.connectivity` (which the test-suite uses to cross-check
them): the pair (s, t) is always searched from the lower index s, adjacency
lists are sorted ascending, and a direct s-t edge counts as one path.
"""
from __future__ import annotations

import numpy as np
from numba import njit

__all__ = [
    "CSR",
    "pair_index",
    "approx_all_pairs",
    "approx_pair",
    "exact_all_pairs",
    "exact_pair",
    "exact_pairs_from",
]


class CSR:
    """Sorted CSR snapshot of a graph with local indices 0..n-1.

    ``nodes[i]`` is the graph node behind local index ``i``; local order
    follows node order, so the canonical ordering is preserved.
    """

    __slots__ = ("nodes", "local", "indptr", "indices", "rev")

    def __init__(self, g, nodes=None):
        nodes = tuple(sorted(nodes)) if nodes is not None else tuple(g.nodes)
        local = {v: i for i, v in enumerate(nodes)}
        indptr = np.zeros(len(nodes) + 1, dtype=np.int64)
        rows = []
        for i, v in enumerate(nodes):
            row = sorted(local[w] for w in g.neighbors(v) if w in local)
            rows.append(row)
            indptr[i + 1] = indptr[i] + len(row)
        indices = np.fromiter((w for row in rows for w in row), dtype=np.int64, count=int(indptr[-1]))
        self.nodes = nodes
        self.local = local
        self.indptr = indptr
        self.indices = indices
        self.rev = _reverse_positions(indptr, indices)

    def __len__(self) -> int:
        return len(self.nodes)


@njit(cache=True)
def _reverse_positions(indptr, indices):
    n = len(indptr) - 1
    rev = np.empty(len(indices), dtype=np.int64)
    for x in range(n):
        for e in range(indptr[x], indptr[x + 1]):
            y = indices[e]
            # binary search x in y's sorted row
            lo = indptr[y]
            hi = indptr[y + 1]
            while lo < hi:
                mid = (lo + hi) // 2
                if indices[mid] < x:
                    lo = mid + 1
                else:
                    hi = mid
            rev[e] = lo
    return rev


def pair_index(i: int, j: int, n: int) -> int:
    """Position of pair (i, j), i < j, in the row-major upper triangle."""
    return i * (2 * n - i - 1) // 2 + (j - i - 1)


@njit(cache=True, nogil=True)
def _adjacent(indptr, indices, s, t):
    lo = indptr[s]
    hi = indptr[s + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] < t:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[s + 1] and indices[lo] == t


@njit(cache=True, nogil=True)
def _approx_pair(indptr, indices, s, t, cutoff, visit, used, pred, queue, stamps):
    # stamps[0]: BFS stamp, stamps[1]: pair stamp
    ds = indptr[s + 1] - indptr[s]
    dt = indptr[t + 1] - indptr[t]
    limit = ds if ds < dt else dt
    if cutoff > 0 and cutoff < limit:
        limit = cutoff
    stamps[1] += 1
    pstamp = stamps[1]
    k = 0
    if limit > 0 and _adjacent(indptr, indices, s, t):
        k = 1
    while k < limit:
        stamps[0] += 1
        stamp = stamps[0]
        visit[s] = stamp
        head = 0
        tail = 1
        queue[0] = s
        found = False
        while head < tail and not found:
            x = queue[head]
            head += 1
            for e in range(indptr[x], indptr[x + 1]):
                y = indices[e]
                if y == t:
                    if x == s:
                        continue
                    pred[t] = x
                    found = True
                    break
                if visit[y] == stamp or used[y] == pstamp:
                    continue
                visit[y] = stamp
                pred[y] = x
                queue[tail] = y
                tail += 1
        if not found:
            break
        k += 1
        w = pred[t]
        while w != s:
            used[w] = pstamp
            w = pred[w]
    return k


@njit(cache=True, nogil=True)
def approx_all_pairs(indptr, indices, cutoff, row_start, row_stop, out):
    """Shortest-path marking lower bound for pairs i < j with i in [row_start, row_stop)."""
    n = len(indptr) - 1
    visit = np.zeros(n, dtype=np.int64)
    used = np.zeros(n, dtype=np.int64)
    pred = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    stamps = np.zeros(2, dtype=np.int64)
    pos = row_start * (2 * n - row_start - 1) // 2
    for s in range(row_start, row_stop):
        for t in range(s + 1, n):
            out[pos] = _approx_pair(indptr, indices, s, t, cutoff, visit, used, pred, queue, stamps)
            pos += 1


@njit(cache=True, nogil=True)
def approx_pair(indptr, indices, s, t, cutoff):
    n = len(indptr) - 1
    visit = np.zeros(n, dtype=np.int64)
    used = np.zeros(n, dtype=np.int64)
    pred = np.empty(n, dtype=np.int64)
    queue = np.empty(n, dtype=np.int64)
    stamps = np.zeros(2, dtype=np.int64)
    if s > t:
        s, t = t, s
    return _approx_pair(indptr, indices, s, t, cutoff, visit, used, pred, queue, stamps)


# Exact kernel: unit-capacity max flow on the node-split network, searched
# implicitly. State 2*w is w_in, 2*w+1 is w_out. Arc kinds stored in
# ``how``: 0 node arc forward, 1 node arc backward, 2 edge arc forward
# (x_out -> y_in), 3 edge arc backward (y_in -> x_out).


@njit(cache=True, nogil=True)
def _exact_pair(indptr, indices, rev, s, t, cutoff, eflow, nflow, seen, prev, how, arc, queue, stamps):
    ds = indptr[s + 1] - indptr[s]
    dt = indptr[t + 1] - indptr[t]
    limit = ds if ds < dt else dt
    if cutoff > 0 and cutoff < limit:
        limit = cutoff
    n = len(indptr) - 1
    eflow[:] = 0
    nflow[:n] = 0
    src = 2 * s + 1
    dst = 2 * t
    flow = 0
    while flow < limit:
        stamps[0] += 1
        stamp = stamps[0]
        seen[src] = stamp
        head = 0
        tail = 1
        queue[0] = src
        found = False
        while head < tail and not found:
            state = queue[head]
            head += 1
            x = state // 2
            if state % 2 == 1:
                # x_out: edge arcs with spare capacity, or back through x's node arc
                for e in range(indptr[x], indptr[x + 1]):
                    if eflow[e] != 0:
                        continue
                    y = indices[e]
                    if y == s:
                        continue
                    nxt = 2 * y
                    if seen[nxt] == stamp:
                        continue
                    seen[nxt] = stamp
                    prev[nxt] = state
                    how[nxt] = 2
                    arc[nxt] = e
                    if nxt == dst:
                        found = True
                        break
                    queue[tail] = nxt
                    tail += 1
                if not found and x != s and nflow[x] == 1:
                    nxt = 2 * x
                    if seen[nxt] != stamp:
                        seen[nxt] = stamp
                        prev[nxt] = state
                        how[nxt] = 1
                        queue[tail] = nxt
                        tail += 1
            else:
                # x_in (x is neither s nor t here)
                if nflow[x] == 0:
                    nxt = 2 * x + 1
                    if seen[nxt] != stamp:
                        seen[nxt] = stamp
                        prev[nxt] = state
                        how[nxt] = 0
                        queue[tail] = nxt
                        tail += 1
                for e in range(indptr[x], indptr[x + 1]):
                    r = rev[e]  # arc y_out -> x_in
                    if eflow[r] == 0:
                        continue
                    y = indices[e]
                    nxt = 2 * y + 1
                    if seen[nxt] == stamp:
                        continue
                    seen[nxt] = stamp
                    prev[nxt] = state
                    how[nxt] = 3
                    arc[nxt] = r
                    queue[tail] = nxt
                    tail += 1
        if not found:
            break
        flow += 1
        state = dst
        while state != src:
            kind = how[state]
            if kind == 0:
                nflow[state // 2] = 1
            elif kind == 1:
                nflow[state // 2] = 0
            elif kind == 2:
                eflow[arc[state]] = 1
            else:
                eflow[arc[state]] = 0
            state = prev[state]
    return flow


@njit(cache=True, nogil=True)
def exact_all_pairs(indptr, indices, rev, cutoff, row_start, row_stop, out):
    """Exact local node connectivity for pairs i < j with i in [row_start, row_stop)."""
    n = len(indptr) - 1
    m2 = len(indices)
    eflow = np.zeros(m2, dtype=np.int8)
    nflow = np.zeros(n, dtype=np.int8)
    seen = np.zeros(2 * n, dtype=np.int64)
    prev = np.empty(2 * n, dtype=np.int64)
    how = np.empty(2 * n, dtype=np.int8)
    arc = np.empty(2 * n, dtype=np.int64)
    queue = np.empty(2 * n, dtype=np.int64)
    stamps = np.zeros(1, dtype=np.int64)
    pos = row_start * (2 * n - row_start - 1) // 2
    for s in range(row_start, row_stop):
        for t in range(s + 1, n):
            out[pos] = _exact_pair(indptr, indices, rev, s, t, cutoff, eflow, nflow, seen, prev, how, arc, queue, stamps)
            pos += 1


@njit(cache=True, nogil=True)
def exact_pair(indptr, indices, rev, s, t, cutoff):
    n = len(indptr) - 1
    eflow = np.zeros(len(indices), dtype=np.int8)
    nflow = np.zeros(n, dtype=np.int8)
    seen = np.zeros(2 * n, dtype=np.int64)
    prev = np.empty(2 * n, dtype=np.int64)
    how = np.empty(2 * n, dtype=np.int8)
    arc = np.empty(2 * n, dtype=np.int64)
    queue = np.empty(2 * n, dtype=np.int64)
    stamps = np.zeros(1, dtype=np.int64)
    if s > t:
        s, t = t, s
    return _exact_pair(indptr, indices, rev, s, t, cutoff, eflow, nflow, seen, prev, how, arc, queue, stamps)


@njit(cache=True, nogil=True)
def exact_pairs_from(indptr, indices, rev, s, targets, cutoff, out):
    """Exact connectivity from ``s`` to each node of ``targets``."""
    n = len(indptr) - 1
    eflow = np.zeros(len(indices), dtype=np.int8)
    nflow = np.zeros(n, dtype=np.int8)
    seen = np.zeros(2 * n, dtype=np.int64)
    prev = np.empty(2 * n, dtype=np.int64)
    how = np.empty(2 * n, dtype=np.int8)
    arc = np.empty(2 * n, dtype=np.int64)
    queue = np.empty(2 * n, dtype=np.int64)
    stamps = np.zeros(1, dtype=np.int64)
    for i in range(len(targets)):
        a = s
        b = targets[i]
        if a > b:
            a, b = b, a
        out[i] = _exact_pair(indptr, indices, rev, a, b, cutoff, eflow, nflow, seen, prev, how, arc, queue, stamps)
