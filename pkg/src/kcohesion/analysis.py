"""Null-model comparisons, block-tree export, layouts and benchmarks."""
from __future__ import annotations

import json
import logging
import multiprocessing as mp
import time
from collections import Counter
from collections.abc import Iterable, Mapping, Sequence
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np
from scipy.optimize import minimize

from .decomposition import connected_components
from .exact import k_components_bruteforce, k_components_exact
from .generators import (
    appendix_a_fixture,
    bipartite_configuration_null,
    erdos_renyi,
    powerlaw_configuration,
)
from .graph import Graph, one_mode_projection
from .heuristic import k_components_heuristic
from .hierarchy import CohesiveBlockTree

__all__ = [
    "DETECTORS",
    "STANDARD_FILTERS",
    "DEFAULT_REPLICATES",
    "detect",
    "FrequencyTable",
    "knumber_frequencies",
    "export_block_tree",
    "LayoutTable",
    "layout_scatter",
    "stress",
    "GeneratorSpec",
    "BenchmarkRecord",
    "run_benchmark",
    "benchmark_csv",
]

log = logging.getLogger(__name__)

DETECTORS = ("approx", "exact-flow", "moody-white", "brute-force")
STANDARD_FILTERS = {1: 20, 2: 15, 3: 10}
DEFAULT_REPLICATES = 64


def detect(
    g,
    method: str = "approx",
    min_density=Fraction(95, 100),
    relaxation: str = "density",
    average: str = "store",
    rebuild_aux: bool = False,
    workers: int = 1,
):
    """Run one of the detectors and return ``(components, k_numbers)``.

    ``average`` is the average-connectivity policy of the heuristic
    (``"store"``, ``"recompute"`` or ``"off"``); the exact detectors only
    distinguish ``"off"`` from the rest.
    """
    if method in ("approx", "exact-flow"):
        return k_components_heuristic(
            g,
            estimator=method,
            min_density=min_density,
            compute_average=average != "off",
            cache_policy=average,
            relaxation=relaxation,
            rebuild_aux=rebuild_aux,
            workers=workers,
        )
    if method == "moody-white":
        return k_components_exact(g, compute_average=average != "off")
    if method == "brute-force":
        return k_components_bruteforce(g, compute_average=average != "off")
    raise ValueError(f"unknown method {method!r}")


# -- k-number frequencies -----------------------------------------------------------


def _histogram(knumbers) -> Counter:
    return Counter(k for k, _ in knumbers.values() if k >= 1)


@dataclass
class FrequencyTable:
    """Nodes per k-number in the actual graph and across null replicates.

    ``null`` maps ``k`` to ``(mean, std)`` over the replicates (population
    standard deviation); it is empty when no replicate was run.
    ``null_degrees`` is the mean stub-matching degree of every node of the
    input graph, before repeated pairs are collapsed.
    """

    actual: dict[int, int]
    null: dict[int, tuple[float, float]] = field(default_factory=dict)
    replicates: int = 0
    removed_fractions: list[float] = field(default_factory=list)
    null_degrees: dict[int, Fraction] = field(default_factory=dict)
    replicate_counts: dict[int, dict[int, int]] = field(default_factory=dict)

    def levels(self) -> list[int]:
        return sorted(set(self.actual) | set(self.null))

    def to_csv(self) -> str:
        lines = ["k,actual,null_mean,null_std" if self.replicates else "k,actual"]
        for k in self.levels():
            row = f"{k},{self.actual.get(k, 0)}"
            if self.replicates:
                mean, std = self.null.get(k, (0.0, 0.0))
                row += f",{mean:.6f},{std:.6f}"
            lines.append(row)
        return "\n".join(lines) + "\n"


def _replicate(args):
    g, seed, project, options = args
    sample = bipartite_configuration_null(g, seed, full=True)
    h = sample.graph if project is None else one_mode_projection(sample.graph, project)
    _, knumbers = detect(h, **options)
    return dict(_histogram(knumbers)), sample.stub_degrees(), sample.removed_fraction


def knumber_frequencies(
    g: Graph,
    replicates: int = DEFAULT_REPLICATES,
    seed: int = 0,
    project: str | None = None,
    workers: int = 1,
    only_replicate: int | None = None,
    **detector,
) -> FrequencyTable:
    """Compare k-number frequencies of ``g`` with bipartite null replicates.

    Parameters
    ----------
    g : Graph
        Two-mode graph with a part assignment.
    replicates : int, default 64
        Number of null replicates. Replicate ``i`` uses seed ``seed + i``.
    seed : int
    project : {"A", "B"}, optional
        Analyse one-mode projections: the actual graph and every replicate
        are projected onto this side before detection.
    workers : int
        Worker processes for the replicates. The table does not depend on it.
    only_replicate : int, optional
        Run replicate ``only_replicate`` alone (seed ``seed + only_replicate``).
    **detector
        Passed to :func:`detect`.

    Returns
    -------
    FrequencyTable

    Raises
    ------
    NotBipartiteError
        If ``g`` carries no part assignment.
    RuntimeError
        If a replicate fails; the message names the replicate index.
    """
    if replicates < 0:
        raise ValueError("replicates must be non-negative")
    if g.bipartite_part is None:
        from .graph import NotBipartiteError

        raise NotBipartiteError("the null model needs a bipartite graph")
    actual_graph = g if project is None else one_mode_projection(g, project)
    _, knumbers = detect(actual_graph, **detector)
    table = FrequencyTable(dict(sorted(_histogram(knumbers).items())))
    indices = [only_replicate] if only_replicate is not None else list(range(replicates))
    if not indices:
        return table
    jobs = [(g, seed + i, project, detector) for i in indices]
    results = []
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers, mp_context=mp.get_context("fork")) as pool:
            futures = [pool.submit(_replicate, job) for job in jobs]
            for i, fut in zip(indices, futures):
                try:
                    results.append(fut.result())
                except Exception as exc:
                    raise RuntimeError(f"replicate {i} failed: {exc}") from exc
    else:
        for i, job in zip(indices, jobs):
            try:
                results.append(_replicate(job))
            except Exception as exc:
                raise RuntimeError(f"replicate {i} failed: {exc}") from exc

    r = len(results)
    levels = sorted({k for hist, _, _ in results for k in hist})
    for k in levels:
        counts = np.array([hist.get(k, 0) for hist, _, _ in results], dtype=np.float64)
        table.null[k] = (float(counts.mean()), float(counts.std(ddof=0)))
    table.replicates = r
    table.removed_fractions = [frac for _, _, frac in results]
    table.replicate_counts = {i: dict(sorted(hist.items())) for i, (hist, _, _) in zip(indices, results)}
    sums: Counter = Counter()
    for _, degs, _ in results:
        sums.update(degs)
    table.null_degrees = {v: Fraction(sums.get(v, 0), r) for v in g.nodes}
    return table


# -- block tree export ------------------------------------------------------------------


def _visible(tree: CohesiveBlockTree, filters: Mapping[int, int] | None):
    keep = {c.id for c in tree.components if not filters or len(c) >= filters.get(c.k, 0)}
    parent = {}
    for c in tree.components:
        if c.id not in keep:
            continue
        p = tree.parent[c.id]
        while p is not None and p not in keep:
            p = tree.parent[p]
        parent[c.id] = p
    return [c for c in tree.components if c.id in keep], parent


def _avg_text(avg) -> str:
    return "NA" if avg is None else f"{float(avg):.3f}"


def export_block_tree(
    tree: CohesiveBlockTree,
    fmt: str = "json",
    filters: Mapping[int, int] | None = None,
    with_members: bool = False,
    labels: Sequence[str] | None = None,
) -> str:
    """Serialize a cohesive-block tree.

    Parameters
    ----------
    tree : CohesiveBlockTree
    fmt : {"json", "dot"}
    filters : mapping, optional
        ``k -> minimum order``; smaller components are hidden and their
        children attach to the nearest visible ancestor. ``STANDARD_FILTERS``
        hides 1-components under 20 nodes, 2-components under 15 and
        tricomponents under 10.
    with_members : bool
        Include member lists (JSON only).
    labels : sequence of str, optional
        Node labels used for member lists; indices otherwise.

    Returns
    -------
    str
    """
    comps, parent = _visible(tree, filters)
    if fmt == "dot":
        lines = ["digraph blocktree {"]
        for c in comps:
            lines.append(f'  c{c.id} [label="k={c.k} n={len(c)} avg={_avg_text(c.average_connectivity)}"];')
        for c in comps:
            if parent[c.id] is not None:
                lines.append(f"  c{parent[c.id]} -> c{c.id};")
        lines.append("}")
        return "\n".join(lines) + "\n"
    if fmt == "json":
        rows = []
        for c in comps:
            avg = c.average_connectivity
            row = {
                "id": c.id,
                "k": c.k,
                "order": len(c),
                "avg_connectivity": None if avg is None else float(avg),
                "parent": parent[c.id],
            }
            if with_members:
                members = sorted(c.nodes)
                row["nodes"] = [labels[v] for v in members] if labels is not None else members
            rows.append(row)
        return json.dumps({"components": rows}, indent=2) + "\n"
    raise ValueError(f"unknown format {fmt!r}")


# -- Kamada-Kawai layout ------------------------------------------------------------------

RELATIVE_TOL = 1e-6
MAX_ITER = 1000


def _bfs_distances(g, nodes) -> np.ndarray:
    pos = {v: i for i, v in enumerate(nodes)}
    n = len(nodes)
    dist = np.zeros((n, n))
    for i, s in enumerate(nodes):
        seen = {s: 0}
        frontier = [s]
        while frontier:
            nxt = []
            for u in frontier:
                for w in g.neighbors(u):
                    if w not in seen:
                        seen[w] = seen[u] + 1
                        nxt.append(w)
            frontier = nxt
        for w, d in seen.items():
            dist[i, pos[w]] = d
    return dist


def _stress(flat, dist, weight, iu):
    x = flat.reshape(-1, 2)
    diff = x[:, None, :] - x[None, :, :]
    norm = np.sqrt((diff ** 2).sum(-1))
    np.fill_diagonal(norm, 1.0)
    resid = norm - dist
    value = float((weight * resid ** 2)[iu].sum())
    coef = weight * resid / norm
    np.fill_diagonal(coef, 0.0)
    grad = 2 * (coef[:, :, None] * diff).sum(1)
    return value, grad.ravel()


def stress(pos: np.ndarray, dist: np.ndarray) -> float:
    """Kamada-Kawai energy: ``sum_{i<j} (|x_i - x_j| - d_ij)**2 / d_ij**2``."""
    n = len(dist)
    if n < 2:
        return 0.0
    weight = np.zeros_like(dist)
    mask = dist > 0
    weight[mask] = 1.0 / dist[mask] ** 2
    iu = np.triu_indices(n, 1)
    return _stress(np.asarray(pos, dtype=float).ravel(), dist, weight, iu)[0]


def _kamada_kawai(dist, rng) -> np.ndarray:
    n = len(dist)
    if n == 1:
        return np.zeros((1, 2))
    weight = np.zeros_like(dist)
    mask = dist > 0
    weight[mask] = 1.0 / dist[mask] ** 2
    iu = np.triu_indices(n, 1)
    start = rng.random((n, 2)) * max(np.sqrt(n), 1.0)
    last = [None]

    def stop(intermediate_result):
        f = intermediate_result.fun
        prev, last[0] = last[0], f
        if prev is not None and abs(prev - f) <= RELATIVE_TOL * max(abs(prev), 1e-300):
            raise StopIteration

    res = minimize(
        _stress, start.ravel(), args=(dist, weight, iu), jac=True, method="L-BFGS-B",
        callback=stop, options={"maxiter": MAX_ITER, "ftol": 0.0, "gtol": 1e-10},
    )
    return res.x.reshape(-1, 2)


@dataclass
class LayoutTable:
    """Per-node ``(x, y, z)``; ``z`` is the exact average k-number."""

    nodes: list[int]
    xy: np.ndarray
    z: list[Fraction | None]
    labels: Sequence[str] | None = None

    def __len__(self) -> int:
        return len(self.nodes)

    def to_csv(self, z_text: Mapping[int, str] | None = None) -> str:
        lines = ["node,x,y,z"]
        for i, v in enumerate(self.nodes):
            name = self.labels[v] if self.labels is not None else str(v)
            if z_text is not None:
                z = z_text.get(v, "")
            else:
                z = "" if self.z[i] is None else repr(float(self.z[i]))
            lines.append(f"{name},{self.xy[i, 0]:.6f},{self.xy[i, 1]:.6f},{z}")
        return "\n".join(lines) + "\n"


def layout_scatter(g, knumbers: Mapping[int, tuple[int, Fraction | None]], seed: int = 0) -> LayoutTable:
    """Kamada-Kawai positions with the average k-number as elevation.

    Parameters
    ----------
    g : graph interface
    knumbers : mapping
        ``node -> (k-number, average k-number)``, as returned by the
        detectors. Missing nodes get ``z = None``.
    seed : int
        Seed of the random initial positions.

    Returns
    -------
    LayoutTable
        Nodes in index order. Each connected component is laid out on its
        own (springs of geodesic length between every pair of its nodes) and
        placed to the right of the previous one.

    Notes
    -----
    The stress is minimized with L-BFGS until the relative change between
    iterations drops to 1e-6, or after 1000 iterations.
    """
    rng = np.random.default_rng(seed)
    nodes = list(g.nodes)
    index = {v: i for i, v in enumerate(nodes)}
    xy = np.zeros((len(nodes), 2))
    offset = 0.0
    for comp in sorted(connected_components(g), key=min):
        members = sorted(comp)
        pos = _kamada_kawai(_bfs_distances(g, members), rng)
        pos -= pos.min(axis=0)
        pos[:, 0] += offset
        offset = float(pos[:, 0].max()) + 1.0
        for v, p in zip(members, pos):
            xy[index[v]] = p
    z = [knumbers[v][1] if v in knumbers else None for v in nodes]
    return LayoutTable(nodes, xy, z, getattr(g, "labels", None))


# -- benchmarks -------------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorSpec:
    """``model`` is one of ``erdos-renyi``, ``powerlaw`` or ``appendix-a``."""

    model: str
    n: int = 0
    seed: int = 0
    avg_degree: float = 6.0
    alpha: float = 2.0

    def build(self) -> Graph:
        if self.model == "erdos-renyi":
            return erdos_renyi(self.n, self.avg_degree, self.seed)
        if self.model == "powerlaw":
            return powerlaw_configuration(self.n, self.alpha, self.seed)
        if self.model == "appendix-a":
            return appendix_a_fixture()
        raise ValueError(f"unknown generator {self.model!r}")


@dataclass
class BenchmarkRecord:
    generator: str
    n: int
    m: int
    method: str
    wall_seconds: float
    status: str
    levels: dict[int, int] = field(default_factory=dict)

    def csv_row(self) -> str:
        return f"{self.generator},{self.n},{self.m},{self.method},{self.wall_seconds:.6f},{self.status}"


def _bench_child(conn, g, method, options):
    try:
        t0 = time.perf_counter()
        comps, _ = detect(g, method, **options)
        elapsed = time.perf_counter() - t0
        conn.send(("ok", elapsed, {k: len(v) for k, v in comps.items()}))
    except Exception as exc:  # reported, not raised
        conn.send(("error", 0.0, repr(exc)))
    finally:
        conn.close()


def _timed(g, method, budget, options):
    ctx = mp.get_context("fork")
    recv, send = ctx.Pipe(duplex=False)
    proc = ctx.Process(target=_bench_child, args=(send, g, method, options))
    t0 = time.perf_counter()
    proc.start()
    send.close()
    ready = recv.poll(budget) if budget is not None else recv.poll(None)
    if ready:
        try:
            status, elapsed, payload = recv.recv()
        except EOFError:
            status, elapsed, payload = "error", time.perf_counter() - t0, "worker died"
        proc.join()
    else:
        proc.kill()
        proc.join()
        status, elapsed, payload = "timeout", float(budget), {}
    recv.close()
    return status, max(elapsed, 1e-9), payload


def run_benchmark(
    plan: Iterable[tuple[GeneratorSpec, str]],
    budget_seconds: float | None = None,
    repetitions: int = 1,
    **options,
) -> list[BenchmarkRecord]:
    """Time detectors over a grid of generated graphs.

    Parameters
    ----------
    plan : iterable of (GeneratorSpec, method)
    budget_seconds : float, optional
        Per-run wall-clock limit. A run over budget is killed and recorded
        with status ``"timeout"``; the plan continues.
    repetitions : int
        Runs per cell; one record each.
    **options
        Passed to :func:`detect` (``workers=1`` keeps runs single-threaded).

    Returns
    -------
    list of BenchmarkRecord
        ``wall_seconds`` covers detection only, not graph generation.
    """
    out = []
    graphs: dict[GeneratorSpec, Graph] = {}
    for spec, method in plan:
        if spec not in graphs:
            graphs[spec] = spec.build()
        g = graphs[spec]
        for _ in range(repetitions):
            status, elapsed, payload = _timed(g, method, budget_seconds, options)
            levels = payload if isinstance(payload, dict) else {}
            if status == "error":
                log.warning("%s on %s n=%d failed: %s", method, spec.model, spec.n, payload)
            out.append(BenchmarkRecord(spec.model, len(g), g.number_of_edges(), method, elapsed, status, levels))
    return out


def benchmark_csv(records: Iterable[BenchmarkRecord]) -> str:
    lines = ["generator,n,m,method,seconds,status"]
    lines.extend(r.csv_row() for r in records)
    return "\n".join(lines) + "\n"
