"""Command-line interface: ``kcohesion <command> [options]``.

Exit codes: 0 success, 1 malformed or missing input, 2 invalid
configuration (including non-bipartite input where a two-mode graph is
required), 3 size refusal of the brute-force oracle.
"""
from __future__ import annotations

import contextlib
import csv
import hashlib
import json
import logging
import platform
import sys
import time
from fractions import Fraction
from importlib import metadata
from pathlib import Path

import click
import tomli

from . import __version__
from .analysis import (
    DEFAULT_REPLICATES,
    DETECTORS,
    STANDARD_FILTERS,
    GeneratorSpec,
    benchmark_csv,
    detect,
    export_block_tree,
    knumber_frequencies,
    layout_scatter,
    run_benchmark,
)
from .exact import SizeRefusedError, verify_components
from .generators import (
    appendix_a_fixture,
    bipartite_configuration_null,
    erdos_renyi,
    powerlaw_configuration,
    random_bipartite,
)
from .graph import InputError, NotBipartiteError, one_mode_projection, read_edge_list, write_edge_list
from .hierarchy import KComponent, build_block_tree

log = logging.getLogger("kcohesion")

EXIT_INPUT = 1
EXIT_CONFIG = 2
EXIT_SIZE = 3


class CommandError(click.ClickException):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.exit_code = code


@contextlib.contextmanager
def _guard():
    try:
        yield
    except InputError as exc:
        raise CommandError(f"malformed input: {exc}", EXIT_INPUT) from None
    except (FileNotFoundError, IsADirectoryError) as exc:
        raise CommandError(f"missing input: {exc.filename}", EXIT_INPUT) from None
    except NotBipartiteError as exc:
        raise CommandError(f"not bipartite: {exc}", EXIT_CONFIG) from None
    except SizeRefusedError as exc:
        raise CommandError(str(exc), EXIT_SIZE) from None


# -- shared options ------------------------------------------------------------------


def _load_config(ctx, param, value):
    if value is None:
        return None
    try:
        with open(value, "rb") as fh:
            data = tomli.load(fh)
    except (OSError, tomli.TOMLDecodeError) as exc:
        raise CommandError(f"cannot read config {value}: {exc}", EXIT_CONFIG) from None
    # top-level keys apply to every command, [command] tables to one
    shared = {k.replace("-", "_"): v for k, v in data.items() if not isinstance(v, dict)}
    defaults = {}
    for name in ctx.command.commands:
        table = data.get(name, {})
        defaults[name] = {**shared, **{k.replace("-", "_"): v for k, v in table.items()}}
    ctx.default_map = defaults
    return value


def _check_density(ctx, param, value):
    if value is not None and not 0 < value <= 1:
        raise click.BadParameter("must lie in (0, 1]")
    return value


seed_option = click.option(
    "--seed", type=click.IntRange(min=0), envvar="KCOHESION_SEED", default=0, show_default=True,
    help="Base seed (falls back to $KCOHESION_SEED).",
)
threads_option = click.option("--threads", type=click.IntRange(min=1), default=1, show_default=True, help="Worker cap; outputs do not depend on it.")


def detector_options(f):
    for opt in reversed([
        click.option("--method", type=click.Choice(DETECTORS), default="approx", show_default=True),
        click.option("--min-density", type=float, default=0.95, show_default=True, callback=_check_density),
        click.option("--relaxation", type=click.Choice(["density", "degree-spread"]), default="density", show_default=True),
        click.option("--average", type=click.Choice(["store", "recompute", "off"]), default="store", show_default=True, help="Average-connectivity policy."),
        click.option("--recompute-avg", is_flag=True, help="Shorthand for --average recompute."),
        click.option("--rebuild-aux", is_flag=True, help="Rebuild auxiliary graphs inside found blocks."),
    ]):
        f = opt(f)
    return f


def _detector_kwargs(method, min_density, relaxation, average, recompute_avg, rebuild_aux, threads):
    return {
        "method": method,
        "min_density": Fraction(str(min_density)),
        "relaxation": relaxation,
        "average": "recompute" if recompute_avg else average,
        "rebuild_aux": rebuild_aux,
        "workers": threads,
    }


def _read_graph(path, bipartite=False, project=None):
    g = read_edge_list(path, bipartite=bipartite or project is not None)
    if project is not None:
        g = one_mode_projection(g, project)
    return g


def _out_dir(path) -> Path:
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path: Path, text: str) -> None:
    path.write_text(text, encoding="utf-8", newline="\n")


def _versions() -> dict:
    out = {"kcohesion": __version__, "python": platform.python_version()}
    for pkg in ("numpy", "scipy", "numba", "click"):
        with contextlib.suppress(metadata.PackageNotFoundError):
            out[pkg] = metadata.version(pkg)
    return out


def _manifest(out: Path, command: str, params: dict, seconds: float, outputs: list[str]) -> None:
    digests = {}
    for name in outputs:
        digests[name] = hashlib.sha256((out / name).read_bytes()).hexdigest()
    doc = {
        "command": command,
        "params": params,
        "versions": _versions(),
        "seconds": round(seconds, 6),
        "outputs": digests,
    }
    _write(out / "manifest.json", json.dumps(doc, indent=2, sort_keys=True) + "\n")


def _avg_text(avg) -> str:
    return "" if avg is None else repr(float(avg))


def _components_doc(g, comps, method):
    tree = build_block_tree(comps, warn=False)
    body = json.loads(export_block_tree(tree, "json", with_members=True, labels=g.labels))
    exact = {c.id: c.average_connectivity for c in tree.components}
    for row in body["components"]:
        avg = exact[row["id"]]
        row["avg_connectivity_exact"] = None if avg is None else f"{avg.numerator}/{avg.denominator}"
    return {"method": method, "n": len(g), "m": g.number_of_edges(), "components": body["components"], "problems": tree.problems}


def _components_from_doc(doc, g):
    comps: dict[int, list[KComponent]] = {}
    for row in doc["components"]:
        exact = row.get("avg_connectivity_exact")
        avg = Fraction(exact) if exact is not None else None
        nodes = frozenset(g.index_of(label) for label in row["nodes"])
        comps.setdefault(row["k"], []).append(KComponent(row["id"], row["k"], nodes, avg, doc["method"]))
    return comps


# -- commands --------------------------------------------------------------------------


@click.group()
@click.option("--config", type=click.Path(dir_okay=False), callback=_load_config, is_eager=True, expose_value=False, help="TOML file of option defaults.")
@click.option("-v", "--verbose", count=True)
@click.version_option(__version__, prog_name="kcohesion")
def main(verbose):
    """Structural cohesion analysis of networks."""
    logging.basicConfig(level=logging.WARNING - 10 * min(verbose, 2), format="%(levelname)s %(name)s: %(message)s")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--bipartite", is_flag=True, help="Two-column two-mode input (left column = part A).")
@click.option("--project", type=click.Choice(["A", "B"]), help="Analyse the one-mode projection onto this part.")
@detector_options
@click.option("--out", "out_dir", default=".", show_default=True, type=click.Path(file_okay=False))
@click.option("--paper-filters", is_flag=True, help="Hide small blocks in blocktree.dot (20/15/10 nodes at k=1/2/3).")
@seed_option
@threads_option
def compute(input_path, bipartite, project, method, min_density, relaxation, average, recompute_avg, rebuild_aux, out_dir, paper_filters, seed, threads):
    """Detect the k-component hierarchy of an edge list.

    Writes components.json, knumbers.csv, blocktree.dot and manifest.json.
    """
    params = dict(
        input_path=input_path, bipartite=bipartite, project=project, method=method, min_density=min_density,
        relaxation=relaxation, average=average, recompute_avg=recompute_avg, rebuild_aux=rebuild_aux,
        out_dir=out_dir, paper_filters=paper_filters, seed=seed, threads=threads,
    )
    t0 = time.perf_counter()
    with _guard():
        g = _read_graph(input_path, bipartite, project)
        kwargs = _detector_kwargs(method, min_density, relaxation, average, recompute_avg, rebuild_aux, threads)
        comps, knumbers = detect(g, **kwargs)
    out = _out_dir(out_dir)
    _write(out / "components.json", json.dumps(_components_doc(g, comps, kwargs["method"]), indent=2) + "\n")
    rows = ["node,k,avg_k"]
    rows.extend(f"{g.label(v)},{knumbers[v][0]},{_avg_text(knumbers[v][1])}" for v in g.nodes)
    _write(out / "knumbers.csv", "\n".join(rows) + "\n")
    tree = build_block_tree(comps, warn=False)
    _write(out / "blocktree.dot", export_block_tree(tree, "dot", STANDARD_FILTERS if paper_filters else None))
    _manifest(out, "compute", params, time.perf_counter() - t0, ["components.json", "knumbers.csv", "blocktree.dot"])
    click.echo(f"{sum(len(v) for v in comps.values())} components, max level {max(comps, default=0)}")


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--project", type=click.Choice(["A", "B"]), help="Project actual and null graphs onto this part.")
@click.option("--replicates", type=click.IntRange(min=0), default=DEFAULT_REPLICATES, show_default=True)
@click.option("--only-replicate", type=click.IntRange(min=0), help="Run replicate i alone (seed + i).")
@click.option("--pick", type=click.IntRange(min=0), help="Also write the block tree of replicate i.")
@detector_options
@click.option("--out", "out_dir", default=".", show_default=True, type=click.Path(file_okay=False))
@seed_option
@threads_option
def nullmodel(input_path, project, replicates, only_replicate, pick, method, min_density, relaxation, average, recompute_avg, rebuild_aux, out_dir, seed, threads):
    """Compare k-number frequencies with bipartite configuration-model replicates.

    Writes frequencies.csv, null_degrees.csv, removed_edges.csv,
    replicate_counts.csv and manifest.json.
    """
    params = dict(
        input_path=input_path, project=project, replicates=replicates, only_replicate=only_replicate, pick=pick,
        method=method, min_density=min_density, relaxation=relaxation, average=average,
        recompute_avg=recompute_avg, rebuild_aux=rebuild_aux, out_dir=out_dir, seed=seed, threads=threads,
    )
    t0 = time.perf_counter()
    with _guard():
        g = read_edge_list(input_path, bipartite=True)
        # detection threads stay at 1; --threads goes to replicate processes
        kwargs = _detector_kwargs(method, min_density, relaxation, average, recompute_avg, rebuild_aux, 1)
        del kwargs["workers"]
        try:
            table = knumber_frequencies(g, replicates, seed, project, workers=threads, only_replicate=only_replicate, **kwargs)
        except RuntimeError as exc:
            cause = exc.__cause__
            if isinstance(cause, SizeRefusedError):
                raise CommandError(f"{exc}", EXIT_SIZE) from None
            raise
        picked = None
        if pick is not None:
            sample = bipartite_configuration_null(g, seed + pick)
            h = sample if project is None else one_mode_projection(sample, project)
            picked = (h, *detect(h, **kwargs))
    out = _out_dir(out_dir)
    outputs = ["frequencies.csv", "null_degrees.csv"]
    _write(out / "frequencies.csv", table.to_csv())
    rows = ["node,degree,null_mean_degree"]
    for v in g.nodes:
        mean = table.null_degrees.get(v)
        rows.append(f"{g.label(v)},{g.degree(v)},{'' if mean is None else str(mean)}")
    _write(out / "null_degrees.csv", "\n".join(rows) + "\n")
    if table.replicates:
        rows = ["replicate,removed_fraction"]
        idx = sorted(table.replicate_counts)
        rows.extend(f"{i},{f:.6f}" for i, f in zip(idx, table.removed_fractions))
        _write(out / "removed_edges.csv", "\n".join(rows) + "\n")
        rows = ["replicate,k,count"]
        for i in idx:
            rows.extend(f"{i},{k},{c}" for k, c in table.replicate_counts[i].items())
        _write(out / "replicate_counts.csv", "\n".join(rows) + "\n")
        outputs += ["removed_edges.csv", "replicate_counts.csv"]
    if picked is not None:
        h, comps, _ = picked
        name = f"replicate_{pick}_components.json"
        _write(out / name, json.dumps(_components_doc(h, comps, kwargs["method"]), indent=2) + "\n")
        outputs.append(name)
    _manifest(out, "nullmodel", params, time.perf_counter() - t0, outputs)
    click.echo(f"{table.replicates} replicates, levels {table.levels()}")


@main.command()
@click.option("--run", "run_dir", required=True, type=click.Path(file_okay=False), help="Directory of a compute run.")
@click.option("--input", "input_path", type=click.Path(dir_okay=False), help="Edge list; defaults to the one in the run manifest.")
@click.option("--min-level", type=click.IntRange(min=1), default=3, show_default=True)
@click.option("--no-refine", is_flag=True, help="Skip exact refinement of under-connected blocks.")
def verify(run_dir, input_path, min_level, no_refine):
    """Check the blocks of a compute run against their exact connectivity.

    Writes verification.json into the run directory. Exits 0 whatever the
    verdicts are.
    """
    run = Path(run_dir)
    try:
        manifest = json.loads((run / "manifest.json").read_text(encoding="utf-8"))
        doc = json.loads((run / "components.json").read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise CommandError(f"missing input: {exc.filename}", EXIT_INPUT) from None
    except json.JSONDecodeError as exc:
        raise CommandError(f"malformed run output: {exc}", EXIT_INPUT) from None
    params = manifest.get("params", {})
    with _guard():
        g = _read_graph(input_path or params["input_path"], params.get("bipartite", False), params.get("project"))
        try:
            comps = _components_from_doc(doc, g)
        except KeyError as exc:
            raise CommandError(f"component node {exc} is not in the input graph", EXIT_INPUT) from None
        report = verify_components(g, comps, min_level=min_level, refine=not no_refine)
    _write(run / "verification.json", json.dumps(report.as_dict(g.labels), indent=2) + "\n")
    frac = report.confirmed_fraction
    click.echo(f"{report.confirmed}/{len(report)} confirmed" + ("" if frac is None else f" ({frac:.3f})"))


GENERATORS = ("appendix-a", "erdos-renyi", "powerlaw", "bipartite")


@main.command()
@click.argument("model", type=click.Choice(GENERATORS))
@click.option("--n", type=click.IntRange(min=2), default=1000, show_default=True, help="Order (part A size for bipartite).")
@click.option("--n-b", type=click.IntRange(min=1), default=None, help="Part B size (bipartite; defaults to --n).")
@click.option("--avg-degree", type=float, default=6.0, show_default=True)
@click.option("--alpha", type=float, default=2.0, show_default=True)
@click.option("--output", type=click.Path(dir_okay=False), help="Edge-list file; stdout when omitted.")
@seed_option
def generate(model, n, n_b, avg_degree, alpha, output, seed):
    """Write a generated graph in the edge-list format."""
    try:
        if model == "appendix-a":
            g = appendix_a_fixture()
        elif model == "erdos-renyi":
            g = erdos_renyi(n, avg_degree, seed)
        elif model == "powerlaw":
            g = powerlaw_configuration(n, alpha, seed)
        else:
            g = random_bipartite(n, n_b or n, avg_degree, seed)
    except ValueError as exc:
        raise CommandError(str(exc), EXIT_CONFIG) from None
    if output:
        with open(output, "w", encoding="utf-8", newline="\n") as fh:
            write_edge_list(g, fh)
    else:
        write_edge_list(g, sys.stdout)


def _read_knumbers(path, g):
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames is None or not {"node", "k", "avg_k"} <= set(reader.fieldnames):
            raise InputError("knumbers file needs columns node,k,avg_k")
        knumbers, text = {}, {}
        for lineno, row in enumerate(reader, 2):
            try:
                v = g.index_of(row["node"])
                avg = Fraction(row["avg_k"]) if row["avg_k"] else None
                knumbers[v] = (int(row["k"]), avg)
            except (KeyError, ValueError) as exc:
                raise InputError(f"bad knumbers row: {exc}", lineno) from None
            text[v] = row["avg_k"]
    return knumbers, text


@main.command()
@click.option("--input", "input_path", required=True, type=click.Path(dir_okay=False))
@click.option("--bipartite", is_flag=True)
@click.option("--project", type=click.Choice(["A", "B"]))
@click.option("--knumbers", "knumbers_path", type=click.Path(dir_okay=False), help="knumbers.csv of a compute run; detection runs when omitted.")
@click.option("--output", default="layout.csv", show_default=True, type=click.Path(dir_okay=False))
@seed_option
def layout(input_path, bipartite, project, knumbers_path, output, seed):
    """Kamada-Kawai scatter with average k-number elevation (node,x,y,z)."""
    with _guard():
        g = _read_graph(input_path, bipartite, project)
        if knumbers_path:
            knumbers, text = _read_knumbers(knumbers_path, g)
        else:
            _, knumbers = detect(g)
            text = {v: _avg_text(a) for v, (_, a) in knumbers.items()}
    table = layout_scatter(g, knumbers, seed)
    _write(Path(output), table.to_csv(text))


def _load_plan(path):
    with open(path, "rb") as fh:
        data = tomli.load(fh)
    cells = []
    for cell in data.get("cell", []):
        methods = cell.get("methods", ["approx"])
        ns = cell.get("n", [0])
        for n in ns if isinstance(ns, list) else [ns]:
            spec = GeneratorSpec(
                cell["generator"], int(n), int(cell.get("seed", 0)),
                float(cell.get("avg_degree", 6.0)), float(cell.get("alpha", 2.0)),
            )
            for method in methods:
                if method not in DETECTORS:
                    raise ValueError(f"unknown method {method!r}")
                cells.append((spec, method))
    return cells, data.get("budget_seconds"), int(data.get("repetitions", 1))


@main.command()
@click.option("--plan", "plan_path", required=True, type=click.Path(dir_okay=False))
@click.option("--output", default="bench.csv", show_default=True, type=click.Path(dir_okay=False))
@click.option("--budget", type=float, help="Per-run timeout in seconds (overrides the plan).")
@click.option("--single-thread", is_flag=True, help="Force one worker thread.")
@threads_option
def bench(plan_path, output, budget, single_thread, threads):
    """Time detectors over a TOML plan of generated graphs."""
    try:
        cells, plan_budget, reps = _load_plan(plan_path)
    except FileNotFoundError:
        raise CommandError(f"missing input: {plan_path}", EXIT_INPUT) from None
    except (tomli.TOMLDecodeError, KeyError, ValueError, TypeError) as exc:
        raise CommandError(f"invalid plan: {exc}", EXIT_CONFIG) from None
    workers = 1 if single_thread else threads
    try:
        records = run_benchmark(cells, budget or plan_budget, reps, workers=workers)
    except ValueError as exc:
        raise CommandError(f"invalid plan: {exc}", EXIT_CONFIG) from None
    _write(Path(output), benchmark_csv(records))


@main.command()
@click.option("--components", "components_path", required=True, type=click.Path(dir_okay=False))
@click.option("--format", "fmt", type=click.Choice(["dot", "json"]), default="dot", show_default=True)
@click.option("--paper-filters", is_flag=True, help="Hide 1-, 2- and 3-components under 20, 15 and 10 nodes.")
@click.option("--filter", "filters", multiple=True, metavar="K=N", help="Hide k-components under N nodes.")
@click.option("--with-members", is_flag=True, help="Include node lists (json).")
@click.option("--output", type=click.Path(dir_okay=False), help="Output file; stdout when omitted.")
def export(components_path, fmt, paper_filters, filters, with_members, output):
    """Export the block tree of a components.json file as DOT or JSON."""
    try:
        doc = json.loads(Path(components_path).read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise CommandError(f"missing input: {components_path}", EXIT_INPUT) from None
    except json.JSONDecodeError as exc:
        raise CommandError(f"malformed components file: {exc}", EXIT_INPUT) from None
    limits = dict(STANDARD_FILTERS) if paper_filters else {}
    for item in filters:
        try:
            k, n = item.split("=")
            limits[int(k)] = int(n)
        except ValueError:
            raise CommandError(f"bad filter {item!r}, expected K=N", EXIT_CONFIG) from None
    labels = sorted({label for row in doc["components"] for label in row["nodes"]})
    index = {label: i for i, label in enumerate(labels)}
    comps: dict[int, list[KComponent]] = {}
    for row in doc["components"]:
        exact = row.get("avg_connectivity_exact")
        avg = Fraction(exact) if exact is not None else None
        nodes = frozenset(index[label] for label in row["nodes"])
        comps.setdefault(row["k"], []).append(KComponent(row["id"], row["k"], nodes, avg, doc["method"]))
    text = export_block_tree(build_block_tree(comps, warn=False), fmt, limits or None, with_members, labels)
    if output:
        _write(Path(output), text)
    else:
        click.echo(text, nl=False)


@main.command()
@click.argument("manifest", type=click.Path(dir_okay=False))
@click.pass_context
def rerun(ctx, manifest):
    """Re-run a command from its manifest.json."""
    try:
        doc = json.loads(Path(manifest).read_text(encoding="utf-8"))
        command = main.commands[doc["command"]]
    except FileNotFoundError:
        raise CommandError(f"missing input: {manifest}", EXIT_INPUT) from None
    except (json.JSONDecodeError, KeyError) as exc:
        raise CommandError(f"malformed manifest: {exc}", EXIT_INPUT) from None
    ctx.invoke(command, **doc["params"])


if __name__ == "__main__":  # pragma: no cover
    main()
