import csv
import io
import json
from pathlib import Path

import pytest
from click.testing import CliRunner

from kcohesion.cli import main
from kcohesion.generators import random_bipartite
from kcohesion.graph import write_edge_list


def run(*args, env=None):
    return CliRunner().invoke(main, [str(a) for a in args], env=env, catch_exceptions=False)


def ok(*args, env=None):
    res = run(*args, env=env)
    assert res.exit_code == 0, res.output
    return res


@pytest.fixture()
def k5(tmp_path):
    p = tmp_path / "k5.tsv"
    p.write_text("".join(f"{u}\t{v}\n" for u in range(5) for v in range(u + 1, 5)))
    return p


@pytest.fixture(scope="module")
def fixture_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("fx") / "fixture.tsv"
    ok("generate", "appendix-a", "--output", p)
    return p


@pytest.fixture(scope="module")
def bipartite_file(tmp_path_factory):
    p = tmp_path_factory.mktemp("bp") / "bp.tsv"
    with open(p, "w") as fh:
        write_edge_list(random_bipartite(30, 30, 3.0, seed=5), fh)
    return p


def read_csv(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def outputs(d):
    return {name: (d / name).read_bytes() for name in sorted(p.name for p in d.iterdir()) if name != "manifest.json"}


def test_generate_fixture(fixture_file):
    lines = fixture_file.read_text().splitlines()
    assert len(lines) == 200
    assert len({x for line in lines for x in line.split("\t")}) == 99


def test_generate_to_stdout_is_seeded():
    a = ok("generate", "erdos-renyi", "--n", 40, "--avg-degree", 4, "--seed", 3).output
    b = ok("generate", "erdos-renyi", "--n", 40, "--avg-degree", 4, "--seed", 3).output
    c = ok("generate", "erdos-renyi", "--n", 40, "--avg-degree", 4, "--seed", 4).output
    assert a == b != c


def test_compute_k5(k5, tmp_path):
    out = tmp_path / "run"
    ok("compute", "--input", k5, "--method", "exact-flow", "--out", out)
    rows = read_csv(out / "knumbers.csv")
    assert {r["k"] for r in rows} == {"4"} and len(rows) == 5
    assert {r["avg_k"] for r in rows} == {"4.0"}
    doc = json.loads((out / "components.json").read_text())
    assert [c["k"] for c in doc["components"]] == [1, 2, 3, 4]
    assert doc["components"][3]["avg_connectivity_exact"] == "4/1"
    manifest = json.loads((out / "manifest.json").read_text())
    assert set(manifest["outputs"]) == {"components.json", "knumbers.csv", "blocktree.dot"}


def test_compute_is_deterministic(fixture_file, tmp_path):
    ok("compute", "--input", fixture_file, "--out", tmp_path / "a")
    ok("compute", "--input", fixture_file, "--out", tmp_path / "b", "--threads", 3)
    assert outputs(tmp_path / "a") == outputs(tmp_path / "b")


def test_exit_codes(tmp_path, fixture_file):
    assert run("compute", "--input", tmp_path / "missing.tsv", "--out", tmp_path).exit_code == 1
    bad = tmp_path / "bad.tsv"
    bad.write_text("a\tb\nc\n")
    assert run("compute", "--input", bad, "--out", tmp_path).exit_code == 1
    assert run("compute", "--input", fixture_file, "--min-density", 1.5, "--out", tmp_path).exit_code == 2
    assert run("nullmodel", "--input", fixture_file, "--out", tmp_path).exit_code == 2
    assert run("compute", "--input", fixture_file, "--method", "brute-force", "--out", tmp_path).exit_code == 3


def test_nullmodel_zero_replicates(bipartite_file, tmp_path):
    ok("nullmodel", "--input", bipartite_file, "--replicates", 0, "--out", tmp_path)
    assert (tmp_path / "frequencies.csv").read_text().splitlines()[0] == "k,actual"


def test_nullmodel_default_replicates(bipartite_file, tmp_path):
    ok("nullmodel", "--input", bipartite_file, "--only-replicate", 5, "--out", tmp_path)
    params = json.loads((tmp_path / "manifest.json").read_text())["params"]
    assert params["replicates"] == 64


def test_only_replicate_reproduces_a_full_run(bipartite_file, tmp_path):
    ok("nullmodel", "--input", bipartite_file, "--replicates", 6, "--out", tmp_path / "full")
    ok("nullmodel", "--input", bipartite_file, "--only-replicate", 5, "--out", tmp_path / "one")
    full = [r for r in read_csv(tmp_path / "full" / "replicate_counts.csv") if r["replicate"] == "5"]
    assert full and full == read_csv(tmp_path / "one" / "replicate_counts.csv")


def test_nullmodel_degrees_and_threads(bipartite_file, tmp_path):
    ok("nullmodel", "--input", bipartite_file, "--replicates", 4, "--out", tmp_path / "a")
    ok("nullmodel", "--input", bipartite_file, "--replicates", 4, "--threads", 3, "--out", tmp_path / "b")
    assert outputs(tmp_path / "a") == outputs(tmp_path / "b")
    for r in read_csv(tmp_path / "a" / "null_degrees.csv"):
        assert r["degree"] == r["null_mean_degree"]


def test_verify_fixture_run(fixture_file, tmp_path):
    ok("compute", "--input", fixture_file, "--out", tmp_path)
    ok("verify", "--run", tmp_path)
    doc = json.loads((tmp_path / "verification.json").read_text())
    assert doc["confirmed_fraction"] == 1.0


def test_verify_empty_and_missing(tmp_path):
    p = tmp_path / "path.tsv"
    p.write_text("a\tb\nb\tc\n")
    ok("compute", "--input", p, "--out", tmp_path)
    ok("verify", "--run", tmp_path)
    doc = json.loads((tmp_path / "verification.json").read_text())
    assert doc["confirmed_fraction"] is None
    assert run("verify", "--run", tmp_path / "nothing").exit_code == 1


def test_layout_uses_knumbers_file(k5, tmp_path):
    ok("compute", "--input", k5, "--out", tmp_path)
    kn = tmp_path / "custom.csv"
    kn.write_text("node,k,avg_k\n0,4,3.25\n1,4,4.0\n2,4,4.0\n3,4,4.0\n4,4,4.0\n")
    ok("layout", "--input", k5, "--knumbers", kn, "--output", tmp_path / "layout.csv")
    rows = {r["node"]: r for r in read_csv(tmp_path / "layout.csv")}
    assert rows["0"]["z"] == "3.25" and rows["1"]["z"] == "4.0"


def test_bench_plan(tmp_path):
    plan = tmp_path / "plan.toml"
    plan.write_text(
        'budget_seconds = 60\n[[cell]]\ngenerator = "powerlaw"\nn = [40, 80]\nseed = 1\nmethods = ["approx"]\n'
    )
    ok("bench", "--plan", plan, "--output", tmp_path / "bench.csv", "--single-thread")
    rows = read_csv(tmp_path / "bench.csv")
    assert [r["n"] for r in rows] == ["40", "80"]
    assert all(r["status"] == "ok" for r in rows)


def test_export_formats(fixture_file, tmp_path):
    ok("compute", "--input", fixture_file, "--method", "moody-white", "--out", tmp_path)
    comps = tmp_path / "components.json"
    full = ok("export", "--components", comps, "--format", "dot").output
    small = ok("export", "--components", comps, "--format", "dot", "--paper-filters").output
    assert full.count("[label=") == 18 and small.count("[label=") == 14
    doc = json.loads(ok("export", "--components", comps, "--format", "json").output)
    assert "nodes" not in doc["components"][0]
    doc = json.loads(ok("export", "--components", comps, "--format", "json", "--with-members").output)
    assert len(doc["components"][0]["nodes"]) == 99
    filtered = json.loads(ok("export", "--components", comps, "--format", "json", "--filter", "3=10").output)
    assert sum(c["k"] == 3 for c in filtered["components"]) == 4
    assert run("export", "--components", comps, "--filter", "oops").exit_code == 2


def test_config_and_env_seed(k5, tmp_path):
    cfg = tmp_path / "cfg.toml"
    cfg.write_text('seed = 9\n[compute]\nmethod = "exact-flow"\n')
    ok("--config", cfg, "compute", "--input", k5, "--out", tmp_path / "a")
    params = json.loads((tmp_path / "a" / "manifest.json").read_text())["params"]
    assert params["method"] == "exact-flow" and params["seed"] == 9
    ok("compute", "--input", k5, "--out", tmp_path / "b", env={"KCOHESION_SEED": "17"})
    params = json.loads((tmp_path / "b" / "manifest.json").read_text())["params"]
    assert params["seed"] == 17


def test_rerun_reproduces_outputs(k5, tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    ok("compute", "--input", k5, "--out", "run")
    first = outputs(Path("run"))
    before = json.loads(Path("run/manifest.json").read_text())["outputs"]
    for name in first:
        (Path("run") / name).unlink()
    ok("rerun", "run/manifest.json")
    assert outputs(Path("run")) == first
    assert json.loads(Path("run/manifest.json").read_text())["outputs"] == before
