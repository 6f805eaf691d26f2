import csv
import json
import os
from pathlib import Path

import pytest
from click.testing import CliRunner

from districtkit import synthetic
from districtkit.cli import cli
from districtkit.io import read_graph_json, write_geojson
from districtkit.layer import GeoLayer, Unit
from districtkit import geom

import fixtures

GOLDEN = Path(__file__).parent / "golden"
COMMANDS = ["doctor", "repair", "graph", "build", "chain", "analyze"]


def run(*args):
    return CliRunner().invoke(cli, [str(a) for a in args])


# help

@pytest.mark.parametrize("cmd", [None] + COMMANDS)
def test_help_golden(cmd):
    args = [cmd, "--help"] if cmd else ["--help"]
    out = run(*args).output
    golden = GOLDEN / f"help_{cmd or 'main'}.txt"
    if os.environ.get("DISTRICTKIT_UPDATE_GOLDEN"):
        golden.write_text(out)
    assert out == golden.read_text()


@pytest.mark.parametrize("cmd", COMMANDS)
def test_help_documents_every_flag(cmd):
    command = cli.commands[cmd]
    out = run(cmd, "--help").output
    for param in command.params:
        for opt in getattr(param, "opts", []):
            if opt.startswith("-"):
                assert opt in out
        if param.param_type_name == "option":
            assert param.help


# doctor / repair / graph

def test_doctor_clean(tmp_path):
    write_geojson(synthetic.grid_layer(3, 3, 10.0), tmp_path / "g.geojson")
    r = run("doctor", tmp_path / "g.geojson")
    assert r.exit_code == 0 and "0 gaps, 0 overlaps" in r.output


def test_doctor_dirty(tmp_path):
    write_geojson(fixtures.sliver_overlap()[0], tmp_path / "d.geojson")
    r = run("doctor", tmp_path / "d.geojson")
    assert r.exit_code == 1 and "1 overlaps" in r.output


def test_doctor_missing_file(tmp_path):
    assert run("doctor", tmp_path / "nope.geojson").exit_code == 2
    assert run("doctor", "--tolerance", "-1", tmp_path).exit_code == 2


def test_repair_then_graph(tmp_path):
    write_geojson(fixtures.corner_gap()[0], tmp_path / "d.geojson")
    r = run("repair", tmp_path / "d.geojson", tmp_path / "fixed.geojson", "--log", tmp_path / "act.jsonl")
    assert r.exit_code == 0, r.output
    assert any(json.loads(l)["action"] == "fill_gap" for l in (tmp_path / "act.jsonl").read_text().splitlines())
    assert run("doctor", tmp_path / "fixed.geojson").exit_code == 0
    r = run("graph", tmp_path / "fixed.geojson", tmp_path / "g.json")
    assert r.exit_code == 0, r.output
    assert len(read_graph_json(tmp_path / "g.json")) == len(fixtures.corner_gap()[0])


def test_graph_refuses_dirty(tmp_path):
    write_geojson(fixtures.sliver_overlap()[0], tmp_path / "d.geojson")
    r = run("graph", tmp_path / "d.geojson", tmp_path / "g.json")
    assert r.exit_code == 1 and "NotClean" in r.output


# build

def test_build_toy(tmp_path):
    cfg = synthetic.write_toy_state(tmp_path)
    r = run("build", cfg, "-o", tmp_path / "out.json")
    assert r.exit_code == 0, r.output
    g = read_graph_json(tmp_path / "out.json")
    assert len(g) == 36 and "G18GOVD" in g.node_attrs(g.nodes[0])


def test_build_config_error_names_key(tmp_path):
    cfg = synthetic.write_toy_state(tmp_path)
    text = cfg.read_text().replace("[census]", "[census_data]")
    cfg.write_text(text)
    r = run("build", cfg)
    assert r.exit_code == 1 and "census" in r.output


def test_build_population_not_conserved(tmp_path):
    cfg = synthetic.write_toy_state(tmp_path)
    blocks = synthetic.toy_blocks()
    far = Unit("BX", geom.box(0, 0, 1000, 1000), {"TOTPOP": 7, "VAP": 5})
    write_geojson(GeoLayer(list(blocks) + [far], synthetic.TOY_CRS), tmp_path / "blocks.geojson")
    r = run("build", cfg)
    assert r.exit_code == 1 and "population not conserved" in r.output


# chain / analyze

def chain_args(graph, out, seed=7, steps=100, *extra):
    return ["chain", graph, "--seed", seed, "--steps", steps, "--election", "G18GOVD:G18GOVR", "-o", out, *extra]


def test_chain_deterministic(toy_state, tmp_path):
    graph = toy_state[0] / "toy_graph.json"
    a = run(*chain_args(graph, tmp_path / "a"))
    b = run(*chain_args(graph, tmp_path / "b"))
    assert a.exit_code == 0 and b.exit_code == 0, a.output
    assert (tmp_path / "a" / "seats.csv").read_bytes() == (tmp_path / "b" / "seats.csv").read_bytes()
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()
    rows = list(csv.reader(open(tmp_path / "a" / "seats.csv")))
    assert rows[0] == ["chain", "step", "G18GOV"] and len(rows) == 101


def test_chain_requires_seed(toy_state, tmp_path):
    r = run("chain", toy_state[0] / "toy_graph.json", "--steps", 5)
    assert r.exit_code == 2 and "--seed" in r.output


def test_chain_bad_election_flag(toy_state, tmp_path):
    r = run("chain", toy_state[0] / "toy_graph.json", "--seed", 1, "--election", "G18GOVD")
    assert r.exit_code == 2


def test_chain_epsilon_zero_self_loops(tmp_path):
    # 9-node path, odd population: no exactly balanced split exists
    from districtkit.graph import DualGraph
    from districtkit.io import write_graph_json

    attrs = [{"TOTPOP": 1, "CD": "a" if i < 4 else "b", "D": i, "R": 1} for i in range(9)]
    write_graph_json(DualGraph(list(range(9)), attrs, [(i, i + 1, 1.0) for i in range(8)]), tmp_path / "p.json")
    r = run("chain", tmp_path / "p.json", "--seed", 1, "--steps", 20, "--epsilon", 0, "-o", tmp_path)
    assert r.exit_code == 0, r.output
    s = json.loads((tmp_path / "summary.json").read_text())
    assert s["chains"][0]["self_loops"] == 20 and "20 self-loops" in r.output


def test_chain_invalid_seed_plan(toy_state, tmp_path):
    r = run("chain", toy_state[0] / "toy_graph.json", "--seed", 1, "--district-col", "NOPE", "-o", tmp_path)
    assert r.exit_code == 1


def test_chain_parallel_merges(toy_state, tmp_path):
    graph = toy_state[0] / "toy_graph.json"
    r = run(*chain_args(graph, tmp_path / "p", 3, 50, "--parallel-chains", 2))
    assert r.exit_code == 0, r.output
    s = json.loads((tmp_path / "p" / "summary.json").read_text())
    assert [c["seed"] for c in s["chains"]] == [3, 4]
    assert sum(s["elections"]["G18GOV"]["histogram"].values()) == 100
    # each chain equals the corresponding single run
    run(*chain_args(graph, tmp_path / "s", 4, 50))
    par = [row[2] for row in csv.reader(open(tmp_path / "p" / "seats.csv")) if row[0] == "1"]
    one = [row[2] for row in csv.reader(open(tmp_path / "s" / "seats.csv"))][1:]
    assert par == one


def test_chain_snapshots(toy_state, tmp_path):
    from districtkit.io import read_snapshots

    r = run(*chain_args(toy_state[0] / "toy_graph.json", tmp_path, 1, 30, "--snapshot-every", 10))
    assert r.exit_code == 0, r.output
    nodes, rows = read_snapshots(tmp_path / "snapshots.rle")
    assert [s for s, _ in rows] == [0, 10, 20, 30] and len(nodes) == 36


def seat_file(tmp_path, counts):
    p = tmp_path / "seats.csv"
    p.write_text("chain,step,GOV\n" + "".join(f"0,{i + 1},{c}\n" for i, c in enumerate(counts)))
    return p


def test_analyze_rank(tmp_path):
    r = run("analyze", seat_file(tmp_path, [5, 6, 6, 7]), "--enacted", 5)
    assert r.exit_code == 0 and "rank 0.125" in r.output
    rows = list(csv.reader(open(tmp_path / "seats_hist.csv")))
    assert rows == [["seat", "frequency", "marker"], ["5", "1", "enacted"], ["6", "2", "-"], ["7", "1", "-"]]
    assert (tmp_path / "seats_hist.svg").exists()


def test_analyze_without_enacted(tmp_path):
    r = run("analyze", seat_file(tmp_path, [1, 2]), "--csv", tmp_path / "h.csv")
    assert r.exit_code == 0 and "rank" not in r.output
    assert all(row[2] in ("marker", "-") for row in csv.reader(open(tmp_path / "h.csv")))
    assert not (tmp_path / "seats_rank.csv").exists()


def test_analyze_malformed_and_empty(tmp_path):
    p = tmp_path / "bad.csv"
    p.write_text("chain,step,GOV\n0,1,3\n0,2\n")
    r = run("analyze", p)
    assert r.exit_code == 1 and "line 3" in r.output
    p.write_text("chain,step,GOV\n")
    r = run("analyze", p)
    assert r.exit_code == 1 and "Empty" in r.output
