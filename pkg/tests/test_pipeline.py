import json

import pytest

from districtkit import geom, schema, synthetic
from districtkit.errors import (
    AmbiguousDistrictColumn, BuildError, ConfigError, MissingDistrictColumn, NonStatewideRace,
    PopulationNotConserved, RepairFailed, UnassignedPrecinct,
)
from districtkit.io import read_graph_json, write_geojson
from districtkit.layer import GeoLayer, Unit
from districtkit.pipeline import (
    ElectionSpec, add_districts, add_election, add_population, build_state, election_columns,
    load_config, parse_config, rename_district_column, run_build,
)

try:
    import tomllib
except ImportError:
    import tomli as tomllib


def one(attrs):
    return GeoLayer([Unit("d1", geom.box(0, 0, 1, 1), attrs)])


# district columns

def test_rename_districtn_to_send():
    out = rename_district_column(one({"DISTRICTN": "07"}), "SEND")
    assert out.columns == ["SEND"] and out.column("SEND") == {"d1": "7"}


def test_rename_cong_dist_to_cd():
    out = rename_district_column(one({"CONG_DIST": 3.0, "NAME": "x"}), "CD")
    assert out.column("CD") == {"d1": "3"} and "CONG_DIST" not in out.columns


def test_rename_ambiguous_and_override():
    layer = one({"DISTRICT": "1", "ID": "9"})
    with pytest.raises(AmbiguousDistrictColumn):
        rename_district_column(layer, "HDIST")
    assert rename_district_column(layer, "HDIST", override="ID").column("HDIST") == {"d1": "9"}


def test_rename_missing():
    with pytest.raises(MissingDistrictColumn):
        rename_district_column(one({"FOO": 1}), "CD")


# election columns

def test_vest_columns_renamed_and_summed():
    layer = one({"G18GOVDSMI": 10, "G18GOVRJON": 7, "G18GOVOWR1": 1, "G18GOVOWR2": 2, "G16PREDCLI": 5, "NAME": "p"})
    out = election_columns(layer, "G", 2018, ["GOV"])
    assert out.columns == ["G18GOVD", "G18GOVR", "G18GOVO"]
    assert out["d1"].attributes == {"G18GOVD": 10, "G18GOVR": 7, "G18GOVO": 3}
    assert schema.check_columns(out.columns) == []


def test_non_statewide_race_rejected():
    with pytest.raises(NonStatewideRace, match="statewide"):
        election_columns(one({"G18USHDSMI": 1}), "G", 2018, ["USH"])


def test_election_identical_geometry_copied():
    base = synthetic.toy_precincts_2018()
    spec = ElectionSpec(None, "G", 2018, ["GOV"])
    out = add_election(base, base, synthetic.toy_blocks(), spec)
    assert out.column("G18GOVD") == base.column("G18GOVDSMI")


def test_election_shifted_conserved():
    base = synthetic.toy_precincts_2018()
    e16 = synthetic.toy_precincts_2016()
    out = add_election(base, e16, synthetic.toy_blocks(), ElectionSpec(None, "G", 2016, ["PRE"]))
    for raw, canon in [("G16PREDCLI", "G16PRED"), ("G16PRERTRU", "G16PRER")]:
        expected = sum(e16.column(raw).values())
        assert sum(out.column(canon).values()) == pytest.approx(expected, rel=1e-6)


# districts and population

def test_districts_nested_and_split():
    base = GeoLayer([Unit("p1", geom.box(0, 0, 1, 1), {}), Unit("p2", geom.box(1, 0, 2, 1), {})])
    d = GeoLayer([Unit("A", geom.box(0, 0, 1.45, 1), {"DISTRICT": "001"}),
                  Unit("B", geom.box(1.45, 0, 3, 1), {"DISTRICT": "002"})])
    out = add_districts(base, d, "HDIST")
    # p2 is 45/55 split between A and B
    assert out.column("HDIST") == {"p1": "1", "p2": "2"}
    far = GeoLayer([Unit("p3", geom.box(9, 9, 10, 10), {})])
    with pytest.raises(UnassignedPrecinct):
        add_districts(far, d, "HDIST")


def test_population_group_by_oracle():
    blocks = synthetic.grid_layer(10, 10, 1.0, attrs=lambda r, c: {"TOTPOP": 3 * r + c, "VAP": r})
    precincts = synthetic.grid_layer(5, 5, 2.0, prefix="P")
    out = add_population(precincts, blocks, ["TOTPOP", "VAP"])
    expected = {}
    for r in range(10):
        for c in range(10):
            key = f"P{(r // 2) * 5 + c // 2}"
            expected[key] = expected.get(key, 0) + 3 * r + c
    assert out.column("TOTPOP") == expected
    assert sum(out.column("TOTPOP").values()) == sum(blocks.column("TOTPOP").values())


def test_population_orphan_strict():
    blocks = synthetic.grid_layer(2, 2, 1.0, attrs=lambda r, c: {"TOTPOP": 5})
    blocks = blocks.with_geometries({"3": geom.box(50, 50, 51, 51)})
    precincts = GeoLayer([Unit("P", geom.box(0, 0, 2, 2), {})])
    with pytest.raises(PopulationNotConserved) as exc:
        add_population(precincts, blocks, ["TOTPOP"])
    assert exc.value.lost_units == ["3"] and "3" in str(exc.value)
    assert add_population(precincts, blocks, ["TOTPOP"], strict=False).column("TOTPOP") == {"P": 15}


# config

def toy_doc():
    return tomllib.loads(synthetic.TOY_CONFIG)


def test_config_parses():
    cfg = parse_config(toy_doc())
    assert cfg.name == "Toy" and [d.kind for d in cfg.districts] == ["CD", "SEND", "HDIST"]
    assert cfg.census_columns == ["TOTPOP", "VAP"] and cfg.strict_population


@pytest.mark.parametrize("mutate,key", [
    (lambda d: d["census"].pop("columns"), "census.columns"),
    (lambda d: d["base_election"].update(year="2018"), "base_election.year"),
    (lambda d: d["districts"][1].update(kind="CD"), "districts"),
    (lambda d: d["districts"][0].update(kind="XX"), "districts[0].kind"),
    (lambda d: d["census"].update(columns=["POP"]), "census.columns"),
    (lambda d: d["tolerances"].update(area_tol="big"), "tolerances.area_tol"),
])
def test_config_errors_name_key(mutate, key):
    doc = toy_doc()
    mutate(doc)
    with pytest.raises(ConfigError, match=key.replace("[", r"\[").replace("]", r"\]")):
        parse_config(doc)


def test_config_bad_toml(tmp_path):
    (tmp_path / "bad.toml").write_text("[state\nname=")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.toml")


# end to end

@pytest.fixture(scope="module")
def toy_build(tmp_path_factory):
    d = tmp_path_factory.mktemp("toy")
    cfg = synthetic.write_toy_state(d)
    return d, cfg, run_build(cfg)


def test_toy_build_columns(toy_build):
    d, _, result = toy_build
    g = result.graph
    assert len(g) == 36
    expected = {"TOTPOP", "VAP", "G18GOVD", "G18GOVR", "G18USSD", "G18USSR", "G16PRED", "G16PRER", "G16PREL",
                "CD", "SEND", "HDIST", "COUNTYFP", "boundary_node", "boundary_perim"}
    for n in g.nodes:
        assert set(g.node_attrs(n)) == expected
    assert sum(g.column("TOTPOP")) == sum(synthetic.toy_blocks().column("TOTPOP").values())
    assert sorted(set(g.column("CD"))) == ["1", "2", "3", "4"]
    assert (d / "toy_graph.json").exists() and (d / "toy_build.txt").exists()
    entries = json.loads((d / "toy_build.json").read_text())
    assert any(e["action"] == "rename_column" and e["to"] == "G18GOVD" for e in entries)


def test_toy_dirty_senate_repaired_and_logged(toy_build):
    _, _, result = toy_build
    acts = [(e["action"], e["layer"]) for e in result.log.entries if e["stage"] == "repair"]
    assert ("resolve_overlap", "SEND") in acts and ("fill_gap", "SEND") in acts
    # senate strips are 3 precinct-halves wide; every SEND label is used
    assert sorted(set(result.graph.column("SEND"))) == ["1", "2", "3", "4"]


def test_toy_build_deterministic(toy_build, tmp_path):
    d, cfg, _ = toy_build
    run_build(cfg, output=tmp_path / "again.json", log_stem=tmp_path / "again_build")
    assert (tmp_path / "again.json").read_bytes() == (d / "toy_graph.json").read_bytes()
    g = read_graph_json(tmp_path / "again.json")
    assert g.nodes == toy_build[2].graph.nodes


def test_unicameral_single_district(tmp_path):
    synthetic.write_toy_state(tmp_path)
    doc = toy_doc()
    doc["districts"] = [{"path": "senate.geojson", "kind": "SEND"}]
    cfg = parse_config(doc, tmp_path)
    g = build_state(cfg).graph
    assert "SEND" in g.node_attrs(g.nodes[0]) and "CD" not in g.node_attrs(g.nodes[0])
    # a one-district congressional map is omitted
    write_geojson(GeoLayer([Unit("AL", geom.box(synthetic.X0, synthetic.Y0, synthetic.X0 + 12000, synthetic.Y0 + 12000),
                                 {"CONG_DIST": "0"})], synthetic.TOY_CRS), tmp_path / "atlarge.geojson")
    doc["districts"].append({"path": "atlarge.geojson", "kind": "CD"})
    result = build_state(parse_config(doc, tmp_path))
    assert "CD" not in result.graph.node_attrs(result.graph.nodes[0])
    assert any(e["action"] == "omit_column" for e in result.log.entries)


def test_unrepairable_overlap_halts(tmp_path):
    synthetic.write_toy_state(tmp_path)
    house = synthetic.toy_house()
    dup = GeoLayer(list(house) + [Unit("HD9", house["HD1"].geometry, {"DISTRICT": "009"})], synthetic.TOY_CRS)
    write_geojson(dup, tmp_path / "house.geojson")
    with pytest.raises(BuildError) as exc:
        build_state(parse_config(toy_doc(), tmp_path))
    assert exc.value.stage == "repair" and isinstance(exc.value.cause, RepairFailed)


def test_orphan_block_halts_population(tmp_path):
    synthetic.write_toy_state(tmp_path)
    blocks = synthetic.toy_blocks()
    far = Unit("BX", geom.box(0, 0, 1000, 1000), {"TOTPOP": 7, "VAP": 5})
    write_geojson(GeoLayer(list(blocks) + [far], synthetic.TOY_CRS), tmp_path / "blocks.geojson")
    with pytest.raises(BuildError) as exc:
        build_state(parse_config(toy_doc(), tmp_path))
    assert exc.value.stage == "population" and isinstance(exc.value.cause, PopulationNotConserved)


def test_halt_writes_partial_log(tmp_path):
    cfg = synthetic.write_toy_state(tmp_path)
    house = synthetic.toy_house()
    dup = GeoLayer(list(house) + [Unit("HD9", house["HD1"].geometry, {"DISTRICT": "009"})], synthetic.TOY_CRS)
    write_geojson(dup, tmp_path / "house.geojson")
    with pytest.raises(BuildError):
        run_build(cfg)
    entries = json.loads((tmp_path / "toy_build.json").read_text())
    assert entries[-1]["action"] == "halt" and entries[-1]["stage"] == "repair"
    assert not (tmp_path / "toy_graph.json").exists()
