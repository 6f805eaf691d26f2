import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from districtkit import geom, synthetic
from districtkit.assign import (
    Assignment, aggregate, assign_by_largest_overlap, disaggregate, nest_in_counties, prorate,
)
from districtkit.errors import CrsMismatch, NegativeWeight, PopulationNotConserved
from districtkit.layer import GeoLayer, Unit
from districtkit.repair import doctor

import oracles

TOL = 1e-9


def layer_from_rings(rings, prefix, attrs=None):
    return GeoLayer([Unit(f"{prefix}{k}", geom.polygon(r), attrs(k) if attrs else {}) for k, r in enumerate(rings)])


def random_layout(seed, n_blocks=(4, 3), n_precincts=4):
    rng = np.random.default_rng(seed)
    box = (0.0, 0.0, 10.0, 10.0)
    blocks = oracles.rectilinear_blocks(rng, n_blocks[0], n_blocks[1], box)
    seeds = rng.uniform(0, 10, (n_precincts, 2)).tolist()
    cells = [c for c in oracles.voronoi_cells(seeds, box) if len(c) >= 3]
    return blocks, cells


def test_nested_source():
    tgt = GeoLayer([Unit("T1", geom.box(0, 0, 2, 2), {}), Unit("T2", geom.box(2, 0, 4, 2), {})])
    src = GeoLayer([Unit("s", geom.box(2.5, 0.5, 3, 1), {})])
    assert assign_by_largest_overlap(src, tgt).mapping == {"s": "T2"}


def test_sixty_forty():
    tgt = GeoLayer([Unit("A", geom.box(0, 0, 1, 1), {}), Unit("B", geom.box(1, 0, 2, 1), {})])
    src = GeoLayer([Unit("s", geom.box(0.4, 0, 1.4, 1), {})])
    assert assign_by_largest_overlap(src, tgt).mapping == {"s": "A"}


def test_tie_goes_to_smallest_id():
    tgt = GeoLayer([Unit("B", geom.box(1, 0, 2, 1), {}), Unit("A", geom.box(0, 0, 1, 1), {})])
    src = GeoLayer([Unit("s", geom.box(0.5, 0, 1.5, 1), {})])
    assert assign_by_largest_overlap(src, tgt).mapping == {"s": "A"}


def test_unmatched_and_crs():
    tgt = GeoLayer([Unit("A", geom.box(0, 0, 1, 1), {})])
    src = GeoLayer([Unit("far", geom.box(5, 5, 6, 6), {}), Unit("touch", geom.box(1, 0, 2, 1), {})])
    a = assign_by_largest_overlap(src, tgt)
    assert a.mapping == {} and a.unmatched == ["far", "touch"]
    with pytest.raises(CrsMismatch):
        assign_by_largest_overlap(GeoLayer(list(src), "utm:17N"), tgt)


@pytest.mark.parametrize("seed", range(10))
def test_largest_overlap_matches_brute_force(seed):
    blocks, cells = random_layout(seed)
    src, tgt = layer_from_rings(blocks, "b"), layer_from_rings(cells, "p")
    expected = oracles.argmax_overlap(blocks, cells, tgt.ids)
    got = assign_by_largest_overlap(src, tgt)
    assert [got.mapping.get(b) for b in src.ids] == expected


def test_self_assignment_identity():
    layer = synthetic.toy_precincts_2018()
    a = assign_by_largest_overlap(layer, layer)
    assert a.mapping == {k: k for k in layer.ids} and a.unmatched == []


def test_aggregate_sum_and_empty():
    blocks = GeoLayer([Unit(f"b{k}", geom.box(k, 0, k + 1, 1), {"POP": p}) for k, p in enumerate([10, 20, 30, 40])])
    a = Assignment({b: "P" for b in blocks.ids}, [], ["P"])
    t = aggregate(blocks, a, ["POP"], strict=True)
    assert t.values == {"P": {"POP": 100}} and isinstance(t.values["P"]["POP"], int)
    assert aggregate(blocks, a, []).values == {"P": {}}


@settings(max_examples=30, deadline=None)
@given(st.lists(st.integers(0, 10_000), min_size=1, max_size=40), st.integers(1, 5), st.randoms(use_true_random=False))
def test_aggregate_matches_group_by(pops, n_targets, rnd):
    blocks = GeoLayer([Unit(f"b{k}", geom.box(k, 0, k + 1, 1), {"POP": p}) for k, p in enumerate(pops)])
    targets = [f"T{k}" for k in range(n_targets)]
    mapping = {b: rnd.choice(targets) for b in blocks.ids}
    t = aggregate(blocks, Assignment(mapping, [], targets), ["POP"], strict=True)
    for tid in targets:
        assert t.values[tid]["POP"] == sum(p for b, p in zip(blocks.ids, pops) if mapping[b] == tid)


def test_strict_orphaned_block():
    blocks = synthetic.toy_blocks()
    precincts = synthetic.toy_precincts_2018()
    orphan = blocks.ids[5]
    moved = blocks.with_geometries({orphan: geom.box(0, 0, 10, 10)})
    a = assign_by_largest_overlap(moved, precincts)
    assert a.unmatched == [orphan]
    loose = aggregate(moved, a, ["TOTPOP"])
    assert loose.unallocated["TOTPOP"] == blocks[orphan].attributes["TOTPOP"]
    with pytest.raises(PopulationNotConserved, match="population not conserved"):
        aggregate(moved, a, ["TOTPOP"], strict=True)


def _blocks(weights, areas):
    x = 0.0
    units = []
    for k, (w, a) in enumerate(zip(weights, areas)):
        units.append(Unit(f"b{k}", geom.box(x, 0, x + a, 1), {"W": w}))
        x += a
    return GeoLayer(units)


def test_prorate_weighted():
    blocks = _blocks([30, 70], [1, 1])
    src = GeoLayer([Unit("s", geom.box(0, 0, 2, 1), {"V": 100})])
    tgt = GeoLayer([Unit("T", geom.box(-1, -1, 3, 2), {})])
    on_blocks = disaggregate(src, ["V"], blocks, "W")
    assert on_blocks.values == {"b0": {"V": 30.0}, "b1": {"V": 70.0}}
    assert prorate(src, ["V"], blocks, "W", tgt).values == {"T": {"V": 100.0}}


def test_prorate_area_fallback():
    blocks = _blocks([0, 0], [1, 3])
    src = GeoLayer([Unit("s", geom.box(0, 0, 4, 1), {"V": 100})])
    on_blocks = disaggregate(src, ["V"], blocks, "W")
    assert on_blocks.column("V") == {"b0": 25.0, "b1": 75.0}


def test_negative_weight():
    blocks = _blocks([1, -1], [1, 1])
    src = GeoLayer([Unit("s", geom.box(0, 0, 2, 1), {"V": 1})])
    with pytest.raises(NegativeWeight):
        disaggregate(src, ["V"], blocks, "W")


def brute_prorate(src, cols, blocks, weight_col, tgt):
    ring = lambda g: list(g.geoms[0].exterior.coords)[:-1]
    b_rings = [ring(u.geometry) for u in blocks]
    b_src = oracles.argmax_overlap(b_rings, [ring(u.geometry) for u in src], src.ids)
    b_tgt = oracles.argmax_overlap(b_rings, [ring(u.geometry) for u in tgt], tgt.ids)
    w = blocks.column(weight_col)
    out = {t: {c: 0.0 for c in cols} for t in tgt.ids}
    for s in src.ids:
        members = [b for b, ss in zip(blocks.ids, b_src) if ss == s]
        total = sum(w[b] for b in members)
        for b in members:
            t = b_tgt[blocks.ids.index(b)]
            for c in cols:
                out[t][c] += src[s].attributes[c] * w[b] / total
    return out


def test_prorate_shifted_vintages():
    blocks = synthetic.toy_blocks()
    src = synthetic.toy_precincts_2016()
    tgt = synthetic.toy_precincts_2018()
    cols = ["G16PREDCLI", "G16PRERTRU", "G16PRELJOH"]
    t = prorate(src, cols, blocks, "TOTPOP", tgt)
    expected = brute_prorate(src, cols, blocks, "TOTPOP", tgt)
    for c in cols:
        total = sum(src.column(c).values())
        assert math.isclose(t.total(c) + t.unallocated[c], total, rel_tol=1e-6)
        for tid in tgt.ids:
            assert t.values[tid][c] == pytest.approx(expected[tid][c], rel=1e-9, abs=1e-9)


def test_prorate_scale_equivariant():
    blocks = synthetic.toy_blocks()
    src = synthetic.toy_precincts_2016()
    tgt = synthetic.toy_precincts_2018()
    scaled = src.with_columns({"X": {k: 3 * v for k, v in src.column("G16PREDCLI").items()}})
    t = prorate(scaled, ["G16PREDCLI", "X"], blocks, "TOTPOP", tgt)
    for row in t.values.values():
        assert row["X"] == pytest.approx(3 * row["G16PREDCLI"], rel=1e-12)


# county nesting

def counties_2():
    return GeoLayer([Unit("L", geom.box(0, 0, 4, 2), {"COUNTYFP": "001"}),
                     Unit("R", geom.box(4, 0, 8, 2), {"COUNTYFP": "003"})])


def precincts_8(spill=0.0):
    xs = [0, 2, 4 + spill, 6, 8]
    units = []
    for r in range(2):
        for c in range(4):
            x0, x1 = xs[c], xs[c + 1]
            if r == 1:
                x0, x1 = (4 if c == 2 else x0), (4 if c == 1 else x1)
            units.append(Unit(f"p{r}{c}", geom.box(x0, r, x1, r + 1), {}))
    return GeoLayer(units)


def test_nest_identity():
    p = precincts_8()
    out = nest_in_counties(p, counties_2())
    assert [u.geometry for u in out] == [u.geometry for u in p]
    assert out.column("COUNTYFP") == {"p00": "001", "p01": "001", "p02": "003", "p03": "003",
                                      "p10": "001", "p11": "001", "p12": "003", "p13": "003"}


def test_nest_spill_moves_to_neighbor():
    p = precincts_8(spill=0.1)
    assert doctor(p, TOL).clean
    actions = []
    out = nest_in_counties(p, counties_2(), actions=actions)
    assert [(a["from"], a["to"]) for a in actions] == [("p01", "p02")]
    assert geom.area(out["p01"].geometry) == pytest.approx(2.0)
    assert geom.area(out["p02"].geometry) == pytest.approx(2.0)
    assert doctor(out, TOL).clean
    assert geom.area(geom.union(out.geometries)) == pytest.approx(geom.area(geom.union(p.geometries)), rel=1e-9)
    counties = counties_2()
    for u in out:
        for c in counties:
            if c.attributes["COUNTYFP"] != u.attributes["COUNTYFP"]:
                assert u.geometry.intersection(c.geometry).area < 1e-9
    again = nest_in_counties(out, counties)
    assert [u.geometry for u in again] == [u.geometry for u in out]
