import pytest
from hypothesis import given, settings, strategies as st

from districtkit import geom
from districtkit.errors import DisconnectsGraph, NotClean
from districtkit.graph import DualGraph, build_graph, connected_components, mend_small_rook
from districtkit.layer import GeoLayer, Unit
from districtkit.synthetic import grid_layer

TOL = 1e-9


def grid(rows, cols):
    return grid_layer(rows, cols, 1.0, attrs=lambda r, c: {"TOTPOP": 1})


def test_2x2_rook():
    g = build_graph(grid(2, 2), area_tol=TOL)
    assert len(g) == 4 and g.n_edges == 4
    assert all(p == pytest.approx(1.0) for _, _, p in g.edges)
    assert all(g.node_attrs(n)["boundary_node"] for n in g.nodes)
    assert {frozenset(e) for e in g.queen_contacts} == {frozenset(("0", "3")), frozenset(("1", "2"))}


def test_2x2_queen():
    g = build_graph(grid(2, 2), adjacency="queen", area_tol=TOL)
    assert g.n_edges == 6
    diag = [(u, v, p) for u, v, p in g.edges if p == 0.0]
    assert {frozenset((u, v)) for u, v, _ in diag} == {frozenset(("0", "3")), frozenset(("1", "2"))}


def test_10x10_counts():
    g = build_graph(grid(10, 10), area_tol=TOL)
    assert g.n_edges == 2 * 10 * 9
    assert g.degree("55") == 4
    assert not g.node_attrs("55")["boundary_node"]
    assert g.node_attrs("0")["boundary_perim"] == pytest.approx(2.0)
    total_boundary = sum(g.node_attrs(n)["boundary_perim"] for n in g.nodes)
    assert total_boundary == pytest.approx(40.0, rel=1e-6)


def test_symmetry():
    g = build_graph(grid(4, 5), area_tol=TOL)
    for u in g.nodes:
        for v in g.neighbors(u):
            assert u in g.neighbors(v)
            assert g.shared_perim(u, v) == g.shared_perim(v, u)


def test_dirty_layer_rejected():
    layer = GeoLayer([Unit("a", geom.box(0, 0, 1.1, 1), {}), Unit("b", geom.box(1, 0, 2, 1), {})])
    with pytest.raises(NotClean):
        build_graph(layer, area_tol=TOL)


def test_mend_identity():
    g = build_graph(grid(3, 3), area_tol=TOL)
    assert mend_small_rook(g, 1e-3) is g


def _tiny_edge_layer():
    # two squares touching along 1e-7 plus a third sharing full edges with both
    return GeoLayer([
        Unit("a", geom.box(0, 0, 1, 1), {}),
        Unit("b", geom.box(1, 1 - 1e-7, 2, 2 - 1e-7), {}),
        Unit("c", geom.polygon([(0, 1), (1, 1), (1, 2 - 1e-7), (2, 2 - 1e-7), (2, 3), (0, 3)]), {}),
    ])


def test_mend_removes_tiny_edge():
    layer = _tiny_edge_layer()
    # b and c do not tile exactly; only adjacency matters here
    g = build_graph(layer, area_tol=TOL, snap_tol=1e-9, check=False)
    assert g.has_edge("a", "b") and g.shared_perim("a", "b") == pytest.approx(1e-7)
    m = mend_small_rook(g, 1e-3)
    assert not m.has_edge("a", "b")
    assert m.demoted == [("a", "b", pytest.approx(1e-7))]
    assert m.n_edges == g.n_edges - 1


def test_mend_bridge_disconnects():
    g = DualGraph(["a", "b", "c"], [{}, {}, {}], [("a", "b", 5.0), ("b", "c", 1e-7)])
    with pytest.raises(DisconnectsGraph) as exc:
        mend_small_rook(g, 1.0)
    assert exc.value.edges == [("b", "c")]
    kept = mend_small_rook(g, 1.0, keep=[("b", "c")])
    assert kept.n_edges == 2


@settings(max_examples=30, deadline=None)
@given(st.lists(st.floats(0.01, 10.0), min_size=12, max_size=12), st.floats(0.0, 5.0), st.floats(0.0, 5.0))
def test_mend_monotone_and_idempotent(perims, t1, t2):
    # wheel graph; spokes are kept so demotion can never disconnect it
    nodes = list(range(7))
    edges = [(0, i, perims[i - 1]) for i in range(1, 7)] + [(i, i % 6 + 1, perims[5 + i]) for i in range(1, 7)]
    g = DualGraph(nodes, [{}] * 7, edges)
    spokes = [(0, i) for i in range(1, 7)]
    lo, hi = sorted((t1, t2))
    a = mend_small_rook(g, lo, keep=spokes)
    b = mend_small_rook(g, hi, keep=spokes)
    assert {frozenset(e[:2]) for e in b.edges} <= {frozenset(e[:2]) for e in a.edges}
    again = mend_small_rook(a, lo, keep=spokes)
    assert again.edges == a.edges


def test_components():
    g = build_graph(grid(10, 10), area_tol=TOL)
    comps = connected_components(g)
    assert len(comps) == 1 and len(comps[0]) == 100
    two = GeoLayer([Unit("a", geom.box(0, 0, 1, 1), {}), Unit("b", geom.box(5, 0, 6, 1), {})])
    assert connected_components(build_graph(two, area_tol=TOL)) == [{"a"}, {"b"}]


def test_l_shaped_district_connected():
    g = build_graph(grid(4, 4), area_tol=TOL)
    ell = ["0", "4", "8", "12", "13", "14"]  # left column plus top row
    assert len(connected_components(g, ell)) == 1
    assert len(connected_components(g, ["0", "5"])) == 2
