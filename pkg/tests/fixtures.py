"""Hand-constructed dirty layers shared by the repair tests and the acceptance suite.

All coordinates are meters, so the default 1 m^2 tolerance applies.
"""

from districtkit import geom
from districtkit.layer import GeoLayer, Unit
from districtkit.synthetic import grid_layer, toy_senate

S = 1000.0  # cell size


def _grid(rows=4, cols=4):
    return grid_layer(rows, cols, S, (0.0, 0.0), "u", lambda r, c: {"POP": 10 * r + c}, "utm:15N")


def _replace(layer, **geoms):
    return layer.with_geometries(geoms)


def sliver_overlap():
    layer = _grid(1, 2)
    return _replace(layer, u0=geom.box(0, 0, S + 12.0, S)), None


def corner_gap():
    layer = _grid(2, 2)
    notch = geom.polygon([(0, 0), (S, 0), (S, 800), (800, 800), (800, S), (0, S)])
    return _replace(layer, u0=notch), None


def lake_hole():
    layer = _grid(4, 4)
    lake = geom.box(1500, 1500, 2500, 2500)
    new = {uid: geom.difference(layer[uid].geometry, lake) for uid in ("u5", "u6", "u9", "u10")}
    return layer.with_geometries(new), 0.5 * geom.area(lake)


def three_way_overlap():
    xs = GeoLayer([
        Unit("x", geom.box(0, 0, 1100, 2000), {"POP": 1}),
        Unit("y", geom.box(900, 0, 2000, 1100), {"POP": 2}),
        Unit("z", geom.box(900, 900, 2000, 2000), {"POP": 3}),
    ], "utm:15N")
    return xs, None


def mixed_three_overlaps_two_gaps():
    layer = _grid(4, 4)
    g = {
        "u0": geom.box(0, 0, S + 20, S),                       # overlaps u1
        "u5": geom.box(S, S, 2 * S, 2 * S + 15),               # overlaps u9
        "u10": geom.box(2 * S - 30, 2 * S, 3 * S, 3 * S),      # overlaps u9
        "u6": geom.polygon([(2 * S, S), (3 * S, S), (3 * S, 2 * S), (2.8 * S, 2 * S), (2.8 * S, 2 * S - 10),
                            (2.2 * S, 2 * S - 10), (2.2 * S, 2 * S), (2 * S, 2 * S)]),
        "u2": geom.polygon([(2 * S, 0), (3 * S, 0), (3 * S, 0.9 * S), (2.9 * S, 0.9 * S), (2.9 * S, S),
                            (2 * S, S)]),  # corner notch where u2, u3, u6, u7 meet
    }
    return layer.with_geometries(g), None


def dirty_senate():
    return toy_senate(dirty=True), None


DIRTY_FIXTURES = {
    "sliver_overlap": sliver_overlap,
    "corner_gap": corner_gap,
    "lake_hole": lake_hole,
    "three_way_overlap": three_way_overlap,
    "three_overlaps_two_gaps": mixed_three_overlaps_two_gaps,
    "dirty_senate": dirty_senate,
}


def unfillable_exterior():
    """A 2x2 grid whose declared extent also contains a detached island nobody covers."""
    layer = _grid(2, 2)
    extent = geom.union([geom.box(0, 0, 2 * S, 2 * S), geom.box(3 * S, 0, 3.5 * S, 0.5 * S)])
    return layer, extent
