"""Synthetic layers: rectangular grids and a small four-district toy state.

The toy state mirrors the usual textbook illustration: a square state cut
into four districts, with blocks nested in precincts, two election
vintages on different precinct lines, two counties and three district maps
(one of them deliberately dirty so the pipeline has to repair it).
"""
from __future__ import annotations

from pathlib import Path
from typing import Callable

from . import geom
from .layer import GeoLayer, Unit

TOY_CRS = "utm:17N"
# state origin, in UTM meters, so that coordinates look like real data
X0, Y0 = 500_000.0, 4_400_000.0


def grid_layer(
    rows: int,
    cols: int,
    size: float = 1.0,
    origin: tuple[float, float] = (0.0, 0.0),
    prefix: str = "",
    attrs: Callable[[int, int], dict] | None = None,
    crs_tag: str = "unknown",
) -> GeoLayer:
    """A ``rows`` x ``cols`` tiling by squares; ids are ``f"{prefix}{r*cols+c}"`` in row-major order."""
    ox, oy = origin
    units = []
    for r in range(rows):
        for c in range(cols):
            g = geom.box(ox + c * size, oy + r * size, ox + (c + 1) * size, oy + (r + 1) * size)
            units.append(Unit(f"{prefix}{r * cols + c}", g, attrs(r, c) if attrs else {}))
    return GeoLayer(units, crs_tag)


def _block_pop(r: int, c: int) -> int:
    return 20 + (7 * r + 3 * c) % 11


def _dem_share(x: float, y: float) -> float:
    # Democratic support rises toward the north-west corner; values in [0.3, 0.7]
    return 0.3 + 0.4 * ((12 - x) + y) / 24


def toy_blocks() -> GeoLayer:
    """12 x 12 blocks of 1 km, integer populations."""
    def attrs(r, c):
        pop = _block_pop(r, c)
        return {"TOTPOP": pop, "VAP": int(pop * 0.75)}
    return grid_layer(12, 12, 1000.0, (X0, Y0), "B", attrs, TOY_CRS)


def _votes(x, y, total):
    d = round(total * _dem_share(x, y))
    return d, total - d


def toy_precincts_2018() -> GeoLayer:
    """6 x 6 precincts of 2 km (exactly 4 blocks each), VEST-style 2018 columns."""
    units = []
    for r in range(6):
        for c in range(6):
            cx, cy = 2 * c + 1, 2 * r + 1
            d, rr = _votes(cx, cy, 40 + (5 * r + 3 * c) % 13)
            ds, rs = _votes(cx + 1.5, cy - 1.0, 38 + (3 * r + 7 * c) % 11)
            g = geom.box(X0 + 2000 * c, Y0 + 2000 * r, X0 + 2000 * (c + 1), Y0 + 2000 * (r + 1))
            units.append(Unit(f"P18-{r}{c}", g, {
                "NAME": f"Precinct {r}{c}",
                "G18GOVDSMI": d, "G18GOVRJON": rr,
                "G18USSDLEE": ds, "G18USSRKIM": rs,
            }))
    return GeoLayer(units, TOY_CRS)


def toy_precincts_2016() -> GeoLayer:
    """2016 precincts on lines shifted by 1 km: a 7 x 7 grid with half-width edge cells."""
    edges = [0, 1, 3, 5, 7, 9, 11, 12]
    units = []
    for r in range(7):
        for c in range(7):
            x0, x1, y0, y1 = edges[c], edges[c + 1], edges[r], edges[r + 1]
            cx, cy = (x0 + x1) / 2, (y0 + y1) / 2
            d, rr = _votes(cx, cy, 10 * (x1 - x0) * (y1 - y0) + (r * c) % 7)
            g = geom.box(X0 + 1000 * x0, Y0 + 1000 * y0, X0 + 1000 * x1, Y0 + 1000 * y1)
            units.append(Unit(f"P16-{r}{c}", g, {"G16PREDCLI": d, "G16PRERTRU": rr, "G16PRELJOH": (r + c) % 3}))
    return GeoLayer(units, TOY_CRS)


def toy_counties() -> GeoLayer:
    return GeoLayer([
        Unit("001", geom.box(X0, Y0, X0 + 6000, Y0 + 12000), {"COUNTYFP": "001", "NAME": "West"}),
        Unit("003", geom.box(X0 + 6000, Y0, X0 + 12000, Y0 + 12000), {"COUNTYFP": "003", "NAME": "East"}),
    ], TOY_CRS)


def toy_congress() -> GeoLayer:
    """Four 6 km x 6 km quadrants, the enacted seed plan."""
    units = []
    for i, (c, r) in enumerate([(0, 0), (1, 0), (0, 1), (1, 1)]):
        g = geom.box(X0 + 6000 * c, Y0 + 6000 * r, X0 + 6000 * (c + 1), Y0 + 6000 * (r + 1))
        units.append(Unit(f"CD{i + 1}", g, {"CONG_DIST": f"0{i + 1}"}))
    return GeoLayer(units, TOY_CRS)


def toy_senate(dirty: bool = True) -> GeoLayer:
    """Four 3 km wide vertical strips; when ``dirty`` the boundaries carry a sliver overlap and a gap."""
    units = []
    for i in range(4):
        x0, x1 = X0 + 3000 * i, X0 + 3000 * (i + 1)
        if dirty and i == 0:
            x1 += 15.0  # 15 m sliver overlapping district 2
        g = geom.box(x0, Y0, x1, Y0 + 12000)
        if dirty and i == 2:
            # 10 m x 6 km gap against district 4, enclosed so it is an interior hole
            g = geom.difference(g, geom.box(x1 - 10.0, Y0 + 3000, x1, Y0 + 9000))
        units.append(Unit(f"SD{i + 1}", g, {"DISTRICTN": str(i + 1)}))
    return GeoLayer(units, TOY_CRS)


def toy_house() -> GeoLayer:
    """Eight strips of 12 km x 1.5 km (horizontal)."""
    return GeoLayer([
        Unit(f"HD{i + 1}", geom.box(X0, Y0 + 1500 * i, X0 + 12000, Y0 + 1500 * (i + 1)), {"DISTRICT": f"{i + 1:03d}"})
        for i in range(8)
    ], TOY_CRS)


TOY_CONFIG = """\
# Toy four-district state
[state]
name = "Toy"
output = "toy_graph.json"
log = "toy_build"

[tolerances]
snap_grid = 1e-6
area_tol = 1.0
min_perim = 1.0

[census]
path = "blocks.geojson"
columns = ["TOTPOP", "VAP"]
weight = "TOTPOP"
strict_population = true

[counties]
path = "counties.geojson"
column = "COUNTYFP"

[base_election]
path = "precincts_2018.geojson"
type = "G"
year = 2018
races = ["GOV", "USS"]

[[elections]]
path = "precincts_2016.geojson"
type = "G"
year = 2016
races = ["PRE"]

[[districts]]
path = "congress.geojson"
kind = "CD"

[[districts]]
path = "senate.geojson"
kind = "SEND"

[[districts]]
path = "house.geojson"
kind = "HDIST"
"""


def write_toy_state(directory: str | Path, dirty_senate: bool = True) -> Path:
    """Write the toy state's layers and build config into ``directory``; return the config path."""
    from .io.geojson import write_geojson

    d = Path(directory)
    d.mkdir(parents=True, exist_ok=True)
    write_geojson(toy_blocks(), d / "blocks.geojson")
    write_geojson(toy_counties(), d / "counties.geojson")
    write_geojson(toy_precincts_2018(), d / "precincts_2018.geojson")
    write_geojson(toy_precincts_2016(), d / "precincts_2016.geojson")
    write_geojson(toy_congress(), d / "congress.geojson")
    write_geojson(toy_senate(dirty_senate), d / "senate.geojson")
    write_geojson(toy_house(), d / "house.geojson")
    cfg = d / "toy.toml"
    cfg.write_text(TOY_CONFIG)
    return cfg
