"""Moving data between layers: largest-overlap assignment, aggregation,
proration through blocks, and nesting precincts in counties."""
from __future__ import annotations

import csv
import logging
import math
from dataclasses import dataclass, field
from numbers import Real
from pathlib import Path
from typing import Iterable

import numpy as np
import shapely
from shapely.strtree import STRtree

from . import geom
from .errors import CrsMismatch, MissingColumn, NegativeWeight, PopulationNotConserved, RepairFailed
from .layer import GeoLayer

log = logging.getLogger(__name__)

# areas within this relative margin of the best count as a tie
TIE_RTOL = 1e-9


@dataclass(frozen=True)
class Assignment:
    """Source unit id -> target unit id, plus sources that overlap nothing."""

    mapping: dict
    unmatched: list
    targets: list

    def groups(self) -> dict[str, list[str]]:
        out: dict = {t: [] for t in self.targets}
        for s, t in self.mapping.items():
            out[t].append(s)
        return out

    def to_csv(self, path: str | Path) -> None:
        with open(path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["source_id", "target_id"])
            w.writerows(self.mapping.items())


@dataclass
class AttributeTable:
    """Per-target column values and the amount of each column that found no target."""

    columns: list
    values: dict
    unallocated: dict = field(default_factory=dict)
    unmatched_units: list = field(default_factory=list)

    def column(self, name: str) -> dict:
        return {k: row[name] for k, row in self.values.items()}

    def total(self, name: str) -> float:
        return _sum(row[name] for row in self.values.values())


def _sum(values: Iterable):
    vals = list(values)
    if all(isinstance(v, (int, np.integer)) and not isinstance(v, bool) for v in vals):
        return sum(int(v) for v in vals)
    return math.fsum(vals)


def check_crs(*layers: GeoLayer) -> None:
    tags = {layer.crs_tag for layer in layers}
    if len(tags) > 1:
        raise CrsMismatch(f"layers have different CRS tags: {sorted(tags)}")


def _numeric(layer: GeoLayer, col: str) -> dict:
    if col not in layer.columns:
        raise MissingColumn(f"column {col!r} not in layer (have {layer.columns})")
    vals = layer.column(col)
    for k, v in vals.items():
        if v is None:
            vals[k] = 0
        elif isinstance(v, bool) or not isinstance(v, (Real, np.number)):
            raise MissingColumn(f"column {col!r} is not numeric (unit {k!r} has {v!r})")
    return vals


def assign_by_largest_overlap(source: GeoLayer, target: GeoLayer) -> Assignment:
    """Map each source unit to the target it overlaps most.

    Ties (areas equal to within a relative 1e-9) go to the smallest target
    id. Sources with zero overlap everywhere are listed as unmatched.
    """
    check_crs(source, target)
    t_ids = target.ids
    t_geoms = np.array(target.geometries, dtype=object)
    s_ids = source.ids
    s_geoms = np.array(source.geometries, dtype=object)
    mapping, unmatched = {}, []
    if len(t_ids) == 0 or len(s_ids) == 0:
        return Assignment({}, list(s_ids), list(t_ids))
    tree = STRtree(t_geoms)
    si, ti = tree.query(s_geoms, predicate="intersects")
    areas = shapely.area(shapely.intersection(s_geoms[si], t_geoms[ti])) if len(si) else np.empty(0)
    best: dict[int, list] = {}
    for s, t, a in zip(si.tolist(), ti.tolist(), areas.tolist()):
        if a <= 0:
            continue
        best.setdefault(s, []).append((a, t_ids[t]))
    for k, sid in enumerate(s_ids):
        cands = best.get(k)
        if not cands:
            unmatched.append(sid)
            continue
        top = max(a for a, _ in cands)
        mapping[sid] = min(t for a, t in cands if a >= top * (1 - TIE_RTOL))
    return Assignment(mapping, unmatched, list(t_ids))


def aggregate(source: GeoLayer, assignment: Assignment, columns: Iterable[str], strict: bool = False) -> AttributeTable:
    """Sum source columns onto assigned targets.

    Integer columns are summed exactly; float columns with ``math.fsum``.
    Values of unmatched sources are reported in ``unallocated``. Under
    ``strict`` any column whose target total differs from the source total
    raises :class:`PopulationNotConserved`.
    """
    columns = list(columns)
    data = {c: _numeric(source, c) for c in columns}
    groups = assignment.groups()
    values = {t: {c: _sum(data[c][s] for s in members) for c in columns} for t, members in groups.items()}
    unalloc = {c: _sum(data[c][s] for s in assignment.unmatched) for c in columns}
    table = AttributeTable(columns, values, unalloc, list(assignment.unmatched))
    if strict:
        for c in columns:
            expected = _sum(data[c].values())
            got = table.total(c)
            if got != expected:
                raise PopulationNotConserved(c, expected, got, assignment.unmatched)
    return table


def disaggregate(source: GeoLayer, columns: Iterable[str], blocks: GeoLayer, weight_col: str,
                 block_assignment: Assignment | None = None) -> AttributeTable:
    """Split each source unit's values over its blocks in proportion to ``weight_col``.

    Blocks are matched to sources by largest overlap. A source whose blocks
    all weigh zero is split by block area instead. Values of sources that
    received no block are reported in ``unallocated``.
    """
    check_crs(source, blocks)
    columns = list(columns)
    data = {c: _numeric(source, c) for c in columns}
    weights = _numeric(blocks, weight_col)
    neg = [k for k, w in weights.items() if w < 0]
    if neg:
        raise NegativeWeight(f"negative {weight_col!r} on blocks {neg[:10]}")
    if block_assignment is None:
        block_assignment = assign_by_largest_overlap(blocks, source)
    values = {b: {c: 0.0 for c in columns} for b in blocks.ids}
    lost = []
    for src, members in block_assignment.groups().items():
        if not members:
            lost.append(src)
            continue
        w = [float(weights[b]) for b in members]
        total = math.fsum(w)
        if total <= 0:
            w = [shapely.area(blocks[b].geometry) for b in members]
            total = math.fsum(w)
        for b, wb in zip(members, w):
            share = wb / total
            row = values[b]
            for c in columns:
                row[c] = float(data[c][src]) * share
    unalloc = {c: math.fsum(float(data[c][s]) for s in lost) for c in columns}
    return AttributeTable(columns, values, unalloc, lost)


def prorate(source: GeoLayer, columns: Iterable[str], blocks: GeoLayer, weight_col: str, targets: GeoLayer,
            block_assignment: Assignment | None = None, target_assignment: Assignment | None = None) -> AttributeTable:
    """Move source columns onto targets through the block layer.

    Values are disaggregated to blocks by weight, then summed onto the
    target each block overlaps most. Results stay fractional.
    """
    check_crs(source, blocks, targets)
    columns = list(columns)
    on_blocks = disaggregate(source, columns, blocks, weight_col, block_assignment)
    if target_assignment is None:
        target_assignment = assign_by_largest_overlap(blocks, targets)
    values = {t: {c: math.fsum(on_blocks.values[b][c] for b in members) for c in columns}
              for t, members in target_assignment.groups().items()}
    unalloc = {c: math.fsum([on_blocks.unallocated[c]] + [on_blocks.values[b][c] for b in target_assignment.unmatched])
               for c in columns}
    return AttributeTable(columns, values, unalloc, on_blocks.unmatched_units + list(target_assignment.unmatched))


def nest_in_counties(precincts: GeoLayer, counties: GeoLayer, county_col: str = "COUNTYFP",
                     min_area: float = 1e-6, actions: list | None = None) -> GeoLayer:
    """Clip every precinct to its county and hand spill-over to the neighbor county.

    Each precinct belongs to the county it overlaps most. Any part lying in
    another county is merged into that county's precinct sharing the most
    boundary with the piece. Parts outside every county stay put, and
    crossings of ``min_area`` or less are treated as noise. The output
    carries ``county_col`` on every precinct.
    """
    check_crs(precincts, counties)
    a = assign_by_largest_overlap(precincts, counties)
    if a.unmatched:
        raise RepairFailed(f"precincts outside every county: {a.unmatched[:10]}")
    fips = counties.column(county_col) if county_col in counties.columns else {c: c for c in counties.ids}
    county_geom = {c: counties[c].geometry for c in counties.ids}
    home = a.mapping
    by_county = a.groups()

    clipped: dict = {}
    spills: list = []
    for u in precincts:
        c = home[u.unit_id]
        foreign = [(k, g) for k, g in county_geom.items() if k != c and g.intersects(u.geometry)]
        pieces = [(k, geom.intersection(u.geometry, g)) for k, g in foreign]
        pieces = [(k, p) for k, p in pieces if not p.is_empty and shapely.area(p) > min_area]
        if not pieces:
            clipped[u.unit_id] = u.geometry
            continue
        clipped[u.unit_id] = geom.difference(u.geometry, geom.union([p for _, p in pieces]))
        for k, p in pieces:
            spills.append((u.unit_id, k, p))

    gained: dict = {}
    for pid, k, piece in spills:
        cands = by_county.get(k, [])
        if not cands:
            # foreign county without precincts; nothing can absorb the piece
            raise RepairFailed(f"precinct {pid!r} spills into county {k!r}, which has no precincts")
        scores = [(geom.shared_boundary_length(piece, clipped[q]), q) for q in cands]
        top = max(s for s, _ in scores)
        if top > 0:
            winner = min(q for s, q in scores if s == top)
        else:
            # piece touches none of the county's precincts; smallest id keeps it deterministic
            winner = min(cands)
        gained.setdefault(winner, []).append(piece)
        if actions is not None:
            actions.append({"action": "nest_spill", "from": pid, "to": winner, "county": fips[k],
                            "area": float(shapely.area(piece))})

    new_geoms = {}
    for pid in precincts.ids:
        g = clipped[pid]
        if pid in gained:
            g = geom.union([g, *gained[pid]])
        if g is not precincts[pid].geometry:
            new_geoms[pid] = g
    out = precincts.with_geometries(new_geoms) if new_geoms else precincts
    return out.with_columns({county_col: {pid: fips[home[pid]] for pid in precincts.ids}})
