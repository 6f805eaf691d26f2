"""Gap/overlap detection and repair for unit layers.

The repair is a greedy procedure: overlap faces go to the claimant whose
exclusive territory shares the most boundary with the face, gaps go to
the neighbour sharing the most boundary with the gap. It has the same
post-condition as a full topological repair (a clean doctor report) but
does not try to reproduce any particular tool's output geometry.
"""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from typing import Iterable

import shapely
from shapely.geometry import Polygon, mapping
from shapely.geometry.base import BaseGeometry
from shapely.strtree import STRtree

from . import geom
from .errors import RepairFailed
from .layer import GeoLayer, snap_points

log = logging.getLogger(__name__)

DEFAULT_AREA_TOL = 1.0
MAX_PASSES = 10


@dataclass
class Gap:
    polygon: Polygon
    area: float
    adjacent: list[str] = field(default_factory=list)


@dataclass
class DoctorReport:
    """Outcome of :func:`doctor`.

    ``dropped`` lists regions the caller explicitly excluded from coverage
    (for example an unpopulated lake hole); they are informational and do
    not make the layer dirty.
    """

    overlaps: list[tuple[str, str, float]] = field(default_factory=list)
    gaps: list[Gap] = field(default_factory=list)
    holes_outside_coverage: list[tuple[Polygon, float]] = field(default_factory=list)
    dropped: list[tuple[Polygon, float]] = field(default_factory=list)
    area_tol: float = DEFAULT_AREA_TOL

    @property
    def clean(self) -> bool:
        return not (self.overlaps or self.gaps or self.holes_outside_coverage)

    def summary(self) -> str:
        s = f"{len(self.gaps)} gaps, {len(self.overlaps)} overlaps"
        if self.holes_outside_coverage:
            s += f", {len(self.holes_outside_coverage)} uncovered exterior regions"
        if self.dropped:
            s += f", {len(self.dropped)} dropped regions"
        return s

    def to_text(self) -> str:
        lines = [self.summary() + f" (area tolerance {self.area_tol:g})"]
        for a, b, ar in self.overlaps:
            lines.append(f"  overlap {a} / {b}: area {ar:.6g}")
        for g in self.gaps:
            lines.append(f"  gap area {g.area:.6g} at {_fmt_point(g.polygon)} adjacent to {', '.join(g.adjacent) or '-'}")
        for p, ar in self.holes_outside_coverage:
            lines.append(f"  uncovered region area {ar:.6g} at {_fmt_point(p)}")
        for p, ar in self.dropped:
            lines.append(f"  dropped region area {ar:.6g} at {_fmt_point(p)}")
        return "\n".join(lines)

    def to_dict(self) -> dict:
        return {
            "clean": self.clean,
            "area_tol": self.area_tol,
            "overlaps": [{"units": [a, b], "area": ar} for a, b, ar in self.overlaps],
            "gaps": [{"area": g.area, "adjacent": g.adjacent, "geometry": mapping(g.polygon)} for g in self.gaps],
            "holes_outside_coverage": [{"area": ar, "geometry": mapping(p)} for p, ar in self.holes_outside_coverage],
            "dropped": [{"area": ar, "geometry": mapping(p)} for p, ar in self.dropped],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2)


def _fmt_point(p: BaseGeometry) -> str:
    c = p.representative_point()
    return f"({c.x:.6g}, {c.y:.6g})"


def _overlap_pairs(geoms: list[BaseGeometry], floor: float) -> list[tuple[int, int, float]]:
    if len(geoms) < 2:
        return []
    tree = STRtree(geoms)
    left, right = tree.query(geoms, predicate="intersects")
    out = []
    for i, j in zip(left.tolist(), right.tolist()):
        if i < j:
            a = geom.intersection_area(geoms[i], geoms[j])
            if a > floor:
                out.append((i, j, a))
    return out


def _uncovered(geoms: list[BaseGeometry], extent: BaseGeometry | None):
    """Interior holes of the union, and (with an extent) uncovered exterior pieces."""
    u = geom.union(geoms)
    holes = []
    for part in u.geoms:
        for ring in part.interiors:
            holes.extend(geom.polygonal_parts(shapely.difference(Polygon(ring), u)))
    outside = []
    if extent is not None:
        filled = geom.union(Polygon(p.exterior) for p in u.geoms)
        outside = geom.polygonal_parts(shapely.difference(extent, filled))
    return holes, outside


def _adjacent_units(piece: BaseGeometry, ids, geoms, tree: STRtree, snap_tol: float) -> list[tuple[str, float]]:
    out = []
    for k in sorted(tree.query(piece.buffer(snap_tol, join_style="mitre")).tolist()):
        shared = geom.shared_boundary_length(piece, geoms[k], snap_tol)
        if shared > 0:
            out.append((ids[k], shared))
    return out


def doctor(
    layer: GeoLayer,
    area_tol: float = DEFAULT_AREA_TOL,
    extent: BaseGeometry | None = None,
    exclude: Iterable[BaseGeometry] = (),
    snap_tol: float = geom.DEFAULT_SNAP_GRID,
) -> DoctorReport:
    """Report overlaps and gaps larger than ``area_tol``.

    Gaps are holes in the interior of the layer's union. With ``extent``
    (for example a state outline), parts of the extent not covered by the
    layer are also reported. Regions covered by ``exclude`` are listed as
    dropped instead of as gaps.
    """
    ids = layer.ids
    geoms = layer.geometries
    report = DoctorReport(area_tol=area_tol)
    for i, j, a in _overlap_pairs(geoms, area_tol):
        report.overlaps.append((ids[i], ids[j], a))
    holes, outside = _uncovered(geoms, extent)
    excl = geom.union(exclude) if exclude else None
    tree = STRtree(geoms) if geoms else None

    def excluded(piece, a):
        if excl is None:
            return False
        return a - geom.intersection_area(piece, excl) <= area_tol

    for piece in holes:
        a = geom.area(piece)
        if a <= area_tol:
            continue
        if excluded(piece, a):
            report.dropped.append((piece, a))
            continue
        adj = [uid for uid, _ in _adjacent_units(piece, ids, geoms, tree, snap_tol)]
        report.gaps.append(Gap(piece, a, adj))
    for piece in outside:
        a = geom.area(piece)
        if a <= area_tol:
            continue
        if excluded(piece, a):
            report.dropped.append((piece, a))
        else:
            report.holes_outside_coverage.append((piece, a))
    report.overlaps.sort(key=lambda t: (-t[2], t[0], t[1]))
    report.gaps.sort(key=lambda g: (-g.area, g.adjacent))
    report.holes_outside_coverage.sort(key=lambda t: (-t[1], t[0].bounds))
    report.dropped.sort(key=lambda t: (-t[1], t[0].bounds))
    return report


def _clusters(n: int, pairs) -> list[list[int]]:
    parent = list(range(n))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for i, j, _ in pairs:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[max(ri, rj)] = min(ri, rj)
    groups: dict[int, list[int]] = {}
    for i, j, _ in pairs:
        for k in (i, j):
            groups.setdefault(find(k), [])
    for k in range(n):
        r = find(k)
        if r in groups:
            groups[r].append(k)
    return [sorted(set(v)) for _, v in sorted(groups.items())]


def _resolve_cluster(members, ids, geoms, snap_tol, floor, actions):
    """Assign every multiply-covered face of one overlap cluster to a single claimant."""
    linework = shapely.union_all([geoms[k].boundary for k in members])
    faces = [f for f in geom.polygonal_parts(shapely.polygonize(shapely.get_parts(linework)))]
    overlap_faces = []
    for f in faces:
        if geom.area(f) <= floor * 1e-6:
            continue
        pt = f.representative_point()
        claim = [k for k in members if geoms[k].contains(pt)]
        if len(claim) >= 2:
            overlap_faces.append((f, claim))
    if not overlap_faces:
        return {}
    claimed_by: dict[int, list[Polygon]] = {k: [] for k in members}
    for f, claim in overlap_faces:
        for k in claim:
            claimed_by[k].append(f)
    exclusive = {k: geom.difference(geoms[k], geom.union(claimed_by[k])) if claimed_by[k] else geoms[k]
                 for k in members}

    owner: dict[int, int] = {}
    pending = list(range(len(overlap_faces)))
    while pending:
        progress = []
        for fi in pending:
            f, claim = overlap_faces[fi]
            scores = [(geom.shared_boundary_length(f, exclusive[k], snap_tol), k) for k in claim]
            best = max(s for s, _ in scores)
            if best > 0:
                # ties resolved toward the smallest unit id
                winner = min((k for s, k in scores if s == best), key=lambda k: ids[k])
                progress.append((fi, winner))
        if not progress:
            for fi in pending:
                owner[fi] = min(overlap_faces[fi][1], key=lambda k: ids[k])
            break
        for fi, w in progress:
            owner[fi] = w
            exclusive[w] = geom.union([exclusive[w], overlap_faces[fi][0]])
        done = {fi for fi, _ in progress}
        pending = [fi for fi in pending if fi not in done]

    lost: dict[int, list[Polygon]] = {}
    for fi, (f, claim) in enumerate(overlap_faces):
        w = owner[fi]
        for k in claim:
            if k != w:
                lost.setdefault(k, []).append(f)
        if actions is not None:
            actions.append({
                "action": "resolve_overlap",
                "winner": ids[w],
                "losers": sorted(ids[k] for k in claim if k != w),
                "area": geom.area(f),
            })
    return {k: geom.difference(geoms[k], geom.union(fs)) for k, fs in lost.items()}


def resolve_overlaps(
    layer: GeoLayer,
    area_tol: float = DEFAULT_AREA_TOL,
    snap_tol: float = geom.DEFAULT_SNAP_GRID,
    max_passes: int = MAX_PASSES,
    actions: list | None = None,
) -> GeoLayer:
    """Remove overlaps; each overlap face is kept only by its best claimant.

    The best claimant is the unit whose non-overlapping part shares the
    longest boundary with the face (ties: smallest unit id). Units that
    win or are not involved keep their geometry unchanged.
    """
    ids = layer.ids
    geoms = list(layer.geometries)
    floor = area_tol * 1e-6
    for _ in range(max_passes):
        pairs = _overlap_pairs(geoms, floor)
        if not pairs:
            break
        for members in _clusters(len(geoms), pairs):
            for k, g in _resolve_cluster(members, ids, geoms, snap_tol, floor, actions).items():
                geoms[k] = g
    remaining = [p for p in _overlap_pairs(geoms, floor) if p[2] > area_tol]
    if remaining:
        i, j, a = remaining[0]
        raise RepairFailed(
            f"overlaps did not converge after {max_passes} passes ({len(remaining)} left; "
            f"largest {ids[i]}/{ids[j]} area {a:g})"
        )
    swallowed = [ids[k] for k, g in enumerate(geoms) if g.is_empty and not layer.units[k].geometry.is_empty]
    if swallowed:
        raise RepairFailed(f"units lie entirely inside other units and would be deleted: {swallowed[:10]}")
    changed = {ids[k]: g for k, g in enumerate(geoms) if g is not layer.units[k].geometry}
    return layer.with_geometries(changed) if changed else layer


def fill_gaps(
    layer: GeoLayer,
    drop_above: float | None = None,
    area_tol: float = DEFAULT_AREA_TOL,
    extent: BaseGeometry | None = None,
    snap_tol: float = geom.DEFAULT_SNAP_GRID,
    actions: list | None = None,
) -> GeoLayer:
    """Merge each gap into the adjacent unit sharing the most boundary with it.

    Gaps larger than ``drop_above`` are left in place, as are gaps with no
    adjacent unit; both are logged for the caller to decide on.
    """
    ids = layer.ids
    geoms = list(layer.geometries)
    floor = area_tol * 1e-6
    holes, outside = _uncovered(geoms, extent)
    pieces = [(p, geom.area(p)) for p in holes + outside]
    pieces = [(p, a) for p, a in pieces if a > floor]
    # deterministic order: biggest first, then by position
    pieces.sort(key=lambda t: (-t[1], t[0].bounds))
    tree = STRtree(geoms)
    changed: dict[int, BaseGeometry] = {}
    for piece, a in pieces:
        if drop_above is not None and a > drop_above:
            log.info("gap of area %g left in place (above %g)", a, drop_above)
            if actions is not None:
                actions.append({"action": "gap_left", "area": a, "bounds": list(piece.bounds)})
            continue
        current = [changed.get(k, g) for k, g in enumerate(geoms)]
        adj = _adjacent_units(piece, ids, current, tree, snap_tol)
        if not adj:
            log.warning("gap of area %g has no adjacent unit", a)
            if actions is not None:
                actions.append({"action": "gap_unfillable", "area": a, "bounds": list(piece.bounds)})
            continue
        best = max(s for _, s in adj)
        winner = min(uid for uid, s in adj if s == best)
        k = ids.index(winner)
        changed[k] = geom.union([current[k], piece])
        if actions is not None:
            actions.append({"action": "fill_gap", "unit": winner, "area": a})
    if not changed:
        return layer
    return layer.with_geometries({ids[k]: g for k, g in changed.items()})


@dataclass
class RepairOptions:
    snap_grid: float = geom.DEFAULT_SNAP_GRID
    area_tol: float = DEFAULT_AREA_TOL
    drop_above: float | None = None
    extent: BaseGeometry | None = None
    max_passes: int = MAX_PASSES


def smart_repair(layer: GeoLayer, opts: RepairOptions | None = None, actions: list | None = None):
    """Snap, resolve overlaps, fill gaps, then re-run :func:`doctor`.

    Returns ``(repaired_layer, report)``. Gaps left because they exceed
    ``opts.drop_above`` are moved to ``report.dropped``; anything else in
    the report means the repair did not produce a clean layer.
    """
    opts = opts or RepairOptions()
    out = snap_points(layer, opts.snap_grid, actions)
    out = resolve_overlaps(out, opts.area_tol, opts.snap_grid, opts.max_passes, actions)
    out = fill_gaps(out, opts.drop_above, opts.area_tol, opts.extent, opts.snap_grid, actions)
    report = doctor(out, opts.area_tol, opts.extent, snap_tol=opts.snap_grid)
    if opts.drop_above is not None:
        keep = []
        for g in report.gaps:
            if g.area > opts.drop_above:
                report.dropped.append((g.polygon, g.area))
            else:
                keep.append(g)
        report.gaps = keep
        outside = []
        for p, a in report.holes_outside_coverage:
            if a > opts.drop_above:
                report.dropped.append((p, a))
            else:
                outside.append((p, a))
        report.holes_outside_coverage = outside
    return out, report
