"""Planar polygon kernel.

Geometries are shapely ``Polygon``/``MultiPolygon`` values in a projected
CRS (meters). Rings are normalized on construction: exterior
counter-clockwise, holes clockwise. Boolean clipping is delegated to
shapely/GEOS; areas, shared boundary lengths and grid snapping are
computed here so their tolerances are under our control.
"""
from __future__ import annotations

import math
from typing import Iterable, Iterator, Sequence

import numpy as np
import shapely
from shapely.geometry import GeometryCollection, MultiPolygon, Polygon
from shapely.geometry.base import BaseGeometry
from shapely.geometry.polygon import orient

from .errors import InvalidGeometry

DEFAULT_SNAP_GRID = 1e-6

EMPTY = MultiPolygon()


def polygon(exterior: Sequence, holes: Iterable[Sequence] = ()) -> Polygon:
    """Build a polygon from coordinate sequences, closing and orienting rings."""
    coords = [tuple(map(float, p[:2])) for p in exterior]
    hole_coords = [[tuple(map(float, p[:2])) for p in h] for h in holes]
    for ring in [coords, *hole_coords]:
        for x, y in ring:
            if not (math.isfinite(x) and math.isfinite(y)):
                raise InvalidGeometry(f"non-finite coordinate ({x}, {y})")
    return orient(Polygon(coords, hole_coords), sign=1.0)


def box(xmin: float, ymin: float, xmax: float, ymax: float) -> Polygon:
    return polygon([(xmin, ymin), (xmax, ymin), (xmax, ymax), (xmin, ymax)])


def polygonal_parts(g: BaseGeometry | None) -> list[Polygon]:
    """Non-empty polygonal components of any geometry (lines and points dropped)."""
    if g is None or g.is_empty:
        return []
    if isinstance(g, Polygon):
        return [g]
    if isinstance(g, (MultiPolygon, GeometryCollection)):
        out: list[Polygon] = []
        for part in g.geoms:
            out.extend(polygonal_parts(part))
        return out
    return []


def as_multipolygon(g: BaseGeometry | None) -> MultiPolygon:
    parts = [orient(p, sign=1.0) for p in polygonal_parts(g)]
    return MultiPolygon(parts) if parts else EMPTY


def iter_rings(g: BaseGeometry) -> Iterator[tuple[np.ndarray, bool]]:
    """Yield ``(coords, is_exterior)`` for every ring of a polygonal geometry."""
    for p in polygonal_parts(g):
        yield np.asarray(p.exterior.coords)[:, :2], True
        for h in p.interiors:
            yield np.asarray(h.coords)[:, :2], False


def ring_area(coords: np.ndarray) -> float:
    """Unsigned shoelace area of a closed ring."""
    distinct = np.unique(coords, axis=0)
    if len(distinct) < 3:
        raise InvalidGeometry(f"degenerate ring with {len(distinct)} distinct points")
    # shift to the first vertex to limit cancellation on large UTM coordinates
    x = coords[:, 0] - coords[0, 0]
    y = coords[:, 1] - coords[0, 1]
    return abs(0.5 * float(np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1])))


def area(g: BaseGeometry) -> float:
    """Shoelace area of exteriors minus holes, in square coordinate units."""
    total = 0.0
    for p in polygonal_parts(g):
        a = ring_area(np.asarray(p.exterior.coords)[:, :2])
        for h in p.interiors:
            a -= ring_area(np.asarray(h.coords)[:, :2])
        total += a
    return max(total, 0.0)


def _check(g: BaseGeometry) -> None:
    for coords, _ in iter_rings(g):
        if len(np.unique(coords, axis=0)) < 3:
            raise InvalidGeometry("degenerate ring (< 3 distinct points)")


def intersection(a: BaseGeometry, b: BaseGeometry) -> MultiPolygon:
    return as_multipolygon(shapely.intersection(a, b))


def difference(a: BaseGeometry, b: BaseGeometry) -> MultiPolygon:
    return as_multipolygon(shapely.difference(a, b))


def union(geoms: Iterable[BaseGeometry]) -> MultiPolygon:
    return as_multipolygon(shapely.union_all(list(geoms)))


def intersection_area(a: BaseGeometry, b: BaseGeometry) -> float:
    """Area of ``a ∩ b``; symmetric and bounded by ``min(area(a), area(b))``."""
    _check(a)
    _check(b)
    if not a.envelope.intersects(b.envelope):
        return 0.0
    return min(area(intersection(a, b)), area(a), area(b))


def union_area(a: BaseGeometry, b: BaseGeometry) -> float:
    _check(a)
    _check(b)
    return area(union([a, b]))


def segments(g: BaseGeometry) -> np.ndarray:
    """All ring segments of ``g`` as an ``(n, 4)`` array of ``x0, y0, x1, y1``."""
    chunks = [np.hstack([c[:-1], c[1:]]) for c, _ in iter_rings(g) if len(c) > 1]
    if not chunks:
        return np.empty((0, 4))
    return np.vstack(chunks)


def _snap_array(a: np.ndarray, grid: float) -> np.ndarray:
    inv = 1.0 / grid
    if abs(inv - round(inv)) <= 1e-9 * inv:
        # dividing by an integral scale keeps decimal grids exact (1e-6 -> 1e6)
        inv = float(round(inv))
        return np.round(a * inv) / inv
    return np.round(a / grid) * grid


def _boundary_overlap(sa: np.ndarray, sb: np.ndarray, tol: float) -> float:
    """Total length of collinear overlap between two disjoint segment families."""
    if len(sa) == 0 or len(sb) == 0:
        return 0.0
    total = 0.0
    chunk = max(1, 4_000_000 // max(len(sb), 1))
    bxmin = np.minimum(sb[:, 0], sb[:, 2])
    bxmax = np.maximum(sb[:, 0], sb[:, 2])
    bymin = np.minimum(sb[:, 1], sb[:, 3])
    bymax = np.maximum(sb[:, 1], sb[:, 3])
    for start in range(0, len(sa), chunk):
        a = sa[start:start + chunk]
        axmin = np.minimum(a[:, 0], a[:, 2])[:, None]
        axmax = np.maximum(a[:, 0], a[:, 2])[:, None]
        aymin = np.minimum(a[:, 1], a[:, 3])[:, None]
        aymax = np.maximum(a[:, 1], a[:, 3])[:, None]
        hit = (
            (axmin <= bxmax + tol) & (bxmin <= axmax + tol)
            & (aymin <= bymax + tol) & (bymin <= aymax + tol)
        )
        ia, ib = np.nonzero(hit)
        if len(ia) == 0:
            continue
        A = a[ia]
        B = sb[ib]
        dx = A[:, 2] - A[:, 0]
        dy = A[:, 3] - A[:, 1]
        la = np.hypot(dx, dy)
        ok = la > 0
        la_safe = np.where(ok, la, 1.0)
        ux, uy = dx / la_safe, dy / la_safe
        rx0, ry0 = B[:, 0] - A[:, 0], B[:, 1] - A[:, 1]
        rx1, ry1 = B[:, 2] - A[:, 0], B[:, 3] - A[:, 1]
        d0 = np.abs(ux * ry0 - uy * rx0)
        d1 = np.abs(ux * ry1 - uy * rx1)
        t0 = ux * rx0 + uy * ry0
        t1 = ux * rx1 + uy * ry1
        lo = np.maximum(np.minimum(t0, t1), 0.0)
        hi = np.minimum(np.maximum(t0, t1), la)
        overlap = np.where(ok & (d0 <= tol) & (d1 <= tol), np.maximum(hi - lo, 0.0), 0.0)
        total += float(overlap.sum())
    return total


def shared_boundary_length(a: BaseGeometry, b: BaseGeometry, snap_tol: float = DEFAULT_SNAP_GRID) -> float:
    """Length of boundary shared by two interior-disjoint geometries.

    Ring segments of both inputs are snapped to ``snap_tol`` and compared
    pairwise; a pair contributes the length of its collinear overlap.
    Point contact contributes nothing.
    """
    if a.is_empty or b.is_empty:
        return 0.0
    ax0, ay0, ax1, ay1 = a.bounds
    bx0, by0, bx1, by1 = b.bounds
    if ax0 > bx1 + snap_tol or bx0 > ax1 + snap_tol or ay0 > by1 + snap_tol or by0 > ay1 + snap_tol:
        return 0.0
    sa = _snap_array(segments(a), snap_tol)
    sb = _snap_array(segments(b), snap_tol)
    ab = _boundary_overlap(sa, sb, snap_tol)
    ba = _boundary_overlap(sb, sa, snap_tol)
    # both directions measure the same set; averaging keeps the result symmetric
    return 0.5 * (ab + ba)


def shared_length_with_segments(g: BaseGeometry, segs: np.ndarray, snap_tol: float = DEFAULT_SNAP_GRID) -> float:
    """Like :func:`shared_boundary_length` against a precomputed ``(n, 4)`` segment array.

    Segments far from ``g``'s bounding box are discarded first, which keeps
    comparisons against a long outer boundary cheap.
    """
    if len(segs) == 0 or g.is_empty:
        return 0.0
    x0, y0, x1, y1 = g.bounds
    t = snap_tol
    m = (
        (np.minimum(segs[:, 0], segs[:, 2]) <= x1 + t) & (np.maximum(segs[:, 0], segs[:, 2]) >= x0 - t)
        & (np.minimum(segs[:, 1], segs[:, 3]) <= y1 + t) & (np.maximum(segs[:, 1], segs[:, 3]) >= y0 - t)
    )
    if not m.any():
        return 0.0
    sa = _snap_array(segments(g), t)
    sb = _snap_array(segs[m], t)
    return 0.5 * (_boundary_overlap(sa, sb, t) + _boundary_overlap(sb, sa, t))


def perimeter(g: BaseGeometry) -> float:
    s = segments(g)
    return float(np.hypot(s[:, 2] - s[:, 0], s[:, 3] - s[:, 1]).sum()) if len(s) else 0.0


def _clean_ring(coords: np.ndarray) -> np.ndarray | None:
    keep = [coords[0]]
    for p in coords[1:]:
        if p[0] != keep[-1][0] or p[1] != keep[-1][1]:
            keep.append(p)
    ring = np.asarray(keep)
    if len(ring) > 1 and (ring[0] != ring[-1]).any():
        ring = np.vstack([ring, ring[:1]])
    if len(np.unique(ring, axis=0)) < 3:
        return None
    x = ring[:, 0] - ring[0, 0]
    y = ring[:, 1] - ring[0, 1]
    if np.dot(x[:-1], y[1:]) - np.dot(x[1:], y[:-1]) == 0.0:
        return None
    return ring


def snap_geometry(g: BaseGeometry, grid: float) -> tuple[MultiPolygon, int]:
    """Round every vertex to the grid; return the snapped geometry and the number of rings dropped."""
    if grid <= 0:
        raise ValueError("grid must be positive")
    dropped = 0
    parts: list[Polygon] = []
    for p in polygonal_parts(g):
        ext = _clean_ring(_snap_array(np.asarray(p.exterior.coords)[:, :2], grid))
        if ext is None:
            dropped += 1 + len(p.interiors)
            continue
        holes = []
        for h in p.interiors:
            hr = _clean_ring(_snap_array(np.asarray(h.coords)[:, :2], grid))
            if hr is None:
                dropped += 1
            else:
                holes.append(hr)
        parts.append(Polygon(ext, holes))
    out = MultiPolygon(parts) if parts else EMPTY
    if not out.is_valid:
        # self-touching after rounding; GEOS's precision reducer repairs on the same grid
        out = as_multipolygon(shapely.set_precision(shapely.make_valid(out), grid))
    return as_multipolygon(out), dropped


def is_valid(g: BaseGeometry) -> bool:
    try:
        _check(g)
    except InvalidGeometry:
        return False
    return bool(g.is_valid)
