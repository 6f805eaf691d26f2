"""GeoJSON FeatureCollections of Polygon/MultiPolygon features.

Written files carry a foreign member ``crs_tag`` (``"utm:17N"``,
``"lonlat"``...) so projected layers survive a round trip. A file with no
tag is taken to be RFC 7946 longitude/latitude.
"""
from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from shapely.geometry import MultiPolygon

from .. import geom, utm
from ..errors import InvalidGeometry, OutOfDomain, ParseError
from ..layer import GeoLayer, Unit

LONLAT = "lonlat"


def _line_col(text: str, offset: int) -> tuple[int, int]:
    line = text.count("\n", 0, offset) + 1
    col = offset - (text.rfind("\n", 0, offset) + 1) + 1
    return line, col


def _feature_offsets(text: str) -> list[int]:
    """Best-effort character offsets of each element of the top-level ``features`` array."""
    dec = json.JSONDecoder()
    at = text.find('"features"')
    if at < 0:
        return []
    i = text.find("[", at)
    if i < 0:
        return []
    i += 1
    out = []
    n = len(text)
    while i < n:
        while i < n and text[i] in " \t\r\n,":
            i += 1
        if i >= n or text[i] == "]":
            break
        out.append(i)
        try:
            _, i = dec.raw_decode(text, i)
        except json.JSONDecodeError:
            break
    return out


def _rings_to_polygon(rings, project) -> Any:
    if not isinstance(rings, list) or not rings:
        raise ValueError("polygon needs at least one ring")
    conv = []
    for ring in rings:
        pts = []
        for pt in ring:
            if not isinstance(pt, list) or len(pt) < 2:
                raise ValueError(f"bad position {pt!r}")
            x, y = float(pt[0]), float(pt[1])
            pts.append(project(x, y) if project else (x, y))
        conv.append(pts)
    return geom.polygon(conv[0], conv[1:])


def _parse_geometry(g: dict, project) -> MultiPolygon:
    if not isinstance(g, dict):
        raise ValueError("feature has no geometry")
    kind = g.get("type")
    coords = g.get("coordinates")
    if kind == "Polygon":
        return geom.as_multipolygon(_rings_to_polygon(coords, project))
    if kind == "MultiPolygon":
        return MultiPolygon([_rings_to_polygon(p, project) for p in coords])
    raise ValueError(f"unsupported geometry type {kind!r}")


def read_geojson(path: str | Path, id_field: str | None = None, utm_zone: int | None = None,
                 south: bool = False) -> GeoLayer:
    """Read a FeatureCollection.

    Unit ids come from ``properties[id_field]`` if given, else the
    feature ``id``, else the feature's position. When ``utm_zone`` is
    given and the file is in longitude/latitude, coordinates are projected.
    """
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e.msg}", e.lineno, e.colno) from None
    if not isinstance(doc, dict) or doc.get("type") != "FeatureCollection":
        raise ParseError(f"{path}: top level must be a FeatureCollection", 1, 1)
    tag = doc.get("crs_tag", LONLAT)
    project = None
    if utm_zone is not None and tag == LONLAT:
        def project(x, y):
            return utm.utm_project(x, y, utm_zone, south)
        tag = utm.crs_tag(utm_zone, south)

    offsets = None
    units = []
    for k, feat in enumerate(doc.get("features", [])):
        try:
            if not isinstance(feat, dict) or feat.get("type") != "Feature":
                raise ValueError("not a Feature")
            props = feat.get("properties") or {}
            if id_field is not None:
                if id_field not in props:
                    raise ValueError(f"missing id field {id_field!r}")
                uid = props[id_field]
            else:
                uid = feat.get("id", k)
            units.append(Unit(str(uid), _parse_geometry(feat.get("geometry"), project), dict(props)))
        except (ValueError, TypeError, InvalidGeometry, OutOfDomain) as e:
            if offsets is None:
                offsets = _feature_offsets(text)
            line = col = None
            if k < len(offsets):
                line, col = _line_col(text, offsets[k])
            name = feat.get("id", k) if isinstance(feat, dict) else k
            raise ParseError(f"{path}: feature {k} ({name!r}): {e}", line, col) from None
    return GeoLayer(units, tag)


def _ring(coords) -> list:
    return [[float(x), float(y)] for x, y in coords]


def _geometry(g: MultiPolygon) -> dict:
    polys = []
    for p in geom.polygonal_parts(g):
        polys.append([_ring(p.exterior.coords)] + [_ring(h.coords) for h in p.interiors])
    return {"type": "MultiPolygon", "coordinates": polys}


def dumps_geojson(layer: GeoLayer) -> str:
    head = json.dumps({"type": "FeatureCollection", "crs_tag": layer.crs_tag}, allow_nan=False)
    feats = []
    for u in layer:
        feat = {"type": "Feature", "id": u.unit_id, "properties": u.attributes, "geometry": _geometry(u.geometry)}
        feats.append(json.dumps(feat, allow_nan=False, separators=(",", ":")))
    # one feature per line keeps diffs and error positions readable
    return head[:-1] + ', "features": [\n' + ",\n".join(feats) + "\n]}\n"


def write_geojson(layer: GeoLayer, path: str | Path) -> None:
    Path(path).write_text(dumps_geojson(layer), encoding="utf-8")
