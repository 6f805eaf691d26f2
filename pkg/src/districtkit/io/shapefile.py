"""ESRI shapefile reader for polygon layers (.shp + .dbf, optional .prj/.cpg).

Only shape types 5 (Polygon) and 15 (PolygonZ) are read; Z and M values
are discarded. In the file, outer rings run clockwise and holes
counter-clockwise; each hole is attached to the outer ring containing it.
"""
from __future__ import annotations

import logging
import re
import struct
from pathlib import Path

from shapely.geometry import MultiPolygon, Polygon

from .. import geom, utm
from ..errors import MalformedRecord, UnsupportedEncoding, UnsupportedShapeType
from ..layer import GeoLayer, Unit

log = logging.getLogger(__name__)

SHAPE_NAMES = {
    0: "Null", 1: "Point", 3: "PolyLine", 5: "Polygon", 8: "MultiPoint",
    11: "PointZ", 13: "PolyLineZ", 15: "PolygonZ", 18: "MultiPointZ",
    21: "PointM", 23: "PolyLineM", 25: "PolygonM", 28: "MultiPointM", 31: "MultiPatch",
}
POLYGON_TYPES = (5, 15)
_ENCODINGS = {"utf-8": "utf-8", "utf8": "utf-8", "ascii": "ascii", "us-ascii": "ascii", "646": "ascii"}


def _signed_area(pts) -> float:
    s = 0.0
    x0, y0 = pts[0]
    for (ax, ay), (bx, by) in zip(pts, pts[1:]):
        s += (ax - x0) * (by - y0) - (bx - x0) * (ay - y0)
    return 0.5 * s


def _assemble(rings: list[list[tuple[float, float]]]) -> MultiPolygon:
    outers, holes = [], []
    for r in rings:
        if len(r) < 4:
            continue
        (outers if _signed_area(r) < 0 else holes).append(r)
    shells = [Polygon(o) for o in outers]
    owned: list[list] = [[] for _ in outers]
    for h in holes:
        probe = Polygon(h).representative_point()
        for k, s in enumerate(shells):
            if s.contains(probe):
                owned[k].append(h)
                break
        else:
            # counter-clockwise ring outside every shell: treat it as an outer ring
            outers.append(h)
            shells.append(Polygon(h))
            owned.append([])
    return MultiPolygon([geom.polygon(o, hs) for o, hs in zip(outers, owned)]) if outers else geom.EMPTY


def read_shp(path: str | Path) -> list[MultiPolygon]:
    data = Path(path).read_bytes()
    if len(data) < 100:
        raise MalformedRecord(f"{path}: file shorter than the 100-byte header", 0)
    code, = struct.unpack(">i", data[0:4])
    if code != 9994:
        raise MalformedRecord(f"{path}: bad file code {code}", 0)
    words, = struct.unpack(">i", data[24:28])
    version, shape_type = struct.unpack("<ii", data[28:36])
    if version != 1000:
        raise MalformedRecord(f"{path}: unsupported version {version}", 28)
    if shape_type not in POLYGON_TYPES and shape_type != 0:
        raise UnsupportedShapeType(f"{path}: shape type {shape_type} ({SHAPE_NAMES.get(shape_type, '?')}); only polygons are supported")
    end = 2 * words
    if end > len(data):
        # a short file is reported at the record that runs off the end
        log.warning("%s: header declares %d bytes, file has %d", path, end, len(data))
        end = len(data)
    out = []
    off = 100
    while off < end:
        if off + 8 > end:
            raise MalformedRecord(f"{path}: truncated record header", off)
        _num, clen = struct.unpack(">ii", data[off:off + 8])
        body = off + 8
        stop = body + 2 * clen
        if clen < 2 or stop > end:
            raise MalformedRecord(f"{path}: record content of {2 * clen} bytes runs past end of file", off)
        rtype, = struct.unpack("<i", data[body:body + 4])
        if rtype == 0:
            log.warning("%s: null shape at offset %d", path, off)
            out.append(geom.EMPTY)
        elif rtype in POLYGON_TYPES:
            out.append(_parse_polygon(data, body, stop, off, path))
        else:
            raise UnsupportedShapeType(f"{path}: record at offset {off} has shape type {rtype} ({SHAPE_NAMES.get(rtype, '?')})")
        off = stop
    return out


def _parse_polygon(data: bytes, body: int, stop: int, rec_off: int, path) -> MultiPolygon:
    # type(4) bbox(32) numParts(4) numPoints(4); then parts and XY points; Z/M trailers ignored
    if body + 44 > stop:
        raise MalformedRecord(f"{path}: polygon record too short", rec_off)
    nparts, npoints = struct.unpack("<ii", data[body + 36:body + 44])
    parts_at = body + 44
    pts_at = parts_at + 4 * nparts
    if nparts < 0 or npoints < 0 or pts_at + 16 * npoints > stop:
        raise MalformedRecord(f"{path}: {nparts} parts / {npoints} points do not fit the record", rec_off)
    parts = list(struct.unpack(f"<{nparts}i", data[parts_at:pts_at]))
    flat = struct.unpack(f"<{2 * npoints}d", data[pts_at:pts_at + 16 * npoints])
    pts = list(zip(flat[0::2], flat[1::2]))
    bounds = parts + [npoints]
    if any(a < 0 or a > b for a, b in zip(bounds, bounds[1:])):
        raise MalformedRecord(f"{path}: part indices {parts} out of order", rec_off)
    return _assemble([pts[a:b] for a, b in zip(bounds, bounds[1:])])


def _encoding(path: Path) -> str:
    cpg = path.with_suffix(".cpg")
    if not cpg.exists():
        return "utf-8"
    name = cpg.read_text(encoding="ascii", errors="replace").strip().lower()
    if name not in _ENCODINGS:
        raise UnsupportedEncoding(f"{cpg}: encoding {name!r} not supported (use UTF-8 or ASCII)")
    return _ENCODINGS[name]


def _field_value(raw: bytes, ftype: str, decimals: int, enc: str, where: str, off: int):
    try:
        text = raw.decode(enc)
    except UnicodeDecodeError:
        raise UnsupportedEncoding(f"{where}: bytes at offset {off} are not valid {enc}") from None
    if ftype == "C":
        return text.rstrip(" \x00")
    s = text.strip(" \x00")
    if ftype in "NF":
        if not s or set(s) <= {"*"}:
            return None
        try:
            if ftype == "N" and decimals == 0 and re.fullmatch(r"[+-]?\d+", s):
                return int(s)
            return float(s)
        except ValueError:
            raise MalformedRecord(f"{where}: bad numeric value {s!r}", off) from None
    if ftype == "L":
        if s in ("", "?"):
            return None
        return s.upper() in ("T", "Y")
    return s


def read_dbf(path: str | Path) -> tuple[list[str], list[dict]]:
    path = Path(path)
    enc = _encoding(path)
    data = path.read_bytes()
    if len(data) < 32:
        raise MalformedRecord(f"{path}: file shorter than the 32-byte header", 0)
    nrec, hlen, rlen = struct.unpack("<IHH", data[4:12])
    fields = []
    off = 32
    while off < hlen - 1 and data[off] != 0x0D:
        if off + 32 > len(data):
            raise MalformedRecord(f"{path}: truncated field descriptor", off)
        d = data[off:off + 32]
        name = d[:11].split(b"\x00")[0].decode("ascii", errors="strict").strip()
        fields.append((name, chr(d[11]), d[16], d[17]))
        off += 32
    if sum(f[2] for f in fields) + 1 != rlen:
        raise MalformedRecord(f"{path}: field widths do not add up to record length {rlen}", 10)
    rows = []
    for k in range(nrec):
        start = hlen + k * rlen
        if start + rlen > len(data):
            raise MalformedRecord(f"{path}: record {k} truncated", start)
        if data[start:start + 1] == b"*":
            # deleted row; keep position so it still pairs with its shape
            rows.append(None)
            continue
        pos = start + 1
        row = {}
        for name, ftype, width, dec in fields:
            row[name] = _field_value(data[pos:pos + width], ftype, dec, enc, str(path), pos)
            pos += width
        rows.append(row)
    return [f[0] for f in fields], rows


def prj_crs_tag(path: str | Path) -> str:
    prj = Path(path).with_suffix(".prj")
    if not prj.exists():
        return "unknown"
    wkt = prj.read_text(encoding="utf-8", errors="replace").strip()
    if wkt.upper().startswith("GEOGCS") or wkt.upper().startswith("GEOGCRS"):
        return "lonlat"
    m = re.search(r"UTM[ _]?zone[ _]?(\d{1,2})\s*([NS])", wkt, re.IGNORECASE)
    if m:
        return utm.crs_tag(int(m.group(1)), m.group(2).upper() == "S")
    return "projected"


def read_shapefile(path: str | Path, id_field: str | None = None, utm_zone: int | None = None,
                   south: bool = False) -> GeoLayer:
    """Read ``path`` (.shp) with its sibling .dbf.

    Unit ids come from the ``id_field`` column, else the record position.
    Deleted DBF rows are skipped together with their shapes. Geographic
    input (.prj says GEOGCS) is projected when ``utm_zone`` is given.
    """
    shp = Path(path).with_suffix(".shp")
    dbf = shp.with_suffix(".dbf")
    if not dbf.exists():
        raise FileNotFoundError(f"{dbf} not found next to {shp}")
    shapes = read_shp(shp)
    columns, rows = read_dbf(dbf)
    if len(shapes) != len(rows):
        raise MalformedRecord(f"{shp}: {len(shapes)} shapes but {len(rows)} DBF records", 0)
    if id_field is not None and id_field not in columns:
        raise KeyError(f"id field {id_field!r} not in {columns}")
    tag = prj_crs_tag(shp)
    units = []
    for k, (g, row) in enumerate(zip(shapes, rows)):
        if row is None:
            continue
        if tag == "lonlat" and utm_zone is not None:
            g = _project(g, utm_zone, south)
        uid = row[id_field] if id_field else k
        units.append(Unit(str(uid), g, row))
    if tag == "lonlat" and utm_zone is not None:
        tag = utm.crs_tag(utm_zone, south)
    return GeoLayer(units, tag)


def _project(g: MultiPolygon, zone: int, south: bool) -> MultiPolygon:
    def ring(coords):
        return [utm.utm_project(x, y, zone, south) for x, y in coords]
    return MultiPolygon([geom.polygon(ring(p.exterior.coords), [ring(h.coords) for h in p.interiors])
                         for p in geom.polygonal_parts(g)])
