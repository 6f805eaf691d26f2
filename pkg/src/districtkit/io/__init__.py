"""Readers and writers: shapefiles, GeoJSON, graph JSON, CSV and snapshots."""
from .geojson import read_geojson, write_geojson
from .graphjson import read_graph_json, write_graph_json
from .shapefile import read_shapefile
from .tables import SnapshotWriter, read_snapshots, write_csv


def read_layer(path, id_field=None, utm_zone=None, south=False):
    """Read a .shp or .geojson/.json layer by extension."""
    from pathlib import Path

    suffix = Path(path).suffix.lower()
    if suffix == ".shp":
        return read_shapefile(path, id_field, utm_zone, south)
    if suffix in (".geojson", ".json"):
        return read_geojson(path, id_field, utm_zone, south)
    raise ValueError(f"unsupported layer format {suffix!r} ({path})")


__all__ = [
    "SnapshotWriter", "read_geojson", "read_graph_json", "read_layer", "read_shapefile",
    "read_snapshots", "write_csv", "write_geojson", "write_graph_json",
]
