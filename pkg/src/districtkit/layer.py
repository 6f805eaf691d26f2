"""GeoLayer: an ordered collection of polygonal units with attribute tables."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Any, Iterable, Iterator, Mapping

from shapely.geometry import MultiPolygon
from shapely.geometry.base import BaseGeometry

from . import geom
from .errors import GeometryCollapsed, InvalidLayer

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class Unit:
    unit_id: str
    geometry: MultiPolygon
    attributes: Mapping[str, Any] = field(default_factory=dict)


class GeoLayer:
    """Units (blocks, precincts, districts, counties) in one projected CRS.

    Layers are treated as immutable values: every transformation returns a
    new layer and leaves its input untouched.
    """

    def __init__(self, units: Iterable[Unit], crs_tag: str = "unknown"):
        self.units: list[Unit] = []
        for u in units:
            g = u.geometry if isinstance(u.geometry, MultiPolygon) else geom.as_multipolygon(u.geometry)
            self.units.append(Unit(str(u.unit_id), g, dict(u.attributes)))
        self.crs_tag = crs_tag
        self._index = {u.unit_id: i for i, u in enumerate(self.units)}
        if len(self._index) != len(self.units):
            seen, dup = set(), []
            for u in self.units:
                if u.unit_id in seen:
                    dup.append(u.unit_id)
                seen.add(u.unit_id)
            raise InvalidLayer(f"duplicate unit ids: {dup[:10]}")
        if self.units:
            cols = set(self.units[0].attributes)
            for u in self.units[1:]:
                if set(u.attributes) != cols:
                    raise InvalidLayer(
                        f"unit {u.unit_id!r} has columns {sorted(u.attributes)}, expected {sorted(cols)}"
                    )

    @classmethod
    def from_records(cls, records: Iterable[tuple[str, BaseGeometry, Mapping[str, Any]]], crs_tag="unknown"):
        return cls((Unit(uid, g, attrs) for uid, g, attrs in records), crs_tag)

    def __len__(self) -> int:
        return len(self.units)

    def __iter__(self) -> Iterator[Unit]:
        return iter(self.units)

    def __getitem__(self, unit_id: str) -> Unit:
        return self.units[self._index[unit_id]]

    def __contains__(self, unit_id) -> bool:
        return unit_id in self._index

    def __eq__(self, other) -> bool:
        if not isinstance(other, GeoLayer):
            return NotImplemented
        return self.crs_tag == other.crs_tag and len(self) == len(other) and all(
            a.unit_id == b.unit_id and a.attributes == b.attributes and a.geometry.equals_exact(b.geometry, 0.0)
            for a, b in zip(self.units, other.units)
        )

    def __repr__(self) -> str:
        return f"GeoLayer({len(self)} units, crs={self.crs_tag!r}, columns={self.columns})"

    @property
    def ids(self) -> list[str]:
        return [u.unit_id for u in self.units]

    @property
    def geometries(self) -> list[MultiPolygon]:
        return [u.geometry for u in self.units]

    @property
    def columns(self) -> list[str]:
        return list(self.units[0].attributes) if self.units else []

    def column(self, name: str) -> dict[str, Any]:
        return {u.unit_id: u.attributes[name] for u in self.units}

    def with_geometries(self, new: Mapping[str, BaseGeometry]) -> "GeoLayer":
        """Replace geometries of the listed units; attributes are untouched."""
        return GeoLayer(
            (Unit(u.unit_id, geom.as_multipolygon(new[u.unit_id]), u.attributes) if u.unit_id in new else u
             for u in self.units),
            self.crs_tag,
        )

    def with_columns(self, values: Mapping[str, Mapping[str, Any]], default=None) -> "GeoLayer":
        """Add or overwrite columns given as ``{column: {unit_id: value}}``."""
        out = []
        for u in self.units:
            attrs = dict(u.attributes)
            for col, per_unit in values.items():
                attrs[col] = per_unit.get(u.unit_id, default)
            out.append(Unit(u.unit_id, u.geometry, attrs))
        return GeoLayer(out, self.crs_tag)

    def rename_columns(self, mapping: Mapping[str, str]) -> "GeoLayer":
        return GeoLayer(
            (Unit(u.unit_id, u.geometry, {mapping.get(k, k): v for k, v in u.attributes.items()})
             for u in self.units),
            self.crs_tag,
        )

    def select_columns(self, keep: Iterable[str]) -> "GeoLayer":
        keep = list(keep)
        return GeoLayer(
            (Unit(u.unit_id, u.geometry, {k: u.attributes[k] for k in keep}) for u in self.units),
            self.crs_tag,
        )

    def drop_units(self, ids: Iterable[str]) -> "GeoLayer":
        ids = set(ids)
        return GeoLayer((u for u in self.units if u.unit_id not in ids), self.crs_tag)


def snap_points(layer: GeoLayer, grid: float = geom.DEFAULT_SNAP_GRID, actions: list | None = None) -> GeoLayer:
    """Round every coordinate of the layer to a multiple of ``grid``.

    Zero-length segments are removed and rings that degenerate are dropped;
    each drop is logged and, when ``actions`` is given, appended to it.
    Idempotent bit-for-bit.
    """
    if grid <= 0:
        raise ValueError("grid must be positive")
    out = []
    for u in layer.units:
        snapped, dropped = geom.snap_geometry(u.geometry, grid)
        if snapped.is_empty and not u.geometry.is_empty:
            raise GeometryCollapsed(u.unit_id, grid)
        if dropped:
            log.warning("unit %s: %d degenerate ring(s) dropped at grid %g", u.unit_id, dropped, grid)
            if actions is not None:
                actions.append({"action": "drop_degenerate_rings", "unit": u.unit_id, "rings": dropped})
        out.append(Unit(u.unit_id, snapped, u.attributes))
    return GeoLayer(out, layer.crs_tag)
