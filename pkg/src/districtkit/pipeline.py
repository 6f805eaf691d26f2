"""Per-state build: repair layers, move data onto base precincts, emit the graph.

Stages run in a fixed order and halt at the first failure, which is
re-raised as :class:`BuildError` naming the stage. Every repair action
and every renamed column goes into the build log.
"""
from __future__ import annotations

import json
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from . import schema
from .assign import aggregate, assign_by_largest_overlap, nest_in_counties, prorate
from .errors import (
    AmbiguousDistrictColumn, BuildError, ConfigError, DistrictkitError, MissingColumn, MissingDistrictColumn,
    NonStatewideRace, NotClean, PopulationNotConserved, UnassignedPrecinct,
)
from .graph import DualGraph, build_graph, mend_small_rook
from .io import read_layer, write_graph_json
from .layer import GeoLayer
from .repair import RepairOptions, smart_repair

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

log = logging.getLogger(__name__)

ELECTION_RTOL = 1e-6


# configuration ---------------------------------------------------------------

@dataclass
class Dataset:
    path: Path
    id_field: str | None = None


@dataclass
class ElectionSpec:
    data: Dataset
    type: str
    year: int
    races: list


@dataclass
class DistrictSpec:
    data: Dataset
    kind: str
    column: str | None = None


@dataclass
class Tolerances:
    snap_grid: float = 1e-6
    area_tol: float = 1.0
    min_perim: float = 1.0
    drop_above: float | None = None
    max_passes: int = 10


@dataclass
class PipelineConfig:
    name: str
    census: Dataset
    census_columns: list
    weight: str
    base_election: ElectionSpec
    counties: Dataset | None = None
    county_column: str = "COUNTYFP"
    elections: list = field(default_factory=list)
    districts: list = field(default_factory=list)
    tolerances: Tolerances = field(default_factory=Tolerances)
    strict_population: bool = True
    utm_zone: int | None = None
    south: bool = False
    output: Path | None = None
    log: Path | None = None


def _get(table: dict, key: str, where: str, kind, required=True, default=None):
    if key not in table:
        if required:
            raise ConfigError(f"{where}.{key}: required key missing")
        return default
    v = table[key]
    if kind is float and isinstance(v, int) and not isinstance(v, bool):
        v = float(v)
    if not isinstance(v, kind) or (kind is int and isinstance(v, bool)):
        raise ConfigError(f"{where}.{key}: expected {getattr(kind, '__name__', kind)}, got {v!r}")
    return v


def _dataset(table: dict, where: str, base: Path) -> Dataset:
    path = _get(table, "path", where, str)
    return Dataset(base / path, _get(table, "id_field", where, str, required=False))


def _str_list(table, key, where, required=True):
    v = _get(table, key, where, list, required, default=[])
    if not all(isinstance(x, str) for x in v):
        raise ConfigError(f"{where}.{key}: expected a list of strings")
    return list(v)


def _election(table: dict, where: str, base: Path) -> ElectionSpec:
    etype = _get(table, "type", where, str)
    if etype not in schema.ELECTION_TYPES:
        raise ConfigError(f"{where}.type: must be one of {schema.ELECTION_TYPES}, got {etype!r}")
    year = _get(table, "year", where, int)
    races = _str_list(table, "races", where)
    if not races:
        raise ConfigError(f"{where}.races: at least one race required")
    for r in races:
        if len(r) != 3 or not r.isupper():
            raise ConfigError(f"{where}.races: {r!r} is not a three-letter office code")
    return ElectionSpec(_dataset(table, where, base), etype, year, races)


def parse_config(doc: dict, base: Path = Path(".")) -> PipelineConfig:
    state = _get(doc, "state", "", dict)
    census = _get(doc, "census", "", dict)
    cols = _str_list(census, "columns", "census")
    unknown = [c for c in cols if c not in schema.CENSUS_COLUMNS]
    if unknown:
        raise ConfigError(f"census.columns: not canonical census names: {unknown}")
    tol_doc = _get(doc, "tolerances", "", dict, required=False, default={})
    tol = Tolerances(
        snap_grid=_get(tol_doc, "snap_grid", "tolerances", float, False, 1e-6),
        area_tol=_get(tol_doc, "area_tol", "tolerances", float, False, 1.0),
        min_perim=_get(tol_doc, "min_perim", "tolerances", float, False, 1.0),
        drop_above=_get(tol_doc, "drop_above", "tolerances", float, False, None),
        max_passes=_get(tol_doc, "max_passes", "tolerances", int, False, 10),
    )
    if tol.snap_grid <= 0 or tol.area_tol < 0 or tol.min_perim < 0:
        raise ConfigError("tolerances: snap_grid must be positive, area_tol and min_perim non-negative")
    counties = None
    county_col = "COUNTYFP"
    if "counties" in doc:
        ct = _get(doc, "counties", "", dict)
        counties = _dataset(ct, "counties", base)
        county_col = _get(ct, "column", "counties", str, False, "COUNTYFP")
    elections = []
    for k, e in enumerate(_get(doc, "elections", "", list, False, [])):
        if not isinstance(e, dict):
            raise ConfigError(f"elections[{k}]: expected a table")
        elections.append(_election(e, f"elections[{k}]", base))
    districts = []
    for k, d in enumerate(_get(doc, "districts", "", list, False, [])):
        where = f"districts[{k}]"
        if not isinstance(d, dict):
            raise ConfigError(f"{where}: expected a table")
        kind = _get(d, "kind", where, str)
        if kind not in schema.DISTRICT_KINDS:
            raise ConfigError(f"{where}.kind: must be one of {schema.DISTRICT_KINDS}, got {kind!r}")
        districts.append(DistrictSpec(_dataset(d, where, base), kind, _get(d, "column", where, str, False)))
    kinds = [d.kind for d in districts]
    if len(set(kinds)) != len(kinds):
        raise ConfigError(f"districts: kinds must be unique, got {kinds}")
    zone = _get(state, "utm_zone", "state", int, False)
    if zone is not None and not 1 <= zone <= 60:
        raise ConfigError(f"state.utm_zone: {zone} outside 1..60")
    output = _get(state, "output", "state", str, False)
    logp = _get(state, "log", "state", str, False)
    return PipelineConfig(
        name=_get(state, "name", "state", str),
        census=_dataset(census, "census", base),
        census_columns=cols,
        weight=_get(census, "weight", "census", str, False, "TOTPOP"),
        strict_population=_get(census, "strict_population", "census", bool, False, True),
        base_election=_election(_get(doc, "base_election", "", dict), "base_election", base),
        counties=counties,
        county_column=county_col,
        elections=elections,
        districts=districts,
        tolerances=tol,
        utm_zone=zone,
        south=_get(state, "south", "state", bool, False, False),
        output=base / output if output else None,
        log=base / logp if logp else None,
    )


def load_config(path: str | Path) -> PipelineConfig:
    path = Path(path)
    try:
        doc = tomllib.loads(path.read_text(encoding="utf-8"))
    except tomllib.TOMLDecodeError as e:
        raise ConfigError(f"{path}: {e}") from None
    except OSError as e:
        raise ConfigError(f"{path}: {e.strerror}") from None
    return parse_config(doc, path.parent)


# build log ---------------------------------------------------------------------

class BuildLog:
    """Append-only list of build events."""

    def __init__(self):
        self.entries: list[dict] = []

    def add(self, stage: str, action: str, **info) -> None:
        self.entries.append({"stage": stage, "action": action, **info})

    def extend(self, stage: str, layer: str, actions: list[dict]) -> None:
        for a in actions:
            a = dict(a)
            self.add(stage, a.pop("action"), layer=layer, **a)

    def to_json(self) -> str:
        return json.dumps(self.entries, indent=1, allow_nan=False, default=str) + "\n"

    def to_text(self) -> str:
        lines = []
        for e in self.entries:
            rest = " ".join(f"{k}={_fmt(v)}" for k, v in e.items() if k not in ("stage", "action"))
            lines.append(f"[{e['stage']}] {e['action']} {rest}".rstrip())
        return "\n".join(lines) + "\n"

    def write(self, stem: str | Path) -> None:
        stem = Path(stem)
        Path(f"{stem}.txt").write_text(self.to_text(), encoding="utf-8")
        Path(f"{stem}.json").write_text(self.to_json(), encoding="utf-8")


def _fmt(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return ",".join(map(str, v))
    return str(v)


# stage operations ----------------------------------------------------------------

def rename_district_column(layer: GeoLayer, kind: str, override: str | None = None,
                           build_log: BuildLog | None = None) -> GeoLayer:
    """Rename the layer's district id column to ``kind`` and normalize its values."""
    if kind not in schema.DISTRICT_KINDS:
        raise ValueError(f"unknown district kind {kind!r}")
    cols = layer.columns
    if override is not None:
        if override not in cols:
            raise MissingDistrictColumn(f"override column {override!r} not in layer (have {cols})")
        source = override
    else:
        found = [c for c in schema.DISTRICT_CANDIDATES if c in cols]
        if not found and kind in cols:
            found = [kind]
        if len(found) > 1:
            raise AmbiguousDistrictColumn(f"several district id columns {found}; set 'column' in the config")
        if not found:
            raise MissingDistrictColumn(f"no district id column among {list(schema.DISTRICT_CANDIDATES)} (have {cols})")
        source = found[0]
    values = {k: schema.normalize_district_id(v) for k, v in layer.column(source).items()}
    out = layer.with_columns({kind: values})
    if source != kind:
        out = out.select_columns([c for c in out.columns if c != source])
    if build_log is not None:
        build_log.add("districts", "rename_column", **{"from": source, "to": kind})
    return out


def election_columns(layer: GeoLayer, etype: str, year: int, races, build_log: BuildLog | None = None,
                     stage: str = "elections") -> GeoLayer:
    """Canonical election columns for the requested races, summed by party.

    Returns a layer holding only the canonical columns.
    """
    yy = f"{year % 100:02d}"
    for r in races:
        if not schema.is_statewide(r):
            raise NonStatewideRace(f"race {r!r} is not a statewide office; only statewide races are included")
    groups: dict[str, list[str]] = {}
    for c in layer.columns:
        parsed = schema.parse_election_column(c)
        if parsed is None:
            continue
        t, y, office, party = parsed
        if t == etype and y == yy and office in races:
            groups.setdefault(schema.election_name(t, year, office, party), []).append(c)
    missing = [r for r in races if not any(n[3:6] == r for n in groups)]
    if missing:
        raise MissingColumn(f"no {etype}{yy} columns for races {missing} (have {layer.columns})")
    values = {}
    for name, src in groups.items():
        col = {}
        for u in layer:
            vals = [u.attributes[s] or 0 for s in src]
            col[u.unit_id] = sum(vals) if all(isinstance(v, int) for v in vals) else math.fsum(vals)
        values[name] = col
        if build_log is not None:
            build_log.add(stage, "rename_column", **{"from": src, "to": name})
    return layer.select_columns([]).with_columns(values)


def add_election(base: GeoLayer, election: GeoLayer, blocks: GeoLayer, spec: ElectionSpec, weight: str = "TOTPOP",
                 build_log: BuildLog | None = None) -> GeoLayer:
    """Prorate a statewide election onto the base precincts through the blocks."""
    canon = election_columns(election, spec.type, spec.year, spec.races, build_log)
    cols = canon.columns
    same = base.ids == canon.ids and all(a.geometry.equals_exact(b.geometry, 0) for a, b in zip(base, canon))
    if same:
        return base.with_columns({c: canon.column(c) for c in cols})
    table = prorate(canon, cols, blocks, weight, base)
    for c in cols:
        expected = math.fsum(float(v) for v in canon.column(c).values())
        got = table.total(c)
        if not math.isclose(got, expected, rel_tol=ELECTION_RTOL, abs_tol=ELECTION_RTOL):
            raise PopulationNotConserved(c, expected, got, table.unmatched_units)
    if build_log is not None:
        build_log.add("elections", "prorate", columns=cols, weight=weight)
    return base.with_columns({c: table.column(c) for c in cols})


def add_population(base: GeoLayer, blocks: GeoLayer, columns, strict: bool = True,
                   build_log: BuildLog | None = None) -> GeoLayer:
    """Sum block census columns onto the precincts they overlap most."""
    a = assign_by_largest_overlap(blocks, base)
    table = aggregate(blocks, a, columns, strict=strict)
    if build_log is not None:
        build_log.add("population", "aggregate", columns=list(columns), blocks=len(blocks),
                      unmatched=list(a.unmatched))
    return base.with_columns({c: table.column(c) for c in columns})


def add_districts(base: GeoLayer, districts: GeoLayer, kind: str, column: str | None = None,
                  build_log: BuildLog | None = None) -> GeoLayer:
    """Give every base precinct the id of the district it overlaps most."""
    d = rename_district_column(districts, kind, column, build_log)
    a = assign_by_largest_overlap(base, d)
    if a.unmatched:
        raise UnassignedPrecinct(f"precincts overlapping no {kind} district: {a.unmatched[:20]}")
    ids = d.column(kind)
    return base.with_columns({kind: {p: ids[t] for p, t in a.mapping.items()}})


# build --------------------------------------------------------------------------

@dataclass
class BuildResult:
    graph: DualGraph
    log: BuildLog
    layer: GeoLayer


def _stage(name):
    def wrap(fn):
        def run(*a, **kw):
            try:
                return fn(*a, **kw)
            except BuildError:
                raise
            except (DistrictkitError, OSError) as e:
                raise BuildError(name, e) from e
        return run
    return wrap


def _read(ds: Dataset, cfg: PipelineConfig) -> GeoLayer:
    return read_layer(ds.path, ds.id_field, cfg.utm_zone, cfg.south)


def build_state(cfg: PipelineConfig, blog: BuildLog | None = None) -> BuildResult:
    """Run every stage and return the mended rook graph with its build log."""
    blog = blog if blog is not None else BuildLog()
    tol = cfg.tolerances
    opts = RepairOptions(snap_grid=tol.snap_grid, area_tol=tol.area_tol, drop_above=tol.drop_above,
                         max_passes=tol.max_passes)

    @_stage("load")
    def load():
        layers = {"census": _read(cfg.census, cfg), "base": _read(cfg.base_election.data, cfg)}
        if cfg.counties:
            layers["counties"] = _read(cfg.counties, cfg)
        for k, e in enumerate(cfg.elections):
            layers[f"election{k}"] = _read(e.data, cfg)
        for d in cfg.districts:
            layers[d.kind] = _read(d.data, cfg)
        for name, layer in layers.items():
            blog.add("load", "read", layer=name, units=len(layer), crs=layer.crs_tag)
        return layers

    @_stage("repair")
    def repair(layers):
        out, dropped = {}, {}
        for name, layer in layers.items():
            actions: list = []
            fixed, report = smart_repair(layer, opts, actions)
            blog.extend("repair", name, actions)
            if not report.clean:
                raise NotClean(report)
            out[name] = fixed
            dropped[name] = [g.polygon for g in report.dropped]
            for g in report.dropped:
                blog.add("repair", "drop_region", layer=name, area=g.area)
        return out, dropped

    @_stage("nest")
    def nest(base, counties):
        actions: list = []
        out = nest_in_counties(base, counties, cfg.county_column, actions=actions)
        blog.extend("nest", "base", actions)
        return out

    @_stage("base_election")
    def base_election(base):
        e = cfg.base_election
        canon = election_columns(base, e.type, e.year, e.races, blog, "base_election")
        keep = [c for c in base.columns if c == cfg.county_column]
        return base.select_columns(keep).with_columns({c: canon.column(c) for c in canon.columns})

    @_stage("elections")
    def elections(base, layers):
        for k, e in enumerate(cfg.elections):
            base = add_election(base, layers[f"election{k}"], layers["census"], e, cfg.weight, blog)
        return base

    @_stage("population")
    def population(base, blocks):
        return add_population(base, blocks, cfg.census_columns, cfg.strict_population, blog)

    @_stage("districts")
    def districts(base, layers):
        for d in cfg.districts:
            dl = layers[d.kind]
            if d.kind == "CD":
                n = len(set(rename_district_column(dl, "CD", d.column).column("CD").values()))
                if n == 1:
                    blog.add("districts", "omit_column", column="CD", reason="single-district state")
                    continue
            base = add_districts(base, dl, d.kind, d.column, blog)
        return base

    @_stage("graph")
    def graph(base, exclude):
        g = build_graph(base, "rook", tol.area_tol, tol.snap_grid, exclude=exclude)
        blog.add("graph", "build", nodes=len(g), edges=g.n_edges, queen_contacts=len(g.queen_contacts))
        m = mend_small_rook(g, tol.min_perim)
        for u, v, p in m.demoted[len(g.demoted):]:
            blog.add("graph", "demote_edge", u=u, v=v, shared_perim=p)
        return m

    @_stage("schema")
    def check(g: DualGraph):
        required = set(cfg.census_columns) | set(schema.BOUNDARY_COLUMNS)
        for n in g.nodes:
            attrs = g.node_attrs(n)
            missing = required - set(attrs)
            if missing:
                raise MissingColumn(f"node {n!r} lacks columns {sorted(missing)}")
            problems = schema.check_columns(attrs)
            if problems:
                raise MissingColumn(f"node {n!r}: {'; '.join(problems)}")

    layers = load()
    layers, dropped = repair(layers)
    base = layers["base"]
    if "counties" in layers:
        base = nest(base, layers["counties"])
    base = base_election(base)
    base = elections(base, layers)
    base = population(base, layers["census"])
    base = districts(base, layers)
    g = graph(base, dropped["base"])
    check(g)
    blog.add("emit", "graph", nodes=len(g), edges=g.n_edges, columns=sorted(g.node_attrs(g.nodes[0])) if len(g) else [])
    return BuildResult(g, blog, base)


def run_build(config_path: str | Path, output: str | Path | None = None, log_stem: str | Path | None = None) -> BuildResult:
    """Load a config, build, and write the graph JSON and build logs.

    On failure the partial build log is still written, ending with the
    halting error.
    """
    cfg = load_config(config_path)
    out = Path(output) if output else cfg.output or Path(config_path).with_suffix(".json")
    stem = Path(log_stem) if log_stem else cfg.log or Path(f"{out.with_suffix('')}_build")
    if Path(f"{stem}.json").resolve() == out.resolve():
        raise ConfigError(f"build log {stem}.json would overwrite the graph output {out}")
    out.parent.mkdir(parents=True, exist_ok=True)
    stem.parent.mkdir(parents=True, exist_ok=True)
    blog = BuildLog()
    try:
        result = build_state(cfg, blog)
    except BuildError as e:
        log.error("build halted: %s", e)
        blog.add(e.stage, "halt", error=f"{type(e.cause).__name__}: {e.cause}")
        blog.write(stem)
        raise
    write_graph_json(result.graph, out)
    blog.write(stem)
    return result


def summary(result: BuildResult) -> dict[str, Any]:
    g = result.graph
    return {"nodes": len(g), "edges": g.n_edges, "log_entries": len(result.log.entries)}
