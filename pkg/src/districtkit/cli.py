"""``districtkit`` command line.

Exit codes: 0 on success, 1 on data or validation errors (including a
dirty ``doctor`` result), 2 on usage errors. Progress goes to stderr;
data goes to files or stdout.
"""
from __future__ import annotations

import csv
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from . import graph as graph_mod
from . import repair as repair_mod
from .analysis import ElectionSpec, EnsembleStats, SeatTally, emit_histogram, read_seat_csv, seats_won
from .errors import DistrictkitError
from .io import SnapshotWriter, read_graph_json, read_layer, write_geojson, write_graph_json

log = logging.getLogger("districtkit")

CONTEXT = {"help_option_names": ["-h", "--help"], "max_content_width": 88, "terminal_width": 88}


class _Group(click.Group):
    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (DistrictkitError, OSError) as e:
            raise click.ClickException(f"{type(e).__name__}: {e}") from e


def _layer(path, id_field, utm_zone, south):
    try:
        return read_layer(path, id_field, utm_zone, south)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="INPUT") from None


def _layer_options(f):
    f = click.option("--south", is_flag=True, help="UTM zone is in the southern hemisphere.")(f)
    f = click.option("--utm-zone", type=click.IntRange(1, 60), help="Project lon/lat input into this UTM zone.")(f)
    f = click.option("--id-field", help="Attribute holding unit ids (default: record position).")(f)
    return f


@click.group(name="districtkit", cls=_Group, context_settings=CONTEXT)
@click.option("-v", "--verbose", count=True, help="More progress output on stderr (repeatable).")
def cli(verbose):
    """Redistricting data preparation, ReCom ensembles and outlier analysis."""
    level = logging.WARNING - 10 * min(verbose, 2)
    logging.basicConfig(level=level, stream=sys.stderr, format="%(levelname)s %(name)s: %(message)s")


@cli.command()
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.option("--tolerance", type=click.FloatRange(min=0), default=repair_mod.DEFAULT_AREA_TOL, show_default=True,
              help="Ignore gaps and overlaps at or below this area (projected units squared).")
@click.option("--json", "as_json", is_flag=True, help="Print the full report as JSON.")
@_layer_options
def doctor(input, tolerance, as_json, id_field, utm_zone, south):
    """Check a layer for gaps and overlaps. Exits 1 if any are found."""
    layer = _layer(input, id_field, utm_zone, south)
    report = repair_mod.doctor(layer, tolerance)
    click.echo(report.to_json() if as_json else report.to_text())
    sys.exit(0 if report.clean else 1)


@cli.command()
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.argument("output", type=click.Path(dir_okay=False, writable=True))
@click.option("--snap-grid", type=click.FloatRange(min=0, min_open=True), default=repair_mod.geom.DEFAULT_SNAP_GRID,
              show_default=True, help="Vertex snapping grid.")
@click.option("--area-tol", type=click.FloatRange(min=0), default=repair_mod.DEFAULT_AREA_TOL, show_default=True,
              help="Area tolerance for the final check.")
@click.option("--drop-above", type=click.FloatRange(min=0), default=None,
              help="Leave gaps larger than this unfilled and report them as dropped.")
@click.option("--log", "log_path", type=click.Path(dir_okay=False), help="Write repair actions as JSON lines.")
@_layer_options
def repair(input, output, snap_grid, area_tol, drop_above, log_path, id_field, utm_zone, south):
    """Snap, resolve overlaps and fill gaps; write the result as GeoJSON."""
    layer = _layer(input, id_field, utm_zone, south)
    actions: list = []
    opts = repair_mod.RepairOptions(snap_grid=snap_grid, area_tol=area_tol, drop_above=drop_above)
    fixed, report = repair_mod.smart_repair(layer, opts, actions)
    write_geojson(fixed, output)
    if log_path:
        with open(log_path, "w", encoding="utf-8") as f:
            for a in actions:
                f.write(json.dumps(a, sort_keys=True, default=str) + "\n")
    click.echo(f"{len(actions)} repair actions; after repair: {report.to_text()}")
    sys.exit(0 if report.clean else 1)


@cli.command()
@click.argument("input", type=click.Path(exists=True, dir_okay=False))
@click.argument("output", type=click.Path(dir_okay=False, writable=True))
@click.option("--adjacency", type=click.Choice(["rook", "queen"]), default="rook", show_default=True,
              help="Edge rule: shared boundary only, or also point contact.")
@click.option("--area-tol", type=click.FloatRange(min=0), default=repair_mod.DEFAULT_AREA_TOL, show_default=True,
              help="Area tolerance of the cleanliness check.")
@click.option("--min-perim", type=click.FloatRange(min=0), default=graph_mod.DEFAULT_MIN_PERIM, show_default=True,
              help="Demote rook edges shorter than this to point contacts (0 disables).")
@_layer_options
def graph(input, output, adjacency, area_tol, min_perim, id_field, utm_zone, south):
    """Build the dual graph of a clean layer and write it as graph JSON."""
    layer = _layer(input, id_field, utm_zone, south)
    g = graph_mod.build_graph(layer, adjacency, area_tol)
    if min_perim > 0 and adjacency == "rook":
        g = graph_mod.mend_small_rook(g, min_perim)
    write_graph_json(g, output)
    click.echo(f"{len(g)} nodes, {g.n_edges} edges -> {output}")


@cli.command()
@click.argument("config", type=click.Path(exists=True, dir_okay=False))
@click.option("-o", "--output", type=click.Path(dir_okay=False), help="Graph JSON path (default from config).")
@click.option("--log-stem", type=click.Path(dir_okay=False),
              help="Build log path without extension; .txt and .json are written.")
def build(config, output, log_stem):
    """Run the data pipeline described by a TOML config."""
    from .pipeline import run_build, summary

    result = run_build(config, output, log_stem)
    s = summary(result)
    click.echo(f"built {s['nodes']} nodes, {s['edges']} edges ({s['log_entries']} log entries)")


def _run_one(graph_path, district_col, cfg_kwargs, elections, snapshot_path, snapshot_every):
    # top level so it can run in a worker process
    from .recom import ChainConfig, run_chain, seed_partition

    g = read_graph_json(graph_path)
    cfg = ChainConfig(**cfg_kwargs)
    seed = seed_partition(g, district_col, cfg.pop_col)
    enacted = [seats_won(seed, e) for e in elections]
    tallies = [SeatTally(e) for e in elections]
    observers = list(tallies)
    snap = None
    if snapshot_path:
        snap = SnapshotWriter(snapshot_path, g.nodes, snapshot_every)
        snap.write(0, seed.labels())
        observers.append(snap)
    try:
        summary = run_chain(g, district_col, cfg, observers)
    finally:
        if snap:
            snap.close()
    return summary.to_dict(), enacted, [t.counts for t in tallies]


@cli.command()
@click.argument("graph_json", type=click.Path(exists=True, dir_okay=False))
@click.option("--seed", type=int, required=True, help="RNG seed (required, no clock default).")
@click.option("--steps", type=click.IntRange(min=0), default=1000, show_default=True, help="ReCom steps per chain.")
@click.option("--epsilon", type=click.FloatRange(0, 1, max_open=True), default=0.02, show_default=True,
              help="Allowed relative deviation from the ideal district population.")
@click.option("--pop-col", default="TOTPOP", show_default=True, help="Node population column.")
@click.option("--district-col", default="CD", show_default=True, help="Column holding the seed plan.")
@click.option("--election", "elections", multiple=True, metavar="DEM:REP[:LABEL]",
              help="Tally seats won under this race (repeatable).")
@click.option("--tree-sampler", type=click.Choice(["mst", "ust"]), default="mst", show_default=True,
              help="Random-weight MST or uniform spanning tree (Wilson).")
@click.option("--audit-every", type=click.IntRange(min=0), default=100, show_default=True,
              help="Full invariant audit interval (0 disables).")
@click.option("--snapshot-every", type=click.IntRange(min=0), default=0, show_default=True,
              help="Write the plan every k steps to a snapshot file (0 disables).")
@click.option("--parallel-chains", type=click.IntRange(min=1), default=1, show_default=True,
              help="Independent chains with seeds SEED, SEED+1, ...")
@click.option("-o", "--out-dir", type=click.Path(file_okay=False), default=".", show_default=True,
              help="Directory for seats.csv, summary.json and snapshots.")
def chain(graph_json, seed, steps, epsilon, pop_col, district_col, elections, tree_sampler, audit_every,
          snapshot_every, parallel_chains, out_dir):
    """Run ReCom from the plan in --district-col and tally seats won."""
    try:
        specs = [ElectionSpec.parse(t) for t in elections]
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint="--election") from None
    names = [e.name for e in specs]
    if len(set(names)) != len(names):
        raise click.BadParameter(f"duplicate election labels {names}", param_hint="--election")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    jobs = []
    for i in range(parallel_chains):
        cfg = dict(pop_col=pop_col, epsilon=epsilon, steps=steps, seed=seed + i, tree_sampler=tree_sampler,
                   audit_every=audit_every)
        snap = None
        if snapshot_every:
            snap = out / ("snapshots.rle" if parallel_chains == 1 else f"snapshots_{i}.rle")
        jobs.append((graph_json, district_col, cfg, specs, snap, snapshot_every))
    if parallel_chains == 1:
        results = [_run_one(*jobs[0])]
    else:
        with ProcessPoolExecutor(max_workers=parallel_chains) as ex:
            results = list(ex.map(_run_one, *zip(*jobs)))

    with open(out / "seats.csv", "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["chain", "step"] + names)
        for i, (_, _, counts) in enumerate(results):
            for k in range(steps):
                w.writerow([i, k + 1] + [c[k] for c in counts])

    report = {"chains": [r[0] for r in results], "elections": {}}
    for j, e in enumerate(specs):
        stats = [EnsembleStats(list(r[2][j]), r[1][j], e.name) for r in results]
        merged = stats[0]
        for s in stats[1:]:
            merged = merged.merge(s)
        report["elections"][e.name] = {
            "dem_col": e.dem_col, "rep_col": e.rep_col, "enacted": merged.enacted_seats,
            "histogram": {str(k): v for k, v in merged.histogram.items()},
            "rank": merged.rank if merged.steps else None,
        }
    (out / "summary.json").write_text(json.dumps(report, indent=2, sort_keys=True) + "\n", encoding="utf-8")

    loops = sum(r[0]["self_loops"] for r in results)
    bad = sum(len(r[0]["violations"]) for r in results)
    click.echo(f"{parallel_chains} chain(s) x {steps} steps: {loops} self-loops, {bad} audit violations")
    for name, info in report["elections"].items():
        click.echo(f"{name}: enacted {info['enacted']} seats, rank {info['rank']}")
    if bad:
        raise click.ClickException(f"{bad} audit violations; see {out / 'summary.json'}")


@cli.command()
@click.argument("seats_csv", type=click.Path(exists=True, dir_okay=False))
@click.option("--enacted", type=click.IntRange(min=0), default=None, help="Seats won by the enacted plan.")
@click.option("--column", help="Election column to analyse (default: the first one).")
@click.option("--csv", "csv_out", type=click.Path(dir_okay=False), help="Histogram CSV (default: <input>_hist.csv).")
@click.option("--svg", "svg_out", type=click.Path(dir_okay=False), help="Histogram SVG (default: <input>_hist.svg).")
@click.option("--rank-csv", type=click.Path(dir_okay=False),
              help="Below/equal/above counts (default: <input>_rank.csv; needs --enacted).")
def analyze(seats_csv, enacted, column, csv_out, svg_out, rank_csv):
    """Histogram of seats won and the enacted plan's mid-rank."""
    col, counts = read_seat_csv(seats_csv, column)
    base = Path(seats_csv).with_suffix("")
    stats = EnsembleStats(counts, enacted, col)
    written = emit_histogram(stats, csv_out or f"{base}_hist.csv", svg_out or f"{base}_hist.svg",
                             rank_csv or f"{base}_rank.csv")
    for p in written:
        log.info("wrote %s", p)
    click.echo(f"{col}: {stats.steps} plans, histogram {stats.histogram}")
    if enacted is not None:
        click.echo(f"rank {stats.rank}")


def main(argv=None):
    cli.main(args=argv, prog_name="districtkit")


if __name__ == "__main__":
    main()
