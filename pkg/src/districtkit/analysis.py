"""Seats-won tallies over an ensemble and the enacted plan's rank within it."""
from __future__ import annotations

import csv
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

from .errors import EmptyEnsemble, MissingColumn, ParseError


@dataclass(frozen=True)
class ElectionSpec:
    """A two-party race: Democratic and Republican vote columns."""

    dem_col: str
    rep_col: str
    label: str = ""

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        return self.dem_col[:-1] if self.dem_col.endswith("D") else self.dem_col

    @classmethod
    def parse(cls, text: str) -> "ElectionSpec":
        """``DEM:REP`` or ``DEM:REP:LABEL``."""
        parts = [t.strip() for t in text.split(":")]
        if len(parts) not in (2, 3) or not all(parts):
            raise ValueError(f"election must look like DEM:REP or DEM:REP:LABEL, got {text!r}")
        return cls(parts[0], parts[1], parts[2] if len(parts) == 3 else "")


def _vote_lists(graph, e: ElectionSpec) -> tuple[list, list]:
    for col in (e.dem_col, e.rep_col):
        if not graph.has_column(col):
            raise MissingColumn(f"vote column {col!r} missing on some nodes")
    return graph.column(e.dem_col), graph.column(e.rep_col)


def district_votes(p, e: ElectionSpec) -> dict:
    """``{label: (dem, rep)}`` sums for every district of a partition."""
    dem, rep = _vote_lists(p.graph, e)
    out = {}
    for lab in p.districts:
        idx = p._members[lab]
        out[lab] = (sum(dem[i] for i in idx), sum(rep[i] for i in idx))
    return out


def seats_won(p, e: ElectionSpec) -> int:
    """Districts where Democratic votes strictly exceed Republican votes."""
    return sum(1 for d, r in district_votes(p, e).values() if d > r)


class SeatTally:
    """Chain observer recording seats won at every step."""

    def __init__(self, e: ElectionSpec):
        self.election = e
        self.counts: list[int] = []
        self._cols = None

    def __call__(self, step: int, p) -> None:
        if self._cols is None:
            self._cols = _vote_lists(p.graph, self.election)
        dem, rep = self._cols
        won = 0
        for idx in p._members.values():
            if sum(dem[i] for i in idx) > sum(rep[i] for i in idx):
                won += 1
        self.counts.append(won)


def rank_counts(seat_counts: Sequence[int], enacted: int) -> tuple[int, int, int]:
    below = sum(1 for s in seat_counts if s < enacted)
    equal = sum(1 for s in seat_counts if s == enacted)
    return below, equal, len(seat_counts) - below - equal


def outlier_rank(seat_counts: Sequence[int], enacted: int) -> float:
    """Mid-rank percentile of ``enacted``: (below + equal / 2) / N."""
    if not seat_counts:
        raise EmptyEnsemble("cannot rank against an empty ensemble")
    below, equal, _ = rank_counts(seat_counts, enacted)
    return (below + equal / 2) / len(seat_counts)


@dataclass
class EnsembleStats:
    seat_counts: list = field(default_factory=list)
    enacted_seats: int | None = None
    label: str = ""

    @property
    def histogram(self) -> dict[int, int]:
        return dict(sorted(Counter(self.seat_counts).items()))

    @property
    def steps(self) -> int:
        return len(self.seat_counts)

    @property
    def rank(self) -> float | None:
        if self.enacted_seats is None:
            return None
        return outlier_rank(self.seat_counts, self.enacted_seats)

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        """Pool two ensembles; the histogram of the result is the sum of both."""
        if (self.enacted_seats is not None and other.enacted_seats is not None
                and self.enacted_seats != other.enacted_seats):
            raise ValueError("cannot merge ensembles with different enacted plans")
        enacted = self.enacted_seats if self.enacted_seats is not None else other.enacted_seats
        return EnsembleStats(self.seat_counts + other.seat_counts, enacted, self.label or other.label)


def write_seat_csv(path: str | Path, tallies: Sequence[SeatTally], start: int = 1) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["step"] + [t.election.name for t in tallies])
        n = len(tallies[0].counts) if tallies else 0
        for k in range(n):
            w.writerow([start + k] + [t.counts[k] for t in tallies])


def read_seat_csv(path: str | Path, column: str | None = None) -> tuple[str, list[int]]:
    """Seat counts from a chain CSV; ``column`` defaults to the first election column."""
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ParseError(f"{path}: empty file", 1, 1)
    header = rows[0]
    names = [h for h in header if h not in ("step", "chain")]
    if not names:
        raise ParseError(f"{path}: no seat columns in header {header}", 1, 1)
    col = column or names[0]
    if col not in header:
        raise MissingColumn(f"{path}: no column {col!r} (have {names})")
    k = header.index(col)
    counts = []
    for line, row in enumerate(rows[1:], start=2):
        if len(row) != len(header):
            raise ParseError(f"{path}: expected {len(header)} fields, got {len(row)}", line, 1)
        try:
            v = int(row[k])
        except ValueError:
            raise ParseError(f"{path}: seat count {row[k]!r} is not an integer", line, k + 1) from None
        if v < 0:
            raise ParseError(f"{path}: negative seat count {v}", line, k + 1)
        counts.append(v)
    return col, counts


def histogram_rows(stats: EnsembleStats) -> list[tuple[int, int, str]]:
    """``(seat, frequency, marker)`` rows; the enacted seat count is listed even at frequency 0."""
    if not stats.seat_counts:
        raise EmptyEnsemble("no seat counts to tabulate")
    hist = stats.histogram
    if stats.enacted_seats is not None:
        hist.setdefault(stats.enacted_seats, 0)
    return [(s, hist[s], "enacted" if s == stats.enacted_seats else "-") for s in sorted(hist)]


def emit_histogram(stats: EnsembleStats, csv_path: str | Path, svg_path: str | Path | None = None,
                   rank_path: str | Path | None = None) -> list[Path]:
    """Write the histogram CSV, the SVG bar chart and (with an enacted plan) a rank CSV."""
    rows = histogram_rows(stats)
    written = []
    with open(csv_path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(["seat", "frequency", "marker"])
        w.writerows(rows)
    written.append(Path(csv_path))
    if rank_path is not None and stats.enacted_seats is not None:
        below, equal, above = rank_counts(stats.seat_counts, stats.enacted_seats)
        with open(rank_path, "w", newline="", encoding="utf-8") as f:
            w = csv.writer(f)
            w.writerow(["enacted", "below", "equal", "above", "n", "rank"])
            w.writerow([stats.enacted_seats, below, equal, above, stats.steps, repr(stats.rank)])
        written.append(Path(rank_path))
    if svg_path is not None:
        from .plotting import histogram_svg

        histogram_svg(rows, svg_path, stats.label)
        written.append(Path(svg_path))
    return written


def merge_all(stats: Iterable[EnsembleStats]) -> EnsembleStats:
    out = EnsembleStats()
    for s in stats:
        out = out.merge(s)
    return out
