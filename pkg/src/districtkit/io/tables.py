"""CSV tables and run-length-encoded plan snapshots.

Snapshot files are plain text::

    #districtkit-snapshots 1
    #nodes<TAB>id0<TAB>id1 ...
    <step><TAB><label>*<count> <label>*<count> ...

Each data line lists district labels in node order, run-length encoded;
``A*3 B*2`` means the first three nodes are in A and the next two in B.
Labels may not contain whitespace or ``*``.
"""
from __future__ import annotations

import csv
import re
from pathlib import Path
from typing import Iterable, Iterator, Sequence

from ..errors import ParseError

SNAPSHOT_MAGIC = "#districtkit-snapshots 1"
_BAD_LABEL = re.compile(r"[\s*]")


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        w.writerows(rows)


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    with open(path, newline="", encoding="utf-8") as f:
        rows = list(csv.reader(f))
    if not rows:
        raise ParseError(f"{path}: empty CSV", 1, 1)
    return rows[0], rows[1:]


def write_assignment(path: str | Path, assignment: dict) -> None:
    write_csv(path, ["node", "district"], ((n, d) for n, d in assignment.items()))


def encode_rle(labels: Sequence) -> str:
    out = []
    prev, run = None, 0
    for lab in labels:
        s = str(lab)
        if not s or _BAD_LABEL.search(s):
            raise ValueError(f"label {s!r} cannot be written to a snapshot")
        if s == prev:
            run += 1
        else:
            if run:
                out.append(f"{prev}*{run}")
            prev, run = s, 1
    if run:
        out.append(f"{prev}*{run}")
    return " ".join(out)


def decode_rle(text: str) -> list[str]:
    labels: list[str] = []
    for tok in text.split():
        lab, sep, count = tok.rpartition("*")
        if not sep or not lab or not count.isdigit():
            raise ValueError(f"bad run {tok!r}")
        labels.extend([lab] * int(count))
    return labels


class SnapshotWriter:
    """Chain observer that appends every ``every``-th plan to a snapshot file."""

    def __init__(self, path: str | Path, nodes: Sequence, every: int = 100):
        if every < 1:
            raise ValueError("snapshot interval must be at least 1")
        self.every = every
        self._f = open(path, "w", encoding="utf-8", newline="\n")
        self._f.write(SNAPSHOT_MAGIC + "\n")
        self._f.write("#nodes\t" + "\t".join(str(n) for n in nodes) + "\n")

    def __call__(self, step: int, partition) -> None:
        if step % self.every == 0:
            self.write(step, partition.labels())

    def write(self, step: int, labels: Sequence) -> None:
        self._f.write(f"{step}\t{encode_rle(labels)}\n")

    def close(self) -> None:
        self._f.close()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


def read_snapshots(path: str | Path) -> tuple[list[str], Iterator[tuple[int, list[str]]]]:
    """Node ids and an iterator of ``(step, labels)``."""
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) < 2 or lines[0] != SNAPSHOT_MAGIC or not lines[1].startswith("#nodes"):
        raise ParseError(f"{path}: not a snapshot file", 1, 1)
    nodes = lines[1].split("\t")[1:]

    def rows():
        for k, line in enumerate(lines[2:], start=3):
            step, sep, body = line.partition("\t")
            try:
                labels = decode_rle(body)
                if not sep or len(labels) != len(nodes):
                    raise ValueError(f"{len(labels)} labels for {len(nodes)} nodes")
                yield int(step), labels
            except ValueError as e:
                raise ParseError(f"{path}: {e}", k, 1) from None

    return nodes, rows()
