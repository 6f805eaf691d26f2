"""Adjacency-data graph JSON, the layout ``networkx.adjacency_data`` produces.

::

    {"directed": false, "multigraph": false, "graph": {...},
     "nodes": [{"id": ..., <attrs>}, ...],
     "adjacency": [[{"id": <neighbor>, "shared_perim": <m>}, ...], ...]}

``adjacency[k]`` lists the neighbors of ``nodes[k]``. Floats are written
with ``repr`` precision so values round-trip bit for bit. Queen contacts
and demoted rook edges travel in ``graph``.
"""
from __future__ import annotations

import json
from pathlib import Path

from ..errors import AsymmetricAdjacency, ParseError
from ..graph import DualGraph


def graph_to_dict(g: DualGraph) -> dict:
    nodes = []
    adjacency = []
    for n in g.nodes:
        nodes.append({"id": n, **{k: v for k, v in g.node_attrs(n).items() if k != "id"}})
        adjacency.append([{"id": m, "shared_perim": g.shared_perim(n, m)} for m in g.neighbors(n)])
    return {
        "directed": False,
        "multigraph": False,
        "graph": {
            "queen_contacts": [list(e) for e in g.queen_contacts],
            "demoted": [list(e) for e in g.demoted],
        },
        "nodes": nodes,
        "adjacency": adjacency,
    }


def dumps_graph_json(g: DualGraph) -> str:
    return json.dumps(graph_to_dict(g), allow_nan=False, indent=None, separators=(", ", ": ")) + "\n"


def write_graph_json(g: DualGraph, path: str | Path) -> None:
    Path(path).write_text(dumps_graph_json(g), encoding="utf-8")


def _hashable(v):
    # JSON has no tuples; list-valued ids cannot be graph nodes
    if isinstance(v, (list, dict)):
        raise ParseError(f"node id {v!r} is not a scalar")
    return v


def graph_from_dict(doc: dict) -> DualGraph:
    for key in ("nodes", "adjacency"):
        if key not in doc:
            raise ParseError(f"graph JSON is missing {key!r}")
    if doc.get("directed") or doc.get("multigraph"):
        raise ParseError("only simple undirected graphs are supported")
    nodes, adjacency = doc["nodes"], doc["adjacency"]
    if len(nodes) != len(adjacency):
        raise ParseError(f"{len(nodes)} nodes but {len(adjacency)} adjacency lists")
    ids, attrs = [], []
    for rec in nodes:
        if "id" not in rec:
            raise ParseError(f"node record without 'id': {rec!r}")
        ids.append(_hashable(rec["id"]))
        attrs.append({k: v for k, v in rec.items() if k != "id"})
    if len(set(ids)) != len(ids):
        raise ParseError("duplicate node ids")
    known = set(ids)
    half: dict = {}
    for u, nbrs in zip(ids, adjacency):
        for rec in nbrs:
            v = _hashable(rec.get("id"))
            if v not in known:
                raise ParseError(f"node {u!r} lists unknown neighbor {v!r}")
            half[(u, v)] = float(rec.get("shared_perim", 0.0))
    for (u, v), p in half.items():
        back = half.get((v, u))
        if back is None:
            raise AsymmetricAdjacency(f"edge {u!r}->{v!r} has no reverse entry")
        if back != p:
            raise AsymmetricAdjacency(f"edge {u!r}-{v!r}: shared_perim {p!r} != {back!r}")
    index = {n: i for i, n in enumerate(ids)}
    edges = []
    for (u, v), p in half.items():
        if index[u] < index[v]:
            edges.append((u, v, p))
    meta = doc.get("graph") or {}
    return DualGraph(
        ids, attrs, edges,
        queen_contacts=[tuple(e) for e in meta.get("queen_contacts", [])],
        demoted=[(e[0], e[1], float(e[2])) for e in meta.get("demoted", [])],
    )


def read_graph_json(path: str | Path) -> DualGraph:
    text = Path(path).read_text(encoding="utf-8")
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as e:
        raise ParseError(f"{path}: {e.msg}", e.lineno, e.colno) from None
    return graph_from_dict(doc)
