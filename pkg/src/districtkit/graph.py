"""Dual graph of a unit layer: rook adjacency with shared perimeters."""
from __future__ import annotations

from collections import deque
from typing import Any, Hashable, Iterable, Sequence

from shapely.geometry import MultiPolygon, Polygon
from shapely.strtree import STRtree

from . import geom
from .errors import DisconnectsGraph, NotClean
from .layer import GeoLayer
from .repair import DEFAULT_AREA_TOL, doctor

DEFAULT_MIN_PERIM = 1.0


class DualGraph:
    """Simple undirected graph with per-node attributes and per-edge ``shared_perim``.

    Node order is significant: it fixes iteration order, serialization
    order and every deterministic tie-break downstream. Instances are not
    mutated after construction.
    """

    def __init__(
        self,
        nodes: Sequence[Hashable],
        attrs: Sequence[dict[str, Any]],
        edges: Iterable[tuple[Hashable, Hashable, float]],
        queen_contacts: Iterable[tuple[Hashable, Hashable]] = (),
        demoted: Iterable[tuple[Hashable, Hashable, float]] = (),
    ):
        self._ids = list(nodes)
        self._index = {n: i for i, n in enumerate(self._ids)}
        if len(self._index) != len(self._ids):
            raise ValueError("duplicate node ids")
        self._attrs = [dict(a) for a in attrs]
        self._adj: list[dict[int, float]] = [{} for _ in self._ids]
        for u, v, perim in edges:
            i, j = self._index[u], self._index[v]
            if i == j:
                raise ValueError(f"self-loop on {u!r}")
            if j in self._adj[i]:
                raise ValueError(f"parallel edge {u!r}-{v!r}")
            self._adj[i][j] = float(perim)
            self._adj[j][i] = float(perim)
        self.queen_contacts = [tuple(e) for e in queen_contacts]
        self.demoted = [tuple(e) for e in demoted]
        self._lists: list[list[int]] | None = None

    def __len__(self) -> int:
        return len(self._ids)

    def __contains__(self, node) -> bool:
        return node in self._index

    def __repr__(self) -> str:
        return f"DualGraph({len(self)} nodes, {self.n_edges} edges)"

    @property
    def nodes(self) -> list:
        return list(self._ids)

    def index(self, node) -> int:
        return self._index[node]

    def node_at(self, i: int):
        return self._ids[i]

    def node_attrs(self, node) -> dict[str, Any]:
        return self._attrs[self._index[node]]

    def neighbors(self, node) -> list:
        return [self._ids[j] for j in sorted(self._adj[self._index[node]])]

    def degree(self, node) -> int:
        return len(self._adj[self._index[node]])

    def shared_perim(self, u, v) -> float:
        return self._adj[self._index[u]][self._index[v]]

    def has_edge(self, u, v) -> bool:
        return self._index[v] in self._adj[self._index[u]]

    @property
    def edges(self) -> list[tuple[Any, Any, float]]:
        out = []
        for i, nbrs in enumerate(self._adj):
            for j in sorted(nbrs):
                if i < j:
                    out.append((self._ids[i], self._ids[j], nbrs[j]))
        return out

    @property
    def n_edges(self) -> int:
        return sum(len(a) for a in self._adj) // 2

    def adjacency_lists(self) -> list[list[int]]:
        """Neighbor indices per node index, sorted; cached."""
        if self._lists is None:
            self._lists = [sorted(a) for a in self._adj]
        return self._lists

    def column(self, name: str) -> list:
        return [a[name] for a in self._attrs]

    def has_column(self, name: str) -> bool:
        return all(name in a for a in self._attrs)


def connected_components(g: DualGraph, subset: Iterable | None = None) -> list[set]:
    """Components of ``g`` (or of the subgraph induced by ``subset``), ordered by first node."""
    adj = g.adjacency_lists()
    if subset is None:
        allowed = None
        order = range(len(g))
    else:
        allowed = {g.index(n) for n in subset}
        order = sorted(allowed)
    seen = set()
    comps = []
    for s in order:
        if s in seen:
            continue
        seen.add(s)
        comp = [s]
        queue = deque([s])
        while queue:
            u = queue.popleft()
            for w in adj[u]:
                if w not in seen and (allowed is None or w in allowed):
                    seen.add(w)
                    comp.append(w)
                    queue.append(w)
        comps.append({g.node_at(i) for i in comp})
    return comps


def build_graph(
    layer: GeoLayer,
    adjacency: str = "rook",
    area_tol: float = DEFAULT_AREA_TOL,
    snap_tol: float = geom.DEFAULT_SNAP_GRID,
    exclude: Iterable = (),
    check: bool = True,
) -> DualGraph:
    """Dual graph of a clean layer.

    Rook edges join units with a shared boundary of positive length and
    carry that length as ``shared_perim``. In queen mode, units meeting
    only at points are joined too, with ``shared_perim`` 0. Point contacts
    are always recorded in ``queen_contacts``.
    """
    if adjacency not in ("rook", "queen"):
        raise ValueError(f"adjacency must be 'rook' or 'queen', not {adjacency!r}")
    if check:
        report = doctor(layer, area_tol, exclude=exclude, snap_tol=snap_tol)
        if not report.clean:
            raise NotClean(report)
    ids = layer.ids
    geoms = layer.geometries
    edges, queen = [], []
    if len(geoms) > 1:
        tree = STRtree(geoms)
        left, right = tree.query(geoms, predicate="dwithin", distance=snap_tol)
        for i, j in sorted(set(zip(left.tolist(), right.tolist()))):
            if i >= j:
                continue
            shared = geom.shared_boundary_length(geoms[i], geoms[j], snap_tol)
            if shared > 0:
                edges.append((ids[i], ids[j], shared))
            else:
                queen.append((ids[i], ids[j]))
                if adjacency == "queen":
                    edges.append((ids[i], ids[j], 0.0))

    union = geom.union(geoms)
    outer = MultiPolygon([Polygon(p.exterior) for p in union.geoms]) if not union.is_empty else union
    outer_segs = geom.segments(outer)
    attrs = []
    for u in layer:
        bp = geom.shared_length_with_segments(u.geometry, outer_segs, snap_tol)
        a = dict(u.attributes)
        a["boundary_node"] = bp > 0
        a["boundary_perim"] = bp
        attrs.append(a)
    return DualGraph(ids, attrs, edges, queen_contacts=queen)


def mend_small_rook(g: DualGraph, min_perim: float = DEFAULT_MIN_PERIM, keep: Iterable = ()) -> DualGraph:
    """Demote rook edges shorter than ``min_perim`` to queen contacts.

    Edges listed in ``keep`` (as ``(u, v)`` pairs) are never demoted.
    Raises :class:`DisconnectsGraph` if demotion would increase the number
    of connected components.
    """
    keep = {frozenset(e) for e in keep}
    kept, dropped = [], []
    for u, v, perim in g.edges:
        if perim < min_perim and frozenset((u, v)) not in keep:
            dropped.append((u, v, perim))
        else:
            kept.append((u, v, perim))
    if not dropped:
        return g
    attrs = [g.node_attrs(n) for n in g.nodes]
    out = DualGraph(
        g.nodes, attrs, kept,
        queen_contacts=g.queen_contacts + [(u, v) for u, v, _ in dropped],
        demoted=g.demoted + dropped,
    )
    before = len(connected_components(g))
    after = len(connected_components(out))
    if after > before:
        # report only the demoted edges that actually bridge components
        comp_of = {}
        for k, comp in enumerate(connected_components(out)):
            for n in comp:
                comp_of[n] = k
        bridges = [(u, v) for u, v, _ in dropped if comp_of[u] != comp_of[v]]
        raise DisconnectsGraph(bridges, after)
    return out
