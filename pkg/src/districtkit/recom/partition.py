"""Districting plans over a dual graph."""
from __future__ import annotations

from collections import deque
from typing import Hashable, Iterable, Mapping

from ..errors import DisconnectedDistrict, MissingColumn
from ..graph import DualGraph, connected_components


class Partition:
    """An assignment of every graph node to a district label.

    Caches district membership, district populations and the set of cut
    edges. Partitions are values: :meth:`split` returns a new partition
    and leaves the original intact. Internally nodes are graph indices.
    """

    __slots__ = ("graph", "pop_col", "ideal", "_adj", "_pop", "_rank", "resplit", "_assign", "_members", "_pops", "_cut")

    def __init__(self, graph: DualGraph, assignment: Mapping[Hashable, Hashable], pop_col: str = "TOTPOP",
                 ideal: float | None = None):
        if not graph.has_column(pop_col):
            raise MissingColumn(f"population column {pop_col!r} missing on some nodes")
        self.graph = graph
        self.pop_col = pop_col
        self._adj = graph.adjacency_lists()
        self._pop = graph.column(pop_col)
        # lexicographic rank of node ids, used by the relabeling rule
        order = sorted(range(len(graph)), key=lambda i: str(graph.node_at(i)))
        self._rank = [0] * len(order)
        for r, i in enumerate(order):
            self._rank[i] = r
        missing = [n for n in graph.nodes if n not in assignment]
        if missing:
            raise MissingColumn(f"nodes without a district: {missing[:10]}")
        self._assign = [assignment[n] for n in graph.nodes]
        members: dict = {}
        for i, lab in enumerate(self._assign):
            members.setdefault(lab, set()).add(i)
        self._members = {lab: frozenset(s) for lab, s in sorted(members.items())}
        self._pops = {lab: sum(self._pop[i] for i in s) for lab, s in self._members.items()}
        self._cut = {(i, j) for i, nbrs in enumerate(self._adj) for j in nbrs
                     if i < j and self._assign[i] != self._assign[j]}
        total = sum(self._pops.values())
        self.ideal = ideal if ideal is not None else total / len(self._members)
        self.resplit = None

    @classmethod
    def _derived(cls, parent: "Partition", assign, members, pops, cut) -> "Partition":
        p = object.__new__(cls)
        p.graph = parent.graph
        p.pop_col = parent.pop_col
        p.ideal = parent.ideal
        p._adj = parent._adj
        p._pop = parent._pop
        p._rank = parent._rank
        p._assign = assign
        p._members = members
        p._pops = pops
        p._cut = cut
        p.resplit = None
        return p

    def __len__(self) -> int:
        return len(self._members)

    def __repr__(self) -> str:
        return f"Partition({len(self)} districts, {len(self._cut)} cut edges)"

    def __eq__(self, other) -> bool:
        if not isinstance(other, Partition):
            return NotImplemented
        return self.graph is other.graph and self._assign == other._assign

    def __hash__(self):
        return hash(tuple(self._assign))

    @property
    def districts(self) -> list:
        return list(self._members)

    @property
    def assignment(self) -> dict:
        nodes = self.graph.nodes
        return {nodes[i]: lab for i, lab in enumerate(self._assign)}

    @property
    def district_pops(self) -> dict:
        return dict(self._pops)

    @property
    def cut_edges(self) -> set:
        at = self.graph.node_at
        return {(at(i), at(j)) for i, j in self._cut}

    def label_of(self, node) -> Hashable:
        return self._assign[self.graph.index(node)]

    def labels(self) -> list:
        """District label of every node, in graph node order."""
        return list(self._assign)

    def members(self, label) -> set:
        at = self.graph.node_at
        return {at(i) for i in self._members[label]}

    def split(self, a, b, side_a: Iterable[int], side_b: Iterable[int]) -> "Partition":
        """New partition with districts ``a`` and ``b`` replaced by the given node-index sets."""
        side_a, side_b = frozenset(side_a), frozenset(side_b)
        assign = list(self._assign)
        for i in side_a:
            assign[i] = a
        for i in side_b:
            assign[i] = b
        members = dict(self._members)
        members[a], members[b] = side_a, side_b
        pops = dict(self._pops)
        pop = self._pop
        pops[a] = sum(pop[i] for i in side_a)
        pops[b] = sum(pop[i] for i in side_b)
        cut = set(self._cut)
        adj = self._adj
        for i in side_a | side_b:
            li = assign[i]
            for j in adj[i]:
                e = (i, j) if i < j else (j, i)
                if assign[j] != li:
                    cut.add(e)
                else:
                    cut.discard(e)
        out = Partition._derived(self, assign, members, pops, cut)
        out.resplit = (a, b)
        return out

    def validate(self, epsilon: float | None = None, check_bounds: Iterable | None = None) -> list[str]:
        """Recompute every cache from scratch and report discrepancies.

        Population bounds ``ideal * (1 ± epsilon)`` are checked for the
        labels in ``check_bounds`` (all districts if it is None and
        ``epsilon`` is given).
        """
        problems = []
        recomputed: dict = {}
        for i, lab in enumerate(self._assign):
            recomputed.setdefault(lab, set()).add(i)
        if {k: frozenset(v) for k, v in recomputed.items()} != dict(self._members):
            problems.append("membership cache differs from assignment")
        for lab, nodes in recomputed.items():
            pop = sum(self._pop[i] for i in nodes)
            if pop != self._pops.get(lab):
                problems.append(f"district {lab!r}: cached population {self._pops.get(lab)} != {pop}")
            if not _connected(nodes, self._adj):
                problems.append(f"district {lab!r} is not connected")
        cut = {(i, j) for i, nbrs in enumerate(self._adj) for j in nbrs
               if i < j and self._assign[i] != self._assign[j]}
        if cut != self._cut:
            problems.append(f"cut edge cache differs ({len(self._cut)} cached, {len(cut)} actual)")
        if epsilon is not None:
            lo, hi = self.ideal * (1 - epsilon), self.ideal * (1 + epsilon)
            labels = recomputed if check_bounds is None else check_bounds
            for lab in labels:
                pop = sum(self._pop[i] for i in recomputed.get(lab, ()))
                if not lo <= pop <= hi:
                    problems.append(f"district {lab!r}: population {pop} outside [{lo}, {hi}]")
        return problems


def _connected(nodes: set, adj) -> bool:
    if not nodes:
        return True
    start = next(iter(nodes))
    seen = {start}
    queue = deque([start])
    while queue:
        u = queue.popleft()
        for w in adj[u]:
            if w in nodes and w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(nodes)


def seed_partition(g: DualGraph, district_col: str, pop_col: str = "TOTPOP") -> Partition:
    """Partition from a node attribute; every district must be connected."""
    if not g.has_column(district_col):
        raise MissingColumn(f"district column {district_col!r} missing on some nodes")
    assignment = {n: g.node_attrs(n)[district_col] for n in g.nodes}
    p = Partition(g, assignment, pop_col)
    for lab in p.districts:
        comps = connected_components(g, p.members(lab))
        if len(comps) > 1:
            raise DisconnectedDistrict(lab, comps)
    return p
