"""Random spanning trees and balanced cuts.

Trees are parent maps ``{node: parent}`` with the root mapped to None.
The low-level samplers work on integer node indices and an adjacency
list; :func:`random_spanning_tree` wraps them for arbitrary graphs.
"""
from __future__ import annotations

import random
from collections import deque
from typing import Hashable, Iterable, Mapping, Sequence

from ..errors import Disconnected

SAMPLERS = ("mst", "ust")


def _mst_tree(nodes: Sequence[int], edges: list[tuple[int, int]], rng: random.Random) -> dict | None:
    """Kruskal on a uniformly shuffled edge list.

    Shuffling is equivalent to i.i.d. continuous edge weights: every
    ordering is equally likely and Kruskal only looks at the order.
    Returns None if the edges do not connect ``nodes``.
    """
    order = list(edges)
    rng.shuffle(order)
    uf = {v: v for v in nodes}

    def find(x):
        while uf[x] != x:
            uf[x] = uf[uf[x]]
            x = uf[x]
        return x

    tree_adj: dict[int, list[int]] = {v: [] for v in nodes}
    need = len(nodes) - 1
    for u, v in order:
        if need == 0:
            break
        ru, rv = find(u), find(v)
        if ru != rv:
            uf[ru] = rv
            tree_adj[u].append(v)
            tree_adj[v].append(u)
            need -= 1
    if need > 0:
        return None
    root = nodes[0]
    parent = {root: None}
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for w in tree_adj[u]:
            if w not in parent:
                parent[w] = u
                queue.append(w)
    return parent


def _wilson_tree(nodes: Sequence[int], nbrs: Mapping[int, Sequence[int]], rng: random.Random) -> dict:
    """Wilson's algorithm: loop-erased random walks into a growing tree.

    Uniform over spanning trees for any root; ``nodes`` must be connected.
    """
    root = nodes[rng.randrange(len(nodes))]
    parent = {root: None}
    nxt = {}
    for start in nodes:
        u = start
        while u not in parent:
            choices = nbrs[u]
            nxt[u] = choices[rng.randrange(len(choices))]
            u = nxt[u]
        # retrace; overwritten entries of nxt erase the loops
        u = start
        while u not in parent:
            parent[u] = nxt[u]
            u = nxt[u]
    return parent


def induced(nodes: Iterable[int], adj: Sequence[Sequence[int]]) -> tuple[list[int], dict[int, list[int]], list[tuple[int, int]]]:
    """Sorted nodes, neighbor lists and edge list of the subgraph induced by ``nodes``."""
    members = set(nodes)
    order = sorted(members)
    nbrs = {u: [w for w in adj[u] if w in members] for u in order}
    edges = [(u, w) for u in order for w in nbrs[u] if u < w]
    return order, nbrs, edges


def _connected(order, nbrs) -> bool:
    if not order:
        return False
    seen = {order[0]}
    queue = deque([order[0]])
    while queue:
        for w in nbrs[queue.popleft()]:
            if w not in seen:
                seen.add(w)
                queue.append(w)
    return len(seen) == len(order)


def sample_tree(order, nbrs, edges, rng: random.Random, sampler: str = "mst") -> dict:
    if sampler == "mst":
        t = _mst_tree(order, edges, rng)
        if t is None:
            raise Disconnected("node set is not connected")
        return t
    if sampler == "ust":
        return _wilson_tree(order, nbrs, rng)
    raise ValueError(f"unknown tree sampler {sampler!r}; expected one of {SAMPLERS}")


def random_spanning_tree(nodes: Iterable[Hashable], edges: Iterable[tuple], rng: random.Random,
                         sampler: str = "mst") -> dict:
    """Random spanning tree of the graph ``(nodes, edges)`` as a parent map.

    ``mst`` draws i.i.d. uniform edge weights and takes the minimum
    spanning tree; ``ust`` is Wilson's algorithm and is exactly uniform.
    """
    ids = list(dict.fromkeys(nodes))
    index = {n: i for i, n in enumerate(ids)}
    adj: list[list[int]] = [[] for _ in ids]
    for e in edges:
        i, j = index[e[0]], index[e[1]]
        if i != j and j not in adj[i]:
            adj[i].append(j)
            adj[j].append(i)
    order, nbrs, elist = induced(range(len(ids)), adj)
    if not _connected(order, nbrs):
        raise Disconnected("node set is not connected")
    parent = sample_tree(order, nbrs, elist, rng, sampler)
    return {ids[i]: (None if p is None else ids[p]) for i, p in parent.items()}


def tree_order(parent: Mapping) -> tuple[Hashable, dict[Hashable, list], list]:
    """Root, children lists and BFS order of a parent map."""
    children: dict = {v: [] for v in parent}
    root = None
    for v, p in parent.items():
        if p is None:
            if root is not None:
                raise ValueError("parent map has more than one root")
            root = v
        else:
            children[p].append(v)
    if root is None:
        raise ValueError("parent map has no root")
    order = [root]
    k = 0
    while k < len(order):
        order.extend(children[order[k]])
        k += 1
    if len(order) != len(parent):
        raise ValueError("parent map is not a tree")
    return root, children, order


def subtree_pops(parent: Mapping, pops) -> tuple[list, dict]:
    """BFS order and the population below every node, in one traversal."""
    _, _, order = tree_order(parent)
    below = {v: pops[v] for v in order}
    for v in reversed(order):
        p = parent[v]
        if p is not None:
            below[p] += below[v]
    return order, below


def find_balanced_cuts(parent: Mapping, pops, ideal: float, epsilon: float) -> list[tuple]:
    """Tree edges ``(child, parent)`` whose removal leaves both sides within bounds.

    Both subtree population ``s`` and ``total - s`` must lie in
    ``[ideal * (1 - epsilon), ideal * (1 + epsilon)]``. Edges come back
    in BFS order of their child node.
    """
    if ideal <= 0:
        raise ValueError("ideal population must be positive")
    order, below = subtree_pops(parent, pops)
    total = below[order[0]]
    lo, hi = ideal * (1 - epsilon), ideal * (1 + epsilon)
    out = []
    for v in order[1:]:
        s = below[v]
        if lo <= s <= hi and lo <= total - s <= hi:
            out.append((v, parent[v]))
    return out


def subtree(parent: Mapping, root) -> set:
    """Nodes in the subtree hanging from ``root``."""
    _, children, _ = tree_order(parent)
    out = {root}
    stack = [root]
    while stack:
        for c in children[stack.pop()]:
            out.add(c)
            stack.append(c)
    return out
