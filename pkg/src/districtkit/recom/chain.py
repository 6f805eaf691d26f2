"""The ReCom merge-split chain."""
from __future__ import annotations

import logging
import random
from dataclasses import asdict, dataclass, field
from typing import Callable, Iterable

from ..errors import NoCutEdges
from ..graph import DualGraph
from .partition import Partition, seed_partition
from .tree import SAMPLERS, induced, sample_tree, tree_order

log = logging.getLogger(__name__)

Observer = Callable[[int, Partition], None]


@dataclass
class ChainConfig:
    pop_col: str = "TOTPOP"
    epsilon: float = 0.02
    steps: int = 1000
    seed: int = 0
    tree_sampler: str = "mst"
    max_tree_retries: int = 100
    max_pair_retries: int = 10
    audit_every: int = 100

    def __post_init__(self):
        # epsilon 0 is allowed: exact balance is meaningful on integer populations
        if not 0 <= self.epsilon < 1:
            raise ValueError(f"epsilon must be in [0, 1), got {self.epsilon}")
        if self.steps < 0:
            raise ValueError("steps must be non-negative")
        if self.tree_sampler not in SAMPLERS:
            raise ValueError(f"tree_sampler must be one of {SAMPLERS}, got {self.tree_sampler!r}")
        if self.max_tree_retries < 1 or self.max_pair_retries < 1:
            raise ValueError("retry caps must be at least 1")
        if self.audit_every < 0:
            raise ValueError("audit_every must be non-negative")


@dataclass
class ChainSummary:
    steps: int
    seed: int
    self_loops: int = 0
    audits: int = 0
    violations: list = field(default_factory=list)
    ideal: float = 0.0

    @property
    def ok(self) -> bool:
        return not self.violations

    def to_dict(self) -> dict:
        d = asdict(self)
        d["ok"] = self.ok
        return d


def _merge(p: Partition, rng: random.Random):
    if not p._cut:
        raise NoCutEdges("partition has no cut edges to merge across")
    cut = tuple(p._cut)
    i, j = cut[rng.randrange(len(cut))]
    a, b = sorted((p._assign[i], p._assign[j]))
    return (a, b), p._members[a] | p._members[b]


def merge_adjacent(p: Partition, rng: random.Random) -> tuple[tuple, set]:
    """Draw a cut edge uniformly; return its district pair and their merged nodes."""
    pair, merged = _merge(p, rng)
    at = p.graph.node_at
    return pair, {at(i) for i in merged}


def _try_split(p: Partition, pair, merged, cfg: ChainConfig, rng: random.Random) -> Partition | None:
    order, nbrs, edges = induced(merged, p._adj)
    pop = p._pop
    lo, hi = p.ideal * (1 - cfg.epsilon), p.ideal * (1 + cfg.epsilon)
    for _ in range(cfg.max_tree_retries):
        parent = sample_tree(order, nbrs, edges, rng, cfg.tree_sampler)
        _, children, bfs = tree_order(parent)
        below = {v: pop[v] for v in bfs}
        for v in reversed(bfs):
            if parent[v] is not None:
                below[parent[v]] += below[v]
        total = below[bfs[0]]
        cuts = [v for v in bfs[1:] if lo <= below[v] <= hi and lo <= total - below[v] <= hi]
        if not cuts:
            continue
        v = cuts[rng.randrange(len(cuts))]
        side = {v}
        stack = [v]
        while stack:
            for c in children[stack.pop()]:
                side.add(c)
                stack.append(c)
        other = merged - side
        a, b = pair
        first = min(merged, key=p._rank.__getitem__)
        if first in side:
            return p.split(a, b, side, other)
        return p.split(a, b, other, side)
    return None


def recom_step(p: Partition, cfg: ChainConfig, rng: random.Random) -> Partition:
    """One merge-split proposal. Returns ``p`` itself when every retry fails."""
    for _ in range(cfg.max_pair_retries):
        pair, merged = _merge(p, rng)
        out = _try_split(p, pair, merged, cfg, rng)
        if out is not None:
            return out
    log.debug("self-loop: no balanced cut after %d pair draws", cfg.max_pair_retries)
    return p


def _audit(p: Partition, cfg: ChainConfig, step: int, bounded: set, summary: ChainSummary) -> None:
    summary.audits += 1
    for msg in p.validate(cfg.epsilon, check_bounds=sorted(bounded)):
        summary.violations.append((step, msg))
        log.error("audit failed at step %d: %s", step, msg)


def iter_chain(p: Partition, cfg: ChainConfig, rng: random.Random | None = None):
    """Yield ``(step, partition, resplit_pair)`` for steps 1..cfg.steps; pair is None on a self-loop."""
    rng = rng or random.Random(cfg.seed)
    for step in range(1, cfg.steps + 1):
        nxt = recom_step(p, cfg, rng)
        pair = None if nxt is p else nxt.resplit
        p = nxt
        yield step, p, pair


def run_chain(g: DualGraph, seed_col: str, cfg: ChainConfig, observers: Iterable[Observer] = ()) -> ChainSummary:
    """Run ``cfg.steps`` ReCom steps from the plan in ``seed_col``.

    Each observer is called as ``observer(step, partition)`` after every
    step; the seed plan itself is not observed. Every ``cfg.audit_every``
    steps the current plan is fully recomputed and checked: connectivity,
    cached populations, cut edges, and population bounds for every
    district that has been resplit so far (seed districts need not be
    balanced).
    """
    observers = list(observers)
    p = seed_partition(g, seed_col, cfg.pop_col)
    summary = ChainSummary(steps=cfg.steps, seed=cfg.seed, ideal=p.ideal)
    bounded: set = set()
    _audit(p, cfg, 0, bounded, summary)
    rng = random.Random(cfg.seed)
    step = 0
    for step, p, pair in iter_chain(p, cfg, rng):
        if pair is None:
            summary.self_loops += 1
        else:
            bounded.update(pair)
        for obs in observers:
            obs(step, p)
        if cfg.audit_every and step % cfg.audit_every == 0:
            _audit(p, cfg, step, bounded, summary)
    if cfg.audit_every and step % cfg.audit_every != 0:
        _audit(p, cfg, step, bounded, summary)
    return summary
