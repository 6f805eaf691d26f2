from .chain import ChainConfig, ChainSummary, iter_chain, merge_adjacent, recom_step, run_chain
from .partition import Partition, seed_partition
from .tree import find_balanced_cuts, random_spanning_tree

__all__ = [
    "ChainConfig", "ChainSummary", "Partition", "find_balanced_cuts", "iter_chain",
    "merge_adjacent", "random_spanning_tree", "recom_step", "run_chain", "seed_partition",
]
