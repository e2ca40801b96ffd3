"""The BST Markov chain under the random permutation model."""

from __future__ import annotations

import csv
from array import array
from dataclasses import dataclass, field
from typing import Sequence, TextIO

import numpy as np

from . import _kernels
from .stat_harness import stream
from .tree_core import BinaryTree, NodeWord, ROOT


@dataclass
class BstChain:
    tree: BinaryTree = field(default_factory=BinaryTree)
    depth_history: array = field(default_factory=lambda: array("H"))

    @property
    def n(self) -> int:
        return len(self.depth_history)


def bst_step(chain: BstChain, rng: np.random.Generator) -> BstChain:
    """Insert one key: split a uniformly chosen leaf (in place) and return the chain."""
    tree = chain.tree
    leaf = tree.leaf_at(int(rng.integers(tree.n_leaves)))
    tree.split(leaf)
    chain.depth_history.append(leaf.depth)
    return chain


def run_chain(n: int, rng: np.random.Generator) -> BstChain:
    chain = BstChain()
    for _ in range(n):
        bst_step(chain, rng)
    return chain


@dataclass(frozen=True)
class Insertion:
    key: float
    node: NodeWord


def build_from_keys(keys: Sequence[float]) -> tuple[list[Insertion], BinaryTree]:
    """Insert ``keys`` one by one into a labeled BST.

    Returns the trace of (key, node receiving it) and the underlying unlabeled
    complete tree. Smaller keys go left (letter 0).
    """
    if len(set(keys)) != len(keys):
        raise ValueError("keys must be pairwise distinct")
    tree = BinaryTree()
    labels: dict[NodeWord, float] = {}
    trace = []
    for x in keys:
        u = ROOT
        while u in labels:
            u = u.child(0 if x < labels[u] else 1)
        labels[u] = x
        tree.split(u)
        trace.append(Insertion(float(x), u))
    return trace, tree


def sequential_ranks(keys: Sequence[float]) -> list[int]:
    """R_k = #{j <= k : x_j <= x_k}."""
    if len(set(keys)) != len(keys):
        raise ValueError("keys must be pairwise distinct")
    return [sum(1 for y in keys[: k + 1] if y <= x) for k, x in enumerate(keys)]


def write_trajectory_csv(chain: BstChain, out: TextIO, header: dict | None = None) -> None:
    """Replay the chain's insertion depths and emit ``n,d_n,h_n,H_n`` rows.

    ``h_n``/``H_n`` are the extremal leaf depths of the tree with ``n``
    internal nodes, i.e. before insertion ``n`` happens.
    """
    for key, value in (header or {}).items():
        out.write(f"# {key}={value}\n")
    writer = csv.writer(out, lineterminator="\n")
    writer.writerow(["n", "d_n", "h_n", "H_n"])
    counts = {0: 1}
    for n, d in enumerate(chain.depth_history):
        writer.writerow([n, d, min(counts), max(counts)])
        counts[d] -= 1
        if not counts[d]:
            del counts[d]
        counts[d + 1] = counts.get(d + 1, 0) + 2


def leaf_depths(n: int, rng: np.random.Generator, record: bool = False):
    """Leaf depths of ``T_n`` (and optionally the insertion depths d_0..d_{n-1})."""
    depths = np.zeros(n + 1, dtype=np.int32)
    inserted = np.zeros(n, dtype=np.int32) if record else _kernels.empty_record()
    _kernels.grow(depths, 1, n, rng, inserted)
    return (depths, inserted) if record else depths


def insertion_depths(n: int, replicates: int, seed: int) -> np.ndarray:
    """Samples of ``d_n``, one per replicate, each from a full chain run to ``n``."""
    out = np.empty(replicates, dtype=np.int64)
    depths = np.zeros(n + 2, dtype=np.int32)
    inserted = np.zeros(n + 1, dtype=np.int32)
    for i in range(replicates):
        depths[0] = 0
        _kernels.grow(depths, 1, n + 1, stream(seed, i), inserted)
        out[i] = inserted[n]
    return out


def lbst_insertion_depths(n: int, replicates: int, seed: int) -> np.ndarray:
    """Samples of ``d_n`` from the key construction, one ancestor at a time."""
    return np.array([_kernels.lbst_insertion_depth(n, stream(seed, i)) for i in range(replicates)],
                    dtype=np.int64)
