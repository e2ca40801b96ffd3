"""The Yule tree process and its embedded BST chain.

Paths are simulated as a jump chain: with ``m`` leaves the next gap is
Exp(m) and the splitting leaf is uniform, independently of the gap.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterator, TextIO

import numpy as np

from . import _kernels
from .stat_harness import stream
from .tree_core import BinaryTree, NodeWord


@dataclass
class YulePath:
    """A realized trajectory.

    ``jump_times[n]`` is tau_n (``jump_times[0] == 0``) and ``splits[n]`` is
    the leaf split at jump ``n + 1``, i.e. the insertion node D_n of the
    embedded BST. ``horizon`` is the stopping time when simulated up to a
    fixed time; the first jump after it is still recorded.
    """

    jump_times: np.ndarray
    splits: list[NodeWord]
    tree: BinaryTree
    horizon: float | None = None

    @property
    def n_jumps(self) -> int:
        return len(self.splits)

    def tree_at(self, n: int) -> BinaryTree:
        """Tree right after jump ``n`` (``n + 1`` leaves)."""
        if not 0 <= n <= self.n_jumps:
            raise ValueError(f"jump {n} outside the simulated range 0..{self.n_jumps}")
        if n == self.n_jumps:
            return self.tree.copy()
        tree = BinaryTree()
        for u in self.splits[:n]:
            tree.split(u)
        return tree

    def iter_trees(self) -> Iterator[BinaryTree]:
        tree = BinaryTree()
        yield tree.copy()
        for u in self.splits:
            tree.split(u)
            yield tree.copy()

    def leaves_at(self, t: float) -> int:
        """N_t, the number of leaves at time ``t``."""
        known = self.horizon if self.horizon is not None else self.jump_times[-1]
        if t < 0 or t > known:
            raise ValueError(f"time {t} outside the simulated window [0, {known}]")
        return int(np.searchsorted(self.jump_times, t, side="right"))


def yule_simulate(rng: np.random.Generator, *, t: float | None = None,
                  jumps: int | None = None, leaves: int | None = None) -> YulePath:
    """Simulate until time ``t``, until ``jumps`` jumps, or until ``leaves`` leaves."""
    if sum(x is not None for x in (t, jumps, leaves)) != 1:
        raise ValueError("give exactly one of t, jumps, leaves")
    if leaves is not None:
        if leaves < 1:
            raise ValueError("leaves must be >= 1")
        jumps = leaves - 1
    if jumps is not None and jumps < 0:
        raise ValueError("jumps must be >= 0")
    if t is not None and t < 0:
        raise ValueError("t must be >= 0")
    tree = BinaryTree()
    times = [0.0]
    splits: list[NodeWord] = []
    now = 0.0
    while jumps is None or len(splits) < jumps:
        m = tree.n_leaves
        now += rng.standard_exponential() / m
        leaf = tree.leaf_at(int(rng.integers(m)))
        times.append(now)
        splits.append(leaf)
        tree.split(leaf)
        if t is not None and now > t:
            break
    return YulePath(np.array(times), splits, tree, horizon=t)


def embedded_bst(path: YulePath) -> list[BinaryTree]:
    """The jump-chain trees T_0, ..., T_N of the path."""
    return list(path.iter_trees())


def xi_estimate(path: YulePath, n: int) -> float:
    """n * exp(-tau_n)."""
    if not 1 <= n <= path.n_jumps:
        raise ValueError(f"n={n} beyond the simulated horizon of {path.n_jumps} jumps")
    return n * math.exp(-path.jump_times[n])


def _count_below(tree: BinaryTree, u: NodeWord) -> int:
    c = 0
    for leaf in tree.leaves:
        if leaf.depth >= u.depth and leaf.bits >> (leaf.depth - u.depth) == u.bits:
            c += 1
    return c


def subtree_proportion(path: YulePath, u: NodeWord, n: int, letter: int = 0) -> float:
    """Fraction of the leaves below ``u`` that descend from child ``u<letter>`` at jump ``n``."""
    tree = path.tree_at(n)
    if u not in tree:
        raise ValueError(f"node {u} absent at jump {n}")
    if tree.is_leaf(u):
        raise ValueError(f"node {u} has no children at jump {n}")
    return _count_below(tree, u.child(letter)) / _count_below(tree, u)


def ancestor_product(path: YulePath, u: NodeWord, n: int) -> float:
    """Product of child proportions along the ancestry of ``u``; equals n^(u)/N at jump ``n``."""
    tree = path.tree_at(n)
    if u not in tree:
        raise ValueError(f"node {u} absent at jump {n}")
    prod = 1.0
    for a in u.ancestors():
        letter = (u.bits >> (u.depth - a.depth - 1)) & 1
        prod *= _count_below(tree, a.child(letter)) / _count_below(tree, a)
    return prod


@dataclass(frozen=True)
class DyadicInterval:
    lo: Fraction
    hi: Fraction

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo


def interval_of(u: NodeWord) -> DyadicInterval:
    """The fragment I_u = (sum u_j 2^-j, that + 2^-|u|)."""
    scale = 1 << u.depth
    return DyadicInterval(Fraction(u.bits, scale), Fraction(u.bits + 1, scale))


def next_insertion_depth(path: YulePath, t: float) -> int:
    """Depth of the first leaf to split strictly after time ``t``."""
    m = int(np.searchsorted(path.jump_times, t, side="right"))
    if m > path.n_jumps:
        raise ValueError(f"path ends at {path.jump_times[-1]}, no jump after t={t}")
    return path.splits[m - 1].depth


def insertion_depth_pgf(t: float, z: float) -> float:
    """E z^{d(t)} = (e^{t(2z-1)} - 1) / ((e^t - 1)(2z - 1)), with the 2z = 1 limit t/(e^t - 1)."""
    a = 2.0 * z - 1.0
    if t == 0:
        return 1.0
    if abs(a * t) < 1e-8:
        return t / math.expm1(t) * (1.0 + a * t / 2.0)
    return math.expm1(t * a) / (math.expm1(t) * a)


# -- vectorized samplers --------------------------------------------------------

def jump_time_samples(n: int, replicates: int, seed: int) -> np.ndarray:
    """tau_n for each replicate."""
    rates = np.arange(1, n + 1, dtype=float)
    return np.array([(stream(seed, i).standard_exponential(n) / rates).sum()
                     for i in range(replicates)])


def leaf_count_samples(t: float, replicates: int, seed: int) -> np.ndarray:
    return np.array([_kernels.yule_count(t, stream(seed, i)) for i in range(replicates)],
                    dtype=np.int64)


def count_and_next_depth(t: float, replicates: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """Per replicate, ``(N_t, d(t))`` from a depth-level Yule run."""
    counts = np.empty(replicates, dtype=np.int64)
    nxt = np.empty(replicates, dtype=np.int64)
    cap = max(16, int(4 * math.exp(t)))
    for i in range(replicates):
        _, m, d = _kernels.yule_to_time(t, stream(seed, i), cap)
        counts[i] = m
        nxt[i] = d
    return counts, nxt


def write_jump_times_csv(path: YulePath, out: TextIO, header: dict | None = None) -> None:
    for key, value in (header or {}).items():
        out.write(f"# {key}={value}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["n", "tau_n"])
    for n, tau in enumerate(path.jump_times):
        w.writerow([n, repr(float(tau))])


def write_counts_csv(times, counts, out: TextIO, header: dict | None = None) -> None:
    for key, value in (header or {}).items():
        out.write(f"# {key}={value}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["t", "N_t"])
    for t, c in zip(times, counts):
        w.writerow([repr(float(t)), int(c)])
