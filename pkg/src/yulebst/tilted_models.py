"""Spine-marked trees, exponential spine martingales and tilted laws.

Under the tilt ``two_z`` the marked leaf splits at rate ``two_z`` (Yule) or
with probability ``two_z/(n + two_z)`` (BST with ``n`` internal nodes), while
every unmarked leaf keeps weight 1. When the marked leaf splits, the mark
moves to one of its two children with equal probability.
"""

from __future__ import annotations

import csv
import json
import math
import numbers
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Iterable, TextIO

import numpy as np

from . import _kernels
from .exact_oracle import bernoulli_sum_moments, spine_depth_pmf
from .martingales import bst_martingale, c_n, eta, log_c_n
from .stat_harness import TestReport, lattice_ks, stream
from .tree_core import ROOT, BinaryTree, NodeWord
from .yule_process import YulePath

CHANGE_OF_MEASURE_N_MAX = 5


@dataclass
class MarkedTree:
    tree: BinaryTree
    spine_leaf: NodeWord = ROOT

    def __post_init__(self):
        if not self.tree.is_leaf(self.spine_leaf):
            raise ValueError(f"marked node {self.spine_leaf} is not a leaf")

    @property
    def s(self) -> int:
        return self.spine_leaf.depth

    def copy(self) -> "MarkedTree":
        return MarkedTree(self.tree.copy(), self.spine_leaf)

    def key(self) -> tuple[str, NodeWord]:
        return self.tree.serialize(), self.spine_leaf


def _check_tilt(two_z) -> None:
    if not two_z > 0:
        raise ValueError("two_z must be positive")


def _split_marked(state: MarkedTree, child: int) -> None:
    state.tree.split(state.spine_leaf)
    state.spine_leaf = state.spine_leaf.child(child)


def biased_bst_step(state: MarkedTree, two_z: float, rng: np.random.Generator) -> MarkedTree:
    """One tilted insertion, in place."""
    _check_tilt(two_z)
    tree = state.tree
    n = tree.n_internal
    if rng.random() * (n + two_z) < two_z:
        _split_marked(state, int(rng.integers(2)))
        return state
    # uniform among the n unmarked leaves, by rejection of the mark
    while True:
        leaf = tree.leaf_at(int(rng.integers(n + 1)))
        if leaf != state.spine_leaf:
            break
    tree.split(leaf)
    return state


def run_biased_bst(n: int, two_z: float, rng: np.random.Generator) -> tuple[MarkedTree, list[int]]:
    """Run ``n`` tilted steps from a single marked leaf; also return the spine depth after each step."""
    state = MarkedTree(BinaryTree())
    trace = []
    for _ in range(n):
        biased_bst_step(state, two_z, rng)
        trace.append(state.s)
    return state, trace


def biased_yule_simulate(two_z: float, rng: np.random.Generator, *, t: float | None = None,
                         jumps: int | None = None) -> tuple[YulePath, list[NodeWord]]:
    """Tilted Yule tree with a private Exp(two_z) clock on the marked leaf.

    The unmarked leaves are merged into one Exp(m - 1) clock, redrawn after
    every event (memorylessness). Returns the path and the marked leaf after
    each jump (entry 0 is the root).
    """
    _check_tilt(two_z)
    if (t is None) == (jumps is None):
        raise ValueError("give exactly one of t, jumps")
    state = MarkedTree(BinaryTree())
    tree = state.tree
    times = [0.0]
    splits: list[NodeWord] = []
    marks = [state.spine_leaf]
    now = 0.0
    ring = rng.standard_exponential() / two_z
    while jumps is None or len(splits) < jumps:
        m = tree.n_leaves
        other = now + rng.standard_exponential() / (m - 1) if m > 1 else math.inf
        if ring <= other:
            now = ring
            leaf = state.spine_leaf
            _split_marked(state, int(rng.integers(2)))
            ring = now + rng.standard_exponential() / two_z
        else:
            now = other
            while True:
                leaf = tree.leaf_at(int(rng.integers(m)))
                if leaf != state.spine_leaf:
                    break
            tree.split(leaf)
        times.append(now)
        splits.append(leaf)
        marks.append(state.spine_leaf)
        if t is not None and now > t:
            break
    return YulePath(np.array(times), splits, tree, horizon=t), marks


def size_biased_spine(tree: BinaryTree, rng: np.random.Generator) -> NodeWord:
    """Leaf u with probability 2^-|u|, by following a uniform V through the dyadic fragments."""
    u = ROOT
    bits, left = 0, 0
    while not tree.is_leaf(u):
        if not left:
            bits, left = int(rng.integers(1 << 62)), 62
        left -= 1
        u = u.child((bits >> left) & 1)
    return u


def spine_leaf_probabilities(tree: BinaryTree) -> dict[NodeWord, Fraction]:
    return {u: Fraction(1, 1 << u.depth) for u in tree.leaves}


def spine_depth_given_shape(tree: BinaryTree) -> dict[int, Fraction]:
    """P(s_n = k | T_n) = U_k(n) 2^-k."""
    return {k: Fraction(c, 1 << k) for k, c in tree.profile().counts.items()}


def exponential_martingale_discrete(s_n, n: int, z):
    """(2z)^{s_n} / C_n(z); exact for rational z, vectorized over ``s_n`` otherwise."""
    if isinstance(z, (Fraction, int)) and not isinstance(z, bool) and isinstance(s_n, numbers.Integral):
        return Fraction(2 * z) ** int(s_n) / c_n(Fraction(z), n)
    if not z > 0:
        raise ValueError("z must be positive")
    s = np.asarray(s_n, dtype=float)
    val = np.exp(s * math.log(2 * z) - log_c_n(float(z), n))
    return float(val) if val.ndim == 0 else val


def exponential_martingale_continuous(s_t, t: float, z: float):
    """(2z)^{s(t)} e^{t(1 - 2z)}."""
    if not z > 0:
        raise ValueError("z must be positive")
    if t < 0:
        raise ValueError("t must be >= 0")
    s = np.asarray(s_t, dtype=float)
    val = np.exp(s * math.log(2 * z) + t * (1 - 2 * z))
    return float(val) if val.ndim == 0 else val


def projection_identity_check(tree: BinaryTree, z):
    """(M_n(z), sum over leaves of 2^-|u| E_n(z) evaluated with the mark at u)."""
    n = tree.n_internal
    lhs = bst_martingale(tree, z)
    if isinstance(z, (Fraction, int)) and not isinstance(z, bool):
        rhs = sum((Fraction(1, 1 << u.depth) * exponential_martingale_discrete(u.depth, n, Fraction(z))
                   for u in tree.leaves), Fraction(0))
        return lhs, rhs
    depths = np.array([u.depth for u in tree.leaves], dtype=float)
    rhs = float((np.exp2(-depths) * exponential_martingale_discrete(depths, n, float(z))).sum())
    return lhs, rhs


def _marked_successors(state: MarkedTree):
    """Every single-step successor, tagged by whether the marked leaf split."""
    for child in (0, 1):
        nxt = state.copy()
        _split_marked(nxt, child)
        yield True, nxt
    for leaf in state.tree.leaves:
        if leaf == state.spine_leaf:
            continue
        nxt = state.copy()
        nxt.tree.split(leaf)
        yield False, nxt


def marked_law(n: int, two_z) -> dict[tuple[str, NodeWord], tuple[Fraction, MarkedTree]]:
    """Exact law of the marked tree after ``n`` tilted steps, keyed by (shape, mark)."""
    if not 0 <= n <= CHANGE_OF_MEASURE_N_MAX:
        raise ValueError(f"marked enumeration limited to n <= {CHANGE_OF_MEASURE_N_MAX}")
    tz = Fraction(two_z)
    _check_tilt(tz)
    start = MarkedTree(BinaryTree())
    law = {start.key(): (Fraction(1), start)}
    for m in range(n):
        nxt: dict = {}
        for p, state in law.values():
            for marked, succ in _marked_successors(state):
                w = tz / (m + tz) / 2 if marked else Fraction(1) / (m + tz)
                key = succ.key()
                old = nxt.get(key, (Fraction(0), succ))[0]
                nxt[key] = (old + p * w, succ)
        law = nxt
    return law


def change_of_measure_check(n: int, two_z, statistic: Callable[[MarkedTree], object]):
    """(E under the tilt of f, E under the untilted marked law of E_n(z) f), both exact."""
    tz = Fraction(two_z)
    z = tz / 2
    biased = sum((p * Fraction(statistic(st)) for p, st in marked_law(n, tz).values()), Fraction(0))
    reweighted = sum((p * exponential_martingale_discrete(st.s, n, z) * Fraction(statistic(st))
                      for p, st in marked_law(n, 1).values()), Fraction(0))
    return biased, reweighted


# -- spine statistics ---------------------------------------------------------------------

def ldp_rate(n: int, two_z: float, a_values: Iterable[float], pmf=None) -> dict[float, float]:
    """-log P(s_n >= a log n) / log n from the exact law of s_n."""
    if pmf is None:
        pmf = spine_depth_pmf(n, float(two_z))
    pmf = np.asarray(pmf, dtype=float)
    tail = np.cumsum(pmf[::-1])[::-1]
    ln = math.log(n)
    out = {}
    for a in a_values:
        k = math.ceil(a * ln)
        p = tail[k] if k < tail.size else 0.0
        out[float(a)] = -math.log(p) / ln if p > 0 else math.inf
    return out


def spine_statistics(samples, n: int, two_z: float, ldp_points: Iterable[float] = ()) -> dict:
    """Law of large numbers, normal approximation and large-deviation rates for s_n.

    The normal check standardizes with the exact mean and variance of the
    Bernoulli sum and compares lattice cdfs with a half-unit continuity shift.
    """
    samples = np.asarray(samples)
    ln = math.log(n)
    mu, var = bernoulli_sum_moments(n, float(two_z))
    clt: TestReport = lattice_ks(samples, mu, math.sqrt(var), name="spine-clt")
    ldp_points = list(ldp_points)
    return {
        "lln": float(samples.mean() / ln),
        "lln_exact": mu / ln,
        "clt_ks": clt.statistic,
        "clt": clt,
        "ldp_curve": ldp_rate(n, two_z, ldp_points) if ldp_points else {},
    }


# -- vectorized samplers -------------------------------------------------------------------

def spine_depths_chain(n: int, two_z: float, replicates: int, seed: int) -> np.ndarray:
    """s_n from full tilted chains on leaf-depth arrays."""
    out = np.empty(replicates, dtype=np.int64)
    depths = np.zeros(n + 1, dtype=np.int32)
    rec = _kernels.empty_record()
    for i in range(replicates):
        depths[0] = 0
        _, spine = _kernels.grow_biased(depths, 1, 0, n, float(two_z), stream(seed, i), rec)
        out[i] = depths[spine]
    return out


def spine_hits(n_steps: int, two_z: float, replicates: int, seed: int) -> np.ndarray:
    """0/1 matrix: whether the marked leaf split at each step, per replicate."""
    out = np.zeros((replicates, n_steps), dtype=np.int32)
    depths = np.zeros(n_steps + 1, dtype=np.int32)
    for i in range(replicates):
        depths[0] = 0
        _kernels.grow_biased(depths, 1, 0, n_steps, float(two_z), stream(seed, i), out[i])
    return out


def spine_depths_skip(n: int, two_z: float, replicates: int, seed: int) -> np.ndarray:
    """s_n sampled directly from the times at which the marked leaf splits."""
    return np.array([_kernels.spine_depth_skip(n, float(two_z), stream(seed, i))
                     for i in range(replicates)], dtype=np.int64)


def biased_yule_samples(t: float, two_z: float, replicates: int, seed: int) -> tuple[np.ndarray, np.ndarray]:
    """(N_t, s(t)) per replicate under the tilt."""
    counts = np.empty(replicates, dtype=np.int64)
    depth = np.empty(replicates, dtype=np.int64)
    for i in range(replicates):
        counts[i], depth[i] = _kernels.biased_yule_count(t, float(two_z), stream(seed, i))
    return counts, depth


def write_spine_csv(samples, n: int, out: TextIO, header: dict | None = None) -> None:
    for key, value in (header or {}).items():
        out.write(f"# {key}={value}\n")
    w = csv.writer(out, lineterminator="\n")
    w.writerow(["n", "s_n"])
    for s in samples:
        w.writerow([n, int(s)])


def ldp_json(curve: dict[float, float], two_z: float) -> str:
    rows = [{"a": a, "rate": r, "eta": eta(two_z, a)} for a, r in sorted(curve.items())]
    return json.dumps(rows, sort_keys=True)

