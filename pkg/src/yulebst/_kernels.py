"""Compiled inner loops working on arrays of leaf depths.

The martingales only depend on the multiset of leaf depths, so the large
Monte Carlo runs keep ``depths[:m]`` (one entry per leaf) instead of words.
Splitting leaf ``j`` sets ``depths[j] += 1`` and appends the same depth.
All randomness comes from the ``np.random.Generator`` passed in.
"""

import math

import numba
import numpy as np


@numba.njit(cache=True)
def _pick(u, m):
    j = int(u * m)
    if j >= m:
        j = m - 1
    return j


@numba.njit(cache=True)
def grow(depths, m, steps, g, inserted):
    """Perform ``steps`` uniform-leaf splits on ``depths[:m]``; return the new leaf count.

    If ``inserted`` is non-empty, the depth of the split leaf at step ``i`` is
    written to ``inserted[i]``.
    """
    record = inserted.shape[0] > 0
    for i in range(steps):
        j = _pick(g.random(), m)
        d = depths[j]
        if record:
            inserted[i] = d
        depths[j] = d + 1
        depths[m] = d + 1
        m += 1
    return m


@numba.njit(cache=True)
def grow_epl(n, g):
    """External path length after ``n`` uniform insertions from a single leaf."""
    depths = np.zeros(n + 1, dtype=np.int32)
    m = 1
    epl = 0
    for _ in range(n):
        j = _pick(g.random(), m)
        d = depths[j]
        epl += d + 2
        depths[j] = d + 1
        depths[m] = d + 1
        m += 1
    return epl


@numba.njit(cache=True)
def yule_to_time(t_end, g, capacity):
    """Run the Yule process on leaf depths up to time ``t_end``.

    Returns ``(depths, m, next_depth)`` where ``m`` is the leaf count at
    ``t_end`` and ``next_depth`` the depth of the first leaf to split strictly
    after ``t_end``.
    """
    depths = np.zeros(capacity, dtype=np.int32)
    m = 1
    s = 0.0
    while True:
        s += g.standard_exponential() / m
        j = _pick(g.random(), m)
        if s > t_end:
            return depths, m, depths[j]
        if m == depths.shape[0]:
            bigger = np.zeros(2 * m, dtype=np.int32)
            bigger[:m] = depths
            depths = bigger
        d = depths[j] + 1
        depths[j] = d
        depths[m] = d
        m += 1


@numba.njit(cache=True)
def yule_count(t_end, g):
    """Leaf count of the plain Yule process at ``t_end`` (gaps Exp(m) with m leaves)."""
    m = 1
    s = 0.0
    while True:
        s += g.standard_exponential() / m
        if s > t_end:
            return m
        m += 1


@numba.njit(cache=True)
def grow_biased(depths, m, spine, steps, two_z, g, spine_hits):
    """Biased BST steps: the marked leaf is chosen w.p. 2z/(n+2z), others 1/(n+2z).

    ``n = m - 1`` internal nodes. The marked child is a fair coin; both
    children have the same depth, so the mark keeps its array slot or moves to
    the new slot ``m`` accordingly. Returns ``(m, spine)``.
    """
    record = spine_hits.shape[0] > 0
    for i in range(steps):
        n = m - 1
        u = g.random() * (n + two_z)
        if u < two_z:
            d = depths[spine] + 1
            depths[spine] = d
            depths[m] = d
            if g.random() < 0.5:
                spine = m
            if record:
                spine_hits[i] = 1
        else:
            j = int(u - two_z)
            if j >= n:
                j = n - 1
            if j >= spine:
                j += 1
            d = depths[j] + 1
            depths[j] = d
            depths[m] = d
            if record:
                spine_hits[i] = 0
        m += 1
    return m, spine


@numba.njit(cache=True)
def biased_yule_count(t_end, two_z, g):
    """``(N_t, s(t))`` for the tilted Yule tree.

    The marked leaf keeps a private Exp(2z) clock; the other ``N - 1`` leaves
    are merged into one Exp(N - 1) clock, redrawn after every event.
    """
    m = 1
    s = 0
    now = 0.0
    ring = g.standard_exponential() / two_z
    while True:
        if m > 1:
            nxt = now + g.standard_exponential() / (m - 1)
        else:
            nxt = math.inf
        if ring <= nxt:
            if ring > t_end:
                return m, s
            now = ring
            s += 1
            ring = now + g.standard_exponential() / two_z
        else:
            if nxt > t_end:
                return m, s
            now = nxt
        m += 1


@numba.njit(cache=True)
def lbst_insertion_depth(n, g):
    """Depth at which key ``n + 1`` lands in a BST built from ``n`` uniform keys.

    Only keys falling inside the current search interval around the new key
    change the path, and the waiting time for such a key is geometric, so the
    loop runs once per ancestor rather than once per key.
    """
    y = g.random()
    lo = 0.0
    hi = 1.0
    used = 0
    depth = 0
    while True:
        w = hi - lo
        u = g.random()
        if u <= 0.0:
            return depth
        gap = math.ceil(math.log(u) / math.log1p(-w))
        if gap < 1.0:
            gap = 1.0
        if gap > n - used:
            return depth
        used += int(gap)
        x = lo + w * g.random()
        if x < y:
            lo = x
        else:
            hi = x
        depth += 1


@numba.njit(cache=True)
def _log_survival(k, m, two_z):
    # log P(no spine split at steps k+1..m) = sum_{j=k+1}^{m} log(j / (j + 2z))
    return (math.lgamma(m + 1.0) - math.lgamma(m + 1.0 + two_z)) - (
        math.lgamma(k + 1.0) - math.lgamma(k + 1.0 + two_z))


@numba.njit(cache=True)
def spine_depth_skip(n, two_z, g):
    """Spine depth ``s_n`` of the biased BST after ``n`` steps.

    Step ``k`` (tree with ``k`` internal nodes) splits the marked leaf with
    probability ``2z/(k+2z)``; step 0 always does. The index of the next spine
    split is drawn by inverting its survival function.
    """
    if n <= 0:
        return 0
    s = 1
    k = 0
    while True:
        logv = math.log(g.random() + 1e-300)
        # smallest m > k with log S(k, m) < log V
        if _log_survival(k, n - 1, two_z) >= logv:
            return s
        lo = k
        step = 1
        hi = k + 1
        while _log_survival(k, hi, two_z) >= logv:
            lo = hi
            step *= 2
            hi = min(k + step, n - 1)
        while hi - lo > 1:
            mid = (lo + hi) // 2
            if _log_survival(k, mid, two_z) >= logv:
                lo = mid
            else:
                hi = mid
        s += 1
        k = hi


def empty_record():
    return np.zeros(0, dtype=np.int32)
