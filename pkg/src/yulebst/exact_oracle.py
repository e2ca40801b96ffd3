"""Exact ground truth for the BST chain.

Everything here is computed without simulation: unsigned Stirling numbers of
the first kind as Python integers, shape laws by enumeration, depth laws by
convolution of independent Bernoulli variables, and polynomial expansions in
rational arithmetic.
"""

from __future__ import annotations

import math
from fractions import Fraction
from functools import lru_cache

import numpy as np
from scipy import integrate, special

from .martingales import eta
from .tree_core import BinaryTree

STIRLING_N_MAX = 500
ENUMERATION_N_MAX = 8


class StirlingTable:
    """Rows c(n, .) of unsigned Stirling numbers of the first kind, built on demand."""

    def __init__(self, n_max: int = STIRLING_N_MAX):
        self.n_max = n_max
        self._rows: list[list[int]] = [[1]]

    def row(self, n: int) -> list[int]:
        if not 0 <= n <= self.n_max:
            raise ValueError(f"n={n} outside 0..{self.n_max}")
        rows = self._rows
        while len(rows) <= n:
            m = len(rows) - 1
            prev = rows[m]
            new = [0] * (m + 2)
            for k in range(1, m + 2):
                new[k] = (prev[k - 1] if k - 1 <= m else 0) + (m * prev[k] if k <= m else 0)
            rows.append(new)
        return rows[n]

    def __call__(self, n: int, k: int) -> int:
        if not 0 <= k <= n:
            raise ValueError(f"k={k} outside 0..{n}")
        return self.row(n)[k]


_TABLE = StirlingTable()


def stirling_first(n: int, k: int) -> int:
    return _TABLE(n, k)


def expected_profile_exact(n: int) -> dict[int, Fraction]:
    """E U_k(n) = 2^k c(n, k) / n!, for every k with a nonzero value."""
    row = _TABLE.row(n)
    nf = math.factorial(n)
    return {k: Fraction(2**k * c, nf) for k, c in enumerate(row) if c}


def default_k_max(n: int) -> int:
    return n if n < 64 else min(n, int(5.5 * math.log(n)) + 60)


def expected_profile_recurrence(n: int, k_max: int | None = None) -> np.ndarray:
    """E U_k(n) for k = 0..k_max by iterating one uniform insertion at a time.

    A leaf at depth k is replaced by two at depth k + 1 with probability
    1/(m + 1) per leaf, so E U_k(m+1) = E U_k(m) + (2 E U_{k-1}(m) - E U_k(m))/(m + 1).
    Mass beyond ``k_max`` is dropped.
    """
    if k_max is None:
        k_max = default_k_max(n)
    e = np.zeros(k_max + 1)
    e[0] = 1.0
    for m in range(n):
        w = 1.0 / (m + 1)
        top = min(m + 1, k_max)
        e[1 : top + 1] = e[1 : top + 1] * (1.0 - w) + 2.0 * w * e[0:top]
        e[0] *= 1.0 - w
    return e


def hwang_estimate(n: int, k: int) -> tuple[float, float]:
    """Two asymptotic forms of E U_k(n), with r = k / log n.

    form1 = (2 log n)^k / (k! n Gamma(r))
    form2 = n^{1 - eta_2(r)} / (Gamma(r) sqrt(2 pi k))
    """
    if k < 1 or n < 2:
        raise ValueError("need k >= 1 and n >= 2")
    ln = math.log(n)
    r = k / ln
    log1 = k * math.log(2 * ln) - special.gammaln(k + 1) - ln - special.gammaln(r)
    log2 = (1 - eta(2.0, r)) * ln - special.gammaln(r) - 0.5 * math.log(2 * math.pi * k)
    return math.exp(log1), math.exp(log2)


# -- shapes ---------------------------------------------------------------------------------

@lru_cache(maxsize=None)
def tree_codes(n: int) -> tuple[str, ...]:
    """Preorder codes of all complete binary trees with ``n`` internal nodes."""
    if n == 0:
        return ("0",)
    return tuple("1" + a + b for i in range(n) for a in tree_codes(i) for b in tree_codes(n - 1 - i))


def all_trees(n: int) -> list[BinaryTree]:
    return [BinaryTree.from_preorder(c) for c in tree_codes(n)]


def catalan(n: int) -> int:
    return math.comb(2 * n, n) // (n + 1)


def _shapes_by_chain(n: int) -> dict[str, Fraction]:
    dist = {"0": Fraction(1)}
    for m in range(n):
        nxt: dict[str, Fraction] = {}
        for code, p in dist.items():
            tree = BinaryTree.from_preorder(code)
            share = p / (m + 1)
            for leaf in tree.leaves:
                child = tree.copy()
                child.split(leaf)
                key = child.serialize()
                nxt[key] = nxt.get(key, Fraction(0)) + share
        dist = nxt
    return dist


def _shapes_by_product(n: int) -> dict[str, Fraction]:
    out = {}
    for code in tree_codes(n):
        # preorder scan: subtree key count of every internal node
        p = Fraction(1)
        stack = []  # pending internal nodes: [keys so far, children still open]
        sizes = []
        for c in code:
            if c == "1":
                stack.append([1, 2])
            else:
                # a leaf closes one child slot of the innermost open node
                done = 0
                while stack:
                    top = stack[-1]
                    top[0] += done
                    top[1] -= 1
                    if top[1]:
                        break
                    done = top[0]
                    sizes.append(top[0])
                    stack.pop()
        for s in sizes:
            p /= s
        out[code] = p
    return out


def enumerate_shape_distribution(n: int, method: str = "chain") -> dict[str, Fraction]:
    """Exact law of T_n's shape, keyed by preorder code.

    ``method="chain"`` propagates the Markov chain (each leaf 1/(m+1));
    ``method="product"`` uses prod over internal nodes of 1/(keys in subtree).
    """
    if not 0 <= n <= ENUMERATION_N_MAX:
        raise ValueError(f"enumeration limited to n <= {ENUMERATION_N_MAX}")
    if method == "chain":
        return _shapes_by_chain(n)
    if method == "product":
        return _shapes_by_product(n)
    raise ValueError(f"unknown method {method!r}")


def expected_profile_by_enumeration(n: int) -> dict[int, Fraction]:
    acc: dict[int, Fraction] = {}
    for code, p in enumerate_shape_distribution(n).items():
        for k, c in BinaryTree.from_preorder(code).profile().counts.items():
            acc[k] = acc.get(k, Fraction(0)) + p * c
    return acc


# -- depth laws ------------------------------------------------------------------------------

def bernoulli_sum_pmf(probs, exact: bool = False, tiny: float = 1e-300):
    """pmf of a sum of independent Bernoulli(p_i), index = value.

    In float mode the upper tail is not extended once its mass drops below
    ``tiny``.
    """
    if exact:
        pmf = [Fraction(1)]
        for p in probs:
            p = Fraction(p)
            q = 1 - p
            new = [Fraction(0)] * (len(pmf) + 1)
            for j, v in enumerate(pmf):
                new[j] += v * q
                new[j + 1] += v * p
            pmf = new
        return pmf
    probs = np.asarray(list(probs), dtype=float)
    pmf = np.zeros(probs.size + 1)
    pmf[0] = 1.0
    hi = 0
    for p in probs:
        grow = pmf[hi] * p > tiny
        top = hi + 1 if grow else hi
        pmf[1 : top + 1] = pmf[1 : top + 1] * (1 - p) + pmf[0:top] * p
        pmf[0] *= 1 - p
        hi = top
    return pmf[: hi + 1]


def _shifted(pmf, exact: bool):
    if exact:
        return [Fraction(0)] + list(pmf)
    return np.concatenate(([0.0], pmf))


def insertion_depth_pmf(n: int) -> list[Fraction]:
    """Exact law of d_n: 1 + sum_{k=1}^{n-1} Bernoulli(2/(k+2)); d_0 = 0."""
    if n < 0:
        raise ValueError("n must be >= 0")
    if n == 0:
        return [Fraction(1)]
    return _shifted(bernoulli_sum_pmf((Fraction(2, k + 2) for k in range(1, n)), exact=True), True)


def cn_polynomial_coefficients(n: int) -> list[Fraction]:
    """Coefficients in z of C_n(z)/(n+1), by direct polynomial multiplication."""
    coeffs = [Fraction(1)]
    for k in range(n):
        # multiply by (k + 2z)/(k + 1)
        new = [Fraction(0)] * (len(coeffs) + 1)
        for j, c in enumerate(coeffs):
            new[j] += c * k / (k + 1)
            new[j + 1] += c * 2 / (k + 1)
        coeffs = new
    return [c / (n + 1) for c in coeffs]


def spine_depth_pmf(n: int, two_z):
    """Law of the spine depth s_n under the tilt 2z: 1 + sum_{k=1}^{n-1} Bernoulli(2z/(k+2z)).

    Exact (list of Fractions) for rational ``two_z``, float array otherwise.
    """
    if not two_z > 0:
        raise ValueError("two_z must be positive")
    exact = isinstance(two_z, (Fraction, int))
    if n == 0:
        return [Fraction(1)] if exact else np.array([1.0])
    if exact:
        tz = Fraction(two_z)
        probs = (tz / (k + tz) for k in range(1, n))
    else:
        ks = np.arange(1, n, dtype=float)
        probs = two_z / (ks + two_z)
    return _shifted(bernoulli_sum_pmf(probs, exact=exact), exact)


def bernoulli_sum_moments(n: int, two_z: float) -> tuple[float, float]:
    """Mean and variance of 1 + sum_{k=1}^{n-1} Bernoulli(2z/(k+2z))."""
    if n <= 0:
        return 0.0, 0.0
    ks = np.arange(1, n, dtype=float)
    p = two_z / (ks + two_z)
    return 1.0 + float(p.sum()), float((p * (1 - p)).sum())


def pmf_mean(pmf):
    return sum(k * p for k, p in enumerate(pmf))


# -- Quicksort limit --------------------------------------------------------------------------

def quicksort_toll(u):
    """g(u) = 2u log u + 2(1-u) log(1-u) + 1."""
    u = np.asarray(u, dtype=float)
    return 2 * special.xlogy(u, u) + 2 * special.xlogy(1 - u, 1 - u) + 1


def quicksort_moments() -> tuple[float, float]:
    """Mean and second moment of the Quicksort fixed point: 0 and 3 * int_0^1 g(u)^2 du."""
    val, _ = integrate.quad(lambda u: float(quicksort_toll(u)) ** 2, 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
    return 0.0, 3.0 * val


def quicksort_toll_integral() -> float:
    val, _ = integrate.quad(lambda u: float(quicksort_toll(u)), 0.0, 1.0, epsabs=1e-12, epsrel=1e-12)
    return val
