"""Martingale families of the BST and Yule trees, their normalizers and limit maps.

Inputs describing a tree may be a ``BinaryTree``, a ``Profile``, or an
integer array ``counts`` with ``counts[k]`` leaves at depth ``k``. A
``Fraction`` (or int) ``z`` selects exact rational arithmetic where the
quantity is rational.
"""

from __future__ import annotations

import json
import math
import numbers
from dataclasses import asdict, dataclass
from fractions import Fraction

import numpy as np
from scipy import optimize, special

from .tree_core import BinaryTree, Profile

# below this n, C_n is a plain product; above, log-gamma differences
_DIRECT_PRODUCT_MAX = 1000


def eta(lam: float, x: float) -> float:
    """Cramer transform of Poisson(lam): x log(x/lam) - x + lam, with eta(0) = lam."""
    if lam <= 0:
        raise ValueError("lam must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return float(lam)
    return x * math.log(x / lam) - x + lam


@dataclass(frozen=True)
class CriticalConstants:
    c_prime: float
    c: float
    z_minus: float
    z_plus: float

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)


def critical_constants(tol: float = 1e-12) -> CriticalConstants:
    """The two roots of eta_2(x) = 1 and the critical z = root / 2."""
    if tol <= 0:
        raise ValueError("tol must be positive")

    def g(x):
        return eta(2.0, x) - 1.0

    hi = 4.0
    while g(hi) < 0:
        hi *= 2
    c_prime = optimize.brentq(g, 0.0, 2.0, xtol=tol)
    c = optimize.brentq(g, 2.0, hi, xtol=tol)
    return CriticalConstants(c_prime, c, c_prime / 2, c / 2)


# -- normalizer C_n(z) ---------------------------------------------------------------

def _is_exact(z) -> bool:
    return isinstance(z, (Fraction, numbers.Integral)) and not isinstance(z, bool)


def _check_z(z) -> None:
    zc = complex(z)
    two_z = 2 * zc.real
    if zc.imag == 0 and two_z <= 0 and two_z == round(two_z):
        raise ValueError(f"z={z} is in the excluded set {{0, -1/2, -1, ...}}")


def c_n(z, n: int):
    """C_n(z) = prod_{k<n} (k + 2z)/(k + 1); exact when ``z`` is rational."""
    _check_z(z)
    if n < 0:
        raise ValueError("n must be >= 0")
    if _is_exact(z):
        z = Fraction(z)
        out = Fraction(1)
        for k in range(n):
            out *= (k + 2 * z) / (k + 1)
        return out
    if n <= _DIRECT_PRODUCT_MAX:
        out = 1.0
        for k in range(n):
            out *= (k + 2 * z) / (k + 1)
        return out
    val = np.exp(log_c_n(z, n))
    return float(val.real) if isinstance(z, numbers.Real) else complex(val)


def log_c_n(z, n: int):
    """log C_n(z); real for real z > 0, principal complex branch otherwise."""
    _check_z(z)
    if isinstance(z, numbers.Real) and z > 0:
        return float(special.gammaln(n + 2 * z) - special.gammaln(2 * z) - special.gammaln(n + 1))
    w = complex(2 * z)
    return complex(special.loggamma(n + w) - special.loggamma(w) - special.gammaln(n + 1))


def c_n_asymptotic(z, n: int):
    """n^{2z-1} / Gamma(2z)."""
    _check_z(z)
    if isinstance(z, numbers.Real) and z > 0:
        return math.exp((2 * z - 1) * math.log(n) - special.gammaln(2 * z))
    w = complex(2 * z)
    return complex(np.exp((w - 1) * math.log(n) - special.loggamma(w)))


def log_derivative_c_n(z, n: int):
    """C'_n(z)/C_n(z) = sum_{j<n} 2/(j + 2z)."""
    _check_z(z)
    if _is_exact(z):
        z = Fraction(z)
        return sum((Fraction(2) / (j + 2 * z) for j in range(n)), Fraction(0))
    if n <= _DIRECT_PRODUCT_MAX:
        return sum(2.0 / (j + 2 * z) for j in range(n))
    w = 2 * z
    val = 2 * (special.psi(n + w) - special.psi(w))
    return float(np.real(val)) if isinstance(z, numbers.Real) else complex(val)


def harmonic(n: int, exact: bool = False):
    if exact:
        return sum((Fraction(1, j) for j in range(1, n + 1)), Fraction(0))
    if n <= _DIRECT_PRODUCT_MAX:
        return math.fsum(1.0 / j for j in range(1, n + 1))
    return float(special.psi(n + 1) + np.euler_gamma)


# -- profile helpers ------------------------------------------------------------------

def _counts(obj) -> np.ndarray:
    if isinstance(obj, BinaryTree):
        return obj.profile().as_array()
    if isinstance(obj, Profile):
        return obj.as_array()
    return np.asarray(obj, dtype=np.int64)


def _n_internal(counts: np.ndarray) -> int:
    return int(counts.sum()) - 1


def _power_sum(counts: np.ndarray, z, shift: float = 0.0, weights=None):
    """log of sum_k w_k U_k z^k (real z > 0), computed stably. Returns -inf if empty."""
    ks = np.nonzero(counts)[0]
    w = counts[ks].astype(float)
    if weights is not None:
        w = w * weights(ks)
        keep = w > 0
        ks, w = ks[keep], w[keep]
    if ks.size == 0:
        return -math.inf
    terms = np.log(w) + ks * math.log(z) + shift
    return float(special.logsumexp(terms))


def _exact_poly(counts: np.ndarray, z: Fraction, deriv: bool = False) -> Fraction:
    total = Fraction(0)
    for k, c in enumerate(counts):
        if not c:
            continue
        if not deriv:
            total += int(c) * z**k
        elif k:
            total += int(c) * k * z ** (k - 1)
    return total


# -- BST martingale --------------------------------------------------------------------

def bst_martingale(obj, z):
    """M_n(z) = sum_u z^|u| / C_n(z)."""
    counts = _counts(obj)
    n = _n_internal(counts)
    _check_z(z)
    if _is_exact(z):
        z = Fraction(z)
        return _exact_poly(counts, z) / c_n(z, n)
    if isinstance(z, numbers.Real) and z > 0:
        return math.exp(_power_sum(counts, z) - log_c_n(z, n))
    ks = np.nonzero(counts)[0]
    zc = complex(z)
    val = (counts[ks] * np.power(zc, ks)).sum() / c_n(zc, n)
    return complex(val) if not isinstance(z, numbers.Real) else float(np.real(val))


def bst_derivative_martingale(obj, z):
    """d/dz M_n(z) = [sum_u |u| z^{|u|-1}] / C_n(z) - (C'_n/C_n)(z) M_n(z)."""
    counts = _counts(obj)
    n = _n_internal(counts)
    _check_z(z)
    if _is_exact(z):
        z = Fraction(z)
        c = c_n(z, n)
        return _exact_poly(counts, z, deriv=True) / c - log_derivative_c_n(z, n) * _exact_poly(counts, z) / c
    if not (isinstance(z, numbers.Real) and z > 0):
        raise ValueError("derivative martingale needs real z > 0 or rational z")
    logc = log_c_n(z, n)
    lead = _power_sum(counts, z, shift=-math.log(z), weights=lambda k: k.astype(float))
    first = math.exp(lead - logc) if lead > -math.inf else 0.0
    return first - log_derivative_c_n(z, n) * math.exp(_power_sum(counts, z) - logc)


def quicksort_functional(obj, exact: bool = False):
    """M'_n(1) = EPL/(n + 1) - 2(H_{n+1} - 1)."""
    counts = _counts(obj)
    n = _n_internal(counts)
    epl = int((np.arange(counts.size) * counts).sum())
    if exact:
        return Fraction(epl, n + 1) - 2 * (harmonic(n + 1, exact=True) - 1)
    return epl / (n + 1) - 2 * (harmonic(n + 1) - 1)


def quicksort_from_epl(epl, n: int):
    """Vectorized M'_n(1) from external path lengths of trees with ``n`` internal nodes."""
    return np.asarray(epl, dtype=float) / (n + 1) - 2 * (harmonic(n + 1) - 1)


# -- Yule martingale ---------------------------------------------------------------------

def yule_martingale(obj, t: float, z):
    """M(t, z) = sum_u z^|u| e^{t(1 - 2z)}."""
    counts = _counts(obj)
    if t < 0:
        raise ValueError("t must be >= 0")
    if isinstance(z, numbers.Real) and z > 0:
        return math.exp(_power_sum(counts, float(z), shift=t * (1 - 2 * float(z))))
    ks = np.nonzero(counts)[0]
    zc = complex(z)
    val = (counts[ks] * np.exp(ks * np.log(zc) + t * (1 - 2 * zc))).sum()
    return complex(val) if not isinstance(z, numbers.Real) else float(np.real(val))


def yule_derivative_martingale(obj, t: float, z: float) -> float:
    """M'(t, z) = sum_u (|u|/z - 2t) z^|u| e^{t(1 - 2z)}."""
    counts = _counts(obj)
    if t < 0:
        raise ValueError("t must be >= 0")
    if not z > 0:
        raise ValueError("z must be positive")
    ks = np.nonzero(counts)[0]
    logw = np.log(counts[ks].astype(float)) + ks * math.log(z) + t * (1 - 2 * z)
    return float(((ks / z - 2 * t) * np.exp(logw)).sum())


def time_component(n: int, tau_n: float, z):
    """e^{tau_n (1 - 2z)} C_n(z)."""
    if isinstance(z, numbers.Real) and z > 0:
        return math.exp(tau_n * (1 - 2 * z) + log_c_n(z, n))
    zc = complex(z)
    val = np.exp(tau_n * (1 - 2 * zc) + log_c_n(zc, n))
    return complex(val) if not isinstance(z, numbers.Real) else float(np.real(val))


def limit_connection_factor(xi: float, z: float) -> float:
    """xi^{2z-1} / Gamma(2z)."""
    if xi <= 0:
        raise ValueError("xi must be positive")
    return math.exp((2 * z - 1) * math.log(xi) - special.gammaln(2 * z))


# -- L^q region ---------------------------------------------------------------------------

def lq_region(z, q: float) -> float:
    """f(z, q) = 1 + q(2 Re z - 1) - 2|z|^q; z is in V_q iff f > 0."""
    if not 1 < q <= 2:
        raise ValueError("q must lie in (1, 2]")
    zc = complex(z)
    return 1 + q * (2 * zc.real - 1) - 2 * abs(zc) ** q


def lq_real_interval(q: float, tol: float = 1e-13) -> tuple[float, float]:
    """Endpoints of V_q on the real axis, the two roots of f(x, q) = 0 around x = 1/2."""
    f = lambda x: lq_region(x, q)  # noqa: E731
    hi = 1.0
    while f(hi) > 0:
        hi *= 2
    return optimize.brentq(f, 0.0, 0.5, xtol=tol), optimize.brentq(f, 0.5, hi, xtol=tol)


def region_scan(re_values, im_values, q_values) -> list[dict]:
    return [{"z_re": float(a), "z_im": float(b), "q": float(q), "f": lq_region(complex(a, b), q)}
            for q in q_values for a in re_values for b in im_values]


# -- splitting maps -------------------------------------------------------------------------

def splitting_map(m0, m1, u, z):
    """z (u^{2z-1} m0 + (1-u)^{2z-1} m1)."""
    u = np.asarray(u, dtype=float)
    return z * (u ** (2 * z - 1) * m0 + (1 - u) ** (2 * z - 1) * m1)


def derivative_splitting_map(dm0, dm1, m0, m1, m, u, z):
    """Splitting relation for the derivative limit in terms of both children's limits."""
    u = np.asarray(u, dtype=float)
    a = u ** (2 * z - 1)
    b = (1 - u) ** (2 * z - 1)
    return (z * a * dm0 + z * b * dm1
            + 2 * z * a * np.log(u) * m0 + 2 * z * b * np.log1p(-u) * m1
            + m / z)


def quicksort_map(x0, x1, u):
    """U X0 + (1-U) X1 + 2U log U + 2(1-U) log(1-U) + 1."""
    return derivative_splitting_map(x0, x1, 1.0, 1.0, 1.0, u, 1.0)
