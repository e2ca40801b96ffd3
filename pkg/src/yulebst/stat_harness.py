"""Reproducible Monte Carlo execution and goodness-of-fit tests.

Every replicate gets its own counter-based stream: a Philox generator keyed by
``(seed, replicate)``. Draw ``j`` of replicate ``i`` is therefore fixed by the
triple ``(seed, i, j)`` no matter how replicates are scheduled.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from importlib import resources
from typing import Any, Callable, Mapping, Sequence

import numpy as np
from scipy import stats

_MASK64 = (1 << 64) - 1


def stream(seed: int, replicate: int = 0) -> np.random.Generator:
    """Independent generator for replicate ``replicate`` of run ``seed``."""
    return np.random.Generator(np.random.Philox(key=[seed & _MASK64, replicate & _MASK64]))


def load_thresholds() -> dict[str, Any]:
    text = resources.files("yulebst").joinpath("thresholds.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class ReplicateSpec:
    seed: int
    replicates: int
    n: int | None = None
    t: float | None = None
    params: Mapping[str, Any] = field(default_factory=dict)


@dataclass
class TestReport:
    name: str
    statistic: float
    p_value: float | None
    sample_size: int
    passed: bool
    threshold: str = ""
    detail: dict[str, Any] = field(default_factory=dict)

    __test__ = False  # not a pytest class

    def __post_init__(self):
        if self.p_value is not None and not 0.0 <= self.p_value <= 1.0:
            raise ValueError(f"p-value {self.p_value} outside [0, 1]")

    def to_json(self) -> str:
        return json.dumps(_plain(asdict(self)), sort_keys=True)

    def line(self) -> str:
        mark = "PASS" if self.passed else "FAIL"
        p = "" if self.p_value is None else f" p={self.p_value:.4g}"
        return f"[{mark}] {self.name}: statistic={self.statistic:.6g}{p} ({self.threshold})"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.generic):
        return obj.item()
    if isinstance(obj, float) and not math.isfinite(obj):
        return repr(obj)
    return obj


def ks_test(sample, cdf: Callable | str, *, alpha: float = 0.001, name: str = "ks") -> TestReport:
    sample = np.asarray(sample, dtype=float)
    if sample.size == 0:
        raise ValueError("empty sample")
    res = stats.kstest(sample, cdf)
    p = float(res.pvalue)
    return TestReport(name, float(res.statistic), p, int(sample.size), p > alpha, f"p > {alpha}")


def lattice_ks(sample, mean: float, sd: float, *, name: str = "lattice-ks",
               max_statistic: float | None = None) -> TestReport:
    """KS distance of an integer sample to N(mean, sd^2) with continuity correction.

    The empirical cdf at each integer ``k`` is compared with
    ``Phi((k + 1/2 - mean) / sd)``, so an exact lattice law close to the normal
    gives a small statistic even though it has atoms.
    """
    sample = np.asarray(sample, dtype=np.int64)
    if sample.size == 0:
        raise ValueError("empty sample")
    lo, hi = int(sample.min()) - 1, int(sample.max())
    grid = np.arange(lo, hi + 1)
    counts = np.bincount(sample - lo, minlength=grid.size)
    ecdf = np.cumsum(counts) / sample.size
    d = float(np.max(np.abs(ecdf - stats.norm.cdf((grid + 0.5 - mean) / sd))))
    p = float(stats.kstwo.sf(d, sample.size))
    passed = True if max_statistic is None else d < max_statistic
    thr = "" if max_statistic is None else f"statistic < {max_statistic}"
    return TestReport(name, d, p, int(sample.size), passed, thr, {"mean": mean, "sd": sd})


def two_sample_ks(a, b, *, alpha: float = 0.001, name: str = "ks-2samp") -> TestReport:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.size == 0 or b.size == 0:
        raise ValueError("empty sample")
    res = stats.ks_2samp(a, b)
    p = float(res.pvalue)
    return TestReport(name, float(res.statistic), p, int(a.size + b.size), p > alpha, f"p > {alpha}")


def pool_cells(observed, expected, min_expected: float = 5.0):
    """Merge the sparsest cells until every cell expects at least ``min_expected``."""
    observed = np.asarray(observed, dtype=float)
    expected = np.asarray(expected, dtype=float)
    order = np.argsort(expected, kind="stable")
    obs_out, exp_out = [], []
    acc_o = acc_e = 0.0
    for i in order:
        acc_o += observed[i]
        acc_e += expected[i]
        if acc_e >= min_expected:
            obs_out.append(acc_o)
            exp_out.append(acc_e)
            acc_o = acc_e = 0.0
    if acc_e > 0 or acc_o > 0:
        if exp_out:
            obs_out[-1] += acc_o
            exp_out[-1] += acc_e
        else:
            obs_out.append(acc_o)
            exp_out.append(acc_e)
    return np.array(obs_out), np.array(exp_out)


def chi_square(observed, expected_probs, *, alpha: float = 0.001, min_expected: float = 5.0,
               name: str = "chi-square") -> TestReport:
    """Pearson goodness of fit of counts against cell probabilities.

    ``observed`` and ``expected_probs`` are either aligned sequences or
    mappings from category to count / probability. Observations in a category
    of probability zero make the test fail outright.
    """
    if isinstance(expected_probs, Mapping):
        obs_map = dict(observed)
        stray = [c for c, v in obs_map.items() if v and not expected_probs.get(c, 0)]
        keys = list(expected_probs)
        probs = np.array([float(expected_probs[k]) for k in keys])
        obs = np.array([obs_map.get(k, 0) for k in keys], dtype=float)
        n_stray = sum(obs_map[c] for c in stray)
    else:
        probs = np.asarray(expected_probs, dtype=float)
        obs = np.asarray(observed, dtype=float)
        if obs.shape != probs.shape:
            raise ValueError("observed and expected have different shapes")
        n_stray = float(obs[probs <= 0].sum())
        keep = probs > 0
        obs, probs = obs[keep], probs[keep]
    total = obs.sum() + n_stray
    if total <= 0:
        raise ValueError("no observations")
    if not math.isclose(probs.sum(), 1.0, rel_tol=1e-9, abs_tol=1e-12):
        raise ValueError(f"probabilities sum to {probs.sum()}, not 1")
    o, e = pool_cells(obs, probs * total, min_expected)
    if o.size < 2:
        raise ValueError("degenerate categories: fewer than two cells after pooling")
    if n_stray:
        return TestReport(name, math.inf, 0.0, int(total), False, f"p > {alpha}",
                          {"stray_observations": int(n_stray)})
    stat = float(((o - e) ** 2 / e).sum())
    p = float(stats.chi2.sf(stat, o.size - 1))
    return TestReport(name, stat, p, int(total), p > alpha, f"p > {alpha}", {"cells": int(o.size)})


@dataclass
class MonteCarloResult:
    mean: float
    stderr: float
    ci95: tuple[float, float]
    values: np.ndarray

    def within(self, target: float, sigmas: float = 3.0) -> bool:
        return abs(self.mean - target) <= sigmas * self.stderr + 1e-15 * max(1.0, abs(target))


def monte_carlo(spec: ReplicateSpec, estimator: Callable[[np.random.Generator, ReplicateSpec], float],
                *, workers: int = 1) -> MonteCarloResult:
    """Run ``estimator(stream(seed, i), spec)`` for every replicate ``i``.

    Results are reduced in replicate order, so the output does not depend on
    ``workers``.
    """
    if spec.replicates < 2:
        raise ValueError("need at least two replicates")

    def one(i: int) -> float:
        return float(estimator(stream(spec.seed, i), spec))

    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = np.fromiter(pool.map(one, range(spec.replicates)), float, spec.replicates)
    else:
        values = np.fromiter((one(i) for i in range(spec.replicates)), float, spec.replicates)
    return summarize(values)


def summarize(values: Sequence[float]) -> MonteCarloResult:
    values = np.asarray(values, dtype=float)
    mean = float(values.mean())
    stderr = float(values.std(ddof=1) / math.sqrt(values.size))
    return MonteCarloResult(mean, stderr, (mean - 1.96 * stderr, mean + 1.96 * stderr), values)
