"""The acceptance suite: one report per criterion, each at its pinned tolerance.

Tolerances and sample sizes live in ``thresholds.json``. Every criterion is a
pure function of ``(seed, thresholds)``; its report carries the sub-checks in
``detail["checks"]``.
"""

from __future__ import annotations

import math
import time
from fractions import Fraction
from typing import Callable

import numpy as np
from scipy import stats

from . import _kernels, bst_process, exact_oracle, martingales, tilted_models, yule_process
from .stat_harness import TestReport, _plain, chi_square, ks_test, lattice_ks, load_thresholds, stream, two_sample_ks
from .tree_core import split_leaf

DEFAULT_SEED = 20240917
_MASK64 = (1 << 64) - 1


def derive_seed(seed: int, criterion: int, part: int = 0) -> int:
    return (seed * 1_000_003 + criterion * 1009 + part) & _MASK64


def _check(value, threshold: str, passed: bool) -> dict:
    return {"value": _plain(value), "threshold": threshold, "passed": bool(passed)}


def _report(number: int, title: str, checks: dict, statistic: float, p_value=None,
            sample_size: int = 0) -> TestReport:
    passed = all(c["passed"] for c in checks.values())
    failed = [k for k, c in checks.items() if not c["passed"]]
    thr = "all sub-checks" if not failed else "failed: " + ", ".join(failed)
    return TestReport(f"C{number:02d} {title}", float(statistic), p_value, int(sample_size), passed, thr,
                      {"checks": checks})


def report_lines(report: TestReport) -> list[str]:
    lines = [report.line()]
    for key, c in report.detail.get("checks", {}).items():
        mark = "ok " if c["passed"] else "BAD"
        lines.append(f"    {mark} {key}: {c['value']!r} ({c['threshold']})")
    return lines


# -- 1 ------------------------------------------------------------------------------------

def criterion_constants(seed: int, th: dict) -> TestReport:
    start = time.perf_counter()
    cc = martingales.critical_constants()
    elapsed = time.perf_counter() - start
    checks = {
        "c_prime": _check(cc.c_prime, f"|. - {th['c_prime']}| <= {th['c_prime_tol']}",
                          abs(cc.c_prime - th["c_prime"]) <= th["c_prime_tol"]),
        "c": _check(cc.c, f"|. - {th['c']}| <= {th['c_tol']}", abs(cc.c - th["c"]) <= th["c_tol"]),
        "z_minus": _check(cc.z_minus, f"|. - {th['z_minus']}| <= {th['z_tol']}",
                          abs(cc.z_minus - th["z_minus"]) <= th["z_tol"]),
        "z_plus": _check(cc.z_plus, f"|. - {th['z_plus']}| <= {th['z_tol']}",
                         abs(cc.z_plus - th["z_plus"]) <= th["z_tol"]),
        "runtime": _check(elapsed < th["runtime_s"], f"< {th['runtime_s']} s", elapsed < th["runtime_s"]),
    }
    return _report(1, "critical constants", checks, abs(cc.c - th["c"]))


# -- 2 ------------------------------------------------------------------------------------

def criterion_exact_martingale(seed: int, th: dict) -> TestReport:
    start = time.perf_counter()
    zs = [Fraction(z) for z in th["z_values"]]
    mismatches = 0
    deriv_mismatches = 0
    checked = 0
    for n in range(th["n_max"] + 1):
        for tree in exact_oracle.all_trees(n):
            succ = [split_leaf(tree, u).profile().as_array() for u in tree.leaves]
            here = tree.profile().as_array()
            for z in zs:
                avg = sum((martingales.bst_martingale(c, z) for c in succ), Fraction(0)) / (n + 1)
                mismatches += avg != martingales.bst_martingale(here, z)
            avg = sum((martingales.quicksort_functional(c, exact=True) for c in succ), Fraction(0)) / (n + 1)
            deriv_mismatches += avg != martingales.quicksort_functional(here, exact=True)
            checked += 1
    elapsed = time.perf_counter() - start
    checks = {
        "mismatches": _check(mismatches, "== 0 (exact rationals)", mismatches == 0),
        "derivative_mismatches_at_1": _check(deriv_mismatches, "== 0", deriv_mismatches == 0),
        "trees": _check(checked, f"all trees with n <= {th['n_max']}", checked == sum(
            exact_oracle.catalan(n) for n in range(th["n_max"] + 1))),
        "runtime": _check(elapsed < th["runtime_s"], f"< {th['runtime_s']} s", elapsed < th["runtime_s"]),
    }
    return _report(2, "exact martingale property", checks, mismatches + deriv_mismatches, sample_size=checked)


# -- 3 ------------------------------------------------------------------------------------

def criterion_connection(seed: int, th: dict) -> TestReport:
    cc = martingales.critical_constants()
    zs = np.linspace(cc.z_minus, cc.z_plus, th["z_points"] + 2)[1:-1]
    marks = set(th["checkpoints"])
    worst = 0.0
    evaluations = 0
    for i in range(th["paths"]):
        path = yule_process.yule_simulate(stream(derive_seed(seed, 3), i), jumps=th["n"])
        counts = np.zeros(th["n"] + 2, dtype=np.int64)
        counts[0] = 1
        for n, u in enumerate(path.splits, start=1):
            counts[u.depth] -= 1
            counts[u.depth + 1] += 2
            if n not in marks:
                continue
            tau = float(path.jump_times[n])
            for z in zs:
                lhs = martingales.yule_martingale(counts, tau, float(z))
                rhs = martingales.time_component(n, tau, float(z)) * martingales.bst_martingale(counts, float(z))
                worst = max(worst, abs(lhs - rhs) / abs(lhs))
                evaluations += 1
    checks = {"max_relative_residual": _check(worst, f"<= {th['max_rel_residual']}",
                                              worst <= th["max_rel_residual"])}
    return _report(3, "martingale connection", checks, worst, sample_size=evaluations)


# -- 4 ------------------------------------------------------------------------------------

def _shape_counts(codes) -> dict[str, int]:
    out: dict[str, int] = {}
    for c in codes:
        out[c] = out.get(c, 0) + 1
    return out


def criterion_embedding(seed: int, th: dict) -> TestReport:
    n, m = th["n"], th["samples"]
    law = exact_oracle.enumerate_shape_distribution(n, "product")
    probs = {k: float(v) for k, v in law.items()}
    samplers = {
        "yule": lambda g: yule_process.yule_simulate(g, jumps=n).tree.serialize(),
        "bst_step": lambda g: bst_process.run_chain(n, g).tree.serialize(),
        "keys": lambda g: bst_process.build_from_keys(list(g.random(n)))[1].serialize(),
    }
    checks = {}
    pvals = []
    for part, (label, draw) in enumerate(samplers.items(), start=1):
        s = derive_seed(seed, 4, part)
        obs = _shape_counts(draw(stream(s, i)) for i in range(m))
        rep = chi_square(obs, probs, alpha=th["p_min"], name=label)
        pvals.append(rep.p_value)
        checks[label] = _check(rep.p_value, f"p > {th['p_min']}", rep.passed)
    return _report(4, "embedding shape law", checks, min(pvals), min(pvals), 3 * m)


# -- 5 ------------------------------------------------------------------------------------

def criterion_exact_profile(seed: int, th: dict) -> TestReport:
    enum_bad = 0
    for n in range(th["enum_n_max"] + 1):
        enum_bad += exact_oracle.expected_profile_by_enumeration(n) != exact_oracle.expected_profile_exact(n)
    table = exact_oracle.StirlingTable(th["stirling_n_max"])
    stirling_bad = sum(
        sum(2**k * c for k, c in enumerate(table.row(n))) != math.factorial(n + 1)
        for n in range(th["stirling_n_max"] + 1))
    worst = 0.0
    for n in range(th["recurrence_n_max"] + 1):
        exact = exact_oracle.expected_profile_exact(n)
        rec = exact_oracle.expected_profile_recurrence(n, k_max=n)
        for k, v in exact.items():
            fv = float(v)
            if fv < th["normal_floor"]:
                continue
            worst = max(worst, abs(rec[k] / fv - 1))
    checks = {
        "enumeration_mismatches": _check(enum_bad, "== 0", enum_bad == 0),
        "stirling_identity_failures": _check(stirling_bad, "== 0", stirling_bad == 0),
        "recurrence_max_rel_error": _check(worst, f"<= {th['rel_tol']}", worst <= th["rel_tol"]),
    }
    return _report(5, "exact expected profile", checks, worst)


# -- 6 ------------------------------------------------------------------------------------

def profile_sup_statistic(counts: np.ndarray, expected: np.ndarray, n: int, r_lo: float, r_hi: float) -> float:
    ln = math.log(n)
    ks = [k for k in range(math.ceil(r_lo * ln), math.floor(r_hi * ln) + 1)]
    worst = 0.0
    for k in ks:
        u = counts[k] if k < counts.size else 0
        mart = martingales.bst_martingale(counts, k / (2 * ln))
        worst = max(worst, abs(u / expected[k] - mart))
    return worst


def _profile_medians(seed: int, n: int, th: dict) -> float:
    expected = exact_oracle.expected_profile_recurrence(n)
    vals = []
    for i in range(th["replicates"]):
        depths = bst_process.leaf_depths(n, stream(seed, i))
        counts = np.bincount(depths)
        vals.append(profile_sup_statistic(counts, expected, n, th["r_lo"], th["r_hi"]))
    return float(np.median(vals))


def criterion_profile_theorem(seed: int, th: dict) -> TestReport:
    big = _profile_medians(derive_seed(seed, 6, 1), th["n"], th)
    small = _profile_medians(derive_seed(seed, 6, 2), th["n_small"], th)
    checks = {
        "median_sup_large_n": _check(big, f"< {th['max_median_sup']}", big < th["max_median_sup"]),
        "decreases_from_small_n": _check([small, big], "large < small", big < small),
    }
    return _report(6, "profile convergence", checks, big, sample_size=2 * th["replicates"])


# -- 7 ------------------------------------------------------------------------------------

def criterion_hwang(seed: int, th: dict) -> TestReport:
    n = th["n"]
    k = round(2 * math.log(n))
    ref = exact_oracle.expected_profile_recurrence(n)[k]
    form1, form2 = exact_oracle.hwang_estimate(n, k)
    err1 = form1 / ref - 1
    checks = {
        "form1_rel_error": _check(err1, f"|.| < {th['rel_tol']}", abs(err1) < th["rel_tol"]),
        "form2_rel_error_info": _check(form2 / ref - 1, "reported only", True),
    }
    return _report(7, "profile asymptotic estimate", checks, abs(err1))


# -- 8 ------------------------------------------------------------------------------------

def quicksort_sample(n: int, replicates: int, seed: int) -> np.ndarray:
    epl = np.array([_kernels.grow_epl(n, stream(seed, i)) for i in range(replicates)], dtype=np.int64)
    return martingales.quicksort_from_epl(epl, n)


def criterion_quicksort(seed: int, th: dict) -> TestReport:
    x = quicksort_sample(th["n"], th["replicates"], derive_seed(seed, 8, 1))
    mean = float(x.mean())
    se = float(x.std(ddof=1) / math.sqrt(x.size))
    var = float(x.var(ddof=1))
    target = exact_oracle.quicksort_moments()[1]
    half = x.size // 2
    quarter = half // 2
    a, b0, b1 = x[:half], x[half:half + quarter], x[half + quarter:half + 2 * quarter]
    u = stream(derive_seed(seed, 8, 2)).random(quarter)
    ks = two_sample_ks(a, martingales.quicksort_map(b0, b1, u), alpha=th["p_min"])
    checks = {
        "mean": _check(mean, f"|.| <= {th['sigmas']} * {se:.3g}", abs(mean) <= th["sigmas"] * se),
        "variance": _check(var, f"within {th['var_rel_tol']:.0%} of {target:.6f}",
                           abs(var / target - 1) < th["var_rel_tol"]),
        "fixed_point_ks_p": _check(ks.p_value, f"p > {th['p_min']}", ks.passed),
    }
    return _report(8, "quicksort fixed point", checks, var, ks.p_value, x.size)


# -- 9 ------------------------------------------------------------------------------------

def criterion_null_limits(seed: int, th: dict) -> TestReport:
    ladder = th["ladder"]
    z_plus = martingales.critical_constants().z_plus
    reps = th["replicates"]
    mvals = np.empty((reps, len(ladder)))
    dvals = np.empty((reps, len(ladder)))
    rec = _kernels.empty_record()
    s = derive_seed(seed, 9)
    for i in range(reps):
        g = stream(s, i)
        depths = np.zeros(ladder[-1] + 1, dtype=np.int32)
        m, done = 1, 0
        for j, n in enumerate(ladder):
            m = _kernels.grow(depths, m, n - done, g, rec)
            done = n
            counts = np.bincount(depths[:m])
            mvals[i, j] = martingales.bst_martingale(counts, th["z"])
            dvals[i, j] = martingales.bst_derivative_martingale(counts, z_plus)
    medians = np.median(mvals, axis=0).tolist()
    fractions = (dvals < 0).mean(axis=0).tolist()
    checks = {
        "median_M_decreasing": _check(medians, "strictly decreasing",
                                      all(b < a for a, b in zip(medians, medians[1:]))),
        "fraction_negative_derivative": _check(fractions, "nondecreasing",
                                               all(b >= a for a, b in zip(fractions, fractions[1:]))),
    }
    return _report(9, "null limits and critical signs", checks, medians[-1], sample_size=reps)


# -- 10 -----------------------------------------------------------------------------------

def criterion_insertion_depth(seed: int, th: dict) -> TestReport:
    bad = sum(exact_oracle.insertion_depth_pmf(n) != exact_oracle.cn_polynomial_coefficients(n)
              for n in range(1, th["pmf_n_max"] + 1))
    n = th["chi_n"]
    pmf = np.array([float(p) for p in exact_oracle.insertion_depth_pmf(n)])
    d = bst_process.insertion_depths(n, th["chi_samples"], derive_seed(seed, 10, 1))
    chi = chi_square(np.bincount(d, minlength=pmf.size)[: pmf.size], pmf, alpha=th["p_min"])
    big = th["ks_n"]
    mu, var = exact_oracle.bernoulli_sum_moments(big, 2.0)
    dd = bst_process.lbst_insertion_depths(big, th["ks_samples"], derive_seed(seed, 10, 2))
    ks = lattice_ks(dd, mu, math.sqrt(var), max_statistic=th["ks_max"])
    checks = {
        "pmf_vs_polynomial_mismatches": _check(bad, "== 0", bad == 0),
        "chi_square_p": _check(chi.p_value, f"p > {th['p_min']}", chi.passed),
        "normal_ks_statistic": _check(ks.statistic, f"< {th['ks_max']}", ks.passed),
    }
    return _report(10, "insertion depth", checks, ks.statistic, chi.p_value, th["chi_samples"] + th["ks_samples"])


# -- 11 -----------------------------------------------------------------------------------

def _spine_statistics_set():
    return {
        "one": lambda st: 1,
        "s": lambda st: st.s,
        "s_squared": lambda st: st.s ** 2,
        "height": lambda st: st.tree.profile().extremal_depths[1],
        "leaves_at_mark_depth": lambda st: st.tree.profile()[st.s],
        "mark_left": lambda st: int(st.s > 0 and st.spine_leaf.letters[0] == 0),
    }


def criterion_spine(seed: int, th: dict) -> TestReport:
    bad = 0
    for n in range(th["com_n_max"] + 1):
        for tz in th["com_tilts"]:
            for f in _spine_statistics_set().values():
                lhs, rhs = tilted_models.change_of_measure_check(n, Fraction(tz), f)
                bad += lhs != rhs
    n = th["chi_n"]
    pmf = np.array([float(p) for p in exact_oracle.spine_depth_pmf(n, Fraction(th["chi_two_z"]))])
    s = tilted_models.spine_depths_chain(n, th["chi_two_z"], th["chi_samples"], derive_seed(seed, 11, 1))
    chi = chi_square(np.bincount(s, minlength=pmf.size)[: pmf.size], pmf, alpha=th["p_min"])

    lln_s = tilted_models.spine_depths_skip(th["lln_n"], th["lln_two_z"], th["lln_samples"],
                                            derive_seed(seed, 11, 2))
    lln = tilted_models.spine_statistics(lln_s, th["lln_n"], th["lln_two_z"])
    clt_s = tilted_models.spine_depths_skip(th["clt_n"], th["clt_two_z"], th["clt_samples"],
                                            derive_seed(seed, 11, 3))
    clt = tilted_models.spine_statistics(clt_s, th["clt_n"], th["clt_two_z"])

    ldp_gap = {}
    for tz in th["ldp_tilts"]:
        a = 2 * tz
        rate = tilted_models.ldp_rate(th["ldp_n"], tz, [a])[a]
        ldp_gap[str(tz)] = rate - martingales.eta(tz, a)
    worst_ldp = max(abs(v) for v in ldp_gap.values())
    checks = {
        "change_of_measure_mismatches": _check(bad, "== 0 (exact rationals)", bad == 0),
        "spine_pmf_chi_square_p": _check(chi.p_value, f"p > {th['p_min']}", chi.passed),
        "lln": _check([lln["lln"], lln["lln_exact"]], f"|mean/log n - exact| < {th['lln_tol']}",
                      abs(lln["lln"] - lln["lln_exact"]) < th["lln_tol"]),
        "clt_ks_statistic": _check(clt["clt_ks"], f"< {th['clt_ks_max']}", clt["clt_ks"] < th["clt_ks_max"]),
        "ldp_rate_minus_eta": _check(ldp_gap, f"|.| < {th['ldp_tol']}", worst_ldp < th["ldp_tol"]),
    }
    return _report(11, "spine and tilting", checks, worst_ldp, chi.p_value,
                   th["chi_samples"] + th["lln_samples"] + th["clt_samples"])


# -- 12 -----------------------------------------------------------------------------------

def negative_binomial_probs(two_z: float, t: float, k_max: int) -> np.ndarray:
    """P(N_t - 1 = k) for k < k_max, with the tail mass folded into the last cell."""
    dist = stats.nbinom(two_z, math.exp(-t))
    p = dist.pmf(np.arange(k_max + 1))
    p[-1] = dist.sf(k_max - 1)
    return p


def criterion_tilted_counts(seed: int, th: dict) -> TestReport:
    counts, _ = tilted_models.biased_yule_samples(th["t"], th["two_z"], th["samples"], derive_seed(seed, 12, 1))
    k = counts - 1
    k_max = int(k.max())
    chi = chi_square(np.bincount(k, minlength=k_max + 1), negative_binomial_probs(th["two_z"], th["t"], k_max),
                     alpha=th["p_min"])
    big, _ = tilted_models.biased_yule_samples(th["gamma_t"], th["two_z"], th["gamma_samples"],
                                               derive_seed(seed, 12, 2))
    ks = ks_test(big * math.exp(-th["gamma_t"]), stats.gamma(th["two_z"]).cdf)
    checks = {
        "negative_binomial_p": _check(chi.p_value, f"p > {th['p_min']}", chi.passed),
        "gamma_ks_statistic": _check(ks.statistic, f"< {th['ks_max']}", ks.statistic < th["ks_max"]),
    }
    return _report(12, "tilted leaf counts", checks, ks.statistic, chi.p_value,
                   th["samples"] + th["gamma_samples"])


# -- 13 -----------------------------------------------------------------------------------

def criterion_xi(seed: int, th: dict) -> TestReport:
    n = th["n"]
    tau = yule_process.jump_time_samples(n, th["samples"], derive_seed(seed, 13, 1))
    ks = ks_test(n * np.exp(-tau), stats.expon.cdf)
    t = th["corr_t"]
    counts, depth = yule_process.count_and_next_depth(t, th["corr_samples"], derive_seed(seed, 13, 2))
    x = counts * math.exp(-t)
    g = (depth - depth.mean()) / depth.std()
    r = float(np.corrcoef(x, g)[0, 1])
    sigma = 1 / math.sqrt(th["corr_samples"])
    checks = {
        "xi_ks_statistic": _check(ks.statistic, f"< {th['ks_max']}", ks.statistic < th["ks_max"]),
        "correlation": _check(r, f"|.| <= {th['sigmas']} * {sigma:.3g}", abs(r) <= th["sigmas"] * sigma),
    }
    return _report(13, "xi limit and joint independence", checks, ks.statistic, ks.p_value,
                   th["samples"] + th["corr_samples"])


# -- 14 -----------------------------------------------------------------------------------

def tail_rate(depths: np.ndarray, n: int, x: float) -> float:
    """log(number of leaves deeper than x log n) / log n."""
    ln = math.log(n)
    c = int((depths > x * ln).sum())
    return math.log(c) / ln if c else -math.inf


def criterion_tail_rate(seed: int, th: dict) -> TestReport:
    n, x = th["n"], th["x"]
    s = derive_seed(seed, 14)
    rates = [tail_rate(bst_process.leaf_depths(n, stream(s, i)), n, x) for i in range(th["replicates"])]
    avg = float(np.mean(rates))
    target = 1 - martingales.eta(2.0, x)
    checks = {"mean_rate": _check([avg, target], f"|rate - target| < {th['tol']}", abs(avg - target) < th["tol"])}
    return _report(14, "profile tail rate", checks, avg - target, sample_size=th["replicates"])


# -- 15 -----------------------------------------------------------------------------------

def criterion_reproducibility(seed: int, th: dict, thresholds: dict | None = None) -> TestReport:
    thresholds = thresholds or load_thresholds()
    same = {}
    for number in th["criteria"]:
        first = run_criterion(number, seed, thresholds).to_json()
        second = run_criterion(number, seed, thresholds).to_json()
        same[str(number)] = first == second
    checks = {"identical_json": _check(same, "all identical", all(same.values()))}
    return _report(15, "reproducibility", checks, sum(not v for v in same.values()))


CRITERIA: dict[int, tuple[str, Callable]] = {
    1: ("constants", criterion_constants),
    2: ("exact_martingale", criterion_exact_martingale),
    3: ("connection", criterion_connection),
    4: ("embedding", criterion_embedding),
    5: ("exact_profile", criterion_exact_profile),
    6: ("profile_theorem", criterion_profile_theorem),
    7: ("hwang", criterion_hwang),
    8: ("quicksort", criterion_quicksort),
    9: ("null_limits", criterion_null_limits),
    10: ("insertion_depth", criterion_insertion_depth),
    11: ("spine", criterion_spine),
    12: ("tilted_counts", criterion_tilted_counts),
    13: ("xi", criterion_xi),
    14: ("tail_rate", criterion_tail_rate),
    15: ("reproducibility", criterion_reproducibility),
}

FAST = (1, 2, 5, 7)


def run_criterion(number: int, seed: int = DEFAULT_SEED, thresholds: dict | None = None) -> TestReport:
    thresholds = thresholds or load_thresholds()
    key, fn = CRITERIA[number]
    if number == 15:
        return fn(seed, thresholds[key], thresholds)
    return fn(seed, thresholds[key])


def run_suite(suite: str = "all", seed: int = DEFAULT_SEED, thresholds: dict | None = None,
              on_report: Callable[[TestReport], None] | None = None) -> list[TestReport]:
    if suite == "fast":
        numbers = FAST
    elif suite == "all":
        numbers = tuple(CRITERIA)
    else:
        raise ValueError(f"unknown suite {suite!r}")
    thresholds = thresholds or load_thresholds()
    out = []
    for number in numbers:
        rep = run_criterion(number, seed, thresholds)
        out.append(rep)
        if on_report is not None:
            on_report(rep)
    return out
