import math
from fractions import Fraction

import numpy as np
import pytest
from scipy import stats

from yulebst import exact_oracle, tilted_models as tm
from yulebst.martingales import bst_martingale, eta
from yulebst.stat_harness import chi_square, stream, summarize
from yulebst.tree_core import ROOT, BinaryTree

from conftest import word


def test_first_step_always_splits_mark():
    for i in range(20):
        state, trace = tm.run_biased_bst(1, 0.3, stream(1, i))
        assert trace == [1] and state.s == 1


def test_marked_tree_validation(tree_n2_left):
    with pytest.raises(ValueError):
        tm.MarkedTree(tree_n2_left, ROOT)
    st = tm.MarkedTree(tree_n2_left, word("01"))
    assert st.s == 2


def test_untilted_shape_marginal_matches_oracle():
    law = {k: float(v) for k, v in exact_oracle.enumerate_shape_distribution(4).items()}
    obs = {}
    for i in range(30000):
        state, _ = tm.run_biased_bst(4, 1.0, stream(2, i))
        c = state.tree.serialize()
        obs[c] = obs.get(c, 0) + 1
    assert chi_square(obs, law).passed


def test_spine_split_frequency():
    hits = tm.spine_hits(11, 4.0, 40000, seed=3)[:, 10]
    p = 4 / 14
    assert abs(hits.mean() - p) < 3 * math.sqrt(p * (1 - p) / hits.size)


def test_chain_kernel_matches_word_level():
    a = tm.spine_depths_chain(12, 2.5, 20000, seed=4)
    b = np.array([tm.run_biased_bst(12, 2.5, stream(5, i))[0].s for i in range(20000)])
    pmf = np.array([float(p) for p in exact_oracle.spine_depth_pmf(12, Fraction(5, 2))])
    for s in (a, b):
        assert chi_square(np.bincount(s, minlength=pmf.size)[: pmf.size], pmf).passed


def test_skip_sampler_matches_pmf():
    n = 300
    pmf = np.array([float(p) for p in exact_oracle.spine_depth_pmf(n, Fraction(3, 2))])
    s = tm.spine_depths_skip(n, 1.5, 50000, seed=6)
    assert chi_square(np.bincount(s, minlength=pmf.size)[: pmf.size], pmf).passed


def test_biased_yule_untilted_is_geometric():
    counts, depth = tm.biased_yule_samples(1.0, 1.0, 50000, seed=7)
    p = math.exp(-1)
    k_max = int(counts.max())
    probs = stats.geom(p).pmf(np.arange(1, k_max + 1))
    probs[-1] += stats.geom(p).sf(k_max)
    assert chi_square(np.bincount(counts, minlength=k_max + 1)[1:], probs).passed


def test_biased_yule_spine_is_poisson():
    _, depth = tm.biased_yule_samples(2.0, 3.0, 100000, seed=8)
    k_max = int(depth.max())
    probs = stats.poisson(6.0).pmf(np.arange(k_max + 1))
    probs[-1] += stats.poisson(6.0).sf(k_max)
    assert chi_square(np.bincount(depth, minlength=k_max + 1), probs).passed


def test_tilted_count_mean_is_constant():
    means = []
    for t in (0.5, 1.5):
        counts, _ = tm.biased_yule_samples(t, 2.5, 40000, seed=int(10 * t))
        mc = summarize(np.exp(-t) * (counts - 1 + 2.5))
        assert mc.within(2.5)
        means.append(mc)


def test_word_level_biased_yule():
    path, marks = tm.biased_yule_simulate(3.0, stream(9), jumps=40)
    assert path.tree.n_leaves == 41 and path.tree.is_leaf(marks[-1])
    path.tree.check_invariants()
    s = [m.depth for m in marks]
    assert all(b - a in (0, 1) for a, b in zip(s, s[1:]))
    ends = [tm.biased_yule_simulate(3.0, stream(10, i), t=1.0)[0].leaves_at(1.0) for i in range(20000)]
    assert summarize(ends).within(1 + 3 * math.expm1(1.0))


def test_size_biased_spine():
    t = BinaryTree.from_nodes(["", "0", "1"])
    assert tm.spine_leaf_probabilities(t) == {word("0"): Fraction(1, 2), word("1"): Fraction(1, 2)}
    t2 = BinaryTree.from_nodes(["", "0", "1", "00", "01"])
    probs = tm.spine_leaf_probabilities(t2)
    assert probs[word("1")] == Fraction(1, 2) and probs[word("00")] == Fraction(1, 4)
    counts = {}
    g = stream(11)
    for _ in range(40000):
        u = tm.size_biased_spine(t2, g)
        counts[u] = counts.get(u, 0) + 1
    assert chi_square(counts, {u: float(p) for u, p in probs.items()}).passed
    deep = BinaryTree()
    u = ROOT
    for _ in range(100):
        deep.split(u)
        u = u.child(1)
    assert tm.size_biased_spine(deep, g).depth <= 100


def test_spine_law_given_shape():
    t = BinaryTree.from_nodes(["", "0", "1", "00", "01"])
    assert tm.spine_depth_given_shape(t) == {1: Fraction(1, 2), 2: Fraction(1, 2)}
    for tree in exact_oracle.all_trees(6):
        assert sum(tm.spine_depth_given_shape(tree).values()) == 1


def test_exponential_martingales():
    assert tm.exponential_martingale_discrete(7, 20, 0.5) == pytest.approx(1.0)
    assert tm.exponential_martingale_discrete(1, 1, Fraction(5, 3)) == 1
    assert tm.exponential_martingale_continuous(4, 2.0, 0.5) == pytest.approx(1.0)
    assert tm.exponential_martingale_continuous(0, 0.0, 1.7) == 1.0
    s = tm.spine_depths_skip(50, 1.0, 100000, seed=12)
    assert summarize(tm.exponential_martingale_discrete(s, 50, 1.0)).within(1.0)
    pois = stream(13).poisson(3.0, 100000)
    assert summarize(tm.exponential_martingale_continuous(pois, 3.0, 1.2)).within(1.0)


def test_projection_identity(tree_n2_left):
    assert tm.projection_identity_check(tree_n2_left, 1.0) == pytest.approx((1.0, 1.0))
    t = tree_n2_left.copy()
    t.split(word("00"))
    lhs, rhs = tm.projection_identity_check(t, Fraction(3, 4))
    assert lhs == rhs == bst_martingale(t, Fraction(3, 4))
    from yulebst.bst_process import run_chain
    for i in range(5):
        tree = run_chain(100, stream(14, i)).tree
        for z in np.linspace(0.2, 2.2, 9):
            lhs, rhs = tm.projection_identity_check(tree, float(z))
            assert abs(lhs - rhs) < 1e-12 * max(1.0, abs(lhs))


def test_change_of_measure():
    one = lambda st: 1
    assert tm.change_of_measure_check(4, Fraction(3), one) == (1, 1)
    lhs, rhs = tm.change_of_measure_check(3, Fraction(2), lambda st: st.s)
    assert lhs == rhs == exact_oracle.pmf_mean(exact_oracle.spine_depth_pmf(3, Fraction(2)))
    balanced = lambda st: int(st.tree.serialize() == "1100100")
    lhs, rhs = tm.change_of_measure_check(3, Fraction(3), balanced)
    assert lhs == rhs
    with pytest.raises(ValueError):
        tm.change_of_measure_check(6, Fraction(1), one)


def test_marked_law_spine_marginal():
    for tz in (Fraction(1, 2), Fraction(3)):
        law = tm.marked_law(5, tz)
        marg = {}
        for p, st in law.values():
            marg[st.s] = marg.get(st.s, Fraction(0)) + p
        pmf = exact_oracle.spine_depth_pmf(5, tz)
        assert marg == {k: p for k, p in enumerate(pmf) if p}


def test_spine_statistics():
    s = tm.spine_depths_skip(10**6, 1.0, 4000, seed=15)
    out = tm.spine_statistics(s, 10**6, 1.0, [2.0, 3.0])
    assert abs(out["lln"] - out["lln_exact"]) < 0.1
    assert out["clt_ks"] < 0.03
    assert set(out["ldp_curve"]) == {2.0, 3.0}
    assert out["ldp_curve"][3.0] > out["ldp_curve"][2.0] > 0


def test_ldp_rates_decrease_towards_eta():
    gaps = [tm.ldp_rate(n, 2.0, [4.0])[4.0] - eta(2.0, 4.0) for n in (10**3, 10**4, 10**5)]
    assert gaps[0] > gaps[1] > gaps[2] > 0
