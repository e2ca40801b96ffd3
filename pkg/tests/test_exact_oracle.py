import math
from fractions import Fraction

import numpy as np
import pytest

from yulebst import exact_oracle as eo
from yulebst.martingales import c_n


def test_stirling_values():
    assert eo.stirling_first(0, 0) == 1
    assert eo.stirling_first(2, 1) == 1 and eo.stirling_first(2, 2) == 1
    assert eo.stirling_first(3, 2) == 3
    assert eo.stirling_first(5, 0) == 0 and eo.stirling_first(7, 7) == 1
    assert sum(2**k * eo.stirling_first(5, k) for k in range(6)) == 720
    with pytest.raises(ValueError):
        eo.stirling_first(3, 4)
    with pytest.raises(ValueError):
        eo.stirling_first(501, 1)


def test_stirling_recurrence_and_identity():
    table = eo.StirlingTable(120)
    for n in range(1, 120):
        row, nxt = table.row(n), table.row(n + 1)
        for k in range(1, n + 1):
            assert nxt[k] == row[k - 1] + n * row[k]
    assert all(sum(2**k * c for k, c in enumerate(table.row(n))) == math.factorial(n + 1) for n in range(121))


def test_expected_profile_exact():
    assert eo.expected_profile_exact(2) == {1: 1, 2: 2}
    assert eo.expected_profile_exact(3) == {1: Fraction(2, 3), 2: 2, 3: Fraction(4, 3)}
    for n in range(0, 60, 7):
        assert sum(eo.expected_profile_exact(n).values()) == n + 1


def test_enumeration_matches_stirling():
    for n in range(9):
        assert eo.expected_profile_by_enumeration(n) == eo.expected_profile_exact(n)


def test_recurrence():
    rec = eo.expected_profile_recurrence(3)
    assert rec[1:4] == pytest.approx([2 / 3, 2, 4 / 3], rel=1e-14)
    big = eo.expected_profile_recurrence(10**5)
    assert abs(big.sum() / (10**5 + 1) - 1) < 1e-6
    k_star = int(np.argmax(big))
    assert abs(k_star - 2 * math.log(10**5)) <= 3


def test_recurrence_matches_exact_up_to_200():
    for n in (50, 137, 200):
        rec = eo.expected_profile_recurrence(n, k_max=n)
        for k, v in eo.expected_profile_exact(n).items():
            if float(v) > 1e-290:
                assert rec[k] == pytest.approx(float(v), rel=1e-10)


def test_hwang_forms():
    n = 10**6
    f1, f2 = eo.hwang_estimate(n, round(math.log(n)))
    k = round(math.log(n))
    assert f1 == pytest.approx((2 * math.log(n)) ** k / (math.factorial(k) * n * math.gamma(k / math.log(n))))
    n = 10**30
    k = 60
    f1, f2 = eo.hwang_estimate(n, k)
    assert abs(f1 / f2 - 1) < 0.01
    with pytest.raises(ValueError):
        eo.hwang_estimate(1, 1)


def test_shape_distributions():
    d2 = eo.enumerate_shape_distribution(2)
    assert sorted(d2.values()) == [Fraction(1, 2)] * 2
    d3 = eo.enumerate_shape_distribution(3, "product")
    assert sorted(d3.values()) == sorted([Fraction(1, 6)] * 4 + [Fraction(1, 3)])
    assert d3["1100100"] == Fraction(1, 3)
    for n in range(9):
        chain = eo.enumerate_shape_distribution(n, "chain")
        assert chain == eo.enumerate_shape_distribution(n, "product")
        assert sum(chain.values()) == 1 and len(chain) == eo.catalan(n)
    with pytest.raises(ValueError):
        eo.enumerate_shape_distribution(9)
    with pytest.raises(ValueError):
        eo.enumerate_shape_distribution(3, "magic")


def test_insertion_depth_pmf():
    assert eo.insertion_depth_pmf(1) == [0, 1]
    assert eo.insertion_depth_pmf(2) == [0, Fraction(1, 3), Fraction(2, 3)]
    for n in range(1, 51):
        pmf = eo.insertion_depth_pmf(n)
        assert pmf == eo.cn_polynomial_coefficients(n)
        assert eo.pmf_mean(pmf) == 1 + sum(Fraction(2, k + 2) for k in range(1, n))
        z = Fraction(2, 3)
        assert sum(p * z**k for k, p in enumerate(pmf)) == c_n(z, n) / (n + 1)


def test_spine_depth_pmf():
    pmf = eo.spine_depth_pmf(3, Fraction(1))
    assert eo.pmf_mean(pmf) == Fraction(11, 6)
    for tz in (Fraction(1, 2), Fraction(3), 0.7):
        one = eo.spine_depth_pmf(1, tz)
        assert list(one) == [0, 1]
    assert eo.spine_depth_pmf(20, Fraction(2)) == eo.insertion_depth_pmf(20)
    flt = eo.spine_depth_pmf(20, 2.0)
    assert flt == pytest.approx([float(p) for p in eo.insertion_depth_pmf(20)])
    big = eo.spine_depth_pmf(10**5, 3.0)
    assert big.sum() == pytest.approx(1.0, abs=1e-12)
    mu, var = eo.bernoulli_sum_moments(10**5, 3.0)
    assert eo.pmf_mean(big) == pytest.approx(mu, rel=1e-10)
    with pytest.raises(ValueError):
        eo.spine_depth_pmf(5, 0)


def test_quicksort_moments():
    mean, second = eo.quicksort_moments()
    assert mean == 0
    assert second == pytest.approx(7 - 2 * math.pi**2 / 3, abs=1e-8)
    assert second == pytest.approx(0.42026, abs=1e-5)
    assert abs(eo.quicksort_toll_integral()) < 1e-8
    assert eo.quicksort_toll(0.0) == 1.0 and eo.quicksort_toll(1.0) == 1.0
