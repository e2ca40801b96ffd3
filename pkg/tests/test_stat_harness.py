import json

import numpy as np
import pytest
from scipy import stats

from yulebst.stat_harness import (ReplicateSpec, TestReport, chi_square, ks_test, lattice_ks, load_thresholds,
                                  monte_carlo, pool_cells, stream, two_sample_ks)


def test_streams_are_reproducible_and_distinct():
    assert np.array_equal(stream(5, 3).random(10), stream(5, 3).random(10))
    assert not np.array_equal(stream(5, 3).random(10), stream(5, 4).random(10))
    assert not np.array_equal(stream(5, 3).random(10), stream(6, 3).random(10))


def test_ks_null_and_alternatives():
    x = stream(1).standard_normal(10000)
    assert ks_test(x, "norm").passed
    assert ks_test(np.full(100, 0.3), stats.norm.cdf).statistic >= 0.5
    assert not ks_test(stream(2).standard_exponential(10000), "uniform").passed
    with pytest.raises(ValueError):
        ks_test([], "norm")


def test_two_sample_ks():
    x = stream(3).random(20000)
    perm = stream(4).permutation(x)
    assert two_sample_ks(perm[:10000], perm[10000:]).passed
    assert not two_sample_ks(x, x ** 2).passed


def test_lattice_ks():
    x = stream(5).binomial(400, 0.5, 10000)
    good = lattice_ks(x, 200, 10, max_statistic=0.02)
    assert good.passed
    assert not lattice_ks(x, 203, 10, max_statistic=0.02).passed


def test_chi_square_and_pooling():
    probs = np.array([0.5, 0.3, 0.2])
    obs = np.bincount(stream(6).choice(3, 30000, p=probs), minlength=3)
    assert chi_square(obs, probs).passed
    assert not chi_square(obs, np.array([0.4, 0.4, 0.2])).passed
    o, e = pool_cells([1, 2, 100], [1.0, 2.0, 100.0], 5)
    assert o.sum() == 103 and (e >= 5).all()
    with pytest.raises(ValueError):
        chi_square([10, 10], [0.5, 0.6])
    with pytest.raises(ValueError):
        chi_square([10], [1.0])
    stray = chi_square({"a": 10, "b": 10, "c": 1}, {"a": 0.5, "b": 0.5})
    assert not stray.passed and stray.statistic == float("inf")


def test_test_report():
    r = TestReport("x", 1.5, 0.2, 10, True, "p > 0.001")
    assert json.loads(r.to_json())["p_value"] == 0.2
    assert r.line() == "[PASS] x: statistic=1.5 p=0.2 (p > 0.001)"
    with pytest.raises(ValueError):
        TestReport("x", 1.0, 1.5, 1, True)


def test_monte_carlo():
    spec = ReplicateSpec(seed=9, replicates=100)
    one = monte_carlo(spec, lambda g, s: 1.0)
    assert one.mean == 1.0 and one.stderr == 0.0
    a = monte_carlo(spec, lambda g, s: g.random())
    b = monte_carlo(spec, lambda g, s: g.random(), workers=4)
    assert np.array_equal(a.values, b.values)
    assert a.ci95[0] < a.mean < a.ci95[1]
    with pytest.raises(ValueError):
        monte_carlo(ReplicateSpec(seed=1, replicates=1), lambda g, s: 0.0)


def test_thresholds_are_loadable():
    th = load_thresholds()
    assert th["alpha"] == 0.001
    assert th["xi"]["ks_max"] == 0.02
