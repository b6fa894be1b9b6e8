import itertools

import numpy as np
import pytest
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from scipy import stats as sps

from wavepanel.stats import (
    BootstrapError,
    DegenerateError,
    bootstrap_ci,
    bootstrap_replicates,
    correlation,
    pearson,
    quartiles,
    spearman,
    wilcoxon_one_sided,
)

finite = st.floats(-1e3, 1e3, allow_nan=False, allow_infinity=False)

from oracles import wilcoxon_enumeration


def test_pearson_affine():
    assert pearson([1, 2, 3], [2, 4, 6]) == pytest.approx(1.0)
    assert pearson([1, 2, 3], [3, 2, 1]) == pytest.approx(-1.0)


def test_pearson_degenerate():
    with pytest.raises(DegenerateError, match="degenerate variance"):
        pearson([1, 1, 1], [1, 2, 3])
    with pytest.raises(ValueError, match="at least 3"):
        pearson([1, 2], [1, 2])


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(finite, finite), min_size=3, max_size=40))
def test_pearson_matches_numpy(pairs):
    x, y = map(np.array, zip(*pairs))
    assume(np.ptp(x) > 1e-3 and np.ptp(y) > 1e-3)
    r = pearson(x, y)
    assert -1 <= r <= 1
    assert r == pytest.approx(np.corrcoef(x, y)[0, 1], abs=1e-9)
    assert r == pytest.approx(pearson(y, x), abs=1e-12)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.integers(-50, 50), min_size=3, max_size=30, unique=True))
def test_spearman_monotone_invariance(x):
    x = np.array(x, dtype=float)
    assert spearman(x, np.exp(x / 10) + x**3) == pytest.approx(1.0)
    assert spearman(x, -x) == pytest.approx(-1.0)


def test_spearman_matches_scipy():
    rng = np.random.default_rng(1)
    x = rng.integers(0, 5, 40).astype(float)
    y = x + rng.integers(0, 3, 40)
    assert spearman(x, y) == pytest.approx(sps.spearmanr(x, y).statistic, abs=1e-12)


def test_bootstrap_constant_statistic():
    lo, hi = bootstrap_ci(np.arange(10.0), lambda v: 3.0, reps=1000)
    assert lo == hi == 3.0


def exact_basic_interval_mean(data, alpha=0.05):
    """Basic interval from the exact bootstrap distribution of the mean (all n^n resamples)."""
    n = len(data)
    means = np.array([np.mean([data[i] for i in idx]) for idx in itertools.product(range(n), repeat=n)])
    means.sort()
    cdf = np.arange(1, len(means) + 1) / len(means)
    q = lambda p: means[np.searchsorted(cdf, p - 1e-15)]
    est = np.mean(data)
    return 2 * est - q(1 - alpha / 2), 2 * est - q(alpha / 2)


def test_bootstrap_matches_exhaustive_oracle():
    data = np.array([0.3, 1.7, 5.2])
    exact = exact_basic_interval_mean(data)
    mc = bootstrap_ci(data, np.mean, reps=100_000, seed=11)
    assert mc == pytest.approx(exact, abs=0.05)


def test_bootstrap_bit_identical():
    rng = np.random.default_rng(0)
    x, y = rng.normal(size=(2, 30))
    a = bootstrap_ci((x, y), pearson, reps=2000, seed=5)
    b = bootstrap_ci((x, y), pearson, reps=2000, seed=5)
    assert a == b
    assert bootstrap_ci((x, y), pearson, reps=2000, seed=6) != a


def test_bootstrap_resample_k_independent_of_reps():
    x = np.arange(20.0)
    short = bootstrap_replicates(x, np.mean, reps=100, seed=3)
    long = bootstrap_replicates(x, np.mean, reps=300, seed=3)
    np.testing.assert_array_equal(short, long[:100])


def test_bootstrap_redraws_undefined_resamples():
    # with 4 points, a resample repeating a single point has zero variance
    x = np.array([1.0, 2.0, 3.0, 4.0])
    y = np.array([1.0, 3.0, 2.0, 5.0])
    reps = bootstrap_replicates((x, y), pearson, reps=1000, seed=1)
    assert np.isfinite(reps).all()


def test_bootstrap_gives_up():
    with pytest.raises(BootstrapError, match="too many undefined"):
        bootstrap_replicates(np.arange(5.0), lambda v: float("nan"), reps=10)


def test_bootstrap_requires_reps():
    with pytest.raises(ValueError, match="at least 1000"):
        bootstrap_ci(np.arange(5.0), np.mean, reps=10)


def test_correlation_result_fields():
    rng = np.random.default_rng(2)
    x = rng.normal(size=25)
    r = correlation(x, x + rng.normal(size=25), "spearman", reps=1000, seed=4)
    assert r.n == 25 and r.method == "spearman" and r.ci_low <= r.estimate <= r.ci_high + 0.2


def test_wilcoxon_n3_all_positive():
    r = wilcoxon_one_sided([2, 3, 4], [1, 1, 1], "greater")
    assert r.p_value == pytest.approx(0.125) and r.method == "exact" and r.statistic == 6


def test_wilcoxon_enumeration_oracle():
    rng = np.random.default_rng(123)
    for case in range(300):
        n = int(rng.integers(1, 11))
        x = rng.integers(0, 6, n).astype(float)
        y = rng.integers(0, 6, n).astype(float)
        if np.all(x == y):
            continue
        alt = ("greater", "less")[case % 2]
        assert wilcoxon_one_sided(x, y, alt).p_value == pytest.approx(wilcoxon_enumeration(x, y, alt), abs=1e-12)


def test_wilcoxon_exact_matches_scipy_without_ties():
    rng = np.random.default_rng(5)
    x = rng.normal(size=20)
    y = rng.normal(size=20)
    ours = wilcoxon_one_sided(x, y, "greater").p_value
    ref = sps.wilcoxon(x, y, alternative="greater", method="exact").pvalue
    assert ours == pytest.approx(ref, rel=1e-10)


def test_wilcoxon_normal_matches_scipy():
    rng = np.random.default_rng(6)
    x = np.round(rng.normal(1, 2, 72), 1)
    y = np.round(rng.normal(0, 2, 72), 1)
    ours = wilcoxon_one_sided(x, y, "greater")
    ref = sps.wilcoxon(x, y, alternative="greater", method="approx", correction=True, zero_method="wilcox")
    assert ours.method == "normal"
    assert ours.p_value == pytest.approx(ref.pvalue, rel=1e-8)


def test_wilcoxon_no_differences():
    with pytest.raises(DegenerateError):
        wilcoxon_one_sided([1, 2, 3], [1, 2, 3])


def test_quartiles():
    assert quartiles([1, 2, 3, 4, 5]) == (2, 3, 4)
    assert quartiles([4, 1, 3, 2]) == (1.75, 2.5, 3.25)
