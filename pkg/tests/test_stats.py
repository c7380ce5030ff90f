import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import stats

from streamcast.evaluation.stats import cohens_d, signed_rank_null, wilcoxon_signed_rank


def enumerate_p(diffs):
    """Two-sided p by listing every sign pattern (feasible up to ~16 pairs)."""
    d = np.asarray(diffs, dtype=float)
    d = d[d != 0]
    ranks = stats.rankdata(np.abs(d))
    observed = ranks[d > 0].sum()
    sums = [sum(r for r, s in zip(ranks, signs) if s) for signs in itertools.product([0, 1], repeat=len(d))]
    sums = np.array(sums)
    lo = np.mean(sums <= observed + 1e-9)
    hi = np.mean(sums >= observed - 1e-9)
    return min(1.0, 2 * min(lo, hi))


def test_all_positive_five_is_exact():
    r = wilcoxon_signed_rank([1, 2, 3, 4, 5])
    assert r.method == "exact"
    assert r.pvalue == 0.0625
    assert r.statistic == 15


def test_antisymmetric_differences_give_one():
    assert wilcoxon_signed_rank([-1, 1, -2, 2]).pvalue == 1.0


def test_all_zero_is_degenerate():
    r = wilcoxon_signed_rank([0.0, 0.0, 0.0])
    assert r.degenerate and r.pvalue == 1.0


def test_zeros_dropped():
    assert wilcoxon_signed_rank([0, 0, 1, 2, 3, 4, 5]).pvalue == 0.0625


def test_null_distribution_counts():
    # ranks 1,2,3 doubled: sums 0,2,4,6(x2),8,10,12
    counts = signed_rank_null([2, 4, 6])
    assert counts.sum() == 8
    assert list(np.flatnonzero(counts)) == [0, 2, 4, 6, 8, 10, 12]
    assert counts[6] == 2


@settings(max_examples=60)
@given(st.lists(st.integers(-6, 6).filter(lambda v: v != 0), min_size=1, max_size=12))
def test_exact_matches_sign_pattern_enumeration_with_ties(diffs):
    assert wilcoxon_signed_rank(diffs, method="exact").pvalue == pytest.approx(enumerate_p(diffs), abs=1e-12)


@settings(max_examples=40)
@given(seed=st.integers(0, 2**31 - 1), n=st.integers(2, 25))
def test_exact_matches_scipy_without_ties(seed, n):
    d = np.random.default_rng(seed).normal(0.3, 1.0, size=n)
    ours = wilcoxon_signed_rank(d).pvalue
    theirs = stats.wilcoxon(d, method="exact").pvalue
    assert ours == pytest.approx(theirs, rel=1e-10)


def test_large_sample_normal_approximation_close_to_exact():
    d = np.random.default_rng(7).normal(0.1, 1.0, size=50)
    approx = wilcoxon_signed_rank(d)
    exact = wilcoxon_signed_rank(d, method="exact")
    assert approx.method == "approx"
    assert abs(approx.pvalue - exact.pvalue) / exact.pvalue < 0.05


def test_normal_approximation_matches_scipy_with_ties():
    d = np.round(np.random.default_rng(3).normal(0.2, 1.0, size=80), 1)
    d = d[d != 0]
    ours = wilcoxon_signed_rank(d).pvalue
    theirs = stats.wilcoxon(d, method="approx", correction=True).pvalue
    assert ours == pytest.approx(theirs, rel=1e-9)


@given(seed=st.integers(0, 2**31 - 1), n=st.integers(1, 60))
def test_pvalue_in_unit_interval(seed, n):
    d = np.random.default_rng(seed).normal(size=n)
    assert 0 < wilcoxon_signed_rank(d).pvalue <= 1


def test_cohens_d_example():
    assert cohens_d([1, 1, 1, 3]) == 1.5


def test_cohens_d_paired_and_degenerate():
    assert cohens_d([2, 3, 4, 7], [1, 2, 3, 4]) == 1.5
    assert cohens_d([0.4, 0.5], [0.4, 0.5]) is None
    with pytest.raises(ValueError):
        cohens_d([1.0])


@given(st.lists(st.floats(-1, 1), min_size=2, max_size=30), st.lists(st.floats(-1, 1), min_size=2, max_size=30))
def test_cohens_d_antisymmetric(a, b):
    n = min(len(a), len(b))
    a, b = a[:n], b[:n]
    d1, d2 = cohens_d(a, b), cohens_d(b, a)
    if d1 is None:
        assert d2 is None
    else:
        assert d1 == -d2


def test_non_finite_rejected():
    with pytest.raises(ValueError):
        wilcoxon_signed_rank([1.0, np.nan])
