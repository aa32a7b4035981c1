import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from numpy.testing import assert_allclose, assert_array_equal

from rbigad.errors import DimensionMismatchError, DomainError, UndefinedCurveError
from rbigad.evaluation import (
    LabelMask,
    auc_score,
    bootstrap_auc,
    partial_auc,
    precision_recall,
    roc,
)
from rbigad.numerics import make_rng

FOUR_SCORES = np.array([0.1, 0.4, 0.35, 0.8])
FOUR_LABELS = np.array([0, 0, 1, 1])


def pairwise_auc(scores, labels):
    pos = scores[labels == 1]
    neg = scores[labels == 0]
    wins = 0.0
    for p in pos:
        for n in neg:
            wins += 1.0 if p > n else 0.5 if p == n else 0.0
    return wins / (pos.size * neg.size)


def test_four_sample_auc():
    assert pairwise_auc(FOUR_SCORES, FOUR_LABELS) == 0.75
    assert auc_score(FOUR_SCORES, FOUR_LABELS) == 0.75


def test_perfect_and_tied():
    assert auc_score([1, 2, 3, 4], [0, 0, 1, 1]) == 1.0
    assert auc_score([5, 5, 5, 5], [0, 1, 0, 1]) == 0.5


def test_curve_shape():
    c = roc(FOUR_SCORES, FOUR_LABELS)
    assert c.thresholds[0] == np.inf
    assert_array_equal(np.diff(c.thresholds) < 0, True)
    assert (c.fpr[0], c.tpr[0], c.fpr[-1], c.tpr[-1]) == (0, 0, 1, 1)
    # descending: 0.8 (pos), 0.4 (neg), 0.35 (pos), 0.1 (neg)
    assert_allclose(c.fpr, [0, 0, 0.5, 0.5, 1])
    assert_allclose(c.tpr, [0, 0.5, 0.5, 1, 1])


def test_single_class_masks():
    with pytest.raises(UndefinedCurveError):
        roc([1, 2, 3], [1, 1, 1])
    with pytest.raises(UndefinedCurveError):
        precision_recall([1, 2, 3], [0, 0, 0])


def test_length_and_value_checks():
    with pytest.raises(DimensionMismatchError):
        roc([1, 2], [0, 1, 1])
    with pytest.raises(DomainError):
        roc([1, np.nan], [0, 1])


def test_label_mask_counts():
    m = LabelMask.from_values([0, 2, 0, 1.5])
    assert (m.positive_count, m.negative_count, len(m)) == (2, 2, 4)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**32 - 1), st.integers(2, 500), st.booleans())
def test_trapezoid_equals_pairwise(seed, n, coarse):
    rng = make_rng(seed)
    scores = rng.integers(0, 5, n).astype(float) if coarse else rng.standard_normal(n)
    labels = rng.integers(0, 2, n)
    labels[:2] = [0, 1]
    assert abs(auc_score(scores, labels) - pairwise_auc(scores, labels)) <= 1e-12


@settings(max_examples=30, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_curve_invariants(seed):
    rng = make_rng(seed)
    scores = rng.integers(0, 20, 200).astype(float)
    labels = rng.integers(0, 2, 200)
    labels[:2] = [0, 1]
    c = roc(scores, labels)
    assert np.all(np.diff(c.fpr) >= 0) and np.all(np.diff(c.tpr) >= 0)
    assert 0.0 <= c.auc <= 1.0
    assert abs(partial_auc(c, 1.0) - c.auc) <= 1e-12
    # order-only: a strictly increasing transform changes nothing
    assert auc_score(np.exp(scores / 20.0), labels) == c.auc


def test_average_precision_by_hand():
    # thresholds 0.8 (TP), 0.4 (FP), 0.35 (TP), 0.1 (FP):
    # recall steps 0.5 at P=1 and 0.5 at P=2/3
    pr = precision_recall(FOUR_SCORES, FOUR_LABELS)
    assert_allclose(pr.precision, [1.0, 0.5, 2 / 3, 0.5])
    assert_allclose(pr.recall, [0.5, 0.5, 1.0, 1.0])
    assert_allclose(pr.average_precision, 0.5 * 1.0 + 0.5 * 2 / 3)


def test_perfect_precision():
    pr = precision_recall([0.1, 0.2, 0.9, 0.8, 0.7], [0, 0, 1, 1, 1])
    assert_array_equal(pr.precision[pr.recall <= 1.0][:3], 1.0)
    assert pr.average_precision == 1.0


def test_partial_auc_perfect_and_full():
    c = roc([1, 2, 3, 4], [0, 0, 1, 1])
    assert partial_auc(c, 0.1) == 1.0
    assert partial_auc(c, 0.1, normalized=False) == pytest.approx(0.1)
    c4 = roc(FOUR_SCORES, FOUR_LABELS)
    assert partial_auc(c4, 1.0) == c4.auc


def test_partial_auc_interpolates_at_cap():
    c = roc(FOUR_SCORES, FOUR_LABELS)
    # (0,0) (0,.5) (.5,.5) (.5,1) (1,1)
    assert partial_auc(c, 0.25) == pytest.approx(0.5)
    assert partial_auc(c, 0.75, normalized=False) == pytest.approx(0.5)
    c2 = roc([0.1, 0.2, 0.3, 0.4], [1, 0, 1, 0])
    # (0,0) (.5,0) (.5,.5) (1,.5) (1,1): nothing below fpr .5
    assert partial_auc(c2, 0.5, normalized=False) == 0.0
    assert partial_auc(c2, 0.75, normalized=False) == pytest.approx(0.125)


def test_partial_auc_random_detector():
    # the diagonal has area cap^2 / 2 below the cap, i.e. cap / 2 normalized
    rng = make_rng(10)
    scores = rng.uniform(size=10_000)
    labels = rng.integers(0, 2, 10_000)
    c = roc(scores, labels)
    assert 0.04 <= partial_auc(c, 0.1) <= 0.06
    assert 0.004 <= partial_auc(c, 0.1, normalized=False) <= 0.006


@pytest.mark.parametrize("cap", [0.0, -0.1, 1.5])
def test_partial_auc_cap_range(cap):
    with pytest.raises(DomainError):
        partial_auc(roc(FOUR_SCORES, FOUR_LABELS), cap)


def test_bootstrap_single_run_is_deterministic():
    a = bootstrap_auc(FOUR_SCORES, FOUR_LABELS, runs=1, rng=3).values
    b = bootstrap_auc(FOUR_SCORES, FOUR_LABELS, runs=1, rng=3).values
    assert a.shape == (1,)
    assert_array_equal(a, b)


def test_bootstrap_perfect_separation():
    res = bootstrap_auc(np.arange(20.0), np.r_[np.zeros(10), np.ones(10)], runs=200, rng=1)
    assert_array_equal(res.values, 1.0)


def test_bootstrap_matches_exhaustive_enumeration():
    exact = []
    for idx in itertools.product(range(4), repeat=4):
        idx = np.array(idx)
        y = FOUR_LABELS[idx]
        if 0 < y.sum() < 4:
            exact.append(pairwise_auc(FOUR_SCORES[idx], y))
    exact = np.array(exact)
    res = bootstrap_auc(FOUR_SCORES, FOUR_LABELS, runs=10_000, rng=7)
    assert 0.4 <= res.median <= 1.0
    for v in np.unique(exact):
        assert abs(np.mean(res.values <= v) - np.mean(exact <= v)) < 0.02
    for q in (0.025, 0.25, 0.5, 0.75, 0.975):
        got = np.quantile(res.values, q, method="inverted_cdf")
        want = np.quantile(exact, q, method="inverted_cdf")
        assert abs(got - want) <= 0.02 or np.mean(exact <= min(got, want)) == pytest.approx(q, abs=0.02)


def test_bootstrap_summary_keys():
    res = bootstrap_auc(FOUR_SCORES, FOUR_LABELS, runs=50, rng=0)
    summary = res.summary()
    assert set(summary) == {"runs", "median", "q2.5", "q97.5", "min", "max"}
    assert summary["min"] <= summary["q2.5"] <= summary["median"] <= summary["q97.5"] <= summary["max"]


class StuckGenerator(np.random.Generator):
    """Always resamples the first row."""

    def integers(self, low, high=None, size=None, **kwargs):
        return np.zeros(size, dtype=np.int64)


def test_bootstrap_gives_up_after_repeated_single_class_draws():
    with pytest.raises(UndefinedCurveError):
        bootstrap_auc(FOUR_SCORES, FOUR_LABELS, runs=5, rng=StuckGenerator(np.random.PCG64(0)))


def test_bootstrap_rejects_zero_runs():
    with pytest.raises(DomainError):
        bootstrap_auc(FOUR_SCORES, FOUR_LABELS, runs=0)
