from __future__ import annotations

import math

import numpy as np
import pytest

from cliquehard.metrics import ConfusionMatrix, confusion_matrix, f1_scores, regression_metrics, roc_auc


def test_confusion_matrix_counts():
    c = confusion_matrix([0, 0, 1, 1, 1], [0, 1, 0, 1, 1])
    assert (c.tn, c.fp, c.fn, c.tp) == (1, 1, 1, 2)
    with pytest.raises(ValueError):
        confusion_matrix([0, 1], [0])


@pytest.mark.parametrize("cells,minority,weighted", [
    ((635, 1, 4, 18), 0.8780, 0.9921),
    ((633, 3, 3, 19), 0.8636, 0.9908),
    ((634, 2, 4, 18), 0.8571, 0.9906),
])
def test_published_f1(cells, minority, weighted):
    s = f1_scores(ConfusionMatrix(*cells))
    assert s.minority == pytest.approx(minority, abs=5e-4)
    assert s.weighted == pytest.approx(weighted, abs=5e-4)


def test_f1_zero_division():
    s = f1_scores(ConfusionMatrix(tn=10, fp=0, fn=0, tp=0))
    assert s.minority == 0.0 and s.zero_division == (False, True)
    assert s.weighted == 1.0
    with pytest.raises(ValueError):
        f1_scores(ConfusionMatrix(0, 0, 0, 0))


def test_weighted_f1_symmetric_under_class_swap():
    c = ConfusionMatrix(tn=50, fp=7, fn=3, tp=11)
    swapped = ConfusionMatrix(tn=c.tp, fp=c.fn, fn=c.fp, tp=c.tn)
    a, b = f1_scores(c), f1_scores(swapped)
    assert a.weighted == pytest.approx(b.weighted, abs=1e-15)
    assert a.per_class == b.per_class[::-1]


def test_explicit_supports():
    c = ConfusionMatrix(tn=8, fp=2, fn=1, tp=4)
    s = f1_scores(c, supports=(1, 1))
    assert s.weighted == pytest.approx(sum(s.per_class) / 2)


def test_auc_examples():
    assert roc_auc([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]) == 1.0
    assert roc_auc([0.5] * 4, [0, 1, 0, 1]) == 0.5
    assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75
    with pytest.raises(ValueError):
        roc_auc([0.1, 0.2], [1, 1])


def test_auc_matches_pair_enumeration_and_is_rank_invariant():
    rng = np.random.default_rng(0)
    for _ in range(20):
        labels = rng.integers(0, 2, 30)
        labels[:2] = [0, 1]
        scores = np.round(rng.random(30), 1)  # ties on purpose
        pos, neg = scores[labels == 1], scores[labels == 0]
        pairs = np.mean([(p > q) + 0.5 * (p == q) for p in pos for q in neg])
        assert roc_auc(scores, labels) == pytest.approx(pairs, abs=1e-12)
        assert roc_auc(np.exp(3 * scores) - 7, labels) == pytest.approx(pairs, abs=1e-12)


def test_regression_examples():
    r = regression_metrics([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
    assert (r.rmse, r.percentage_rmse, r.r2) == (0.0, 0.0, 1.0)
    r = regression_metrics([2.0, 2.0, 2.0], [1.0, 2.0, 3.0])
    assert r.r2 == 0.0
    r = regression_metrics([1.0, 2.0], [2.0, 2.0])
    assert r.rmse == pytest.approx(math.sqrt(0.5))
    assert r.percentage_rmse == pytest.approx(35.355, abs=1e-3)
    assert r.r2 is None


def test_constant_actuals_have_no_r2():
    # mean(log 0.5 repeated) is not bit-equal to log 0.5, so a naive sst > 0 check fails here
    actual = np.full(7, np.log(0.5))
    assert regression_metrics(actual + 0.1, actual).r2 is None


def test_regression_zero_mean_and_errors():
    assert regression_metrics([0.0, 0.1], [-1.0, 1.0]).percentage_rmse is None
    with pytest.raises(ValueError):
        regression_metrics([], [])
    with pytest.raises(ValueError):
        regression_metrics([1.0], [1.0, 2.0])
