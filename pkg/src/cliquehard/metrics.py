"""Classification and regression scores."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class ConfusionMatrix:
    tn: int
    fp: int
    fn: int
    tp: int

    @property
    def total(self) -> int:
        return self.tn + self.fp + self.fn + self.tp

    @property
    def supports(self) -> tuple[int, int]:
        return self.tn + self.fp, self.fn + self.tp

    def as_dict(self) -> dict:
        return {"tn": self.tn, "fp": self.fp, "fn": self.fn, "tp": self.tp}


def confusion_matrix(actual, predicted) -> ConfusionMatrix:
    a = np.asarray(actual).astype(bool)
    p = np.asarray(predicted).astype(bool)
    if a.shape != p.shape:
        raise ValueError("actual and predicted differ in length")
    return ConfusionMatrix(int((~a & ~p).sum()), int((~a & p).sum()),
                           int((a & ~p).sum()), int((a & p).sum()))


@dataclass(frozen=True)
class F1Scores:
    per_class: tuple[float, float]  # (not hard, hard)
    weighted: float
    zero_division: tuple[bool, bool]

    @property
    def minority(self) -> float:
        return self.per_class[1]


def f1_scores(c: ConfusionMatrix, supports: tuple[int, int] | None = None) -> F1Scores:
    """Per-class F1 and their support-weighted mean; an undefined F1 is 0 and flagged."""
    if c.total <= 0:
        raise ValueError("empty confusion matrix")
    supports = supports or c.supports

    def f1(tp, fp, fn):
        denom = 2 * tp + fp + fn
        return (2 * tp / denom, False) if denom else (0.0, True)

    neg, neg_flag = f1(c.tn, c.fn, c.fp)
    pos, pos_flag = f1(c.tp, c.fp, c.fn)
    total = supports[0] + supports[1]
    weighted = (neg * supports[0] + pos * supports[1]) / total
    return F1Scores((neg, pos), weighted, (neg_flag, pos_flag))


def _average_ranks(x: np.ndarray) -> np.ndarray:
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    ranks = np.empty(len(x))
    i = 0
    while i < len(x):
        j = i
        while j + 1 < len(x) and xs[j + 1] == xs[i]:
            j += 1
        ranks[order[i:j + 1]] = (i + j) / 2.0 + 1.0
        i = j + 1
    return ranks


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC: probability a positive outscores a negative, ties count 1/2."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels).astype(bool)
    n_pos = int(labels.sum())
    n_neg = len(labels) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise ValueError("ROC-AUC needs both classes")
    ranks = _average_ranks(scores)
    return float((ranks[labels].sum() - n_pos * (n_pos + 1) / 2.0) / (n_pos * n_neg))


@dataclass(frozen=True)
class RegressionScores:
    rmse: float
    percentage_rmse: float | None  # 100 * rmse / mean(actual)
    r2: float | None  # absent when the actuals are constant

    def as_dict(self) -> dict:
        return {"rmse": self.rmse, "percentage_rmse": self.percentage_rmse, "r2": self.r2}


def regression_metrics(pred, actual) -> RegressionScores:
    pred = np.asarray(pred, dtype=float)
    actual = np.asarray(actual, dtype=float)
    if pred.shape != actual.shape or pred.size == 0:
        raise ValueError("need equally long, non-empty prediction and target vectors")
    resid = actual - pred
    rmse = math.sqrt(float(np.mean(resid ** 2)))
    mean = float(np.mean(actual))
    pct = 100.0 * rmse / mean if mean != 0 else None
    # compare values, not sst > 0: the mean of a constant vector can be off by an ulp
    constant = bool(np.all(actual == actual[0]))
    sst = float(np.sum((actual - mean) ** 2))
    r2 = None if constant else 1.0 - float(np.sum(resid ** 2)) / sst
    return RegressionScores(rmse, pct, r2)
