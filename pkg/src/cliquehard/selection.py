"""Cross-validation, grid search, forward feature selection and model reports."""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .dataset import Dataset, MinMaxScaler, kfold, stratified_kfold
from .metrics import ConfusionMatrix, RegressionScores, confusion_matrix, f1_scores, regression_metrics, roc_auc
from .models import ClassifierSpec, RegressorSpec, train_classifier, train_regressor


@dataclass(frozen=True)
class CVResult:
    mean: float  # weighted F1
    sd: float
    fold_scores: tuple[float, ...]
    mean_minority_f1: float
    mean_roc_auc: float

    def as_dict(self) -> dict:
        return {"weighted_f1_mean": self.mean, "weighted_f1_sd": self.sd,
                "fold_weighted_f1": list(self.fold_scores),
                "minority_f1_mean": self.mean_minority_f1, "roc_auc_mean": self.mean_roc_auc}


def _safe_auc(scores, labels) -> float:
    labels = np.asarray(labels)
    if labels.min() == labels.max():
        return float("nan")
    return roc_auc(scores, labels)


def fit_scaled(spec: ClassifierSpec, train: Dataset):
    """Scale on ``train`` only, fit, and return (model, scaler)."""
    scaler = MinMaxScaler().fit(train.X)
    return train_classifier(spec, scaler.transform(train.X), train.labels), scaler


def cross_validate(spec: ClassifierSpec, d: Dataset, k: int = 5, seed: int = 0) -> CVResult:
    """Stratified k-fold weighted F1 with the scaler refitted inside every fold.

    ``sd`` is the population standard deviation over folds.
    """
    folds = stratified_kfold(d.labels, k, seed)
    weighted, minority, aucs = [], [], []
    for test_rows in folds:
        train_rows = np.setdiff1d(np.arange(len(d)), test_rows)
        model, scaler = fit_scaled(spec, d.subset(train_rows))
        Xt = scaler.transform(d.X[test_rows])
        yt = d.labels[test_rows]
        scores = f1_scores(confusion_matrix(yt, model.predict(Xt)))
        weighted.append(scores.weighted)
        minority.append(scores.minority)
        aucs.append(_safe_auc(model.score(Xt), yt))
    return CVResult(float(np.mean(weighted)), float(np.std(weighted)), tuple(weighted),
                    float(np.mean(minority)), float(np.nanmean(aucs)) if not np.all(np.isnan(aucs)) else float("nan"))


def expand_grid(grid: dict[str, list]) -> list[dict]:
    """Cartesian product in declaration order (last key varies fastest)."""
    if not grid:
        return [{}]
    keys = list(grid)
    return [dict(zip(keys, combo)) for combo in itertools.product(*(grid[key] for key in keys))]


@dataclass
class GridSearchResult:
    best: ClassifierSpec
    best_cv: CVResult
    trials: list[tuple[ClassifierSpec, CVResult]] = field(default_factory=list)


def grid_search(family: str, grid: dict[str, list], d: Dataset, k: int = 5, seed: int = 0,
                class_weighting=None) -> GridSearchResult:
    """Exhaustive CV over ``grid``; the first spec wins ties."""
    points = expand_grid(grid)
    if not points:
        raise ValueError("empty hyperparameter grid")
    trials = []
    best = None
    for params in points:
        spec = ClassifierSpec.make(family, class_weighting=class_weighting, seed=seed, **params)
        cv = cross_validate(spec, d, k, seed)
        trials.append((spec, cv))
        if best is None or cv.mean > best[1].mean:
            best = (spec, cv)
    return GridSearchResult(best[0], best[1], trials)


@dataclass(frozen=True)
class SelectionStep:
    n_features: int
    added: str
    features: tuple[str, ...]
    weighted_f1: float
    minority_f1: float
    roc_auc: float


def forward_feature_selection(spec: ClassifierSpec, d: Dataset, k: int = 5, seed: int = 0,
                              max_features: int | None = None) -> list[SelectionStep]:
    """Greedy forward selection on cross-validated weighted F1.

    Candidates tied on weighted F1 are separated by mean ROC-AUC, then by
    column order, so flat F1 plateaus still follow the ranking signal.
    """
    max_features = len(d.feature_names) if max_features is None else max_features
    if not 1 <= max_features <= len(d.feature_names):
        raise ValueError(f"max_features must be in 1..{len(d.feature_names)}")
    chosen: list[str] = []
    steps = []
    for _ in range(max_features):
        best = None
        for name in d.feature_names:
            if name in chosen:
                continue
            cv = cross_validate(spec, d.select_features(chosen + [name]), k, seed)
            auc = cv.mean_roc_auc if np.isfinite(cv.mean_roc_auc) else 0.0
            key = (round(cv.mean, 12), round(auc, 12))
            if best is None or key > best[0]:
                best = (key, name, cv)
        _, name, cv = best
        chosen.append(name)
        steps.append(SelectionStep(len(chosen), name, tuple(chosen), cv.mean,
                                   cv.mean_minority_f1, cv.mean_roc_auc))
    return steps


@dataclass
class ModelReport:
    spec: dict
    confusion: ConfusionMatrix | None = None
    per_class_f1: tuple[float, float] | None = None
    weighted_f1: float | None = None
    roc_auc: float | None = None
    regression: RegressionScores | None = None
    selected_features: tuple[str, ...] = ()
    cv: dict | None = None
    extra: dict = field(default_factory=dict)

    def as_dict(self) -> dict:
        out = {"spec": self.spec, "selected_features": list(self.selected_features)}
        if self.confusion is not None:
            out.update(confusion_matrix=self.confusion.as_dict(),
                       per_class_f1=list(self.per_class_f1), weighted_f1=self.weighted_f1,
                       roc_auc=self.roc_auc)
        if self.regression is not None:
            out.update(self.regression.as_dict())
        if self.cv is not None:
            out["cv"] = self.cv
        out.update(self.extra)
        return out


def evaluate_classifier(spec: ClassifierSpec, train: Dataset, test: Dataset, cv: CVResult | None = None) -> ModelReport:
    """Fit on ``train`` (scaler included) and score on ``test``."""
    model, scaler = fit_scaled(spec, train)
    Xt = scaler.transform(test.X)
    cm = confusion_matrix(test.labels, model.predict(Xt))
    f1 = f1_scores(cm)
    auc = _safe_auc(model.score(Xt), test.labels)
    return ModelReport(spec.as_dict(), cm, f1.per_class, f1.weighted,
                       None if np.isnan(auc) else auc, selected_features=train.feature_names,
                       cv=cv.as_dict() if cv else None)


# ---------------------------------------------------------------------------
# runtime regression
# ---------------------------------------------------------------------------

def cross_validate_regressor(spec: RegressorSpec, X: np.ndarray, target: np.ndarray,
                             k: int = 5, seed: int = 0) -> float:
    """Mean negative RMSE over shuffled folds (higher is better)."""
    scores = []
    for test_rows in kfold(len(target), k, seed):
        train_rows = np.setdiff1d(np.arange(len(target)), test_rows)
        scaler = MinMaxScaler().fit(X[train_rows])
        model = train_regressor(spec, scaler.transform(X[train_rows]), target[train_rows])
        pred = model.predict(scaler.transform(X[test_rows]))
        scores.append(-regression_metrics(pred, target[test_rows]).rmse)
    return float(np.mean(scores))


def grid_search_regressor(grid: dict[str, list], X, target, k: int = 5, seed: int = 0):
    best = None
    trials = []
    for params in expand_grid(grid):
        spec = RegressorSpec.make(seed=seed, **params)
        score = cross_validate_regressor(spec, X, target, k, seed)
        trials.append((spec, score))
        if best is None or score > best[1]:
            best = (spec, score)
    return best[0], best[1], trials
