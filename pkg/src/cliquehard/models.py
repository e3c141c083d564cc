"""Hardness classifiers and runtime regressors.

Three classifier families share one interface (``score`` in [0, 1] and a
thresholded ``predict``): L2-regularized logistic regression, a linear
hinge-loss margin model, and gradient-boosted depth-limited trees. The
runtime regressor is the least-squares version of the same booster.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

FAMILIES = ("logistic", "linear-margin", "gradient-boosted-trees")

DEFAULT_PARAMS = {
    "logistic": {"l2": 1e-3, "learning_rate": 0.5, "epochs": 500},
    "linear-margin": {"l2": 1e-3, "learning_rate": 0.1, "epochs": 500},
    "gradient-boosted-trees": {"n_trees": 100, "learning_rate": 0.1, "max_depth": 3,
                               "min_samples_leaf": 5, "subsample": 1.0},
}
REGRESSOR_PARAMS = {"n_trees": 200, "learning_rate": 0.1, "max_depth": 3,
                    "min_samples_leaf": 5, "subsample": 1.0}


class TrainingError(RuntimeError):
    pass


@dataclass(frozen=True)
class ClassifierSpec:
    family: str
    params: tuple[tuple[str, float], ...] = ()
    class_weighting: str | tuple[float, float] | None = None  # None, "balanced" or (w_neg, w_pos)
    seed: int = 0
    threshold: float = 0.5

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        for key, value in self.params:
            if key not in DEFAULT_PARAMS[self.family]:
                raise ValueError(f"{self.family} has no hyperparameter {key!r}")
            if value < 0:
                raise ValueError(f"{key} must be non-negative")

    @classmethod
    def make(cls, family: str, class_weighting=None, seed: int = 0, **params) -> "ClassifierSpec":
        return cls(family, tuple(sorted(params.items())), class_weighting, seed)

    def hyper(self) -> dict:
        merged = dict(DEFAULT_PARAMS[self.family])
        merged.update(self.params)
        return merged

    def as_dict(self) -> dict:
        cw = self.class_weighting
        return {"family": self.family, "params": self.hyper(),
                "class_weighting": list(cw) if isinstance(cw, tuple) else cw,
                "seed": self.seed, "threshold": self.threshold}


def class_weights(labels: np.ndarray, weighting) -> np.ndarray:
    """Per-row weights; ``"balanced"`` is inverse class frequency scaled to mean 1."""
    labels = np.asarray(labels)
    if weighting is None:
        return np.ones(len(labels))
    if weighting == "balanced":
        n, pos = len(labels), labels.sum()
        w = (n / (2.0 * (n - pos)), n / (2.0 * pos))
    else:
        w = tuple(float(x) for x in weighting)
    return np.where(labels == 1, w[1], w[0])


def sigmoid(z):
    return 0.5 * (1.0 + np.tanh(0.5 * np.asarray(z, dtype=float)))


# ---------------------------------------------------------------------------
# linear models
# ---------------------------------------------------------------------------

def logistic_loss_grad(w: np.ndarray, b: float, X, y, l2: float, sample_weight=None):
    """Weighted mean log-loss + (l2/2)|w|^2 and its gradient in (w, b)."""
    sw = np.ones(len(y)) if sample_weight is None else sample_weight
    z = X @ w + b
    # log(1 + exp(-s z)) with s = +-1, computed stably
    s = 2.0 * y - 1.0
    loss = np.sum(sw * np.logaddexp(0.0, -s * z)) / len(y) + 0.5 * l2 * w @ w
    r = sw * (sigmoid(z) - y) / len(y)
    return loss, X.T @ r + l2 * w, float(r.sum())


def hinge_loss_grad(w: np.ndarray, b: float, X, y, l2: float, sample_weight=None):
    """Weighted mean hinge loss + (l2/2)|w|^2 and a subgradient in (w, b)."""
    sw = np.ones(len(y)) if sample_weight is None else sample_weight
    s = 2.0 * y - 1.0
    margin = s * (X @ w + b)
    active = margin < 1.0
    loss = np.sum(sw * np.maximum(0.0, 1.0 - margin)) / len(y) + 0.5 * l2 * w @ w
    r = -(sw * s * active) / len(y)
    return loss, X.T @ r + l2 * w, float(r.sum())


@dataclass
class LinearClassifier:
    family: str
    w: np.ndarray
    b: float
    threshold: float = 0.5
    loss_history: list[float] = field(default_factory=list, repr=False)

    def decision(self, X) -> np.ndarray:
        return np.asarray(X, dtype=float) @ self.w + self.b

    def score(self, X) -> np.ndarray:
        return sigmoid(self.decision(X))

    def predict(self, X) -> np.ndarray:
        return (self.score(X) >= self.threshold).astype(np.int64)


def _fit_linear(spec: ClassifierSpec, X, y, sw) -> LinearClassifier:
    p = spec.hyper()
    grad_fn = logistic_loss_grad if spec.family == "logistic" else hinge_loss_grad
    w = np.zeros(X.shape[1])
    b = 0.0
    lr = p["learning_rate"]
    history = []
    for epoch in range(int(p["epochs"])):
        loss, gw, gb = grad_fn(w, b, X, y, p["l2"], sw)
        if not np.isfinite(loss):
            raise TrainingError(f"{spec.family} diverged at epoch {epoch} (loss={loss}, lr={lr})")
        history.append(float(loss))
        w = w - lr * gw
        b = b - lr * gb
    return LinearClassifier(spec.family, w, b, spec.threshold, history)


# ---------------------------------------------------------------------------
# regression trees and boosting
# ---------------------------------------------------------------------------

@dataclass
class RegressionTree:
    """Array-encoded binary tree; leaves have ``feature == -1``."""

    feature: list[int] = field(default_factory=list)
    threshold: list[float] = field(default_factory=list)
    left: list[int] = field(default_factory=list)
    right: list[int] = field(default_factory=list)
    value: list[float] = field(default_factory=list)

    def _add(self) -> int:
        for arr, v in ((self.feature, -1), (self.threshold, 0.0), (self.left, -1),
                       (self.right, -1), (self.value, 0.0)):
            arr.append(v)
        return len(self.feature) - 1

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Leaf index reached by each row."""
        X = np.asarray(X, dtype=float)
        node = np.zeros(len(X), dtype=np.int64)
        feature = np.array(self.feature)
        threshold = np.array(self.threshold)
        left, right = np.array(self.left), np.array(self.right)
        active = feature[node] >= 0
        while active.any():
            rows = np.flatnonzero(active)
            f = feature[node[rows]]
            go_left = X[rows, f] <= threshold[node[rows]]
            node[rows] = np.where(go_left, left[node[rows]], right[node[rows]])
            active = feature[node] >= 0
        return node

    def predict(self, X) -> np.ndarray:
        return np.array(self.value)[self.apply(X)]


def _best_split(xs: np.ndarray, wg: np.ndarray, ww: np.ndarray, min_leaf: int):
    """Best weighted least-squares split given per-feature sorted columns.

    ``xs``, ``wg`` and ``ww`` hold feature values, weight*target and weight,
    each column sorted by that feature. Returns (gain, feature, threshold)
    or None. Ties keep the lowest feature index and the leftmost threshold.
    """
    n, k = xs.shape
    if n < 2 * min_leaf or n < 2:
        return None
    sl = np.cumsum(wg, axis=0)[:-1]
    wl = np.cumsum(ww, axis=0)[:-1]
    s_tot, w_tot = wg.sum(axis=0), ww.sum(axis=0)
    sr, wr = s_tot - sl, w_tot - wl
    valid = xs[:-1] < xs[1:]
    counts = np.arange(1, n)[:, None]
    valid &= (counts >= min_leaf) & (n - counts >= min_leaf) & (wl > 0) & (wr > 0)
    with np.errstate(divide="ignore", invalid="ignore"):
        gain = sl ** 2 / wl + sr ** 2 / wr - s_tot ** 2 / w_tot
    gain = np.where(valid, gain, -np.inf)
    flat = int(np.argmax(gain.T))  # feature-major so lower features win ties
    j, i = divmod(flat, n - 1)
    best = gain[i, j]
    if not np.isfinite(best) or best <= 1e-12 * max(1.0, abs(s_tot[j] ** 2 / w_tot[j])):
        return None
    return float(best), j, float(0.5 * (xs[i, j] + xs[i + 1, j]))


def fit_tree(X: np.ndarray, g: np.ndarray, w: np.ndarray, max_depth: int, min_leaf: int,
             order: np.ndarray | None = None) -> tuple[RegressionTree, np.ndarray]:
    """Grow a least-squares tree on target ``g``; returns the tree and each row's leaf.

    ``order`` may carry a precomputed column-wise argsort of ``X``; node
    subsets are then read off it without re-sorting.
    """
    n, k = X.shape
    if order is None:
        order = np.argsort(X, axis=0, kind="stable")
    order_t = order.T
    tree = RegressionTree()
    leaf_of = np.zeros(n, dtype=np.int64)
    stack = [(tree._add(), np.arange(n), 0)]
    in_node = np.zeros(n, dtype=bool)
    while stack:
        node, rows, depth = stack.pop()
        split = None
        if depth < max_depth and len(rows) >= 2 * min_leaf:
            in_node[:] = False
            in_node[rows] = True
            node_order = order_t[in_node[order_t]].reshape(k, len(rows)).T
            xs = np.take_along_axis(X, node_order, axis=0)
            split = _best_split(xs, (w * g)[node_order], w[node_order], min_leaf)
        if split is None:
            leaf_of[rows] = node
            continue
        _, j, thr = split
        mask = X[rows, j] <= thr
        tree.feature[node], tree.threshold[node] = j, thr
        left, right = tree._add(), tree._add()
        tree.left[node], tree.right[node] = left, right
        stack.append((right, rows[~mask], depth + 1))
        stack.append((left, rows[mask], depth + 1))
    return tree, leaf_of


@dataclass
class BoostedTrees:
    """Additive tree ensemble ``F(x) = base + sum_t lr * tree_t(x)``."""

    base: float
    learning_rate: float
    trees: list[RegressionTree]
    logistic: bool
    threshold: float = 0.5

    def decision(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=float)
        out = np.full(len(X), self.base)
        for t in self.trees:
            out += self.learning_rate * t.predict(X)
        return out

    def score(self, X) -> np.ndarray:
        return sigmoid(self.decision(X)) if self.logistic else self.decision(X)

    def predict(self, X) -> np.ndarray:
        if self.logistic:
            return (self.score(X) >= self.threshold).astype(np.int64)
        return self.decision(X)


def fit_boosted_trees(X, y, sw, params: dict, logistic: bool, seed: int = 0, threshold: float = 0.5) -> BoostedTrees:
    """Stagewise boosting: each tree is a least-squares fit to the negative loss gradient.

    Logistic leaves take a Newton step ``sum(w r) / sum(w p (1-p))``;
    squared-error leaves take the weighted mean residual.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    rng = np.random.default_rng(seed)
    n = len(y)
    if logistic:
        p0 = np.clip(np.sum(sw * y) / np.sum(sw), 1e-6, 1 - 1e-6)
        base = float(np.log(p0 / (1 - p0)))
    else:
        base = float(np.sum(sw * y) / np.sum(sw))
    F = np.full(n, base)
    lr = float(params["learning_rate"])
    trees = []
    subsample = params.get("subsample", 1.0) < 1.0
    full_order = None if subsample else np.argsort(X, axis=0, kind="stable")
    for _ in range(int(params["n_trees"])):
        if subsample:
            rows = np.sort(rng.choice(n, max(2, int(round(params["subsample"] * n))), replace=False))
        else:
            rows = np.arange(n)
        p = sigmoid(F) if logistic else None
        resid = (y - p) if logistic else (y - F)
        tree, leaf_of = fit_tree(X[rows], resid[rows], sw[rows], int(params["max_depth"]),
                                 int(params["min_samples_leaf"]), full_order)
        for leaf in np.unique(leaf_of):
            members = rows[leaf_of == leaf]
            num = np.sum(sw[members] * resid[members])
            if logistic:
                den = np.sum(sw[members] * p[members] * (1 - p[members]))
                tree.value[leaf] = float(num / max(den, 1e-12))
            else:
                tree.value[leaf] = float(num / np.sum(sw[members]))
        F = F + lr * tree.predict(X)
        if not np.all(np.isfinite(F)):
            raise TrainingError("boosting produced non-finite predictions")
        trees.append(tree)
    return BoostedTrees(base, lr, trees, logistic, threshold)


def train_classifier(spec: ClassifierSpec, X: np.ndarray, labels: np.ndarray):
    """Fit one classifier on already-scaled features."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(labels)
    if len(np.unique(y)) != 2:
        raise ValueError("training needs both classes present")
    sw = class_weights(y, spec.class_weighting)
    if spec.family == "gradient-boosted-trees":
        return fit_boosted_trees(X, y, sw, spec.hyper(), True, spec.seed, spec.threshold)
    return _fit_linear(spec, X, y.astype(float), sw)


@dataclass(frozen=True)
class RegressorSpec:
    params: tuple[tuple[str, float], ...] = ()
    seed: int = 0

    @classmethod
    def make(cls, seed: int = 0, **params) -> "RegressorSpec":
        for key in params:
            if key not in REGRESSOR_PARAMS:
                raise ValueError(f"regressor has no hyperparameter {key!r}")
        return cls(tuple(sorted(params.items())), seed)

    def hyper(self) -> dict:
        merged = dict(REGRESSOR_PARAMS)
        merged.update(self.params)
        return merged

    def as_dict(self) -> dict:
        return {"family": "gradient-boosted-trees", "params": self.hyper(), "seed": self.seed}


def train_regressor(spec: RegressorSpec, X: np.ndarray, target: np.ndarray) -> BoostedTrees:
    target = np.asarray(target, dtype=float)
    return fit_boosted_trees(X, target, np.ones(len(target)), spec.hyper(), False, spec.seed)
