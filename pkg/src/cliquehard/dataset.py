"""Learning datasets: scaling, stratified splitting, quartile bins, transactions, CSV files."""

from __future__ import annotations

import csv
import io
import json
import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .features import FEATURE_NAMES

log = logging.getLogger(__name__)

HARD, NOT_HARD = "hard", "not_hard"
BANDS = ("Q1", "Q2", "Q3", "Q4")


class DatasetError(ValueError):
    pass


@dataclass
class Dataset:
    """Parallel arrays, one row per labelled instance. ``labels`` is 1 for hard."""

    X: np.ndarray
    labels: np.ndarray
    ids: list[str]
    feature_names: tuple[str, ...] = FEATURE_NAMES
    runtimes: dict[str, np.ndarray] = field(default_factory=dict)

    def __post_init__(self):
        self.X = np.asarray(self.X, dtype=float).reshape(len(self.ids), -1)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        n = len(self.ids)
        if self.labels.shape != (n,):
            raise DatasetError(f"{len(self.labels)} labels for {n} rows")
        if self.X.shape[1] != len(self.feature_names):
            raise DatasetError(f"{self.X.shape[1]} feature columns, {len(self.feature_names)} names")
        if len(set(self.feature_names)) != len(self.feature_names):
            raise DatasetError("duplicate feature names")
        if not set(np.unique(self.labels)) <= {0, 1}:
            raise DatasetError("labels must be 0 (not hard) or 1 (hard)")
        for name, values in self.runtimes.items():
            self.runtimes[name] = np.asarray(values, dtype=float)
            if self.runtimes[name].shape != (n,):
                raise DatasetError(f"runtime column {name!r} has wrong length")

    def __len__(self) -> int:
        return len(self.ids)

    def subset(self, rows) -> "Dataset":
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(self.X[rows], self.labels[rows], [self.ids[i] for i in rows],
                       self.feature_names, {k: v[rows] for k, v in self.runtimes.items()})

    def select_features(self, names: Sequence[str]) -> "Dataset":
        cols = [self.feature_names.index(name) for name in names]
        return replace(self, X=self.X[:, cols], feature_names=tuple(names),
                       runtimes=dict(self.runtimes))

    def column(self, name: str) -> np.ndarray:
        return self.X[:, self.feature_names.index(name)]

    def class_counts(self) -> tuple[int, int]:
        hard = int(self.labels.sum())
        return len(self) - hard, hard


class MinMaxScaler:
    """Per-feature affine map onto [0, 1] fitted on one dataset; constant columns map to 0."""

    def fit(self, X: np.ndarray) -> "MinMaxScaler":
        X = np.asarray(X, dtype=float)
        if X.shape[0] == 0:
            raise DatasetError("cannot fit a scaler on zero rows")
        self.min_ = X.min(axis=0)
        span = X.max(axis=0) - self.min_
        self.constant_ = span == 0
        self.span_ = np.where(self.constant_, 1.0, span)
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        out = (np.asarray(X, dtype=float) - self.min_) / self.span_
        out[:, self.constant_] = 0.0
        return out

    def inverse_transform(self, X: np.ndarray) -> np.ndarray:
        return np.asarray(X, dtype=float) * self.span_ + self.min_


def minmax_scale(train: Dataset, apply_to: Dataset | None = None) -> tuple[Dataset, Dataset | None]:
    scaler = MinMaxScaler().fit(train.X)
    scaled_train = replace(train, X=scaler.transform(train.X), runtimes=dict(train.runtimes))
    if apply_to is None:
        return scaled_train, None
    return scaled_train, replace(apply_to, X=scaler.transform(apply_to.X), runtimes=dict(apply_to.runtimes))


def _allocate(total: int, class_sizes: np.ndarray) -> np.ndarray:
    """Split ``total`` across classes proportionally; leftovers go to the largest remainders."""
    exact = total * class_sizes / class_sizes.sum()
    counts = np.floor(exact).astype(np.int64)
    remainder = exact - counts
    for c in np.argsort(-remainder, kind="stable")[: total - counts.sum()]:
        counts[c] += 1
    return counts


def stratified_split_indices(labels: np.ndarray, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < test_fraction < 1:
        raise DatasetError("test_fraction must lie in (0, 1)")
    labels = np.asarray(labels)
    classes = np.array([0, 1])
    sizes = np.array([(labels == c).sum() for c in classes])
    if sizes.min() < 2:
        raise DatasetError(f"each class needs at least 2 instances, got {sizes.tolist()}")
    n_test = math.ceil(test_fraction * len(labels))
    per_class = _allocate(n_test, sizes)
    rng = np.random.default_rng(seed)
    train, test = [], []
    for c, k in zip(classes, per_class):
        idx = rng.permutation(np.flatnonzero(labels == c))
        test.append(idx[:k])
        train.append(idx[k:])
    return np.sort(np.concatenate(train)), np.sort(np.concatenate(test))


def stratified_split(d: Dataset, test_fraction: float = 0.2, seed: int = 0) -> tuple[Dataset, Dataset]:
    train, test = stratified_split_indices(d.labels, test_fraction, seed)
    return d.subset(train), d.subset(test)


def stratified_kfold(labels: np.ndarray, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Partition row indices into ``k`` folds with per-class counts differing by at most one.

    Each class is shuffled and dealt round-robin; the starting fold rotates
    between classes so fold sizes stay balanced overall.
    """
    if k < 2:
        raise DatasetError("k must be at least 2")
    labels = np.asarray(labels)
    rng = np.random.default_rng(seed)
    folds: list[list[int]] = [[] for _ in range(k)]
    offset = 0
    for c in (0, 1):
        idx = rng.permutation(np.flatnonzero(labels == c))
        if len(idx) < k:
            raise DatasetError(f"class {c} has {len(idx)} members, fewer than k={k}")
        for i, row in enumerate(idx):
            folds[(offset + i) % k].append(int(row))
        offset = (offset + len(idx)) % k
    return [np.sort(np.array(f, dtype=np.int64)) for f in folds]


def kfold(n: int, k: int = 5, seed: int = 0) -> list[np.ndarray]:
    """Unstratified shuffled folds, used for regression targets."""
    if k < 2 or n < k:
        raise DatasetError(f"cannot build {k} folds from {n} rows")
    perm = np.random.default_rng(seed).permutation(n)
    return [np.sort(perm[i::k]) for i in range(k)]


def random_split_indices(n: int, test_fraction: float, seed: int) -> tuple[np.ndarray, np.ndarray]:
    if not 0 < test_fraction < 1:
        raise DatasetError("test_fraction must lie in (0, 1)")
    perm = np.random.default_rng(seed).permutation(n)
    n_test = math.ceil(test_fraction * n)
    return np.sort(perm[n_test:]), np.sort(perm[:n_test])


# ---------------------------------------------------------------------------
# quartile bands and transactions
# ---------------------------------------------------------------------------

Item = tuple[str, str]
CLASS_KEY = "class"


@dataclass(frozen=True)
class BinScheme:
    """Per feature, the five edges P0, P25, P50, P75, P100."""

    edges: dict[str, tuple[float, float, float, float, float]]

    def band(self, feature: str, value: float) -> int:
        """0-based band index; lowest band closed, the others half-open on the left."""
        e = self.edges[feature]
        for i in range(3):
            if value <= e[i + 1]:
                return i
        return 3

    def to_json(self) -> str:
        return json.dumps({k: list(v) for k, v in self.edges.items()}, indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "BinScheme":
        return cls({k: tuple(float(x) for x in v) for k, v in json.loads(text).items()})


def quartile_bins(d: Dataset, rows: np.ndarray | None = None) -> BinScheme:
    """Linear-interpolation percentiles (rank ``q*(n-1)``) of every feature.

    ``rows`` restricts the fit to a subset, e.g. the hard instances.
    """
    X = d.X if rows is None else d.X[np.asarray(rows)]
    if X.shape[0] < 4:
        raise DatasetError("quartile bins need at least 4 instances")
    q = np.percentile(X, [0, 25, 50, 75, 100], axis=0, method="linear")
    return BinScheme({name: tuple(float(v) for v in q[:, j]) for j, name in enumerate(d.feature_names)})


@dataclass(frozen=True)
class Transaction:
    items: frozenset[Item]
    label: str  # HARD or NOT_HARD

    def with_class_item(self) -> frozenset[Item]:
        return self.items | {(CLASS_KEY, self.label)}

    def to_line(self) -> str:
        return ",".join([f"{f}:{b}" for f, b in sorted(self.items)] + [f"{CLASS_KEY}:{self.label}"])

    @classmethod
    def from_line(cls, line: str) -> "Transaction":
        items, label = set(), None
        for token in line.strip().split(","):
            key, _, value = token.rpartition(":")
            if key == CLASS_KEY:
                label = value
            else:
                items.add((key, value))
        if label not in (HARD, NOT_HARD):
            raise DatasetError(f"transaction without a class tag: {line!r}")
        return cls(frozenset(items), label)


def to_transactions(d: Dataset, bins: BinScheme, class_filter: str | None = None,
                    diagnostics: dict | None = None) -> list[Transaction]:
    """One transaction of quartile-band items per instance.

    Values outside [P0, P100] (possible when ``bins`` came from another
    dataset) fall into the nearest band and are counted under
    ``diagnostics["clamped"]``.
    """
    clamped = 0
    out = []
    for i in range(len(d)):
        label = HARD if d.labels[i] else NOT_HARD
        if class_filter is not None and label != class_filter:
            continue
        items = set()
        for j, name in enumerate(d.feature_names):
            v = d.X[i, j]
            lo, hi = bins.edges[name][0], bins.edges[name][4]
            if v < lo or v > hi:
                clamped += 1
            items.add((name, BANDS[bins.band(name, v)]))
        out.append(Transaction(frozenset(items), label))
    if diagnostics is not None:
        diagnostics["clamped"] = diagnostics.get("clamped", 0) + clamped
    if clamped:
        log.info("%d feature values clamped into the outer quartile bands", clamped)
    return out


def write_transactions(transactions: Iterable[Transaction]) -> str:
    return "".join(t.to_line() + "\n" for t in transactions)


def read_transactions(text: str) -> list[Transaction]:
    return [Transaction.from_line(line) for line in text.splitlines() if line.strip()]


# ---------------------------------------------------------------------------
# CSV persistence
# ---------------------------------------------------------------------------

FINGERPRINT_PREFIX = "# config-sha256="


def write_csv(path: str | Path, header: Sequence[str], rows: Iterable[Sequence], fingerprint: str = "") -> None:
    """CSV with a provenance comment line followed by the mandatory header row."""
    buf = io.StringIO()
    buf.write(f"{FINGERPRINT_PREFIX}{fingerprint}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_cell(v) for v in row])
    Path(path).write_text(buf.getvalue(), encoding="utf-8")


def _cell(v):
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (float, np.floating)):
        return repr(float(v))
    if isinstance(v, np.integer):
        return int(v)
    if v is None:
        return ""
    return v


def read_csv(path: str | Path) -> tuple[list[str], list[list[str]]]:
    lines = [line for line in Path(path).read_text(encoding="utf-8").splitlines()
             if not line.startswith("#")]
    rows = list(csv.reader(lines))
    if not rows:
        raise DatasetError(f"{path}: missing header row")
    return rows[0], rows[1:]


RUNTIME_PREFIX = "runtime_"


def write_dataset_csv(path: str | Path, d: Dataset, fingerprint: str = "",
                      lcc_flags: Sequence[bool] | None = None) -> None:
    header = ["graph_id", *d.feature_names, "used_largest_component", "label"]
    solvers = sorted(d.runtimes)
    header += [RUNTIME_PREFIX + s for s in solvers]
    flags = lcc_flags if lcc_flags is not None else [False] * len(d)
    rows = ([d.ids[i], *d.X[i], flags[i], HARD if d.labels[i] else NOT_HARD,
             *(d.runtimes[s][i] for s in solvers)] for i in range(len(d)))
    write_csv(path, header, rows, fingerprint)


def read_dataset_csv(path: str | Path) -> Dataset:
    header, rows = read_csv(path)
    try:
        label_col = header.index("label")
    except ValueError:
        raise DatasetError(f"{path}: no 'label' column") from None
    features = tuple(h for h in header[1:] if h not in ("label", "used_largest_component")
                     and not h.startswith(RUNTIME_PREFIX))
    fcols = [header.index(f) for f in features]
    rcols = {h[len(RUNTIME_PREFIX):]: i for i, h in enumerate(header) if h.startswith(RUNTIME_PREFIX)}
    try:
        X = np.array([[float(r[c]) for c in fcols] for r in rows], dtype=float).reshape(len(rows), len(fcols))
        runtimes = {s: np.array([float(r[c]) for r in rows]) for s, c in rcols.items()}
    except (ValueError, IndexError) as exc:
        raise DatasetError(f"{path}: {exc}") from None
    labels = []
    for r in rows:
        if r[label_col] not in (HARD, NOT_HARD):
            raise DatasetError(f"{path}: bad label {r[label_col]!r}")
        labels.append(1 if r[label_col] == HARD else 0)
    return Dataset(X, np.array(labels, dtype=np.int64), [r[0] for r in rows], features, runtimes)
