"""CART trees and a bagged random forest, written against plain numpy arrays.

Trees are stored as flat node arrays (``feature``, ``threshold``, ``left``,
``right``, ``value``); a row ``x`` goes left at an internal node iff
``x[feature] <= threshold``. Classification leaves keep raw class counts,
regression leaves keep a single real value.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import ConfigurationError, DomainError

LEAF = -1
# Two candidate splits whose impurities differ by less than this are tied.
_TIE_TOL = 1e-12


def gini(class_counts) -> float:
    """Gini impurity ``1 - sum_c (n_c / n)^2`` of a vector of class counts."""
    counts = np.asarray(class_counts, dtype=float)
    if np.any(counts < 0):
        raise DomainError("class counts must be non-negative")
    total = counts.sum()
    if total <= 0:
        raise DomainError("gini of an empty node is undefined")
    p = counts / total
    return float(1.0 - np.dot(p, p))


@dataclass(frozen=True)
class Split:
    feature_index: int
    threshold: float
    weighted_child_impurity: float


@dataclass(frozen=True)
class ForestParams:
    n_trees: int = 100
    max_features: Optional[int] = None  # None -> floor(sqrt(p))
    max_depth: Optional[int] = None  # None -> unlimited
    min_samples_split: int = 2
    bootstrap: bool = True

    def __post_init__(self):
        if self.n_trees < 1:
            raise ConfigurationError("n_trees must be positive")
        if self.max_depth is not None and self.max_depth < 0:
            raise ConfigurationError("max_depth must be >= 0 or None")
        if self.min_samples_split < 2:
            raise ConfigurationError("min_samples_split must be >= 2")
        if self.max_features is not None and self.max_features < 1:
            raise ConfigurationError("max_features must be >= 1")

    def resolved_max_features(self, n_features: int) -> int:
        k = self.max_features if self.max_features is not None else math.isqrt(n_features)
        if not 1 <= k <= n_features:
            raise ConfigurationError(f"max_features={k} outside [1, {n_features}]")
        return k

    def to_dict(self) -> dict:
        return asdict(self)


def _pick_split(score: np.ndarray, xs: np.ndarray, features: np.ndarray) -> Split:
    """Lowest score, ties -> lowest feature index, then lowest threshold.

    ``score`` has shape (n-1, k) with ``inf`` at invalid positions; ``features``
    is sorted ascending so column order is feature order.
    """
    best = score.min()
    tied = score <= best + _TIE_TOL
    col = int(np.argmax(tied.any(axis=0)))
    row = int(np.argmax(tied[:, col]))
    lo, hi = xs[row, col], xs[row + 1, col]
    thr = 0.5 * (lo + hi)
    if thr >= hi:  # adjacent floats: midpoint rounds up
        thr = lo
    return Split(int(features[col]), float(thr), float(best))


def _sorted_columns(X: np.ndarray, features: np.ndarray):
    Xf = X[:, features]
    order = np.argsort(Xf, axis=0, kind="stable")
    xs = Xf[order, np.arange(Xf.shape[1])]
    return order, xs


def best_split(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    features=None,
    min_samples_split: int = 2,
    onehot: Optional[np.ndarray] = None,
) -> Optional[Split]:
    """Best Gini split of the rows ``(X, y)`` over the given feature columns.

    Candidate thresholds are midpoints between consecutive distinct sorted
    values. Returns ``None`` when the node is pure, too small, or no split
    lowers the impurity.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    n = y.shape[0]
    if n < max(min_samples_split, 2):
        return None
    counts = np.bincount(y, minlength=n_classes).astype(float)
    parent = 1.0 - np.dot(counts, counts) / (n * n)
    if parent <= _TIE_TOL:
        return None
    features = np.arange(X.shape[1]) if features is None else np.sort(np.asarray(features))
    order, xs = _sorted_columns(X, features)

    if onehot is None:
        onehot = np.eye(n_classes)[y]
    left = np.cumsum(onehot[order], axis=0)[:-1]  # (n-1, k, C)
    right = counts - left
    n_left = np.arange(1, n, dtype=float)[:, None]
    n_right = n - n_left
    score = (
        n - (left * left).sum(axis=-1) / n_left - (right * right).sum(axis=-1) / n_right
    ) / n
    score[xs[1:] <= xs[:-1]] = np.inf
    if not np.isfinite(score).any():
        return None
    split = _pick_split(score, xs, features)
    if split.weighted_child_impurity >= parent - _TIE_TOL:
        return None
    return split


def best_split_regression(
    X: np.ndarray, r: np.ndarray, features=None, min_samples_split: int = 2
) -> Optional[Split]:
    """Variance-reduction split of real targets ``r``; impurity is the mean squared deviation."""
    X = np.asarray(X, dtype=float)
    r = np.asarray(r, dtype=float)
    n = r.shape[0]
    if n < max(min_samples_split, 2):
        return None
    total = r.sum()
    sq = np.dot(r, r)
    parent = (sq - total * total / n) / n
    if parent <= _TIE_TOL:
        return None
    features = np.arange(X.shape[1]) if features is None else np.sort(np.asarray(features))
    order, xs = _sorted_columns(X, features)
    s_left = np.cumsum(r[order], axis=0)[:-1]
    s_right = total - s_left
    n_left = np.arange(1, n, dtype=float)[:, None]
    score = (sq - s_left * s_left / n_left - s_right * s_right / (n - n_left)) / n
    score[xs[1:] <= xs[:-1]] = np.inf
    if not np.isfinite(score).any():
        return None
    split = _pick_split(score, xs, features)
    if split.weighted_child_impurity >= parent - _TIE_TOL * max(1.0, parent):
        return None
    return split


@dataclass(eq=False)
class Tree:
    """Flat array representation of a binary decision tree."""

    feature: np.ndarray
    threshold: np.ndarray
    left: np.ndarray
    right: np.ndarray
    value: np.ndarray  # (n_nodes, C) class counts, or (n_nodes,) regression values
    depth: int = 0

    @property
    def n_nodes(self) -> int:
        return self.feature.shape[0]

    @property
    def is_classifier(self) -> bool:
        return self.value.ndim == 2

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Index of the leaf reached by each row of ``X``."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        node = np.zeros(X.shape[0], dtype=np.intp)
        rows = np.arange(X.shape[0])
        active = self.feature[node] != LEAF
        while active.any():
            idx = rows[active]
            cur = node[idx]
            go_left = X[idx, self.feature[cur]] <= self.threshold[cur]
            node[idx] = np.where(go_left, self.left[cur], self.right[cur])
            active[idx] = self.feature[node[idx]] != LEAF
        return node

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Majority class at the leaf (lowest class index on ties), or the leaf value."""
        leaves = self.apply(X)
        if self.is_classifier:
            return np.argmax(self.value[leaves], axis=1)
        return self.value[leaves]

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        counts = self.value[self.apply(X)]
        return counts / counts.sum(axis=1, keepdims=True)


def _grow(
    X: np.ndarray,
    leaf_value: Callable[[np.ndarray], object],
    find_split: Callable[[np.ndarray, np.ndarray], Optional[Split]],
    is_terminal: Callable[[object, int], bool],
    n_sub: int,
    max_depth: Optional[int],
    rng: np.random.Generator,
) -> Tree:
    n_features = X.shape[1]
    all_features = np.arange(n_features)
    feature, threshold, left, right, value = [], [], [], [], []
    max_seen = 0

    def new_node(rows):
        feature.append(LEAF)
        threshold.append(np.nan)
        left.append(LEAF)
        right.append(LEAF)
        value.append(leaf_value(rows))
        return len(feature) - 1

    # depth-first, left child before right, so rng use is fixed by the structure
    root = np.arange(X.shape[0])
    stack = [(new_node(root), root, 0)]
    while stack:
        node, rows, depth = stack.pop()
        max_seen = max(max_seen, depth)
        if max_depth is not None and depth >= max_depth:
            continue
        if is_terminal(value[node], rows.shape[0]):
            continue
        if n_sub < n_features:
            feats = np.sort(rng.choice(n_features, size=n_sub, replace=False))
        else:
            feats = all_features
        split = find_split(rows, feats)
        if split is None:
            continue
        mask = X[rows, split.feature_index] <= split.threshold
        l_rows, r_rows = rows[mask], rows[~mask]
        feature[node] = split.feature_index
        threshold[node] = split.threshold
        left[node] = new_node(l_rows)
        right[node] = new_node(r_rows)
        stack.append((right[node], r_rows, depth + 1))
        stack.append((left[node], l_rows, depth + 1))

    return Tree(
        feature=np.array(feature, dtype=np.intp),
        threshold=np.array(threshold, dtype=float),
        left=np.array(left, dtype=np.intp),
        right=np.array(right, dtype=np.intp),
        value=np.array(value, dtype=float),
        depth=max_seen,
    )


def grow_tree(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    params: ForestParams = ForestParams(),
    rng: Optional[np.random.Generator] = None,
) -> Tree:
    """Grow one Gini classification tree, drawing a fresh feature subset at every node."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    if y.shape[0] == 0:
        raise DomainError("cannot grow a tree on an empty sample set")
    rng = np.random.default_rng() if rng is None else rng
    k = params.resolved_max_features(X.shape[1])
    min_split = params.min_samples_split
    onehot = np.eye(n_classes)[y]
    return _grow(
        X,
        leaf_value=lambda rows: np.bincount(y[rows], minlength=n_classes),
        find_split=lambda rows, f: best_split(X[rows], y[rows], n_classes, f, min_split, onehot[rows]),
        # pure or too small to split
        is_terminal=lambda counts, n: n < min_split or np.count_nonzero(counts) <= 1,
        n_sub=k,
        max_depth=params.max_depth,
        rng=rng,
    )


def grow_regression_tree(
    X: np.ndarray,
    r: np.ndarray,
    max_depth: Optional[int] = 3,
    min_samples_split: int = 2,
    rng: Optional[np.random.Generator] = None,
) -> Tree:
    """Least-squares regression tree over all features; leaves hold the mean target."""
    X = np.asarray(X, dtype=float)
    r = np.asarray(r, dtype=float)
    if r.shape[0] == 0:
        raise DomainError("cannot grow a tree on an empty sample set")
    return _grow(
        X,
        leaf_value=lambda rows: r[rows].mean(),
        find_split=lambda rows, f: best_split_regression(X[rows], r[rows], f, min_samples_split),
        is_terminal=lambda v, n: n < min_samples_split,
        n_sub=X.shape[1],
        max_depth=max_depth,
        rng=np.random.default_rng(0) if rng is None else rng,
    )


@dataclass(eq=False)
class Forest:
    trees: list[Tree]
    n_classes: int
    params: ForestParams = field(default_factory=ForestParams)
    bootstrap_indices: list[np.ndarray] = field(default_factory=list)

    def votes(self, X: np.ndarray) -> np.ndarray:
        """Per-class vote counts, shape (n_samples, n_classes)."""
        X = np.atleast_2d(np.asarray(X, dtype=float))
        n = X.shape[0]
        offsets = np.arange(n) * self.n_classes
        counts = np.zeros(n * self.n_classes, dtype=np.int64)
        for tree in self.trees:
            counts += np.bincount(tree.predict(X) + offsets, minlength=n * self.n_classes)
        return counts.reshape(n, self.n_classes)

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        """Vote fractions over the full class set."""
        return self.votes(X) / len(self.trees)

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Majority vote; ties go to the lowest class index."""
        return np.argmax(self.votes(X), axis=1)


def forest_fit(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    params: ForestParams = ForestParams(),
    rng: Optional[np.random.Generator] = None,
) -> Forest:
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    n = y.shape[0]
    if n == 0:
        raise DomainError("cannot fit a forest on an empty sample set")
    rng = np.random.default_rng() if rng is None else rng
    params.resolved_max_features(X.shape[1])
    seeds = rng.integers(0, 2**63 - 1, size=params.n_trees)
    trees, boot = [], []
    for seed in seeds:
        tree_rng = np.random.default_rng(int(seed))
        idx = tree_rng.integers(0, n, size=n) if params.bootstrap else np.arange(n)
        trees.append(grow_tree(X[idx], y[idx], n_classes, params, tree_rng))
        boot.append(idx)
    return Forest(trees, n_classes, params, boot)


def forest_predict(forest: Forest, x: np.ndarray):
    """Class index for a single vector, or an array of indices for a 2-D batch."""
    x = np.asarray(x, dtype=float)
    out = forest.predict(x)
    return int(out[0]) if x.ndim == 1 else out


def forest_proba(forest: Forest, x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    out = forest.predict_proba(x)
    return out[0] if x.ndim == 1 else out
