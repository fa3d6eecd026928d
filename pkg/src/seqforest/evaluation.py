"""Confusion matrices, macro/weighted classification metrics and k-fold grid search."""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence

import numpy as np

from .ensembles import DEFAULT_GRIDS, ClassifierSpec, fit_model
from .errors import ConfigurationError, DomainError


def confusion_matrix(predictions: Sequence[int], truths: Sequence[int], n_classes: int) -> np.ndarray:
    """Counts with rows = true class and columns = predicted class."""
    pred = np.asarray(predictions, dtype=np.intp).reshape(-1)
    true = np.asarray(truths, dtype=np.intp).reshape(-1)
    if pred.shape != true.shape:
        raise DomainError(f"length mismatch: {pred.size} predictions vs {true.size} truths")
    flat = np.bincount(true * n_classes + pred, minlength=n_classes * n_classes)
    return flat.reshape(n_classes, n_classes)


def _safe_div(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    num = np.asarray(num, dtype=float)
    den = np.asarray(den, dtype=float)
    out = np.zeros_like(num)
    np.divide(num, den, out=out, where=den > 0)
    return out


@dataclass(frozen=True)
class Metrics:
    accuracy: float
    precision: np.ndarray  # per class
    recall: np.ndarray
    f1: np.ndarray
    support: np.ndarray

    @property
    def macro_precision(self) -> float:
        return float(self.precision.mean())

    @property
    def macro_recall(self) -> float:
        return float(self.recall.mean())

    @property
    def macro_f1(self) -> float:
        return float(self.f1.mean())

    def _weighted(self, values: np.ndarray) -> float:
        total = self.support.sum()
        return float(np.dot(values, self.support) / total) if total else 0.0

    @property
    def weighted_precision(self) -> float:
        return self._weighted(self.precision)

    @property
    def weighted_recall(self) -> float:
        return self._weighted(self.recall)

    @property
    def weighted_f1(self) -> float:
        return self._weighted(self.f1)

    def headline(self) -> dict[str, float]:
        return {
            "accuracy": float(self.accuracy),
            "precision": self.macro_precision,
            "recall": self.macro_recall,
            "f1": self.macro_f1,
        }

    def to_dict(self) -> dict:
        return {
            **self.headline(),
            "weighted_precision": self.weighted_precision,
            "weighted_recall": self.weighted_recall,
            "weighted_f1": self.weighted_f1,
            "per_class": {
                "precision": self.precision.tolist(),
                "recall": self.recall.tolist(),
                "f1": self.f1.tolist(),
                "support": self.support.tolist(),
            },
        }


def metrics_from_matrix(cm: np.ndarray) -> Metrics:
    """Accuracy plus per-class precision, recall and F1; any 0/0 counts as 0."""
    cm = np.asarray(cm, dtype=float)
    total = cm.sum()
    if total <= 0:
        raise DomainError("metrics of an empty confusion matrix are undefined")
    diag = np.diag(cm)
    precision = _safe_div(diag, cm.sum(axis=0))
    recall = _safe_div(diag, cm.sum(axis=1))
    f1 = _safe_div(2 * precision * recall, precision + recall)
    return Metrics(
        accuracy=float(diag.sum() / total),
        precision=precision,
        recall=recall,
        f1=f1,
        support=cm.sum(axis=1).astype(np.int64),
    )


def evaluate(model, X: np.ndarray, y: np.ndarray, n_classes: int) -> tuple[np.ndarray, Metrics]:
    X = np.asarray(X, dtype=float)
    if X.shape[0] == 0:
        raise DomainError("cannot evaluate on an empty test set")
    cm = confusion_matrix(model.predict(X), y, n_classes)
    return cm, metrics_from_matrix(cm)


def iter_grid(grid: dict[str, list]) -> Iterator[dict]:
    """Cartesian product of ``grid`` in insertion order (last key varies fastest)."""
    keys = list(grid)
    values = [list(grid[k]) for k in keys]
    if any(len(v) == 0 for v in values):
        raise ConfigurationError("every grid entry needs at least one value")
    for combo in itertools.product(*values):
        yield dict(zip(keys, combo))


def kfold_indices(n: int, k: int, rng: np.random.Generator) -> list[np.ndarray]:
    """Random partition of ``range(n)`` into ``k`` folds whose sizes differ by at most one."""
    if k < 2:
        raise ConfigurationError("need at least 2 folds")
    if n < k:
        raise ConfigurationError(f"cannot split {n} samples into {k} folds")
    return np.array_split(rng.permutation(n), k)


def grid_search(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    spec: ClassifierSpec,
    grid: Optional[dict[str, list]] = None,
    k: int = 5,
    rng: Optional[np.random.Generator] = None,
    return_scores: bool = False,
):
    """Return the grid cell with the best mean k-fold validation accuracy.

    Ties keep the earliest cell in enumeration order. The same folds are used
    for every cell, and each fit gets a generator seeded from ``rng``.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    grid = DEFAULT_GRIDS[spec.kind] if grid is None else grid
    rng = np.random.default_rng() if rng is None else rng
    folds = kfold_indices(len(y), k, rng)
    fold_seeds = rng.integers(0, 2**63 - 1, size=k)
    all_idx = np.arange(len(y))

    best, best_score, scores = None, -np.inf, []
    for cell in iter_grid(grid):
        accs = []
        for f, val in enumerate(folds):
            train = np.setdiff1d(all_idx, val, assume_unique=True)
            model = fit_model(
                spec, X[train], y[train], n_classes,
                np.random.default_rng(int(fold_seeds[f])), overrides=cell,
            )
            accs.append(np.mean(model.predict(X[val]) == y[val]))
        score = float(np.mean(accs))
        scores.append((cell, score))
        if score > best_score:
            best, best_score = cell, score
    return (best, scores) if return_scores else best
