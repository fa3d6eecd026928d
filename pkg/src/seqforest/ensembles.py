"""Classifier families sharing one fit / predict_proba / predict interface.

Every model returns probabilities over the full schema class set, and
``predict`` is the argmax of ``predict_proba`` with ties going to the lowest
class index, so acquisition code never needs to know which family it has.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field, fields
from typing import Any, Optional, Union

import numpy as np

from .errors import ConfigurationError, DomainError
from .forest import Forest, ForestParams, Tree, forest_fit, grow_regression_tree, grow_tree

KINDS = ("random_forest", "decision_tree", "gradient_boosting")
SHORT_NAMES = {"random_forest": "RF", "decision_tree": "DT", "gradient_boosting": "GB"}


@dataclass(frozen=True)
class DTParams:
    max_depth: Optional[int] = None
    min_samples_split: int = 2

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class GBParams:
    n_rounds: int = 100
    learning_rate: float = 0.1
    max_depth: int = 3

    def __post_init__(self):
        if self.n_rounds < 0:
            raise ConfigurationError("n_rounds must be >= 0")
        if not 0 < self.learning_rate <= 1:
            raise ConfigurationError("learning_rate must lie in (0, 1]")
        if self.max_depth < 1:
            raise ConfigurationError("max_depth must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)


Params = Union[ForestParams, DTParams, GBParams]
_PARAM_TYPES = {"random_forest": ForestParams, "decision_tree": DTParams, "gradient_boosting": GBParams}

DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "random_forest": {
        "n_trees": [100, 200, 300],
        "max_depth": [None, 10, 20],
        "min_samples_split": [2, 5],
    },
    "decision_tree": {
        "max_depth": [None, 5, 10, 20],
        "min_samples_split": [2, 5, 10],
    },
    "gradient_boosting": {
        "n_rounds": [50, 100],
        "learning_rate": [0.05, 0.1, 0.3],
        "max_depth": [2, 3],
    },
}


@dataclass(frozen=True)
class ClassifierSpec:
    """A classifier family plus its parameter overrides (unset fields use defaults)."""

    kind: str = "random_forest"
    params: dict[str, Any] = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ConfigurationError(f"unknown classifier kind {self.kind!r}; expected one of {KINDS}")
        allowed = {f.name for f in fields(_PARAM_TYPES[self.kind])}
        unknown = set(self.params) - allowed
        if unknown:
            raise ConfigurationError(
                f"unknown parameter(s) {sorted(unknown)} for {self.kind}; allowed: {sorted(allowed)}"
            )
        self.resolve()

    def resolve(self, overrides: Optional[dict] = None) -> Params:
        return _PARAM_TYPES[self.kind](**{**self.params, **(overrides or {})})

    def with_params(self, overrides: dict) -> "ClassifierSpec":
        return ClassifierSpec(self.kind, {**self.params, **overrides})

    @property
    def short_name(self) -> str:
        return SHORT_NAMES[self.kind]


@dataclass(eq=False)
class DecisionTreeModel:
    tree: Tree
    n_classes: int

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return self.tree.predict_proba(X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def dt_fit(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    params: DTParams = DTParams(),
    rng: Optional[np.random.Generator] = None,
) -> DecisionTreeModel:
    """Single CART tree over all features; probabilities are normalized leaf counts."""
    fp = ForestParams(
        n_trees=1,
        max_features=np.asarray(X).shape[1],
        max_depth=params.max_depth,
        min_samples_split=params.min_samples_split,
        bootstrap=False,
    )
    return DecisionTreeModel(grow_tree(X, y, n_classes, fp, rng), n_classes)


def softmax(scores: np.ndarray) -> np.ndarray:
    z = scores - scores.max(axis=-1, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=-1, keepdims=True)


@dataclass(eq=False)
class GradientBoostingModel:
    """Additive per-class scores; only classes seen in training get a score column."""

    present: np.ndarray
    n_classes: int
    learning_rate: float
    rounds: list[list[Tree]] = field(default_factory=list)

    def decision_function(self, X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        F = np.zeros((X.shape[0], self.present.size))
        for trees in self.rounds:
            for k, tree in enumerate(trees):
                F[:, k] += self.learning_rate * tree.predict(X)
        return F

    def predict_proba(self, X: np.ndarray) -> np.ndarray:
        return gb_proba(self, X)

    def predict(self, X: np.ndarray) -> np.ndarray:
        return np.argmax(self.predict_proba(X), axis=1)


def gb_proba(model: GradientBoostingModel, X: np.ndarray) -> np.ndarray:
    scores = model.decision_function(X)
    out = np.zeros((scores.shape[0], model.n_classes))
    out[:, model.present] = softmax(scores)
    return out


def cross_entropy(model, X: np.ndarray, y: np.ndarray) -> float:
    p = model.predict_proba(X)[np.arange(len(y)), y]
    return float(-np.mean(np.log(np.clip(p, 1e-300, None))))


def gb_fit(
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    params: GBParams = GBParams(),
    rng: Optional[np.random.Generator] = None,
    loss_trace: Optional[list] = None,
) -> GradientBoostingModel:
    """Multiclass gradient boosting with a softmax link.

    Each round fits one least-squares regression tree per present class to the
    residual ``onehot - softmax(F)`` and adds it to that class's score scaled by
    the learning rate. If ``loss_trace`` is given, the training cross-entropy
    before each round and after the last one is appended to it.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=np.intp)
    if y.shape[0] == 0:
        raise DomainError("cannot fit gradient boosting on an empty sample set")
    present = np.unique(y)
    Y = (y[:, None] == present[None, :]).astype(float)
    F = np.zeros_like(Y)
    model = GradientBoostingModel(present, n_classes, params.learning_rate)
    rows = np.arange(y.shape[0])
    col = np.searchsorted(present, y)
    for _ in range(params.n_rounds):
        P = softmax(F)
        if loss_trace is not None:
            loss_trace.append(float(-np.mean(np.log(P[rows, col]))))
        R = Y - P
        trees = []
        for k in range(present.size):
            tree = grow_regression_tree(X, R[:, k], max_depth=params.max_depth)
            F[:, k] += params.learning_rate * tree.predict(X)
            trees.append(tree)
        model.rounds.append(trees)
    if loss_trace is not None:
        loss_trace.append(float(-np.mean(np.log(softmax(F)[rows, col]))))
    return model


def rf_fit(X, y, n_classes, params: ForestParams = ForestParams(), rng=None) -> Forest:
    return forest_fit(X, y, n_classes, params, rng)


_FITTERS = {"random_forest": rf_fit, "decision_tree": dt_fit, "gradient_boosting": gb_fit}


def fit_model(
    spec: ClassifierSpec,
    X: np.ndarray,
    y: np.ndarray,
    n_classes: int,
    rng: Optional[np.random.Generator] = None,
    overrides: Optional[dict] = None,
):
    """Fit the family named by ``spec`` and return a model with ``predict_proba``/``predict``."""
    return _FITTERS[spec.kind](X, y, n_classes, spec.resolve(overrides), rng)
