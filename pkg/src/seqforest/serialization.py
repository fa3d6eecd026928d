"""Versioned JSON encoding of trained models.

Layout (``format = "seqforest-model"``, ``version = 1``)::

    {"format": "seqforest-model", "version": 1, "kind": "random_forest",
     "n_classes": 4, "params": {...}, "trees": [TREE, ...]}

    TREE = {"feature": [...], "threshold": [...], "left": [...],
            "right": [...], "value": [...], "depth": int}

Leaves have ``feature = -1`` and ``threshold = null``. Classification
``value`` rows are integer class counts; regression ``value`` entries are
floats. Gradient boosting stores ``present`` (class indices with a score
column), ``learning_rate`` and ``rounds`` (a list of per-class TREE lists).
Floats are written with Python's shortest round-trip repr, so decoding is
bit-exact.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .ensembles import DecisionTreeModel, GradientBoostingModel
from .forest import Forest, ForestParams, Tree

FORMAT = "seqforest-model"
VERSION = 1


def _tree_to_dict(tree: Tree) -> dict:
    value = tree.value.astype(np.int64).tolist() if tree.is_classifier else tree.value.tolist()
    return {
        "feature": tree.feature.tolist(),
        "threshold": [None if math.isnan(t) else t for t in tree.threshold.tolist()],
        "left": tree.left.tolist(),
        "right": tree.right.tolist(),
        "value": value,
        "depth": tree.depth,
    }


def _tree_from_dict(d: dict) -> Tree:
    return Tree(
        feature=np.array(d["feature"], dtype=np.intp),
        threshold=np.array([np.nan if t is None else t for t in d["threshold"]], dtype=float),
        left=np.array(d["left"], dtype=np.intp),
        right=np.array(d["right"], dtype=np.intp),
        value=np.array(d["value"], dtype=float),
        depth=d["depth"],
    )


def model_to_dict(model) -> dict:
    head = {"format": FORMAT, "version": VERSION}
    if isinstance(model, Forest):
        return {
            **head,
            "kind": "random_forest",
            "n_classes": model.n_classes,
            "params": model.params.to_dict(),
            "trees": [_tree_to_dict(t) for t in model.trees],
        }
    if isinstance(model, DecisionTreeModel):
        return {**head, "kind": "decision_tree", "n_classes": model.n_classes, "trees": [_tree_to_dict(model.tree)]}
    if isinstance(model, GradientBoostingModel):
        return {
            **head,
            "kind": "gradient_boosting",
            "n_classes": model.n_classes,
            "present": model.present.tolist(),
            "learning_rate": model.learning_rate,
            "rounds": [[_tree_to_dict(t) for t in trees] for trees in model.rounds],
        }
    raise TypeError(f"cannot serialize {type(model).__name__}")


def model_from_dict(d: dict):
    if d.get("format") != FORMAT:
        raise ValueError(f"not a {FORMAT} document")
    if d.get("version") != VERSION:
        raise ValueError(f"unsupported model format version {d.get('version')!r}")
    kind = d["kind"]
    if kind == "random_forest":
        trees = [_tree_from_dict(t) for t in d["trees"]]
        return Forest(trees, d["n_classes"], ForestParams(**d["params"]))
    if kind == "decision_tree":
        return DecisionTreeModel(_tree_from_dict(d["trees"][0]), d["n_classes"])
    if kind == "gradient_boosting":
        return GradientBoostingModel(
            present=np.array(d["present"], dtype=np.intp),
            n_classes=d["n_classes"],
            learning_rate=d["learning_rate"],
            rounds=[[_tree_from_dict(t) for t in trees] for trees in d["rounds"]],
        )
    raise ValueError(f"unknown model kind {kind!r}")


def save_model(model, path: str | Path) -> None:
    Path(path).write_text(json.dumps(model_to_dict(model)), encoding="utf-8")


def load_model(path: str | Path):
    return model_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

