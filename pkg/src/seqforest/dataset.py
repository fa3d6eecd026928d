"""Tabular dataset loading, random partitioning and min-max normalization."""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigurationError, DomainError, LabelError, ParseError, SchemaError

MELT_POOL_FEATURES = (
    "power",
    "velocity",
    "density",
    "specific_heat",
    "thermal_conductivity",
    "melting_temperature",
    "beam_diameter",
    "absorption_coefficient",
)
MELT_POOL_CLASSES = ("lack_of_fusion", "balling", "desirable", "keyhole")


@dataclass(frozen=True)
class FeatureSchema:
    feature_names: tuple[str, ...] = MELT_POOL_FEATURES
    class_names: tuple[str, ...] = MELT_POOL_CLASSES
    label_column: str = "melt_pool_class"

    def __post_init__(self):
        object.__setattr__(self, "feature_names", tuple(self.feature_names))
        object.__setattr__(self, "class_names", tuple(self.class_names))
        if len(set(self.feature_names)) != len(self.feature_names):
            raise SchemaError("feature names must be unique")
        if len(set(self.class_names)) != len(self.class_names):
            raise SchemaError("class names must be unique")
        if not self.class_names:
            raise SchemaError("schema needs at least one class")

    @property
    def n_features(self) -> int:
        return len(self.feature_names)

    @property
    def n_classes(self) -> int:
        return len(self.class_names)

    def to_dict(self) -> dict:
        return {
            "feature_names": list(self.feature_names),
            "class_names": list(self.class_names),
            "label_column": self.label_column,
        }

    @classmethod
    def from_dict(cls, d: dict) -> "FeatureSchema":
        return cls(
            feature_names=tuple(d.get("feature_names", MELT_POOL_FEATURES)),
            class_names=tuple(d.get("class_names", MELT_POOL_CLASSES)),
            label_column=d.get("label_column", "melt_pool_class"),
        )


MELT_POOL_SCHEMA = FeatureSchema()


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix ``X`` (raw units) and integer labels ``y`` indexed by ``schema.class_names``."""

    X: np.ndarray
    y: np.ndarray
    schema: FeatureSchema = MELT_POOL_SCHEMA

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float).reshape(-1, self.schema.n_features)
        y = np.asarray(self.y, dtype=np.intp).reshape(-1)
        if X.shape[0] != y.shape[0]:
            raise DomainError("X and y have different lengths")
        if not np.all(np.isfinite(X)):
            raise DomainError("feature values must be finite")
        if y.size and (y.min() < 0 or y.max() >= self.schema.n_classes):
            raise DomainError("label index out of range")
        X.setflags(write=False)
        y.setflags(write=False)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)

    def __len__(self) -> int:
        return self.X.shape[0]

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.y, minlength=self.schema.n_classes)


def load_dataset(path: str | Path, schema: FeatureSchema = MELT_POOL_SCHEMA) -> Dataset:
    """Read a CSV with a header row into a :class:`Dataset`.

    Columns are looked up by name, so extra columns and column order do not
    matter. Row numbers in error messages are 1-based file lines (header = 1).
    """
    label_index = {name: i for i, name in enumerate(schema.class_names)}
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise SchemaError(f"{path}: file is empty, expected a header row") from None
        columns = {}
        for name in (*schema.feature_names, schema.label_column):
            if name not in header:
                raise SchemaError(f"{path}: missing column {name!r}")
            columns[name] = header.index(name)

        rows, labels = [], []
        for lineno, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            values = []
            for name in schema.feature_names:
                cell = row[columns[name]].strip() if columns[name] < len(row) else ""
                try:
                    v = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}: row {lineno}: column {name!r} is not numeric: {cell!r}"
                    ) from None
                if not np.isfinite(v):
                    raise ParseError(f"{path}: row {lineno}: column {name!r} is not finite")
                values.append(v)
            raw_label = row[columns[schema.label_column]].strip() if columns[schema.label_column] < len(row) else ""
            if raw_label not in label_index:
                raise LabelError(f"{path}: row {lineno}: unknown label {raw_label!r}")
            rows.append(values)
            labels.append(label_index[raw_label])

    X = np.array(rows, dtype=float).reshape(-1, schema.n_features)
    return Dataset(X, np.array(labels, dtype=np.intp), schema)


def save_dataset(dataset: Dataset, path: str | Path) -> None:
    schema = dataset.schema
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([*schema.feature_names, schema.label_column])
        for x, label in zip(dataset.X, dataset.y):
            writer.writerow([repr(float(v)) for v in x] + [schema.class_names[label]])


@dataclass(frozen=True, eq=False)
class Partition:
    """Disjoint index sets into ``dataset``: initial training set, candidate pool and test set."""

    dataset: Dataset
    initial: np.ndarray
    candidate: np.ndarray
    test: np.ndarray

    def __post_init__(self):
        for name in ("initial", "candidate", "test"):
            arr = np.asarray(getattr(self, name), dtype=np.intp)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        check_partition(self)


def check_partition(p: Partition) -> None:
    allidx = np.concatenate([p.initial, p.candidate, p.test])
    n = len(p.dataset)
    if allidx.size != n or np.unique(allidx).size != n:
        raise ConfigurationError("partition index sets must be disjoint and cover the dataset")


def partition(
    dataset: Dataset, sizes: Sequence[int], rng: np.random.Generator
) -> Partition:
    """Uniformly random split into ``(n_initial, n_candidate, n_test)`` samples."""
    n_initial, n_candidate, n_test = (int(s) for s in sizes)
    if min(n_initial, n_candidate, n_test) < 0:
        raise ConfigurationError(f"split sizes must be non-negative, got {tuple(sizes)}")
    if n_initial + n_candidate + n_test != len(dataset):
        raise ConfigurationError(
            f"split sizes {tuple(sizes)} sum to {n_initial + n_candidate + n_test}, "
            f"dataset has {len(dataset)} samples"
        )
    perm = rng.permutation(len(dataset))
    return Partition(
        dataset,
        initial=perm[:n_initial],
        candidate=perm[n_initial : n_initial + n_candidate],
        test=perm[n_initial + n_candidate :],
    )


@dataclass(frozen=True, eq=False)
class FeatureBounds:
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float).copy()
        upper = np.asarray(self.upper, dtype=float).copy()
        if lower.shape != upper.shape:
            raise DomainError("lower and upper bounds differ in shape")
        if np.any(lower > upper):
            raise DomainError("bounds require min <= max for every feature")
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    def to_list(self) -> list[list[float]]:
        return [[float(a), float(b)] for a, b in zip(self.lower, self.upper)]


def feature_bounds(X: np.ndarray) -> FeatureBounds:
    """Exact per-feature min and max over the rows of ``X``."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[0] == 0:
        raise DomainError("cannot compute bounds of an empty sample set")
    return FeatureBounds(X.min(axis=0), X.max(axis=0))


def normalize(x: np.ndarray, bounds: FeatureBounds) -> np.ndarray:
    """Min-max scale ``x`` (a vector or a 2-D batch) into the unit cube.

    Out-of-bounds coordinates are clamped into [0, 1]; constant features
    (min == max) map to 0.5.
    """
    x = np.asarray(x, dtype=float)
    span = bounds.upper - bounds.lower
    degenerate = span == 0
    safe = np.where(degenerate, 1.0, span)
    out = np.clip((x - bounds.lower) / safe, 0.0, 1.0)
    return np.where(degenerate, 0.5, out)
