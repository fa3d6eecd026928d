"""Sequential acquire-and-retrain loop, the random-sampling baseline and run aggregation.

Random streams are derived from a single integer seed with
``SeedSequence(seed, spawn_key=...)``:

====================  ==============  =====================================
key                   consumer        notes
====================  ==============  =====================================
``(0,)``              split           shared by sequential and baseline runs
``(1,)``              grid search     folds and per-fold fit seeds
``(2, i)``            model fit       fit after ``i`` acquisitions
``(3,)``              baseline        random draw of extra training samples
====================  ==============  =====================================

Because the key of iteration ``i`` does not depend on the budget, changing
``budget`` never perturbs earlier iterations.
"""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field
from typing import Optional, Sequence

import numpy as np

from .acquisition import nearest_candidate, select_ideal
from .dataset import Dataset, FeatureBounds, Partition, feature_bounds, partition
from .ensembles import ClassifierSpec, fit_model
from .errors import AggregationError, ConfigurationError, PoolExhaustedError
from .evaluation import Metrics, evaluate, grid_search, metrics_from_matrix
from .sobol import SobolStream, scale_to_bounds

log = logging.getLogger(__name__)

METRIC_NAMES = ("accuracy", "precision", "recall", "f1")
CURVE_COLUMNS = ("iteration", "train_size", "accuracy", "precision", "recall", "f1", "lcs", "distance")


def substream(seed: int, *key: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(entropy=seed, spawn_key=key))


@dataclass(frozen=True)
class LoopConfig:
    budget: int = 250
    synthetic_per_iteration: int = 1000
    classifier: ClassifierSpec = field(default_factory=ClassifierSpec)
    fresh_sobol_per_iteration: bool = False
    eval_every: int = 1
    tune: bool = True
    cv_folds: int = 5
    grid: Optional[dict] = None

    def __post_init__(self):
        if self.budget < 0:
            raise ConfigurationError("budget must be >= 0")
        if self.synthetic_per_iteration < 1:
            raise ConfigurationError("synthetic_per_iteration must be >= 1")
        if self.eval_every < 1:
            raise ConfigurationError("eval_every must be >= 1")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["classifier"] = {"kind": self.classifier.kind, "params": dict(self.classifier.params)}
        return d


@dataclass
class IterationRecord:
    iteration: int
    train_size: int
    accuracy: float
    precision: float
    recall: float
    f1: float
    lcs: Optional[float] = None
    chosen: Optional[int] = None
    distance: Optional[float] = None


@dataclass
class RunResult:
    seed: int
    mode: str  # "sequential" | "baseline"
    classifier: str
    hyperparameters: dict
    records: list[IterationRecord]
    confusion: np.ndarray
    metrics: Metrics
    acquired: list[int] = field(default_factory=list)
    truncated: bool = False

    @property
    def final(self) -> IterationRecord:
        return self.records[-1]

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "mode": self.mode,
            "classifier": self.classifier,
            "hyperparameters": self.hyperparameters,
            "truncated": self.truncated,
            "acquired": list(self.acquired),
            "records": [asdict(r) for r in self.records],
            "confusion": self.confusion.tolist(),
            "metrics": self.metrics.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "RunResult":
        cm = np.asarray(d["confusion"], dtype=np.int64)
        return cls(
            seed=d["seed"],
            mode=d["mode"],
            classifier=d["classifier"],
            hyperparameters=d["hyperparameters"],
            records=[IterationRecord(**r) for r in d["records"]],
            confusion=cm,
            metrics=metrics_from_matrix(cm),
            acquired=list(d.get("acquired", [])),
            truncated=d.get("truncated", False),
        )


@dataclass
class LoopState:
    """Mutable bookkeeping of one sequential run."""

    dataset: Dataset
    training: list[int]
    candidate: list[int]
    test: np.ndarray
    bounds: FeatureBounds
    stream: SobolStream
    config: LoopConfig
    seed: int
    hyperparameters: dict
    model: object = None
    iteration: int = 0

    @property
    def n_classes(self) -> int:
        return self.dataset.schema.n_classes

    def fit(self) -> None:
        X, y = self.dataset.X, self.dataset.y
        idx = np.asarray(self.training)
        self.model = fit_model(
            self.config.classifier, X[idx], y[idx], self.n_classes,
            substream(self.seed, 2, self.iteration), overrides=self.hyperparameters,
        )

    def evaluate(self) -> tuple[np.ndarray, Metrics]:
        return evaluate(self.model, self.dataset.X[self.test], self.dataset.y[self.test], self.n_classes)


def _tune(dataset: Dataset, idx: np.ndarray, config: LoopConfig, seed: int) -> dict:
    if not config.tune:
        return {}
    if len(idx) < config.cv_folds:
        log.warning("skipping grid search: %d samples < %d folds", len(idx), config.cv_folds)
        return {}
    return grid_search(
        dataset.X[idx], dataset.y[idx], dataset.schema.n_classes, config.classifier,
        config.grid, config.cv_folds, substream(seed, 1),
    )


def start_state(part: Partition, config: LoopConfig, seed: int) -> LoopState:
    """Tune once on the initial set, freeze bounds, and fit the iteration-0 model."""
    dataset = part.dataset
    if len(part.initial) == 0:
        raise ConfigurationError("the initial training set is empty")
    pool = np.concatenate([part.initial, part.candidate])
    state = LoopState(
        dataset=dataset,
        training=[int(i) for i in part.initial],
        candidate=[int(i) for i in part.candidate],
        test=np.asarray(part.test),
        bounds=feature_bounds(dataset.X[pool]),
        stream=SobolStream(dataset.schema.n_features),
        config=config,
        seed=seed,
        hyperparameters=_tune(dataset, part.initial, config, seed),
    )
    state.fit()
    return state


def _record(state: LoopState, lcs=None, chosen=None, distance=None) -> IterationRecord:
    _, m = state.evaluate()
    return IterationRecord(
        iteration=state.iteration, train_size=len(state.training), **m.headline(),
        lcs=lcs, chosen=chosen, distance=distance,
    )


def run_iteration(state: LoopState, evaluate_now: bool = True) -> Optional[IterationRecord]:
    """Acquire one candidate, move it into the training set and refit.

    Returns an :class:`IterationRecord` when ``evaluate_now`` is set.
    """
    if not state.candidate:
        raise PoolExhaustedError("candidate pool is empty")
    cfg = state.config
    if cfg.fresh_sobol_per_iteration:
        state.stream.reset()
    unit = state.stream.draw(cfg.synthetic_per_iteration)
    synthetic = scale_to_bounds(unit, state.bounds)
    i_ideal, lcs = select_ideal(state.model, synthetic)
    X = state.dataset.X
    j, dist = nearest_candidate(synthetic[i_ideal], X[state.candidate], state.bounds)
    chosen = state.candidate.pop(j)
    state.training.append(chosen)
    state.iteration += 1
    state.fit()
    if evaluate_now:
        return _record(state, lcs, chosen, dist)
    return None


def _final_result(state: LoopState, mode: str, records, acquired, truncated) -> RunResult:
    cm, m = state.evaluate()
    return RunResult(
        seed=state.seed,
        mode=mode,
        classifier=state.config.classifier.kind,
        hyperparameters={**state.config.classifier.resolve(state.hyperparameters).to_dict()},
        records=records,
        confusion=cm,
        metrics=m,
        acquired=acquired,
        truncated=truncated,
    )


def run_sequential(part: Partition, config: LoopConfig, seed: int) -> RunResult:
    """Full sequential run: iteration-0 evaluation followed by ``config.budget`` acquisitions.

    If the candidate pool runs dry before the budget is spent the result is
    truncated at that point and flagged.
    """
    state = start_state(part, config, seed)
    records = [_record(state)]
    acquired: list[int] = []
    truncated = False
    for i in range(1, config.budget + 1):
        if not state.candidate:
            truncated = True
            log.warning("seed %d: candidate pool exhausted after %d iterations", seed, i - 1)
            break
        # always evaluate the last iteration, including one cut short by an empty pool
        evaluate_now = i % config.eval_every == 0 or i == config.budget or len(state.candidate) == 1
        rec = run_iteration(state, evaluate_now)
        acquired.append(state.training[-1])
        if rec is not None:
            records.append(rec)
    return _final_result(state, "sequential", records, acquired, truncated)


def run_baseline(part: Partition, n_train: int, config: LoopConfig, seed: int) -> RunResult:
    """Train once on the initial set plus random candidates, ``n_train`` samples in total."""
    n_init = len(part.initial)
    if not n_init <= n_train <= n_init + len(part.candidate):
        raise ConfigurationError(
            f"n_train={n_train} must lie in [{n_init}, {n_init + len(part.candidate)}]"
        )
    extra = substream(seed, 3).choice(part.candidate, size=n_train - n_init, replace=False)
    train = np.concatenate([part.initial, extra]).astype(np.intp)
    dataset = part.dataset
    pool = np.concatenate([part.initial, part.candidate])
    state = LoopState(
        dataset=dataset,
        training=[int(i) for i in train],
        candidate=[],
        test=np.asarray(part.test),
        bounds=feature_bounds(dataset.X[pool]),
        stream=SobolStream(dataset.schema.n_features),
        config=config,
        seed=seed,
        hyperparameters=_tune(dataset, train, config, seed),
    )
    state.fit()
    records = [_record(state)]
    return _final_result(state, "baseline", records, [int(i) for i in extra], False)


def run_pair(
    dataset: Dataset,
    sizes: Sequence[int],
    config: LoopConfig,
    seed: int,
    mode: str = "both",
    baseline_sizes: Sequence[int] = (275,),
) -> list[RunResult]:
    """Split with the seed's split stream, then run the sequential loop and/or baselines."""
    part = partition(dataset, sizes, substream(seed, 0))
    out = []
    if mode in ("sequential", "both"):
        out.append(run_sequential(part, config, seed))
    if mode in ("baseline", "both"):
        for n in baseline_sizes:
            out.append(run_baseline(part, n, config, seed))
    return out


@dataclass
class Summary:
    n_runs: int
    iterations: np.ndarray
    train_sizes: np.ndarray
    mean: dict[str, np.ndarray]
    std: dict[str, np.ndarray]
    confusion: np.ndarray
    classwise: dict[str, np.ndarray]
    boxplot: dict[str, dict[str, float]]
    final_mean: dict[str, float]

    def to_dict(self) -> dict:
        return {
            "n_runs": self.n_runs,
            "iterations": self.iterations.tolist(),
            "train_sizes": self.train_sizes.tolist(),
            "mean": {k: v.tolist() for k, v in self.mean.items()},
            "std": {k: v.tolist() for k, v in self.std.items()},
            "confusion": self.confusion.tolist(),
            "classwise": {k: v.tolist() for k, v in self.classwise.items()},
            "boxplot": self.boxplot,
            "final_mean": self.final_mean,
        }


def boxplot_stats(values: Sequence[float]) -> dict[str, float]:
    v = np.asarray(values, dtype=float)
    q1, med, q3 = np.percentile(v, [25, 50, 75])
    return {"min": float(v.min()), "q1": float(q1), "median": float(med), "q3": float(q3), "max": float(v.max())}


def aggregate_runs(results: Sequence[RunResult]) -> Summary:
    """Per-iteration mean/std curves, mean confusion matrix, class-wise means and boxplot stats."""
    if not results:
        raise AggregationError("no runs to aggregate")
    iters = [tuple(r.iteration for r in res.records) for res in results]
    if len(set(iters)) != 1:
        raise AggregationError("runs have different iteration schedules")
    shapes = {res.confusion.shape for res in results}
    if len(shapes) != 1:
        raise AggregationError(f"confusion matrices differ in shape: {sorted(shapes)}")

    curves = {m: np.array([[getattr(r, m) for r in res.records] for res in results]) for m in METRIC_NAMES}
    sizes = np.array([[r.train_size for r in res.records] for res in results])
    final = {m: curves[m][:, -1] for m in METRIC_NAMES}
    return Summary(
        n_runs=len(results),
        iterations=np.array(iters[0]),
        train_sizes=np.round(sizes.mean(axis=0)).astype(int),
        mean={m: c.mean(axis=0) for m, c in curves.items()},
        std={m: c.std(axis=0) for m, c in curves.items()},
        confusion=np.mean([res.confusion for res in results], axis=0),
        classwise={
            "precision": np.mean([res.metrics.precision for res in results], axis=0),
            "recall": np.mean([res.metrics.recall for res in results], axis=0),
            "f1": np.mean([res.metrics.f1 for res in results], axis=0),
        },
        boxplot={m: boxplot_stats(v) for m, v in final.items()},
        final_mean={m: float(v.mean()) for m, v in final.items()},
    )


def expected_record_count(budget: int, eval_every: int) -> int:
    return math.ceil(budget / eval_every) + 1
