"""Experiment configuration: a JSON document with the fields below.

.. code-block:: json

    {
      "dataset": "meltpool.csv",
      "synthetic": null,
      "schema": null,
      "splits": [25, 460, 200],
      "classifier": {"kind": "random_forest", "params": {}},
      "grid": null,
      "loop": {"budget": 250, "synthetic_per_iteration": 1000,
               "fresh_sobol_per_iteration": false, "eval_every": 1,
               "tune": true, "cv_folds": 5},
      "baseline_sizes": [275],
      "runs": 30,
      "seed": 0,
      "mode": "both",
      "out": "results",
      "workers": 1
    }

Exactly one of ``dataset`` (CSV path, relative to the config file) and
``synthetic`` (keyword arguments for :func:`seqforest.synthetic.make_blobs`)
must be set. ``schema`` defaults to the melt-pool schema, ``grid`` to the
built-in grid of the classifier family.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .dataset import MELT_POOL_SCHEMA, Dataset, FeatureSchema, load_dataset
from .ensembles import ClassifierSpec
from .errors import ConfigurationError
from .seqloop import LoopConfig
from .synthetic import make_blobs

MODES = ("sequential", "baseline", "both")
_LOOP_FIELDS = ("budget", "synthetic_per_iteration", "fresh_sobol_per_iteration", "eval_every", "tune", "cv_folds")
_TOP_FIELDS = {
    "dataset", "synthetic", "schema", "splits", "classifier", "grid", "loop",
    "baseline_sizes", "runs", "seed", "mode", "out", "workers",
}


@dataclass
class ExperimentConfig:
    dataset: Optional[str] = None
    synthetic: Optional[dict] = None
    schema: FeatureSchema = MELT_POOL_SCHEMA
    splits: tuple[int, int, int] = (25, 460, 200)
    classifier: ClassifierSpec = field(default_factory=ClassifierSpec)
    grid: Optional[dict] = None
    loop: dict = field(default_factory=dict)
    baseline_sizes: tuple[int, ...] = (275,)
    runs: int = 30
    seed: int = 0
    mode: str = "both"
    out: str = "results"
    workers: int = 1
    base_dir: Path = field(default=Path("."), compare=False, repr=False)

    def __post_init__(self):
        if (self.dataset is None) == (self.synthetic is None):
            raise ConfigurationError("config: set exactly one of 'dataset' or 'synthetic'")
        if len(self.splits) != 3 or min(self.splits) < 0:
            raise ConfigurationError("config.splits: expected three non-negative sizes")
        if self.runs < 1:
            raise ConfigurationError("config.runs: must be >= 1")
        if self.mode not in MODES:
            raise ConfigurationError(f"config.mode: expected one of {MODES}, got {self.mode!r}")
        if self.workers < 1:
            raise ConfigurationError("config.workers: must be >= 1")
        unknown = set(self.loop) - set(_LOOP_FIELDS)
        if unknown:
            raise ConfigurationError(f"config.loop: unknown field(s) {sorted(unknown)}")
        self.loop_config()  # validate eagerly

    def loop_config(self) -> LoopConfig:
        try:
            return LoopConfig(classifier=self.classifier, grid=self.grid, **self.loop)
        except ConfigurationError as e:
            raise ConfigurationError(f"config.loop: {e}") from None

    def dataset_path(self) -> Optional[Path]:
        if self.dataset is None:
            return None
        p = Path(self.dataset)
        return p if p.is_absolute() else self.base_dir / p

    def load_data(self) -> Dataset:
        if self.synthetic is not None:
            return make_blobs(schema=self.schema, **self.synthetic)
        return load_dataset(self.dataset_path(), self.schema)

    def to_dict(self) -> dict:
        return {
            "dataset": self.dataset,
            "synthetic": self.synthetic,
            "schema": self.schema.to_dict(),
            "splits": list(self.splits),
            "classifier": {"kind": self.classifier.kind, "params": dict(self.classifier.params)},
            "grid": self.grid,
            "loop": dict(self.loop),
            "baseline_sizes": list(self.baseline_sizes),
            "runs": self.runs,
            "seed": self.seed,
            "mode": self.mode,
            "out": self.out,
            "workers": self.workers,
        }

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path = Path(".")) -> "ExperimentConfig":
        unknown = set(d) - _TOP_FIELDS
        if unknown:
            raise ConfigurationError(f"config: unknown field(s) {sorted(unknown)}")
        clf = d.get("classifier") or {}
        if isinstance(clf, str):
            clf = {"kind": clf}
        try:
            spec = ClassifierSpec(clf.get("kind", "random_forest"), dict(clf.get("params") or {}))
        except (ConfigurationError, TypeError) as e:
            raise ConfigurationError(f"config.classifier: {e}") from None
        try:
            return cls(
                dataset=d.get("dataset"),
                synthetic=d.get("synthetic"),
                schema=FeatureSchema.from_dict(d["schema"]) if d.get("schema") else MELT_POOL_SCHEMA,
                splits=tuple(int(v) for v in d.get("splits", (25, 460, 200))),
                classifier=spec,
                grid=d.get("grid"),
                loop=dict(d.get("loop") or {}),
                baseline_sizes=tuple(int(v) for v in d.get("baseline_sizes", (275,))),
                runs=int(d.get("runs", 30)),
                seed=int(d.get("seed", 0)),
                mode=d.get("mode", "both"),
                out=d.get("out", "results"),
                workers=int(d.get("workers", 1)),
                base_dir=base_dir,
            )
        except (TypeError, ValueError) as e:
            if isinstance(e, ConfigurationError):
                raise
            raise ConfigurationError(f"config: {e}") from None

    def digest(self) -> str:
        """Short stable hash of the canonical JSON form."""
        canon = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:12]


def load_config(path: str | Path) -> ExperimentConfig:
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except json.JSONDecodeError as e:
        raise ConfigurationError(f"{path}: invalid JSON: {e}") from None
    if not isinstance(raw, dict):
        raise ConfigurationError(f"{path}: top level must be an object")
    return ExperimentConfig.from_dict(raw, base_dir=path.parent)


def save_config(cfg: ExperimentConfig, path: str | Path) -> None:
    Path(path).write_text(json.dumps(cfg.to_dict(), indent=2) + "\n", encoding="utf-8")
