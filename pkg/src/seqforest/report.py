"""Run-result files and the aggregate tables built from them."""

from __future__ import annotations

import csv
import io
import json
import os
import tempfile
from collections import defaultdict
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ensembles import SHORT_NAMES
from .errors import AggregationError
from .seqloop import CURVE_COLUMNS, METRIC_NAMES, RunResult, Summary, aggregate_runs


def atomic_write(path: Path, text: str) -> None:
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        os.unlink(tmp)
        raise


def _fmt(v) -> str:
    return "" if v is None else repr(float(v)) if isinstance(v, float) else str(v)


def _csv(header: Sequence[str], rows: Iterable[Sequence]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for row in rows:
        w.writerow([_fmt(v) for v in row])
    return buf.getvalue()


def curve_csv(result: RunResult) -> str:
    return _csv(
        CURVE_COLUMNS,
        ([getattr(r, c) for c in CURVE_COLUMNS] for r in result.records),
    )


def run_filename(result: RunResult, digest: str) -> str:
    n = result.records[-1].train_size
    return f"run_{result.mode}_{SHORT_NAMES[result.classifier]}_n{n}_seed{result.seed}_{digest}.json"


def curve_filename(result: RunResult, digest: str) -> str:
    return f"curve_{SHORT_NAMES[result.classifier]}_seed{result.seed}_{digest}.csv"


def write_run(out: Path, result: RunResult, digest: str) -> None:
    doc = {"config_hash": digest, **result.to_dict()}
    atomic_write(out / run_filename(result, digest), json.dumps(doc, indent=1) + "\n")
    if result.mode == "sequential":
        atomic_write(out / curve_filename(result, digest), curve_csv(result))


def load_runs(directory: Path) -> list[RunResult]:
    return [
        RunResult.from_dict(json.loads(p.read_text(encoding="utf-8")))
        for p in sorted(Path(directory).glob("run_*.json"))
    ]


def group_label(result: RunResult) -> str:
    short = SHORT_NAMES[result.classifier]
    if result.mode == "sequential":
        return f"SL-{short}+"
    return f"Traditional {short} (n={result.records[-1].train_size})"


def group_runs(results: Sequence[RunResult]) -> dict[str, list[RunResult]]:
    groups: dict[str, list[RunResult]] = defaultdict(list)
    for r in sorted(results, key=lambda r: (r.mode, r.classifier, r.records[-1].train_size, r.seed)):
        groups[group_label(r)].append(r)
    return dict(groups)


def summarize(results: Sequence[RunResult]) -> dict[str, Summary]:
    out = {}
    for label, runs in group_runs(results).items():
        try:
            out[label] = aggregate_runs(runs)
        except AggregationError as e:
            raise AggregationError(f"{label}: {e}") from None
    return out


def comparison_rows(results: Sequence[RunResult], weighted: bool = False) -> list[list]:
    """Rows pairing each sequential family with the baseline of equal training size."""
    groups = group_runs(results)
    keys = ("weighted_precision", "weighted_recall", "weighted_f1") if weighted else ("precision", "recall", "f1")

    def means(runs):
        acc = np.mean([r.metrics.accuracy for r in runs])
        d = [r.metrics.to_dict() for r in runs]
        return [float(acc)] + [float(np.mean([x[k] for x in d])) for k in keys]

    rows, used = [], set()
    for short in SHORT_NAMES.values():
        seq = groups.get(f"SL-{short}+")
        if seq:
            rows.append([f"SL-{short}+"] + means(seq))
            used.add(f"SL-{short}+")
            base = f"Traditional {short} (n={seq[0].records[-1].train_size})"
            if base in groups:
                rows.append([f"Traditional {short}"] + means(groups[base]))
                used.add(base)
        # baselines without an equal-budget sequential run keep their size in the label
        rows.extend([label] + means(runs) for label, runs in groups.items()
                    if label.startswith(f"Traditional {short} ") and label not in used)
    return rows


def sweep_rows(results: Sequence[RunResult]) -> list[list]:
    """Mean accuracy/precision/recall/F1 versus training-set size, sequential and random."""
    rows = []
    for label, runs in group_runs(results).items():
        if runs[0].mode == "sequential":
            s = aggregate_runs(runs)
            for size, *vals in zip(s.train_sizes, *(s.mean[m] for m in METRIC_NAMES)):
                rows.append([label, int(size)] + [float(v) for v in vals])
        else:
            n = runs[0].records[-1].train_size
            rows.append([label, n] + [float(np.mean([getattr(r.final, m) for r in runs])) for m in METRIC_NAMES])
    return rows


def write_report(out_dir: Path, results: Sequence[RunResult], class_names: Sequence[str] | None = None) -> Path:
    """Write aggregate CSV tables under ``out_dir/report`` and return that directory."""
    summaries = summarize(results)
    rep = Path(out_dir) / "report"
    rep.mkdir(parents=True, exist_ok=True)
    for label, s in summaries.items():
        slug = label.replace(" ", "_").replace("(", "").replace(")", "").replace("=", "")
        C = s.confusion.shape[0]
        names = list(class_names) if class_names and len(class_names) == C else [str(i) for i in range(C)]
        header = ["iteration", "train_size"] + [f"{m}_{stat}" for m in METRIC_NAMES for stat in ("mean", "std")]
        atomic_write(
            rep / f"curves_{slug}.csv",
            _csv(header, (
                [int(it), int(n)] + [float(v) for m in METRIC_NAMES for v in (s.mean[m][i], s.std[m][i])]
                for i, (it, n) in enumerate(zip(s.iterations, s.train_sizes))
            )),
        )
        atomic_write(
            rep / f"confusion_{slug}.csv",
            _csv(["true\\pred"] + names, ([names[i]] + [float(v) for v in row] for i, row in enumerate(s.confusion))),
        )
        atomic_write(
            rep / f"classwise_{slug}.csv",
            _csv(["class", "precision", "recall", "f1"], (
                [names[i], float(s.classwise["precision"][i]), float(s.classwise["recall"][i]), float(s.classwise["f1"][i])]
                for i in range(C)
            )),
        )
        atomic_write(
            rep / f"boxplot_{slug}.csv",
            _csv(["metric", "min", "q1", "median", "q3", "max"], (
                [m] + [s.boxplot[m][k] for k in ("min", "q1", "median", "q3", "max")] for m in METRIC_NAMES
            )),
        )
    atomic_write(rep / "comparison.csv", _csv(["model", "accuracy", "precision", "recall", "f1"], comparison_rows(results)))
    atomic_write(
        rep / "comparison_weighted.csv",
        _csv(["model", "accuracy", "precision", "recall", "f1"], comparison_rows(results, weighted=True)),
    )
    atomic_write(
        rep / "sample_size_sweep.csv",
        _csv(["model", "train_size", "accuracy", "precision", "recall", "f1"], sweep_rows(results)),
    )
    return rep
