"""Command-line interface: ``seqforest {run, report, sobol-dump, tune}``."""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .config import MODES, ExperimentConfig, load_config
from .dataset import Dataset, partition
from .errors import AggregationError, ConfigurationError, DatasetError
from .evaluation import grid_search
from .report import atomic_write, load_runs, summarize, write_report, write_run
from .seqloop import run_pair, substream
from .sobol import SobolCapacityError, SobolStream

log = logging.getLogger("seqforest")


def _apply_overrides(cfg: ExperimentConfig, args) -> ExperimentConfig:
    changes = {}
    if getattr(args, "out", None) is not None:
        changes["out"] = args.out
    if getattr(args, "seed", None) is not None:
        changes["seed"] = args.seed
    if getattr(args, "runs", None) is not None:
        changes["runs"] = args.runs
    if getattr(args, "mode", None) is not None:
        changes["mode"] = args.mode
    return replace(cfg, **changes) if changes else cfg


def _check_sizes(cfg: ExperimentConfig, dataset: Dataset) -> None:
    n_init, n_cand, n_test = cfg.splits
    if n_init + n_cand + n_test != len(dataset):
        raise ConfigurationError(
            f"config.splits: {list(cfg.splits)} sum to {n_init + n_cand + n_test}, dataset has {len(dataset)} rows"
        )
    if cfg.mode in ("baseline", "both"):
        for n in cfg.baseline_sizes:
            if not n_init <= n <= n_init + n_cand:
                raise ConfigurationError(
                    f"config.baseline_sizes: {n} outside [{n_init}, {n_init + n_cand}]"
                )


def _result_digest(cfg: ExperimentConfig) -> str:
    # output location and worker count do not change results
    return replace(cfg, out="", workers=1).digest()


def _one_run(cfg: ExperimentConfig, dataset: Dataset, seed: int):
    return run_pair(dataset, cfg.splits, cfg.loop_config(), seed, cfg.mode, cfg.baseline_sizes)


def cmd_run(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    dataset = cfg.load_data()
    _check_sizes(cfg, dataset)
    digest = _result_digest(cfg)
    out = Path(cfg.out) if Path(cfg.out).is_absolute() or args.out else cfg.base_dir / cfg.out
    out.mkdir(parents=True, exist_ok=True)

    seeds = [cfg.seed + r for r in range(cfg.runs)]
    log.info("config %s: %d run(s), mode=%s, classifier=%s", digest, len(seeds), cfg.mode, cfg.classifier.kind)
    results = []
    if cfg.workers > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            futures = [pool.submit(_one_run, cfg, dataset, s) for s in seeds]
            for s, fut in zip(seeds, futures):
                for res in fut.result():
                    write_run(out, res, digest)
                    results.append(res)
                log.info("seed %d done", s)
    else:
        for s in seeds:
            for res in _one_run(cfg, dataset, s):
                write_run(out, res, digest)
                results.append(res)
            log.info("seed %d done", s)

    summary = {
        "config_hash": digest,
        "config": replace(cfg, out="", workers=1).to_dict(),
        "seeds": seeds,
        "groups": {label: s.to_dict() for label, s in summarize(results).items()},
    }
    atomic_write(out / f"summary_{digest}.json", json.dumps(summary, indent=1, sort_keys=True) + "\n")
    for label, s in summary["groups"].items():
        print(f"{label}: mean final accuracy {s['final_mean']['accuracy']:.4f} over {s['n_runs']} run(s)")
    return 0


def cmd_report(args) -> int:
    directory = Path(args.out)
    results = load_runs(directory) if directory.is_dir() else []
    if not results:
        print(f"error: no run results in {directory}", file=sys.stderr)
        return 1
    class_names = None
    if args.config:
        class_names = load_config(args.config).schema.class_names
    rep = write_report(directory, results, class_names)
    print((rep / "comparison.csv").read_text(), end="")
    return 0


def cmd_sobol_dump(args) -> int:
    try:
        stream = SobolStream(args.dimension)
    except SobolCapacityError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    if args.count < 0:
        print("error: count must be >= 0", file=sys.stderr)
        return 2
    for row in stream.draw(args.count):
        sys.stdout.write(",".join(repr(float(v)) for v in row) + "\n")
    return 0


def cmd_tune(args) -> int:
    cfg = _apply_overrides(load_config(args.config), args)
    dataset = cfg.load_data()
    _check_sizes(cfg, dataset)
    part = partition(dataset, cfg.splits, substream(cfg.seed, 0))
    idx = {
        "initial": part.initial,
        "pool": np.concatenate([part.initial, part.candidate]),
        "all": np.arange(len(dataset)),
    }[args.subset]
    lc = cfg.loop_config()
    best, scores = grid_search(
        dataset.X[idx], dataset.y[idx], dataset.schema.n_classes, cfg.classifier,
        cfg.grid, lc.cv_folds, substream(cfg.seed, 1), return_scores=True,
    )
    print(json.dumps({"best": best, "scores": [{"params": c, "cv_accuracy": s} for c, s in scores]}, indent=1))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="seqforest", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="execute sequential and/or baseline runs from a config file")
    p.add_argument("--config", required=True)
    p.add_argument("--out")
    p.add_argument("--seed", type=int)
    p.add_argument("--runs", type=int)
    p.add_argument("--mode", choices=MODES)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="aggregate run results in an output directory")
    p.add_argument("--out", required=True)
    p.add_argument("--config", help="optional config, used for class names")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("sobol-dump", help="print the first points of a Sobol stream as CSV rows")
    p.add_argument("dimension", type=int)
    p.add_argument("count", type=int)
    p.set_defaults(func=cmd_sobol_dump)

    p = sub.add_parser("tune", help="grid search with k-fold CV on one split of the configured data")
    p.add_argument("--config", required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--subset", choices=("initial", "pool", "all"), default="initial")
    p.set_defaults(func=cmd_tune)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if args.verbose else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
    )
    try:
        return args.func(args)
    except (ConfigurationError, DatasetError, AggregationError) as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    except FileNotFoundError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
