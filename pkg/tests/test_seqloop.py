import numpy as np
import pytest

from seqforest.acquisition import nearest_candidate, select_ideal
from seqforest.dataset import partition
from seqforest.ensembles import ClassifierSpec, fit_model
from seqforest.errors import AggregationError, ConfigurationError
from seqforest.evaluation import metrics_from_matrix
from seqforest.seqloop import (
    IterationRecord,
    LoopConfig,
    RunResult,
    aggregate_runs,
    boxplot_stats,
    expected_record_count,
    run_baseline,
    run_iteration,
    run_pair,
    run_sequential,
    start_state,
    substream,
)
from seqforest.sobol import SobolStream, scale_to_bounds
from seqforest.synthetic import make_blobs

SMALL_RF = ClassifierSpec("random_forest", {"n_trees": 8})


@pytest.fixture(scope="module")
def data():
    return make_blobs(n_samples=120, separation=2.5, seed=3)


@pytest.fixture(scope="module")
def part(data):
    return partition(data, (10, 70, 40), substream(5, 0))


def cfg(**kw):
    base = dict(budget=20, synthetic_per_iteration=64, classifier=SMALL_RF, tune=False)
    base.update(kw)
    return LoopConfig(**base)


def test_substreams_are_independent_and_reproducible():
    a = substream(7, 2, 0).integers(0, 2**32, 5)
    assert np.array_equal(a, substream(7, 2, 0).integers(0, 2**32, 5))
    assert not np.array_equal(a, substream(7, 2, 1).integers(0, 2**32, 5))
    assert not np.array_equal(a, substream(8, 2, 0).integers(0, 2**32, 5))


def test_bookkeeping_invariants_each_iteration(part):
    config = cfg()
    state = start_state(part, config, seed=1)
    n0, c0 = len(part.initial), len(part.candidate)
    test_before = state.test.copy()
    seen = set()
    for i in range(1, config.budget + 1):
        run_iteration(state, evaluate_now=False)
        chosen = state.training[-1]
        assert chosen not in seen
        seen.add(chosen)
        assert chosen in set(part.candidate.tolist())
        assert len(state.training) == n0 + i
        assert len(state.candidate) == c0 - i
        assert state.iteration == i
        assert np.array_equal(state.test, test_before)
        assert set(state.training).isdisjoint(state.candidate)
        assert set(state.training).isdisjoint(state.test.tolist())


def test_iteration_matches_manual_acquisition(part):
    """One iteration equals: fit, score Sobol points, pick max LCS, match nearest candidate."""
    config = cfg(budget=1)
    state = start_state(part, config, seed=2)
    X, y = part.dataset.X, part.dataset.y
    model = fit_model(SMALL_RF, X[part.initial], y[part.initial], 4, substream(2, 2, 0))
    unit = SobolStream(8).draw(64)
    synth = scale_to_bounds(unit, state.bounds)
    i, lcs = select_ideal(model, synth)
    j, dist = nearest_candidate(synth[i], X[part.candidate], state.bounds)
    rec = run_iteration(state)
    assert rec.chosen == int(part.candidate[j])
    assert rec.lcs == lcs
    assert rec.distance == dist
    assert rec.train_size == len(part.initial) + 1


def test_sobol_stream_continues_across_iterations(part):
    state = start_state(part, cfg(), seed=0)
    run_iteration(state, False)
    run_iteration(state, False)
    assert state.stream.index == 2 * 64  # index of the last emitted point
    fresh = start_state(part, cfg(fresh_sobol_per_iteration=True), seed=0)
    run_iteration(fresh, False)
    run_iteration(fresh, False)
    assert fresh.stream.index == 64


def test_run_is_bit_reproducible(data):
    a = run_pair(data, (10, 70, 40), cfg(budget=10), seed=11, baseline_sizes=(50,))
    b = run_pair(data, (10, 70, 40), cfg(budget=10), seed=11, baseline_sizes=(50,))
    assert [r.to_dict() for r in a] == [r.to_dict() for r in b]
    c = run_pair(data, (10, 70, 40), cfg(budget=10), seed=12, baseline_sizes=(50,))
    assert a[0].acquired != c[0].acquired


def test_longer_budget_extends_shorter_run(part):
    short = run_sequential(part, cfg(budget=5), seed=4)
    long = run_sequential(part, cfg(budget=12), seed=4)
    assert long.acquired[:5] == short.acquired
    assert [r.__dict__ for r in long.records[:6]] == [r.__dict__ for r in short.records]


def test_zero_budget_equals_initial_only_baseline(part):
    seq = run_sequential(part, cfg(budget=0), seed=9)
    base = run_baseline(part, len(part.initial), cfg(budget=0), seed=9)
    assert len(seq.records) == 1 and seq.acquired == []
    assert seq.records[0].accuracy == base.records[0].accuracy
    assert np.array_equal(seq.confusion, base.confusion)


@pytest.mark.parametrize("budget,every", [(20, 1), (20, 5), (20, 7), (3, 10)])
def test_eval_every_record_schedule(part, budget, every):
    res = run_sequential(part, cfg(budget=budget, eval_every=every), seed=0)
    assert len(res.records) == expected_record_count(budget, every)
    its = [r.iteration for r in res.records]
    assert its[0] == 0 and its[-1] == budget
    assert all(i % every == 0 for i in its[1:-1])
    assert [r.train_size for r in res.records] == [len(part.initial) + i for i in its]


def test_budget_larger_than_pool_truncates(data, caplog):
    part = partition(data, (10, 6, 104), substream(0, 0))
    res = run_sequential(part, cfg(budget=10, eval_every=4), seed=0)
    assert res.truncated
    assert "exhausted" in caplog.text
    assert len(res.acquired) == 6
    assert res.records[-1].iteration == 6
    assert sorted(res.acquired) == sorted(part.candidate.tolist())


def test_baseline_draws_without_replacement(part):
    res = run_baseline(part, 50, cfg(), seed=3)
    assert len(res.acquired) == 40
    assert len(set(res.acquired)) == 40
    assert set(res.acquired) <= set(part.candidate.tolist())
    assert res.records[0].train_size == 50


def test_baseline_size_out_of_range(part):
    with pytest.raises(ConfigurationError):
        run_baseline(part, 5, cfg(), seed=0)
    with pytest.raises(ConfigurationError):
        run_baseline(part, 81, cfg(), seed=0)


def test_tuning_runs_once_and_is_recorded(part):
    grid = {"n_trees": [4, 8], "max_depth": [None, 2]}
    res = run_sequential(part, cfg(budget=3, tune=True, grid=grid, cv_folds=2), seed=0)
    assert res.hyperparameters["n_trees"] in (4, 8)
    assert res.hyperparameters["max_depth"] in (None, 2)


def test_result_dict_round_trip(part):
    res = run_sequential(part, cfg(budget=4), seed=0)
    back = RunResult.from_dict(res.to_dict())
    assert back.to_dict() == res.to_dict()


def _fake(records, cm):
    cm = np.asarray(cm)
    return RunResult(0, "sequential", "random_forest", {}, records, cm, metrics_from_matrix(cm))


def test_aggregate_hand_example():
    r1 = _fake(
        [IterationRecord(0, 10, 0.5, 0.4, 0.3, 0.2), IterationRecord(1, 11, 0.7, 0.6, 0.5, 0.4)],
        [[2, 0], [0, 2]],
    )
    r2 = _fake(
        [IterationRecord(0, 10, 0.7, 0.6, 0.5, 0.4), IterationRecord(1, 11, 0.9, 0.8, 0.7, 0.6)],
        [[1, 1], [0, 2]],
    )
    s = aggregate_runs([r1, r2])
    assert np.allclose(s.mean["accuracy"], [0.6, 0.8])
    assert np.allclose(s.std["accuracy"], [0.1, 0.1])  # population std
    assert np.allclose(s.confusion, [[1.5, 0.5], [0.0, 2.0]])
    # class 0 precision: 1.0 and 1.0; class 1 precision: 1.0 and 2/3
    assert np.allclose(s.classwise["precision"], [1.0, (1 + 2 / 3) / 2])
    assert s.final_mean["accuracy"] == pytest.approx(0.8)
    assert list(s.train_sizes) == [10, 11]


def test_aggregate_rejects_mismatch():
    a = _fake([IterationRecord(0, 10, 0.5, 0.5, 0.5, 0.5)], [[1, 0], [0, 1]])
    b = _fake([IterationRecord(0, 10, 0.5, 0.5, 0.5, 0.5), IterationRecord(1, 11, 0.5, 0.5, 0.5, 0.5)], [[1, 0], [0, 1]])
    c = _fake([IterationRecord(0, 10, 0.5, 0.5, 0.5, 0.5)], np.eye(3, dtype=int))
    with pytest.raises(AggregationError):
        aggregate_runs([a, b])
    with pytest.raises(AggregationError):
        aggregate_runs([a, c])
    with pytest.raises(AggregationError):
        aggregate_runs([])


def test_boxplot_stats():
    s = boxplot_stats([1, 2, 3, 4, 5])
    assert s == {"min": 1.0, "q1": 2.0, "median": 3.0, "q3": 4.0, "max": 5.0}


def test_loop_config_validation():
    for bad in ({"budget": -1}, {"eval_every": 0}, {"synthetic_per_iteration": 0}):
        with pytest.raises(ConfigurationError):
            LoopConfig(**bad)
