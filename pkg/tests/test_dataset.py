import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from seqforest.dataset import (
    MELT_POOL_SCHEMA,
    Dataset,
    FeatureBounds,
    FeatureSchema,
    feature_bounds,
    load_dataset,
    normalize,
    partition,
    save_dataset,
)
from seqforest.errors import ConfigurationError, DomainError, LabelError, ParseError, SchemaError
from seqforest.synthetic import MELT_POOL_PROPORTIONS, class_sizes, make_blobs

HEADER = ",".join([*MELT_POOL_SCHEMA.feature_names, "melt_pool_class"])


def write(tmp_path, text, name="data.csv"):
    p = tmp_path / name
    p.write_text(text, encoding="utf-8")
    return p


def test_roundtrip_685(tmp_path):
    ds = make_blobs(seed=1)
    path = tmp_path / "blobs.csv"
    save_dataset(ds, path)
    back = load_dataset(path)
    assert len(back) == 685
    np.testing.assert_array_equal(back.X, ds.X)
    np.testing.assert_array_equal(back.y, ds.y)


def test_header_only_is_empty(tmp_path):
    ds = load_dataset(write(tmp_path, HEADER + "\n"))
    assert len(ds) == 0 and ds.X.shape == (0, 8)


def test_unknown_label(tmp_path):
    row = ",".join(["1"] * 8 + ["porosity"])
    with pytest.raises(LabelError, match="row 3"):
        load_dataset(write(tmp_path, HEADER + "\n" + ",".join(["1"] * 8 + ["keyhole"]) + "\n" + row + "\n"))


def test_missing_column(tmp_path):
    header = HEADER.replace("velocity,", "")
    with pytest.raises(SchemaError, match="velocity"):
        load_dataset(write(tmp_path, header + "\n"))


def test_non_numeric_cell(tmp_path):
    row = ",".join(["1", "fast"] + ["1"] * 6 + ["balling"])
    with pytest.raises(ParseError, match="row 2.*velocity"):
        load_dataset(write(tmp_path, HEADER + "\n" + row + "\n"))


def test_columns_by_name_any_order(tmp_path):
    names = [*MELT_POOL_SCHEMA.feature_names, "melt_pool_class"]
    order = names[::-1]
    values = dict(zip(names, [str(i) for i in range(8)] + ["desirable"]))
    text = ",".join(order) + ",extra\n" + ",".join(values[n] for n in order) + ",junk\n"
    ds = load_dataset(write(tmp_path, text))
    assert ds.X.tolist() == [[float(i) for i in range(8)]]
    assert ds.y.tolist() == [2]


def test_custom_schema(tmp_path):
    schema = FeatureSchema(("a", "b"), ("neg", "pos"), label_column="label")
    ds = load_dataset(write(tmp_path, "b,a,label\n1,2,pos\n3,4,neg\n"), schema)
    assert ds.X.tolist() == [[2.0, 1.0], [4.0, 3.0]]
    assert ds.y.tolist() == [1, 0]


def test_schema_uniqueness():
    with pytest.raises(SchemaError):
        FeatureSchema(("a", "a"), ("x", "y"))
    with pytest.raises(SchemaError):
        FeatureSchema(("a", "b"), ("x", "x"))


def test_partition_sizes_and_disjoint():
    ds = make_blobs(seed=0)
    p = partition(ds, (25, 460, 200), np.random.default_rng(0))
    assert (len(p.initial), len(p.candidate), len(p.test)) == (25, 460, 200)
    allidx = np.concatenate([p.initial, p.candidate, p.test])
    assert sorted(allidx.tolist()) == list(range(685))


def test_partition_degenerate_and_deterministic():
    ds = make_blobs(n_samples=50, seed=0)
    p = partition(ds, (0, 0, 50), np.random.default_rng(1))
    assert len(p.test) == 50 and len(p.initial) == len(p.candidate) == 0
    a = partition(ds, (5, 20, 25), np.random.default_rng(7))
    b = partition(ds, (5, 20, 25), np.random.default_rng(7))
    for name in ("initial", "candidate", "test"):
        np.testing.assert_array_equal(getattr(a, name), getattr(b, name))


def test_partition_bad_sizes():
    ds = make_blobs(n_samples=50, seed=0)
    with pytest.raises(ConfigurationError):
        partition(ds, (5, 20, 24), np.random.default_rng(0))
    with pytest.raises(ConfigurationError):
        partition(ds, (-1, 26, 25), np.random.default_rng(0))


def test_partition_arrays_are_frozen():
    ds = make_blobs(n_samples=50, seed=0)
    p = partition(ds, (5, 20, 25), np.random.default_rng(0))
    with pytest.raises(ValueError):
        p.test[0] = 0


def test_feature_bounds_examples():
    b = feature_bounds(np.array([[0.0, 10.0], [5.0, 2.0]]))
    assert b.to_list() == [[0.0, 5.0], [2.0, 10.0]]
    single = feature_bounds(np.array([[3.0, 4.0]]))
    assert single.to_list() == [[3.0, 3.0], [4.0, 4.0]]
    with pytest.raises(DomainError):
        feature_bounds(np.empty((0, 2)))


def test_bounds_of_pool_contain_candidates():
    ds = make_blobs(seed=2)
    p = partition(ds, (25, 460, 200), np.random.default_rng(2))
    pool = np.concatenate([p.initial, p.candidate])
    b = feature_bounds(ds.X[pool])
    # linear-scan oracle
    lo = [min(ds.X[i, j] for i in pool) for j in range(8)]
    hi = [max(ds.X[i, j] for i in pool) for j in range(8)]
    assert b.lower.tolist() == lo and b.upper.tolist() == hi
    C = ds.X[p.candidate]
    assert np.all((C >= b.lower) & (C <= b.upper))


def test_normalize_endpoints_clamp_and_degenerate():
    b = FeatureBounds([0.0, -2.0, 5.0], [10.0, 2.0, 5.0])
    np.testing.assert_array_equal(normalize(b.lower, b), [0, 0, 0.5])
    np.testing.assert_array_equal(normalize(b.upper, b), [1, 1, 0.5])
    np.testing.assert_array_equal(normalize([20.0, -9.0, 7.0], b), [1, 0, 0.5])
    np.testing.assert_array_equal(normalize([5.0, 0.0, 5.0], b), [0.5, 0.5, 0.5])


@given(
    st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3),
    st.lists(st.floats(-1e6, 1e6), min_size=3, max_size=3),
)
def test_normalize_monotone_and_idempotent(a, b):
    bounds = FeatureBounds([-1e3, 0.0, 1.0], [1e3, 1e-3, 1e5])
    a, b = np.array(a), np.array(b)
    lo, hi = np.minimum(a, b), np.maximum(a, b)
    assert np.all(normalize(lo, bounds) <= normalize(hi, bounds))
    unit = FeatureBounds(np.zeros(3), np.ones(3))
    u = normalize(a, bounds)
    np.testing.assert_array_equal(normalize(u, unit), u)


def test_dataset_validation():
    with pytest.raises(DomainError):
        Dataset(np.full((1, 8), np.nan), [0])
    with pytest.raises(DomainError):
        Dataset(np.zeros((1, 8)), [4])


def test_synthetic_proportions():
    ds = make_blobs(seed=0)
    counts = ds.class_counts()
    assert counts.sum() == 685
    assert counts.tolist() == class_sizes(685, MELT_POOL_PROPORTIONS).tolist()
    # keyhole-dominant, balling-rare
    assert counts.argmax() == 3 and counts.argmin() == 1
