import numpy as np
import pytest

from seqforest.dataset import FeatureBounds, normalize
from seqforest.sobol import (
    SobolCapacityError,
    SobolStream,
    direction_numbers,
    max_dimension,
    scale_to_bounds,
    sobol_points,
)

# First rows of new-joe-kuo-6.21201, transcribed by hand: (s, a, m_1..m_s) for d = 2..8.
JOE_KUO_HEAD = [
    (1, 0, (1,)),
    (2, 1, (1, 3)),
    (3, 1, (1, 3, 1)),
    (3, 2, (1, 1, 1)),
    (4, 1, (1, 1, 3, 3)),
    (4, 4, (1, 3, 5, 13)),
    (5, 2, (1, 1, 5, 5, 17)),
]


def reference_point(n, dim, bits=32):
    """Direct (non-recursive) Sobol construction of Gray-code point n in one dimension."""
    if dim == 0:
        m = [1] * bits
    else:
        s, a, m0 = JOE_KUO_HEAD[dim - 1]
        m = list(m0)
        while len(m) < bits:
            k = len(m)
            val = m[k - s] ^ (m[k - s] << s)
            for i in range(1, s):
                val ^= ((a >> (s - 1 - i)) & 1) * (m[k - i] << i)
            m.append(val)
    g = n ^ (n >> 1)
    x = 0
    for k in range(bits):
        if (g >> k) & 1:
            x ^= m[k] << (bits - 1 - k)
    return x / 2.0**bits


def test_first_points_1d():
    pts = sobol_points(SobolStream(1), 3)
    assert pts[:, 0].tolist() == [0.5, 0.75, 0.25]


def test_first_point_2d():
    assert SobolStream(2).draw(1).tolist() == [[0.5, 0.5]]


def test_zero_count_leaves_state():
    s = SobolStream(3)
    assert s.draw(0).shape == (0, 3)
    assert s.index == 0
    assert s.draw(1).tolist() == [[0.5, 0.5, 0.5]]


@pytest.mark.parametrize("dim", range(1, 9))
def test_matches_direct_construction(dim):
    pts = SobolStream(8).draw(64)
    ref = [reference_point(n, dim - 1) for n in range(1, 65)]
    np.testing.assert_allclose(pts[:, dim - 1], ref, atol=1e-12, rtol=0)


def test_table_head_matches_transcription():
    V = direction_numbers(8)
    for d, (s, a, m) in enumerate(JOE_KUO_HEAD, start=1):
        got = [int(V[d, k]) >> (31 - k) for k in range(s)]
        assert tuple(got) == m


@pytest.mark.filterwarnings("ignore:The balance properties")
def test_matches_scipy_unscrambled():
    qmc = pytest.importorskip("scipy.stats.qmc")
    d = max_dimension()
    ref = qmc.Sobol(d, scramble=False).random(1025)[1:]
    ours = SobolStream(d).draw(1024)
    np.testing.assert_allclose(ours, ref, atol=1e-12, rtol=0)


def test_continuation_equals_single_draw():
    a = SobolStream(5)
    chunks = np.vstack([a.draw(7), a.draw(0), a.draw(50), a.draw(200)])
    np.testing.assert_array_equal(chunks, SobolStream(5).draw(257))


def test_determinism_and_reset():
    a, b = SobolStream(6), SobolStream(6)
    np.testing.assert_array_equal(a.draw(100), b.draw(100))
    first = a.draw(10)
    a.reset()
    a.draw(100)
    np.testing.assert_array_equal(a.draw(10), first)


def _assert_stratified(pts, k):
    cells = np.floor(pts * 2**k).astype(int)
    for j in range(pts.shape[1]):
        assert np.array_equal(np.sort(cells[:, j]), np.arange(2**k)), f"dim {j + 1}"


@pytest.mark.parametrize("k", range(0, 11))
def test_dyadic_stratification(k):
    # the origin (index 0) is skipped on construction, so the first 2**k
    # sequence points are the origin plus the first 2**k - 1 emitted points
    pts = np.vstack([np.zeros((1, 21)), SobolStream(21).draw(2**k - 1)])
    _assert_stratified(pts, k)


@pytest.mark.parametrize("k", [1, 4, 10])
def test_aligned_blocks_stratified(k):
    s = SobolStream(21)
    s.draw(2**k - 1)
    for _ in range(3):
        _assert_stratified(s.draw(2**k), k)


def test_points_in_unit_interval_and_unique():
    pts = SobolStream(8).draw(2**16)
    assert pts.min() >= 0.0 and pts.max() < 1.0
    assert np.unique(pts, axis=0).shape[0] == pts.shape[0]


@pytest.mark.slow
def test_no_duplicates_first_2_pow_20():
    pts = SobolStream(3).draw(2**20)
    # dimension 1 alone is a permutation of the dyadic grid
    assert np.unique(pts[:, 0]).size == 2**20


def test_capacity():
    assert max_dimension() >= 21
    with pytest.raises(SobolCapacityError):
        SobolStream(max_dimension() + 1)
    with pytest.raises(SobolCapacityError):
        SobolStream(0)


def test_scale_to_bounds():
    b = FeatureBounds([0.0, 10.0], [2.0, 20.0])
    np.testing.assert_array_equal(scale_to_bounds([0.5, 0.5], b), [1.0, 15.0])
    np.testing.assert_array_equal(scale_to_bounds([0.0, 0.0], b), [0.0, 10.0])


def test_scale_then_normalize_roundtrip():
    rng = np.random.default_rng(3)
    lower = rng.uniform(-1e3, 1e3, size=8)
    b = FeatureBounds(lower, lower + rng.uniform(1e-4, 1e4, size=8))
    pts = SobolStream(8).draw(500)
    np.testing.assert_allclose(normalize(scale_to_bounds(pts, b), b), pts, atol=1e-12)
