"""Unscrambled Sobol low-discrepancy sequences.

Direction numbers come from the Joe & Kuo ``new-joe-kuo-6.21201`` table
(https://web.maths.unsw.edu.au/~fkuo/sobol/), truncated to the first 64
dimensions and shipped in ``data/new-joe-kuo-6.64.txt``. Points are produced
in Gray-code order with 32-bit precision.
"""

from __future__ import annotations

from functools import lru_cache
from importlib import resources

import numpy as np

from .dataset import FeatureBounds

BITS = 32
_SCALE = 2.0 ** -BITS
_TABLE_FILE = "new-joe-kuo-6.64.txt"


class SobolCapacityError(ValueError):
    """Requested dimension exceeds the embedded direction-number table."""


@lru_cache(maxsize=1)
def load_joe_kuo_table() -> list[tuple[int, int, tuple[int, ...]]]:
    """Return ``(degree, coefficients, initial m values)`` for dimensions 2, 3, ...

    Dimension 1 is implicit (all ``m_k = 1``) and not part of the table.
    """
    text = resources.files("seqforest.data").joinpath(_TABLE_FILE).read_text()
    rows = []
    for line in text.splitlines()[1:]:
        if not line.strip():
            continue
        _, s, a, *m = (int(tok) for tok in line.split())
        rows.append((s, a, tuple(m)))
    return rows


def max_dimension() -> int:
    return len(load_joe_kuo_table()) + 1


def direction_numbers(dimension: int) -> np.ndarray:
    """Direction integers ``v[j, k] = m_{k+1} << (BITS - k - 1)`` as uint64, shape (dimension, BITS)."""
    if dimension < 1:
        raise SobolCapacityError(f"dimension must be >= 1, got {dimension}")
    if dimension > max_dimension():
        raise SobolCapacityError(
            f"dimension {dimension} exceeds embedded table capacity {max_dimension()}"
        )
    table = load_joe_kuo_table()
    V = np.zeros((dimension, BITS), dtype=np.uint64)
    V[0] = [1 << (BITS - k - 1) for k in range(BITS)]
    for j in range(1, dimension):
        s, a, m_init = table[j - 1]
        m = list(m_init)
        for k in range(s, BITS):
            new = m[k - s] ^ (m[k - s] << s)
            for i in range(1, s):
                if (a >> (s - 1 - i)) & 1:
                    new ^= m[k - i] << i
            m.append(new)
        V[j] = [m[k] << (BITS - k - 1) for k in range(BITS)]
    return V


class SobolStream:
    """Stateful Sobol generator in ``dimension`` dimensions.

    The all-zero point at index 0 is consumed on construction, so the first
    draw starts at ``(0.5, ..., 0.5)``. Successive draws continue the sequence.
    """

    def __init__(self, dimension: int):
        self.dimension = dimension
        self._V = direction_numbers(dimension)
        self._state = np.zeros(dimension, dtype=np.uint64)
        # index of the most recently emitted point (0 = skipped origin)
        self.index = 0

    def draw(self, count: int) -> np.ndarray:
        """Return the next ``count`` points as an array of shape (count, dimension)."""
        if count < 0:
            raise ValueError("count must be non-negative")
        if count == 0:
            return np.empty((0, self.dimension))
        if self.index + count >= 2**BITS:
            raise SobolCapacityError("Sobol stream exhausted at 32-bit precision")
        # point n is point n-1 XOR v[c], c = lowest zero bit of n-1
        prev = np.arange(self.index, self.index + count, dtype=np.uint64)
        low_zero = _lowest_zero_bit(prev)
        deltas = self._V[:, low_zero]
        states = np.bitwise_xor.accumulate(deltas, axis=1) ^ self._state[:, None]
        self._state = states[:, -1].copy()
        self.index += count
        return states.T.astype(np.float64) * _SCALE

    def reset(self) -> None:
        self._state[:] = 0
        self.index = 0


def _lowest_zero_bit(n: np.ndarray) -> np.ndarray:
    # isolate lowest set bit of ~n, then take log2
    inv = ~n
    lowbit = inv & (~inv + np.uint64(1))
    return np.log2(lowbit.astype(np.float64)).astype(np.intp)


def sobol_points(stream: SobolStream, count: int) -> np.ndarray:
    return stream.draw(count)


def scale_to_bounds(points: np.ndarray, bounds: FeatureBounds) -> np.ndarray:
    """Map unit-cube points onto the box ``[lower, upper]`` coordinate-wise."""
    points = np.asarray(points, dtype=float)
    return bounds.lower + points * (bounds.upper - bounds.lower)
