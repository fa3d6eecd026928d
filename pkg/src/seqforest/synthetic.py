"""Synthetic stand-in for the melt-pool table: imbalanced Gaussian blobs in physical units.

Blobs are drawn in a standardized latent space and mapped affinely onto
plausible L-PBF ranges, so raw features differ by orders of magnitude the way
the real process parameters do.
"""

from __future__ import annotations

from typing import Optional, Sequence

import numpy as np

from .dataset import MELT_POOL_SCHEMA, Dataset, FeatureSchema

# keyhole-dominant, balling-rare; order follows MELT_POOL_CLASSES
MELT_POOL_PROPORTIONS = (0.22, 0.10, 0.28, 0.40)

# stand-in benchmark used for the sample-efficiency and family-ordering checks
BENCHMARK_BLOBS = {"n_samples": 685, "separation": 3.0, "seed": 0}

# (center, half-width) per feature in raw units
PHYSICAL_RANGES = np.array(
    [
        (250.0, 150.0),      # power, W
        (1.1, 0.9),          # velocity, m/s
        (6500.0, 2500.0),    # density, kg/m^3
        (600.0, 200.0),      # specific heat, J/(kg K)
        (100.0, 90.0),       # thermal conductivity, W/(m K)
        (1400.0, 500.0),     # melting temperature, K
        (1.2e-4, 0.8e-4),    # beam diameter, m
        (0.4, 0.2),          # absorption coefficient
    ]
)


def class_sizes(n: int, proportions: Sequence[float]) -> np.ndarray:
    """Largest-remainder rounding of ``n * proportions``."""
    p = np.asarray(proportions, dtype=float)
    p = p / p.sum()
    raw = n * p
    sizes = np.floor(raw).astype(int)
    short = n - sizes.sum()
    sizes[np.argsort(-(raw - sizes), kind="stable")[:short]] += 1
    return sizes


def make_blobs(
    n_samples: int = 685,
    proportions: Sequence[float] = MELT_POOL_PROPORTIONS,
    separation: float = 2.0,
    n_informative: Optional[int] = None,
    seed: int = 0,
    schema: FeatureSchema = MELT_POOL_SCHEMA,
) -> Dataset:
    """Gaussian blobs with unit covariance in latent space.

    Class centers are random directions scaled to length ``separation`` in the
    first ``n_informative`` latent coordinates (all by default); remaining
    coordinates are pure noise. Rows are shuffled.
    """
    rng = np.random.default_rng(seed)
    p = schema.n_features
    k = p if n_informative is None else n_informative
    sizes = class_sizes(n_samples, proportions)
    centers = np.zeros((len(sizes), p))
    dirs = rng.normal(size=(len(sizes), k))
    centers[:, :k] = separation * dirs / np.linalg.norm(dirs, axis=1, keepdims=True)

    Z = np.concatenate([rng.normal(size=(m, p)) + centers[c] for c, m in enumerate(sizes)])
    y = np.repeat(np.arange(len(sizes)), sizes)
    order = rng.permutation(n_samples)
    Z, y = Z[order], y[order]

    if p == len(PHYSICAL_RANGES):
        mid, half = PHYSICAL_RANGES[:, 0], PHYSICAL_RANGES[:, 1]
        X = mid + half * Z / 3.0
    else:
        X = Z
    return Dataset(X, y, schema)
