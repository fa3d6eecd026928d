"""Least-confidence scoring of synthetic points and nearest-candidate matching."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .dataset import FeatureBounds, normalize
from .errors import DomainError, PoolExhaustedError


@dataclass(frozen=True)
class AcquisitionResult:
    ideal_point: np.ndarray
    ideal_score: float
    chosen_candidate_index: int
    distance: float


def confidence(p: np.ndarray) -> np.ndarray | float:
    """Largest class probability (per row for a 2-D batch)."""
    p = np.asarray(p, dtype=float)
    out = p.max(axis=-1)
    return float(out) if out.ndim == 0 else out


def least_confidence(p: np.ndarray) -> np.ndarray | float:
    return 1.0 - confidence(p)


def select_ideal(model, synthetic: np.ndarray) -> tuple[int, float]:
    """Index and score of the synthetic point with the highest least-confidence score.

    Ties go to the earliest point.
    """
    synthetic = np.atleast_2d(np.asarray(synthetic, dtype=float))
    if synthetic.shape[0] == 0:
        raise DomainError("no synthetic points to score")
    scores = least_confidence(model.predict_proba(synthetic))
    i = int(np.argmax(scores))
    return i, float(scores[i])


def nearest_candidate(
    ideal: np.ndarray, candidates: np.ndarray, bounds: FeatureBounds
) -> tuple[int, float]:
    """Closest candidate to ``ideal`` by Euclidean distance in min-max normalized space.

    Ties go to the lowest candidate index.
    """
    candidates = np.atleast_2d(np.asarray(candidates, dtype=float))
    if candidates.shape[0] == 0:
        raise PoolExhaustedError("candidate pool is empty")
    diff = normalize(candidates, bounds) - normalize(ideal, bounds)
    d2 = np.einsum("ij,ij->i", diff, diff)
    i = int(np.argmin(d2))
    return i, float(np.sqrt(d2[i]))


def acquire(model, synthetic: np.ndarray, candidates: np.ndarray, bounds: FeatureBounds) -> AcquisitionResult:
    i, score = select_ideal(model, synthetic)
    ideal = np.asarray(synthetic[i], dtype=float)
    j, dist = nearest_candidate(ideal, candidates, bounds)
    return AcquisitionResult(ideal, score, j, dist)
