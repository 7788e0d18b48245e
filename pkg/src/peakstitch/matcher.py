"""Descriptor matching between two images by thresholded Euclidean distance."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .descriptor import DescribedFeatures
from .errors import ConfigError

STRATEGY_THRESHOLD_ALL = "threshold_all"
STRATEGY_NEAREST = "nearest_neighbor"


@dataclass(frozen=True)
class MatcherConfig:
    delta_s: float = 0.35
    strategy: str = STRATEGY_NEAREST

    def __post_init__(self):
        if self.delta_s <= 0:
            raise ConfigError(f"delta_s must be positive, got {self.delta_s}")
        if self.strategy not in (STRATEGY_THRESHOLD_ALL, STRATEGY_NEAREST):
            raise ConfigError(f"unknown match strategy {self.strategy!r}")


@dataclass(frozen=True)
class MatchPair:
    """One accepted correspondence; positions are (row, col) pixel coords."""

    p1: tuple[int, int]
    p2: tuple[int, int]
    delta: float
    ref1: int
    ref2: int


def descriptor_distance(d1: np.ndarray, d2: np.ndarray) -> float:
    """Euclidean distance between two descriptor vectors."""
    d1 = np.asarray(d1, dtype=np.float64)
    d2 = np.asarray(d2, dtype=np.float64)
    if d1.shape != d2.shape:
        raise ValueError(f"descriptor lengths differ: {d1.shape} vs {d2.shape}")
    return float(np.linalg.norm(d1 - d2))


def _distance_matrix(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    # Row-by-row direct norms: exact (no Gram-matrix cancellation) and the
    # feature counts here are small enough that brute force is fine.
    out = np.empty((a.shape[0], b.shape[0]))
    for i in range(a.shape[0]):
        out[i] = np.linalg.norm(b - a[i], axis=1)
    return out


def match_features(
    set1: DescribedFeatures, set2: DescribedFeatures, cfg: MatcherConfig
) -> list[MatchPair]:
    """Pair features of two images whose descriptor distance is below delta_s.

    With the default nearest_neighbor strategy a pair is kept only if the
    two features are mutual nearest neighbors; threshold_all keeps every
    sub-threshold cross pair.  Output is sorted by ascending distance.
    """
    n1, n2 = len(set1.features), len(set2.features)
    if n1 == 0 or n2 == 0:
        return []
    dist = _distance_matrix(set1.descriptors, set2.descriptors)

    if cfg.strategy == STRATEGY_THRESHOLD_ALL:
        candidates = np.argwhere(dist < cfg.delta_s)
    else:
        nn12 = dist.argmin(axis=1)
        nn21 = dist.argmin(axis=0)
        rows = np.arange(n1)
        mutual = nn21[nn12] == rows
        accepted = mutual & (dist[rows, nn12] < cfg.delta_s)
        candidates = np.stack([rows[accepted], nn12[accepted]], axis=1)

    pairs = []
    for i, j in candidates:
        f1 = set1.features[int(i)]
        f2 = set2.features[int(j)]
        pairs.append(
            MatchPair(
                p1=(f1.row, f1.col),
                p2=(f2.row, f2.col),
                delta=float(dist[i, j]),
                ref1=int(i),
                ref2=int(j),
            )
        )
    pairs.sort(key=lambda m: (m.delta, m.ref1, m.ref2))
    return pairs
