"""Rigid-transform estimation from match pairs with RANSAC.

The transform model is rotation + translation only,

    [x']   [cos t  -sin t  t_x] [x]
    [y'] = [sin t   cos t  t_y] [y]
    [1 ]   [0       0      1  ] [1]

applied to (x, y) = (col, row) pixel coordinates.  ransac_rigid estimates
the transform mapping first-image coordinates (p1 of each MatchPair) onto
second-image coordinates (p2); callers wanting the reverse direction take
the exact closed-form inverse.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .errors import ConfigError, DegenerateSampleError, RegistrationError
from .matcher import MatchPair


@dataclass(frozen=True)
class RigidTransform:
    theta: float
    t_x: float
    t_y: float

    def __post_init__(self):
        # Keep the angle in (-pi, pi]; the matrix is unchanged by this.
        theta = math.remainder(self.theta, 2.0 * math.pi)
        if theta <= -math.pi:
            theta += 2.0 * math.pi
        object.__setattr__(self, "theta", theta)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(0.0, 0.0, 0.0)

    @property
    def matrix(self) -> np.ndarray:
        c, s = math.cos(self.theta), math.sin(self.theta)
        return np.array([[c, -s, self.t_x], [s, c, self.t_y], [0.0, 0.0, 1.0]])

    def inverse(self) -> "RigidTransform":
        c, s = math.cos(self.theta), math.sin(self.theta)
        return RigidTransform(
            theta=-self.theta,
            t_x=-(c * self.t_x + s * self.t_y),
            t_y=-(-s * self.t_x + c * self.t_y),
        )

    def compose(self, inner: "RigidTransform") -> "RigidTransform":
        """Transform equivalent to applying `inner` first, then self."""
        c, s = math.cos(self.theta), math.sin(self.theta)
        return RigidTransform(
            theta=self.theta + inner.theta,
            t_x=c * inner.t_x - s * inner.t_y + self.t_x,
            t_y=s * inner.t_x + c * inner.t_y + self.t_y,
        )

    def transform_points(self, points: np.ndarray) -> np.ndarray:
        """Apply to an (n, 2) array of (x, y) points."""
        pts = np.asarray(points, dtype=np.float64)
        c, s = math.cos(self.theta), math.sin(self.theta)
        out = np.empty_like(pts)
        out[..., 0] = c * pts[..., 0] - s * pts[..., 1] + self.t_x
        out[..., 1] = s * pts[..., 0] + c * pts[..., 1] + self.t_y
        return out


@dataclass(frozen=True)
class RansacConfig:
    iterations: int = 2000
    inlier_tol: float = 3.0
    min_inliers: int = 8
    seed: int = 0

    def __post_init__(self):
        if self.iterations < 1:
            raise ConfigError("iterations must be >= 1")
        if self.inlier_tol <= 0:
            raise ConfigError("inlier_tol must be positive")
        if self.min_inliers < 2:
            raise ConfigError("min_inliers must be >= 2")


@dataclass(eq=False)
class RegistrationResult:
    transform: RigidTransform
    inliers: list[int]
    residual_rms: float
    consensus_size: int = 0  # size of the sample consensus that won the search


def apply_transform(transform: RigidTransform, point) -> tuple[float, float]:
    """Map a single (x, y) point through the transform."""
    x, y = point
    c, s = math.cos(transform.theta), math.sin(transform.theta)
    return (c * x - s * y + transform.t_x, s * x + c * y + transform.t_y)


def estimate_rigid(src: np.ndarray, dst: np.ndarray) -> RigidTransform:
    """Least-squares rotation + translation fit for dst ~= H(src).

    Closed form: the angle comes from the arctangent of the cross/dot sums
    of the centered coordinates, the translation from the centroids.
    """
    src = np.asarray(src, dtype=np.float64)
    dst = np.asarray(dst, dtype=np.float64)
    if src.shape != dst.shape or src.ndim != 2 or src.shape[1] != 2:
        raise DegenerateSampleError("need matching (n, 2) point arrays")
    if src.shape[0] < 2:
        raise DegenerateSampleError("need at least 2 correspondences")
    centroid_src = src.mean(axis=0)
    centroid_dst = dst.mean(axis=0)
    s = src - centroid_src
    d = dst - centroid_dst
    if not np.any(np.abs(s) > 1e-12):
        raise DegenerateSampleError("source points are coincident")
    dot = float((s * d).sum())
    cross = float((s[:, 0] * d[:, 1] - s[:, 1] * d[:, 0]).sum())
    theta = math.atan2(cross, dot)
    c, si = math.cos(theta), math.sin(theta)
    t_x = centroid_dst[0] - (c * centroid_src[0] - si * centroid_src[1])
    t_y = centroid_dst[1] - (si * centroid_src[0] + c * centroid_src[1])
    return RigidTransform(theta=theta, t_x=float(t_x), t_y=float(t_y))


def transfer_errors(
    transform: RigidTransform, src: np.ndarray, dst: np.ndarray
) -> np.ndarray:
    """Euclidean forward-transfer error of each correspondence."""
    pred = transform.transform_points(src)
    diff = np.asarray(dst, dtype=np.float64) - pred
    return np.hypot(diff[:, 0], diff[:, 1])


def _pair_points(pairs: Sequence[MatchPair]) -> tuple[np.ndarray, np.ndarray]:
    src = np.array([[p.p1[1], p.p1[0]] for p in pairs], dtype=np.float64)
    dst = np.array([[p.p2[1], p.p2[0]] for p in pairs], dtype=np.float64)
    return src, dst


def ransac_rigid(pairs: Sequence[MatchPair], cfg: RansacConfig) -> RegistrationResult:
    """Estimate the rigid transform p2 ~= H(p1) by 2-point RANSAC.

    Keeps the sample with the largest consensus (ties broken by lower
    residual RMS), refits on its full inlier set, and reports the inliers
    of the refit.  Raises RegistrationError when no consensus reaches
    min_inliers; the mosaic planner treats that as "these images do not
    match".
    """
    n = len(pairs)
    if n < cfg.min_inliers:
        raise RegistrationError(
            f"only {n} candidate pairs, need at least {cfg.min_inliers}"
        )
    src, dst = _pair_points(pairs)
    rng = np.random.default_rng(cfg.seed)

    best_count = 0
    best_rms = math.inf
    best_mask: np.ndarray | None = None
    for _ in range(cfg.iterations):
        i = int(rng.integers(0, n))
        j = int(rng.integers(0, n - 1))
        if j >= i:
            j += 1
        try:
            candidate = estimate_rigid(src[[i, j]], dst[[i, j]])
        except DegenerateSampleError:
            continue
        errors = transfer_errors(candidate, src, dst)
        mask = errors <= cfg.inlier_tol
        count = int(mask.sum())
        if count == 0 or count < best_count:
            continue
        rms = float(np.sqrt(np.mean(errors[mask] ** 2)))
        if count > best_count or rms < best_rms:
            best_count, best_rms, best_mask = count, rms, mask

    if best_mask is None or best_count < cfg.min_inliers:
        raise RegistrationError(
            f"best consensus {best_count} below min_inliers {cfg.min_inliers}"
        )

    refit = estimate_rigid(src[best_mask], dst[best_mask])
    errors = transfer_errors(refit, src, dst)
    final_mask = errors <= cfg.inlier_tol
    if int(final_mask.sum()) < cfg.min_inliers:
        raise RegistrationError("refit lost consensus below min_inliers")
    residual = float(np.sqrt(np.mean(errors[final_mask] ** 2)))
    return RegistrationResult(
        transform=refit,
        inliers=np.flatnonzero(final_mask).tolist(),
        residual_rms=residual,
        consensus_size=best_count,
    )
