"""Multiscale window-extremum feature detection.

The image is tiled into square interrogation windows of side L for every
scale in a ScaleSet; the maximum and minimum pixel of each window become
feature points.  Because the detector input carries a strictly monotone
ramp, those extrema are unique and the feature count depends only on the
image dimensions and the scales, never on content.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from .errors import ConfigError
from .imaging import RampedImage

MIN_WINDOW = 8

POLARITY_MAX = "max"
POLARITY_MIN = "min"


class Window(NamedTuple):
    row0: int
    col0: int
    height: int
    width: int


@dataclass(frozen=True)
class ScaleSet:
    """Strictly increasing interrogation-window side lengths."""

    sizes: tuple[int, ...]

    def __post_init__(self):
        if not self.sizes:
            raise ConfigError("scale set must contain at least one size")
        if any(int(s) != s or s < MIN_WINDOW for s in self.sizes):
            raise ConfigError(f"window sizes must be integers >= {MIN_WINDOW}")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ConfigError("window sizes must be strictly increasing")

    @property
    def l_max(self) -> int:
        return self.sizes[-1]

    @classmethod
    def from_range(cls, l_min: int, l_max: int) -> "ScaleSet":
        """Geometric sequence l_min, 2*l_min, ... capped at and including l_max."""
        if l_min > l_max:
            raise ConfigError(f"window range [{l_min}, {l_max}] is empty")
        sizes = []
        size = int(l_min)
        while size < l_max:
            sizes.append(size)
            size *= 2
        sizes.append(int(l_max))
        return cls(tuple(sizes))

    def validate_for(self, nr: int, nc: int) -> None:
        if self.l_max > min(nr, nc):
            raise ConfigError(
                f"largest window {self.l_max} exceeds image side {min(nr, nc)}"
            )


@dataclass(frozen=True)
class FeaturePoint:
    """One window extremum: full-image position plus its detection context."""

    row: int
    col: int
    scale: int
    polarity: str
    window_index: int
    value: float


def window_count(nr: int, nc: int, size: int) -> int:
    return -(-nr // size) * (-(-nc // size))


def partition_windows(nr: int, nc: int, size: int) -> list[Window]:
    """Tile the image into row-major non-overlapping windows of side `size`.

    Interior windows are size x size; trailing windows at the right and
    bottom edges shrink to cover the remainder, so the union covers the
    image exactly once.
    """
    if size < MIN_WINDOW or size > min(nr, nc):
        raise ConfigError(
            f"window size {size} outside [{MIN_WINDOW}, {min(nr, nc)}] for {nr}x{nc}"
        )
    windows = []
    for row0 in range(0, nr, size):
        height = min(size, nr - row0)
        for col0 in range(0, nc, size):
            windows.append(Window(row0, col0, height, min(size, nc - col0)))
    return windows


def detect_window_extrema(
    img: RampedImage, window: Window, *, scale: int, window_index: int
) -> tuple[FeaturePoint, FeaturePoint]:
    """Return the (max, min) feature points of one window.

    Ties are broken by first occurrence in row-major scan order, which is
    what argmax/argmin give on the flattened window.
    """
    sub = img.pixels[
        window.row0 : window.row0 + window.height,
        window.col0 : window.col0 + window.width,
    ]
    r_hi, c_hi = np.unravel_index(int(np.argmax(sub)), sub.shape)
    r_lo, c_lo = np.unravel_index(int(np.argmin(sub)), sub.shape)
    p_max = FeaturePoint(
        row=window.row0 + int(r_hi),
        col=window.col0 + int(c_hi),
        scale=scale,
        polarity=POLARITY_MAX,
        window_index=window_index,
        value=float(sub[r_hi, c_hi]),
    )
    p_min = FeaturePoint(
        row=window.row0 + int(r_lo),
        col=window.col0 + int(c_lo),
        scale=scale,
        polarity=POLARITY_MIN,
        window_index=window_index,
        value=float(sub[r_lo, c_lo]),
    )
    return p_max, p_min


def dedupe_features(points: list[FeaturePoint]) -> list[FeaturePoint]:
    """Keep one feature per (row, col, polarity), preferring the smallest scale.

    Order is otherwise stable: survivors keep the list position of the first
    occurrence of their pixel/polarity.
    """
    kept: dict[tuple[int, int, str], FeaturePoint] = {}
    for point in points:
        key = (point.row, point.col, point.polarity)
        best = kept.get(key)
        if best is None or point.scale < best.scale:
            kept[key] = point
    return list(kept.values())


def detect_features(
    img: RampedImage, scales: ScaleSet, dedupe: bool = True
) -> list[FeaturePoint]:
    """Collect window extrema over every scale, deduplicate, and sort.

    Before deduplication the count is exactly 2 * ceil(nr/L) * ceil(nc/L)
    summed over scales.  Output is sorted by (scale, window_index, polarity).
    """
    scales.validate_for(img.nr, img.nc)
    points: list[FeaturePoint] = []
    for size in scales.sizes:
        for index, window in enumerate(partition_windows(img.nr, img.nc, size)):
            points.extend(
                detect_window_extrema(img, window, scale=size, window_index=index)
            )
    if dedupe:
        points = dedupe_features(points)
    points.sort(key=lambda p: (p.scale, p.window_index, p.polarity))
    return points
