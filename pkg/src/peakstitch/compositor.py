"""Warp registered images into a shared canvas and blend the overlaps."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

from .registration import RigidTransform

BLEND_FEATHER = "feather"
BLEND_OVERWRITE = "overwrite"
RESAMPLE_BILINEAR = "bilinear"
RESAMPLE_NEAREST = "nearest"

# Corner coordinates are snapped at this resolution before floor/ceil so
# float noise from near-identity rotations cannot inflate the canvas.
_SNAP = 1e-6


@dataclass(frozen=True)
class Placement:
    """An image plus the transform taking its coordinates into the canvas frame."""

    image_id: str
    transform: RigidTransform


@dataclass(eq=False)
class Canvas:
    width: int
    height: int
    origin_offset: tuple[int, int]  # (dx, dy): canvas (col, row) -> frame (x, y)
    pixels: np.ndarray | None = field(default=None)
    weightmap: np.ndarray | None = field(default=None)


def _corners(nr: int, nc: int) -> np.ndarray:
    return np.array([[0.0, 0.0], [nc, 0.0], [0.0, nr], [nc, nr]])


def compute_canvas(
    placements: Sequence[Placement], dims: Mapping[str, tuple[int, int]]
) -> Canvas:
    """Integer bounding box of every placed image's transformed corners."""
    if not placements:
        raise ValueError("need at least one placement")
    points = np.vstack(
        [p.transform.transform_points(_corners(*dims[p.image_id])) for p in placements]
    )
    points = np.round(points / _SNAP) * _SNAP
    min_x = math.floor(points[:, 0].min())
    min_y = math.floor(points[:, 1].min())
    width = math.ceil(points[:, 0].max()) - min_x
    height = math.ceil(points[:, 1].max()) - min_y
    return Canvas(width=width, height=height, origin_offset=(min_x, min_y))


def _sample_bilinear(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    nr, nc = pixels.shape
    x0 = np.clip(np.floor(xs).astype(np.intp), 0, max(nc - 2, 0))
    y0 = np.clip(np.floor(ys).astype(np.intp), 0, max(nr - 2, 0))
    fx = xs - x0
    fy = ys - y0
    x1 = np.minimum(x0 + 1, nc - 1)
    y1 = np.minimum(y0 + 1, nr - 1)
    return (
        pixels[y0, x0] * (1.0 - fy) * (1.0 - fx)
        + pixels[y0, x1] * (1.0 - fy) * fx
        + pixels[y1, x0] * fy * (1.0 - fx)
        + pixels[y1, x1] * fy * fx
    )


def _sample_nearest(pixels: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    nr, nc = pixels.shape
    x = np.clip(np.rint(xs).astype(np.intp), 0, nc - 1)
    y = np.clip(np.rint(ys).astype(np.intp), 0, nr - 1)
    return pixels[y, x]


def warp_and_blend(
    images: Mapping[str, np.ndarray],
    placements: Sequence[Placement],
    canvas: Canvas,
    blend: str = BLEND_FEATHER,
    resample: str = RESAMPLE_BILINEAR,
) -> np.ndarray:
    """Inverse-map every placed image into the canvas and blend overlaps.

    Feather blending weights each contribution by its distance to the
    nearest source-image border (plus one, so lone contributions keep full
    weight); overwrite mode paints images in placement order.  Canvas
    pixels covered by no image stay black.  The raw accumulated weights are
    stored on the canvas as its weightmap.
    """
    if blend not in (BLEND_FEATHER, BLEND_OVERWRITE):
        raise ValueError(f"unknown blend mode {blend!r}")
    if resample not in (RESAMPLE_BILINEAR, RESAMPLE_NEAREST):
        raise ValueError(f"unknown resample mode {resample!r}")
    sampler = _sample_bilinear if resample == RESAMPLE_BILINEAR else _sample_nearest

    height, width = canvas.height, canvas.width
    dx, dy = canvas.origin_offset
    accum = np.zeros((height, width))
    weights = np.zeros((height, width))
    counts = np.zeros((height, width), dtype=np.intp)
    solo = np.zeros((height, width))

    for placement in placements:
        pixels = images[placement.image_id]
        nr, nc = pixels.shape
        inverse = placement.transform.inverse()

        corners = placement.transform.transform_points(_corners(nr, nc))
        corners = np.round(corners / _SNAP) * _SNAP
        c_lo = max(math.floor(corners[:, 0].min()) - dx, 0)
        c_hi = min(math.ceil(corners[:, 0].max()) - dx, width)
        r_lo = max(math.floor(corners[:, 1].min()) - dy, 0)
        r_hi = min(math.ceil(corners[:, 1].max()) - dy, height)
        if c_lo >= c_hi or r_lo >= r_hi:
            continue

        xs = np.arange(c_lo, c_hi, dtype=np.float64) + dx
        ys = np.arange(r_lo, r_hi, dtype=np.float64) + dy
        grid_x, grid_y = np.meshgrid(xs, ys)
        source = inverse.transform_points(np.stack([grid_x, grid_y], axis=-1))
        sx, sy = source[..., 0], source[..., 1]
        valid = (sx >= 0) & (sx <= nc - 1) & (sy >= 0) & (sy <= nr - 1)
        if not valid.any():
            continue
        samples = sampler(pixels, np.clip(sx, 0, nc - 1), np.clip(sy, 0, nr - 1))

        block = (slice(r_lo, r_hi), slice(c_lo, c_hi))
        if blend == BLEND_OVERWRITE:
            accum[block][valid] = samples[valid]
            weights[block][valid] = 1.0
            counts[block][valid] = 1
            solo[block][valid] = samples[valid]
        else:
            w = 1.0 + np.minimum(
                np.minimum(sx, nc - 1 - sx), np.minimum(sy, nr - 1 - sy)
            )
            accum[block] += np.where(valid, w * samples, 0.0)
            weights[block] += np.where(valid, w, 0.0)
            counts[block] += valid
            solo[block][valid] = samples[valid]

    covered = weights > 0
    out = np.zeros((height, width))
    np.divide(accum, weights, out=out, where=covered)
    # A pixel touched by a single image takes its sample verbatim, keeping
    # identity warps bit-exact instead of suffering w*v/w rounding.
    single = counts == 1
    out[single] = solo[single]
    canvas.pixels = out
    canvas.weightmap = weights
    return out
