"""Synthetic test imagery with known ground-truth geometry.

Textures are sums of Gaussian-smoothed noise octaves, normalized into the
8-bit range: smooth enough that local peaks survive resampling, textured
enough that descriptors are distinctive.  View generators return the true
transform in the same convention the pipeline reports (first-view pixel
coords mapped onto the second view).
"""

from __future__ import annotations

import numpy as np
from scipy.ndimage import gaussian_filter, map_coordinates

from .imaging import IntensityImage
from .registration import RigidTransform

DEFAULT_OCTAVES = ((2.0, 0.5), (8.0, 1.0), (24.0, 1.5))


def make_texture(
    nr: int,
    nc: int,
    seed: int = 0,
    octaves=DEFAULT_OCTAVES,
    low: float = 10.0,
    high: float = 245.0,
) -> np.ndarray:
    """Multi-octave smoothed-noise texture as float64 in [low, high]."""
    rng = np.random.default_rng(seed)
    field = np.zeros((nr, nc))
    for sigma, weight in octaves:
        layer = gaussian_filter(rng.standard_normal((nr, nc)), sigma, mode="reflect")
        field += weight * layer / (layer.std() + 1e-12)
    lo, hi = field.min(), field.max()
    return low + (high - low) * (field - lo) / (hi - lo)


def crop_view(source: np.ndarray, row0: int, col0: int, nr: int, nc: int, image_id: str) -> IntensityImage:
    if row0 < 0 or col0 < 0 or row0 + nr > source.shape[0] or col0 + nc > source.shape[1]:
        raise ValueError("crop exceeds source bounds")
    return IntensityImage(pixels=source[row0 : row0 + nr, col0 : col0 + nc].copy(), image_id=image_id)


def translated_pair(
    source: np.ndarray,
    view_nr: int,
    view_nc: int,
    offset_row: int,
    offset_col: int,
    origin: tuple[int, int] = (0, 0),
) -> tuple[IntensityImage, IntensityImage, RigidTransform]:
    """Two integer-offset crops plus the true first-to-second transform."""
    r_a, c_a = origin
    r_b, c_b = r_a + offset_row, c_a + offset_col
    view_a = crop_view(source, r_a, c_a, view_nr, view_nc, "view_a")
    view_b = crop_view(source, r_b, c_b, view_nr, view_nc, "view_b")
    truth = RigidTransform(theta=0.0, t_x=float(c_a - c_b), t_y=float(r_a - r_b))
    return view_a, view_b, truth


def rotated_view(
    source: np.ndarray,
    theta: float,
    center_xy: tuple[float, float],
    row0: int,
    col0: int,
    nr: int,
    nc: int,
    image_id: str,
) -> IntensityImage:
    """Crop of the source rotated by theta about center_xy (x, y source coords).

    Output pixel (r, c) samples the source at R(theta) applied to
    (col0 + c, row0 + r) about the center, with bilinear interpolation.
    Raises if any sample would fall outside the source.
    """
    cx, cy = center_xy
    cols, rows = np.meshgrid(np.arange(nc, dtype=np.float64), np.arange(nr, dtype=np.float64))
    x = cols + col0 - cx
    y = rows + row0 - cy
    cos_t, sin_t = np.cos(theta), np.sin(theta)
    sx = cos_t * x - sin_t * y + cx
    sy = sin_t * x + cos_t * y + cy
    if sx.min() < 0 or sy.min() < 0 or sx.max() > source.shape[1] - 1 or sy.max() > source.shape[0] - 1:
        raise ValueError("rotated view samples outside the source image")
    pixels = map_coordinates(source, [sy, sx], order=1, mode="nearest")
    return IntensityImage(pixels=pixels, image_id=image_id)


def rotated_pair(
    source: np.ndarray,
    view_nr: int,
    view_nc: int,
    theta: float,
    offset_row: int = 0,
    offset_col: int = 0,
    origin: tuple[int, int] = (0, 0),
) -> tuple[IntensityImage, IntensityImage, RigidTransform]:
    """A plain crop and a rotated crop, with the true first-to-second transform.

    The rotation is taken about the center of the two views' overlap region
    in source coordinates.
    """
    r_a, c_a = origin
    r_b, c_b = r_a + offset_row, c_a + offset_col
    view_a = crop_view(source, r_a, c_a, view_nr, view_nc, "view_a")

    ov_r0, ov_r1 = max(r_a, r_b), min(r_a, r_b) + view_nr
    ov_c0, ov_c1 = max(c_a, c_b), min(c_a, c_b) + view_nc
    if ov_r1 <= ov_r0 or ov_c1 <= ov_c0:
        raise ValueError("views do not overlap")
    center = ((ov_c0 + ov_c1 - 1) / 2.0, (ov_r0 + ov_r1 - 1) / 2.0)

    view_b = rotated_view(source, theta, center, r_b, c_b, view_nr, view_nc, "view_b")

    # View A coords p map to source s = p + o_a, then into view B via the
    # inverse of B's sampling map: q = R(-theta) @ (s - c) + c - o_b.
    cos_t, sin_t = np.cos(-theta), np.sin(-theta)
    ox, oy = c_a - center[0], r_a - center[1]
    t_x = cos_t * ox - sin_t * oy + center[0] - c_b
    t_y = sin_t * ox + cos_t * oy + center[1] - r_b
    truth = RigidTransform(theta=-theta, t_x=float(t_x), t_y=float(t_y))
    return view_a, view_b, truth


def make_fragments(
    source: np.ndarray, rows: int, cols: int, overlap: float, seed: int | None = None
) -> list[tuple[IntensityImage, tuple[int, int]]]:
    """Cut a source into a rows x cols grid of overlapping fragments.

    Fragment side lengths are chosen so adjacent fragments share roughly
    `overlap` of their extent.  Returns (fragment, (row0, col0)) tuples; a
    seed shuffles their order.
    """
    nr, nc = source.shape
    frag_nr = int(round(nr / (rows - (rows - 1) * overlap)))
    frag_nc = int(round(nc / (cols - (cols - 1) * overlap)))
    row_starts = [int(round(i * (nr - frag_nr) / max(rows - 1, 1))) for i in range(rows)]
    col_starts = [int(round(j * (nc - frag_nc) / max(cols - 1, 1))) for j in range(cols)]
    fragments = []
    for i, r0 in enumerate(row_starts):
        for j, c0 in enumerate(col_starts):
            frag = crop_view(source, r0, c0, frag_nr, frag_nc, f"frag_{i}{j}")
            fragments.append((frag, (r0, c0)))
    if seed is not None:
        rng = np.random.default_rng(seed)
        order = rng.permutation(len(fragments))
        fragments = [fragments[k] for k in order]
    return fragments
