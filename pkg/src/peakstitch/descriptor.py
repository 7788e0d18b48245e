"""Gradient-orientation descriptors for detected feature points.

Each feature gets a d*d*8-element vector (128 with the default d=4) built
from a scale-adaptive w x w region around it: the region is split into a
d x d grid of subregions and every sample's gradient magnitude is
accumulated into one of 8 hard orientation bins per subregion.  The region
grows with sqrt of the detection scale, beta = beta0 * (L / L_max)^(-1/2),
so descriptors from small windows still see enough context.

Orientations are measured with the quadrant-aware arctangent of the
column difference over the row difference, mapped into [0, 2*pi).  When
orientation normalization is on (the default), the dominant gradient
direction of the region is found first and the whole sampling grid is
rotated by it, with per-sample orientations measured relative to it; both
are needed for descriptors of rotated views to land near each other.
With normalization off the descriptor is the plain axis-aligned pixel
histogram with no orientation handling at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .detector import FeaturePoint
from .errors import ConfigError
from .imaging import RampedImage

TWO_PI = 2.0 * math.pi

ORIENTATION_BINS = 8
PEAK_BINS = 36


@dataclass(frozen=True)
class DescriptorConfig:
    beta0: float = 0.0625
    d: int = 4
    l_max: int = 128
    orientation_normalize: bool = True

    def __post_init__(self):
        if self.beta0 <= 0:
            raise ConfigError(f"beta0 must be positive, got {self.beta0}")
        if self.d < 1:
            raise ConfigError(f"subregion grid count must be >= 1, got {self.d}")
        if self.l_max < 1:
            raise ConfigError(f"l_max must be >= 1, got {self.l_max}")

    @property
    def length(self) -> int:
        return self.d * self.d * ORIENTATION_BINS


@dataclass(frozen=True, eq=False)
class GradientSample:
    magnitude: float
    orientation: float
    a: float  # row difference
    b: float  # column difference


@dataclass(frozen=True, eq=False)
class DescriptorVector:
    values: np.ndarray
    feature: FeaturePoint
    region_size: int
    subregion_size: int


@dataclass(eq=False)
class DescribedFeatures:
    """Feature points of one image together with their descriptor matrix."""

    image_id: str
    features: list[FeaturePoint]
    descriptors: np.ndarray  # (n, d*d*8)


def region_size(scale: int, cfg: DescriptorConfig) -> int:
    """Side length w of the descriptor region for a detection scale.

    w = round(beta * L * d) with beta = beta0 * (L / L_max)^(-1/2), rounded
    half away from zero, then clamped to [d, L] and forced down to a
    multiple of d so the subregion grid tiles it exactly.
    """
    if scale > cfg.l_max:
        raise ConfigError(f"scale {scale} exceeds configured l_max {cfg.l_max}")
    beta = cfg.beta0 * (scale / cfg.l_max) ** -0.5
    w = int(math.floor(beta * scale * cfg.d + 0.5))
    w = min(w, scale)
    w -= w % cfg.d
    return max(w, cfg.d)


def gradient_at(img: RampedImage, row: int, col: int) -> GradientSample:
    """Central-difference gradient at one interior pixel.

    Requires 1 <= row <= nr-2 and 1 <= col <= nc-2 so both neighbors exist.
    A zero gradient gets orientation 0 by convention.
    """
    nr, nc = img.nr, img.nc
    if not (1 <= row <= nr - 2 and 1 <= col <= nc - 2):
        raise ValueError(f"({row}, {col}) has no interior neighborhood in {nr}x{nc}")
    pix = img.pixels
    a = float(pix[row + 1, col] - pix[row - 1, col])
    b = float(pix[row, col + 1] - pix[row, col - 1])
    return GradientSample(
        magnitude=math.hypot(a, b),
        orientation=math.atan2(b, a) % TWO_PI,
        a=a,
        b=b,
    )


def _fit_region(nr: int, nc: int, row: int, col: int, w: int, d: int) -> tuple[int, int, int]:
    """Place a w x w region around (row, col) inside the valid-gradient interior.

    The region is translated inward rather than shrunk; only when the image
    interior itself is smaller than w does w drop (to a multiple of d).
    """
    cap = min(nr, nc) - 2
    if cap < d:
        raise ValueError(f"{nr}x{nc} image too small for a {d}x{d} subregion grid")
    if w > cap:
        w = cap - cap % d
    r0 = min(max(row - w // 2, 1), nr - 1 - w)
    c0 = min(max(col - w // 2, 1), nc - 1 - w)
    return r0, c0, w


def _region_gradients(pixels: np.ndarray, r0: int, c0: int, w: int):
    a = pixels[r0 + 1 : r0 + w + 1, c0 : c0 + w] - pixels[r0 - 1 : r0 + w - 1, c0 : c0 + w]
    b = pixels[r0 : r0 + w, c0 + 1 : c0 + w + 1] - pixels[r0 : r0 + w, c0 - 1 : c0 + w - 1]
    magnitude = np.hypot(a, b)
    orientation = np.mod(np.arctan2(b, a), TWO_PI)
    return magnitude, orientation


def _peak_orientation(magnitude: np.ndarray, orientation: np.ndarray) -> float:
    """Center angle of the strongest of 36 magnitude-weighted orientation bins."""
    bins = np.minimum((orientation * (PEAK_BINS / TWO_PI)).astype(np.intp), PEAK_BINS - 1)
    hist = np.bincount(bins.ravel(), weights=magnitude.ravel(), minlength=PEAK_BINS)
    return (int(np.argmax(hist)) + 0.5) * (TWO_PI / PEAK_BINS)


def dominant_orientation(
    img: RampedImage, fp: FeaturePoint, w: int, orientation_normalize: bool = True
) -> float:
    """Dominant gradient direction over the w x w region around a feature."""
    if not orientation_normalize:
        return 0.0
    nr, nc = img.nr, img.nc
    if w < 3 or w > min(nr, nc) - 2:
        raise ValueError(f"region size {w} does not fit the {nr}x{nc} interior")
    r0 = min(max(fp.row - w // 2, 1), nr - 1 - w)
    c0 = min(max(fp.col - w // 2, 1), nc - 1 - w)
    magnitude, orientation = _region_gradients(img.pixels, r0, c0, w)
    return _peak_orientation(magnitude, orientation)


def _rotated_region_gradients(
    pixels: np.ndarray, center_row: float, center_col: float, w: int, theta0: float
):
    """Gradients sampled on a w x w grid rotated by theta0 about the center.

    The gradient component fields are interpolated bilinearly at the rotated
    sample positions; samples falling outside the valid-gradient interior
    get zero magnitude.  Returned orientations are relative to theta0.

    The orientation convention atan2(b, a) is a reflected angle: content
    rotated by rho shifts it by -rho.  Canonical grids for two rotated
    views therefore differ by minus the orientation shift, so the grid is
    rotated by -theta0 while per-sample orientations subtract +theta0.
    """
    nr, nc = pixels.shape
    offsets = np.arange(w, dtype=np.float64) - (w - 1) / 2.0
    cos_t, sin_t = math.cos(-theta0), math.sin(-theta0)
    u = offsets[None, :]
    v = offsets[:, None]
    x = center_col + cos_t * u - sin_t * v
    y = center_row + sin_t * u + cos_t * v
    valid = (x >= 1) & (x <= nc - 2) & (y >= 1) & (y <= nr - 2)

    # Component fields on the integer patch covering all samples.
    pr0 = max(int(np.floor(y.min())), 1)
    pr1 = min(int(np.ceil(y.max())), nr - 2)
    pc0 = max(int(np.floor(x.min())), 1)
    pc1 = min(int(np.ceil(x.max())), nc - 2)
    a = pixels[pr0 + 1 : pr1 + 2, pc0 : pc1 + 1] - pixels[pr0 - 1 : pr1, pc0 : pc1 + 1]
    b = pixels[pr0 : pr1 + 1, pc0 + 1 : pc1 + 2] - pixels[pr0 : pr1 + 1, pc0 - 1 : pc1]

    lx = np.clip(x, pc0, pc1) - pc0
    ly = np.clip(y, pr0, pr1) - pr0
    x0 = np.minimum(np.floor(lx).astype(np.intp), max(pc1 - pc0 - 1, 0))
    y0 = np.minimum(np.floor(ly).astype(np.intp), max(pr1 - pr0 - 1, 0))
    fx = lx - x0
    fy = ly - y0
    x1 = np.minimum(x0 + 1, pc1 - pc0)
    y1 = np.minimum(y0 + 1, pr1 - pr0)

    def interp(field):
        return (
            field[y0, x0] * (1.0 - fy) * (1.0 - fx)
            + field[y0, x1] * (1.0 - fy) * fx
            + field[y1, x0] * fy * (1.0 - fx)
            + field[y1, x1] * fy * fx
        )

    a_s = interp(a)
    b_s = interp(b)
    magnitude = np.hypot(a_s, b_s) * valid
    orientation = np.mod(np.arctan2(b_s, a_s) - theta0, TWO_PI)
    return magnitude, orientation


def compute_descriptor(
    img: RampedImage, fp: FeaturePoint, cfg: DescriptorConfig
) -> DescriptorVector:
    """Build the d*d*8 orientation-histogram vector for one feature.

    The histogram is L2-normalized, clamped at 0.2, and renormalized; a
    perfectly flat region yields the all-zero vector.
    """
    nr, nc = img.nr, img.nc
    w = region_size(fp.scale, cfg)
    r0, c0, w = _fit_region(nr, nc, fp.row, fp.col, w, cfg.d)
    w_s = w // cfg.d
    if cfg.orientation_normalize:
        base_mag, base_ori = _region_gradients(img.pixels, r0, c0, w)
        theta0 = _peak_orientation(base_mag, base_ori)
        # Center the grid on the feature pixel itself (clamped inward), not
        # on the axis region: for even w the region center sits half a pixel
        # off the feature, and that asymmetry does not rotate with content.
        half = (w - 1) / 2.0
        cy = min(max(float(fp.row), 1.0 + half), (nr - 2.0) - half)
        cx = min(max(float(fp.col), 1.0 + half), (nc - 2.0) - half)
        magnitude, orientation = _rotated_region_gradients(img.pixels, cy, cx, w, theta0)
    else:
        magnitude, orientation = _region_gradients(img.pixels, r0, c0, w)
    bins = np.minimum(
        (orientation * (ORIENTATION_BINS / TWO_PI)).astype(np.intp),
        ORIENTATION_BINS - 1,
    )
    sub = np.arange(w) // w_s
    cell = (sub[:, None] * cfg.d + sub[None, :]) * ORIENTATION_BINS + bins
    values = np.bincount(cell.ravel(), weights=magnitude.ravel(), minlength=cfg.length)
    norm = float(np.linalg.norm(values))
    if norm > 0.0:
        values /= norm
        np.minimum(values, 0.2, out=values)
        norm = float(np.linalg.norm(values))
        values /= norm
    return DescriptorVector(values=values, feature=fp, region_size=w, subregion_size=w_s)


def describe_features(
    img: RampedImage, features: list[FeaturePoint], cfg: DescriptorConfig
) -> DescribedFeatures:
    """Compute descriptors for a feature list and stack them into a matrix."""
    if features:
        matrix = np.stack([compute_descriptor(img, fp, cfg).values for fp in features])
    else:
        matrix = np.zeros((0, cfg.length))
    return DescribedFeatures(
        image_id=img.source_id, features=list(features), descriptors=matrix
    )
