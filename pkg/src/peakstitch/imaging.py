"""Image loading, grayscale conversion, and linear-ramp preprocessing.

All pixel data is kept as 2-D float64 arrays in the 8-bit intensity range
[0, 255].  The ramp added before detection is tiny (a fraction of one
intensity level across the whole image), so double precision is required
for it to survive arithmetic at all.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image, UnidentifiedImageError

from .errors import ConfigError, FormatError

# ITU-R BT.601 luma weights for RGB -> intensity.
LUMA_WEIGHTS = np.array([0.299, 0.587, 0.114])

# The ramp may never exceed 5% of the 8-bit range end to end.
RAMP_SPAN_LIMIT = 0.05 * 255.0


@dataclass(frozen=True, eq=False)
class IntensityImage:
    """Grayscale raster with an opaque identifier."""

    pixels: np.ndarray
    image_id: str = ""

    def __post_init__(self):
        if self.pixels.ndim != 2 or self.pixels.size == 0:
            raise ValueError("pixels must be a non-empty 2-D array")
        if not np.isfinite(self.pixels).all():
            raise ValueError("pixel values must be finite")

    @property
    def nr(self) -> int:
        return self.pixels.shape[0]

    @property
    def nc(self) -> int:
        return self.pixels.shape[1]


@dataclass(frozen=True, eq=False)
class RampedImage:
    """Intensity image with the monotone per-pixel ramp already added."""

    pixels: np.ndarray
    alpha: float
    source_id: str = ""

    @property
    def nr(self) -> int:
        return self.pixels.shape[0]

    @property
    def nc(self) -> int:
        return self.pixels.shape[1]


def to_grayscale(rgb: np.ndarray) -> np.ndarray:
    """Convert an (nr, nc, 3) RGB array to float64 intensity via BT.601 luma."""
    return np.asarray(rgb, dtype=np.float64) @ LUMA_WEIGHTS


def load_image(path) -> IntensityImage:
    """Load a PNG, JPEG, or binary PGM file as a grayscale IntensityImage.

    Color inputs are converted with BT.601 luma weights in floating point,
    so e.g. pure red (255, 0, 0) maps to 76.245 rather than a rounded byte.
    """
    p = Path(path)
    try:
        with Image.open(p) as im:
            im.load()
            mode = im.mode
            if mode in ("P", "RGBA", "LA"):
                im = im.convert("RGB")
                mode = "RGB"
            if mode == "L":
                arr = np.asarray(im, dtype=np.float64)
            elif mode == "RGB":
                arr = to_grayscale(np.asarray(im))
            else:
                raise FormatError(f"unsupported image mode {mode!r} in {p}")
    except UnidentifiedImageError as exc:
        raise FormatError(f"cannot decode {p}: {exc}") from exc
    return IntensityImage(pixels=arr, image_id=p.name)


def save_png(path, pixels: np.ndarray) -> None:
    """Write a float intensity (2-D) or RGB (3-D) array as an 8-bit PNG."""
    arr = np.clip(np.rint(pixels), 0, 255).astype(np.uint8)
    if arr.ndim == 2:
        im = Image.fromarray(arr, mode="L")
    elif arr.ndim == 3 and arr.shape[2] == 3:
        im = Image.fromarray(arr, mode="RGB")
    else:
        raise ValueError("expected a 2-D intensity or (nr, nc, 3) RGB array")
    im.save(path, format="PNG")


def default_alpha(nr: int, nc: int) -> float:
    """Ramp coefficient giving a fixed total span regardless of image size."""
    return 1e-6 * 255.0 / (nr * nc)


def apply_linear_ramp(img: IntensityImage, alpha: float) -> RampedImage:
    """Add the monotone background ramp alpha * ((i-1)*nc + j), 1-based i,j.

    The ramp guarantees that every window of the image has a unique maximum
    and minimum even over constant (e.g. saturated) regions.  alpha must be
    positive and small enough that the total span stays below 5% of the
    8-bit range.
    """
    if not math.isfinite(alpha) or alpha <= 0:
        raise ConfigError(f"alpha must be positive, got {alpha}")
    nr, nc = img.nr, img.nc
    if alpha * nr * nc > RAMP_SPAN_LIMIT:
        raise ConfigError(
            f"alpha={alpha} spans {alpha * nr * nc:.3g} intensity levels over "
            f"{nr}x{nc}; limit is {RAMP_SPAN_LIMIT}"
        )
    index = np.arange(1, nr * nc + 1, dtype=np.float64).reshape(nr, nc)
    return RampedImage(
        pixels=img.pixels + index * alpha, alpha=alpha, source_id=img.image_id
    )
