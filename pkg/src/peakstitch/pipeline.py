"""Pipeline configuration and the end-to-end two-image stitch.

The four timed stages match the reported breakdown everywhere in this
package: feature detection (including the ramp), descriptor computation,
pair matching, and stitching (transform estimation plus compositing).
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .compositor import (
    BLEND_FEATHER,
    BLEND_OVERWRITE,
    RESAMPLE_BILINEAR,
    RESAMPLE_NEAREST,
    Placement,
    compute_canvas,
    warp_and_blend,
)
from .descriptor import DescriptorConfig, DescribedFeatures, describe_features
from .detector import ScaleSet, detect_features
from .errors import ConfigError, RegistrationError
from .imaging import IntensityImage, RampedImage, apply_linear_ramp, default_alpha
from .matcher import (
    STRATEGY_NEAREST,
    STRATEGY_THRESHOLD_ALL,
    MatcherConfig,
    MatchPair,
    match_features,
)
from .registration import RansacConfig, RegistrationResult, ransac_rigid

_BOOL_STRINGS = {"true": True, "1": True, "yes": True, "false": False, "0": False, "no": False}


@dataclass(frozen=True)
class PipelineConfig:
    alpha: float | None = None  # None -> per-image default_alpha
    window_min: int = 32
    window_max: int = 128
    beta0: float = 0.0625
    d: int = 4
    orientation_normalize: bool = True
    delta_s: float = 0.35
    match_strategy: str = STRATEGY_NEAREST
    ransac_iters: int = 2000
    ransac_tol: float = 3.0
    min_inliers: int = 8
    seed: int = 0
    threads: int = 1
    blend: str = BLEND_FEATHER
    resample: str = RESAMPLE_BILINEAR

    def __post_init__(self):
        self.validate()

    def validate(self) -> None:
        if self.alpha is not None and (not math.isfinite(self.alpha) or self.alpha <= 0):
            raise ConfigError(f"alpha must be positive, got {self.alpha}")
        scales = ScaleSet.from_range(self.window_min, self.window_max)
        if self.d < 1 or self.d > self.window_min:
            raise ConfigError(
                f"subregion grid d={self.d} must be in [1, window_min={self.window_min}]"
            )
        bound = (1.0 / self.d) * math.sqrt(scales.sizes[0] / scales.l_max)
        if not 0 < self.beta0 <= bound:
            raise ConfigError(
                f"beta0={self.beta0} outside (0, {bound:.6g}] for window range "
                f"[{self.window_min}, {self.window_max}] with d={self.d}"
            )
        if self.delta_s <= 0:
            raise ConfigError(f"delta_s must be positive, got {self.delta_s}")
        if self.match_strategy not in (STRATEGY_NEAREST, STRATEGY_THRESHOLD_ALL):
            raise ConfigError(f"unknown match strategy {self.match_strategy!r}")
        if self.ransac_iters < 1 or self.ransac_tol <= 0 or self.min_inliers < 2:
            raise ConfigError("invalid RANSAC parameters")
        if self.threads < 1:
            raise ConfigError(f"threads must be >= 1, got {self.threads}")
        if self.blend not in (BLEND_FEATHER, BLEND_OVERWRITE):
            raise ConfigError(f"unknown blend mode {self.blend!r}")
        if self.resample not in (RESAMPLE_BILINEAR, RESAMPLE_NEAREST):
            raise ConfigError(f"unknown resample mode {self.resample!r}")

    def scale_set(self) -> ScaleSet:
        return ScaleSet.from_range(self.window_min, self.window_max)

    def descriptor_config(self) -> DescriptorConfig:
        return DescriptorConfig(
            beta0=self.beta0,
            d=self.d,
            l_max=self.window_max,
            orientation_normalize=self.orientation_normalize,
        )

    def matcher_config(self) -> MatcherConfig:
        return MatcherConfig(delta_s=self.delta_s, strategy=self.match_strategy)

    def ransac_config(self, seed: int | None = None) -> RansacConfig:
        return RansacConfig(
            iterations=self.ransac_iters,
            inlier_tol=self.ransac_tol,
            min_inliers=self.min_inliers,
            seed=self.seed if seed is None else seed,
        )

    def with_overrides(self, overrides: dict) -> "PipelineConfig":
        known = {f.name for f in fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return replace(self, **overrides)


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if name == "alpha":
        return None if raw.lower() in ("auto", "none") else float(raw)
    if name in ("window_min", "window_max", "d", "ransac_iters", "min_inliers", "seed", "threads"):
        return int(raw)
    if name in ("beta0", "delta_s", "ransac_tol"):
        return float(raw)
    if name == "orientation_normalize":
        try:
            return _BOOL_STRINGS[raw.lower()]
        except KeyError:
            raise ConfigError(f"cannot parse boolean {raw!r} for {name}") from None
    return raw  # string-valued knobs: match_strategy, blend, resample


def load_config(path) -> PipelineConfig:
    """Read a flat `key = value` config file into a PipelineConfig."""
    overrides = {}
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config file {path}: {exc}") from exc
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        if "=" not in stripped:
            raise ConfigError(f"{path}:{lineno}: expected `key = value`, got {line!r}")
        key, _, value = stripped.partition("=")
        key = key.strip()
        try:
            overrides[key] = _parse_value(key, value)
        except ValueError as exc:
            raise ConfigError(f"{path}:{lineno}: bad value for {key}: {exc}") from exc
    return PipelineConfig().with_overrides(overrides)


@dataclass(eq=False)
class PreparedImage:
    image: IntensityImage
    ramped: RampedImage
    described: DescribedFeatures
    detect_seconds: float
    describe_seconds: float

    @property
    def feature_count(self) -> int:
        return len(self.described.features)


def prepare_image(img: IntensityImage, cfg: PipelineConfig) -> PreparedImage:
    """Ramp, detect, and describe one image, recording per-stage times."""
    t0 = time.perf_counter()
    alpha = cfg.alpha if cfg.alpha is not None else default_alpha(img.nr, img.nc)
    ramped = apply_linear_ramp(img, alpha)
    features = detect_features(ramped, cfg.scale_set())
    t1 = time.perf_counter()
    described = describe_features(ramped, features, cfg.descriptor_config())
    t2 = time.perf_counter()
    return PreparedImage(
        image=img,
        ramped=ramped,
        described=described,
        detect_seconds=t1 - t0,
        describe_seconds=t2 - t1,
    )


def register_prepared(
    prep_a: PreparedImage,
    prep_b: PreparedImage,
    cfg: PipelineConfig,
    seed: int | None = None,
) -> tuple[list[MatchPair], RegistrationResult | None, float, float]:
    """Match two prepared images and RANSAC-verify a rigid transform.

    Returns (pairs, result-or-None, match_seconds, ransac_seconds); a None
    result means registration failed.
    """
    t0 = time.perf_counter()
    pairs = match_features(prep_a.described, prep_b.described, cfg.matcher_config())
    t1 = time.perf_counter()
    result: RegistrationResult | None
    try:
        result = ransac_rigid(pairs, cfg.ransac_config(seed))
    except RegistrationError:
        result = None
    t2 = time.perf_counter()
    return pairs, result, t1 - t0, t2 - t1


@dataclass(eq=False)
class StitchResult:
    success: bool
    transform: object | None
    registration: RegistrationResult | None
    composite: np.ndarray | None
    report: dict


def _empty_registration_report() -> dict:
    return {
        "theta_deg": 0.0,
        "t_x": 0.0,
        "t_y": 0.0,
        "inliers": 0,
        "pairs_in": 0,
        "residual_rms": 0.0,
    }


def stitch_pair(
    img_a: IntensityImage, img_b: IntensityImage, cfg: PipelineConfig
) -> StitchResult:
    """Full two-image pipeline: detect, describe, match, register, composite.

    The reported transform maps first-image pixel coordinates onto the
    second image; the composite lives in the first (reference) image frame.
    On registration failure the result carries success=False and a report
    with zeroed registration fields, and no composite.
    """
    start = time.perf_counter()
    prep_a = prepare_image(img_a, cfg)
    prep_b = prepare_image(img_b, cfg)
    pairs, result, match_s, ransac_s = register_prepared(prep_a, prep_b, cfg)

    stitch_s = ransac_s
    composite = None
    registration = _empty_registration_report()
    registration["pairs_in"] = len(pairs)
    if result is not None:
        t0 = time.perf_counter()
        placements = [
            Placement(img_a.image_id, result.transform.identity()),
            Placement(img_b.image_id, result.transform.inverse()),
        ]
        dims = {
            img_a.image_id: (img_a.nr, img_a.nc),
            img_b.image_id: (img_b.nr, img_b.nc),
        }
        canvas = compute_canvas(placements, dims)
        composite = warp_and_blend(
            {img_a.image_id: img_a.pixels, img_b.image_id: img_b.pixels},
            placements,
            canvas,
            blend=cfg.blend,
            resample=cfg.resample,
        )
        stitch_s += time.perf_counter() - t0
        registration.update(
            theta_deg=math.degrees(result.transform.theta),
            t_x=result.transform.t_x,
            t_y=result.transform.t_y,
            inliers=len(result.inliers),
            residual_rms=result.residual_rms,
        )

    total = time.perf_counter() - start
    report = {
        "success": result is not None,
        "image_a": img_a.image_id,
        "image_b": img_b.image_id,
        "features": {
            img_a.image_id: prep_a.feature_count,
            img_b.image_id: prep_b.feature_count,
        },
        "matched_pairs": len(pairs),
        "registration": registration,
        "stage_seconds": {
            "detection": prep_a.detect_seconds + prep_b.detect_seconds,
            "description": prep_a.describe_seconds + prep_b.describe_seconds,
            "matching": match_s,
            "stitching": stitch_s,
        },
        "total_seconds": total,
    }
    return StitchResult(
        success=result is not None,
        transform=result.transform if result else None,
        registration=result,
        composite=composite,
        report=report,
    )
