"""Synthetic benchmark harness: timed stitches over a grid of scenarios."""

from __future__ import annotations

import csv
import io
import json
import math
import statistics
from dataclasses import dataclass
from pathlib import Path

from .detector import MIN_WINDOW, ScaleSet, detect_features, window_count
from .errors import ConfigError
from .imaging import RampedImage, apply_linear_ramp, default_alpha
from .pipeline import PipelineConfig, stitch_pair
from .synthetic import make_texture, rotated_pair, translated_pair

TRANSFORM_KINDS = ("translation", "rotation")

CSV_COLUMNS = [
    "size_mpx",
    "transform",
    "rep",
    "nr",
    "nc",
    "window_min",
    "window_max",
    "features_a",
    "features_b",
    "matched_pairs",
    "inliers",
    "success",
    "detection_s",
    "description_s",
    "matching_s",
    "stitching_s",
    "total_s",
]


@dataclass(frozen=True)
class BenchSpec:
    sizes_mpx: tuple[float, ...]
    transforms: tuple[str, ...] = ("translation",)
    repetitions: int = 3
    overlap: float = 0.4
    window_mode: str = "proportional"  # windows scale with image size
    rotation_deg: float = 15.0
    seed: int = 0

    def __post_init__(self):
        if not self.sizes_mpx or any(s <= 0 for s in self.sizes_mpx):
            raise ConfigError("sizes_mpx must be a non-empty list of positive numbers")
        if not self.transforms or any(t not in TRANSFORM_KINDS for t in self.transforms):
            raise ConfigError(f"transforms must be drawn from {TRANSFORM_KINDS}")
        if self.repetitions < 1:
            raise ConfigError("repetitions must be >= 1")
        if not 0.0 < self.overlap < 1.0:
            raise ConfigError("overlap must be in (0, 1)")
        if self.window_mode not in ("proportional", "fixed"):
            raise ConfigError(f"unknown window_mode {self.window_mode!r}")


def parse_bench_spec(path) -> BenchSpec:
    try:
        raw = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read benchmark spec {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"benchmark spec {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict) or not raw:
        raise ConfigError("benchmark spec must be a non-empty JSON object")
    known = {"sizes_mpx", "transforms", "repetitions", "overlap", "window_mode", "rotation_deg", "seed"}
    unknown = set(raw) - known
    if unknown:
        raise ConfigError(f"unknown benchmark spec keys: {sorted(unknown)}")
    if "sizes_mpx" not in raw:
        raise ConfigError("benchmark spec needs sizes_mpx")
    kwargs = dict(raw)
    kwargs["sizes_mpx"] = tuple(float(s) for s in raw["sizes_mpx"])
    if "transforms" in kwargs:
        kwargs["transforms"] = tuple(kwargs["transforms"])
    return BenchSpec(**kwargs)


def _view_dims(size_mpx: float) -> tuple[int, int]:
    # 4:3 views of the requested pixel count.
    npx = size_mpx * 1e6
    nr = int(round(math.sqrt(npx * 3.0 / 4.0)))
    return nr, int(round(npx / nr))


def _bench_windows(cfg: PipelineConfig, spec: BenchSpec, nr: int, nc: int) -> tuple[int, int]:
    if spec.window_mode == "fixed":
        lo, hi = cfg.window_min, cfg.window_max
    else:
        factor = math.sqrt(nr * nc / 1e6)
        lo = max(MIN_WINDOW, int(round(cfg.window_min * factor)))
        hi = max(lo, int(round(cfg.window_max * factor)))
    hi = min(hi, nr, nc)
    lo = min(lo, hi)
    if lo < MIN_WINDOW:
        raise ConfigError(f"{nr}x{nc} views too small for any valid window")
    return lo, hi


def assert_count_law(ramped: RampedImage, scales: ScaleSet) -> None:
    """Check the per-scale pre-dedup feature count 2*ceil(nr/L)*ceil(nc/L)."""
    for size in scales.sizes:
        got = len(detect_features(ramped, ScaleSet((size,)), dedupe=False))
        want = 2 * window_count(ramped.nr, ramped.nc, size)
        if got != want:
            raise RuntimeError(
                f"feature-count law violated at L={size}: {got} != {want}"
            )


def run_bench(spec: BenchSpec, cfg: PipelineConfig) -> list[dict]:
    """Run every (size, transform, repetition) cell and collect report rows."""
    rows = []
    for size_idx, size_mpx in enumerate(spec.sizes_mpx):
        view_nr, view_nc = _view_dims(size_mpx)
        lo, hi = _bench_windows(cfg, spec, view_nr, view_nc)
        cell_cfg = cfg.with_overrides({"window_min": lo, "window_max": hi})
        for t_idx, transform in enumerate(spec.transforms):
            for rep in range(spec.repetitions):
                seed = spec.seed + 1000 * rep + 31 * size_idx + 7 * t_idx
                off_c = int(round((1.0 - spec.overlap) * view_nc))
                if transform == "translation":
                    src = make_texture(view_nr + 8, view_nc + off_c + 8, seed=seed)
                    img_a, img_b, _ = translated_pair(
                        src, view_nr, view_nc, offset_row=4, offset_col=off_c
                    )
                else:
                    theta = math.radians(spec.rotation_deg)
                    pad = int(math.ceil(0.75 * max(view_nr, view_nc)))
                    src = make_texture(
                        view_nr + 2 * pad, view_nc + off_c + 2 * pad, seed=seed
                    )
                    try:
                        img_a, img_b, _ = rotated_pair(
                            src,
                            view_nr,
                            view_nc,
                            theta,
                            offset_col=off_c,
                            origin=(pad, pad),
                        )
                    except ValueError as exc:
                        raise ConfigError(
                            f"rotation_deg={spec.rotation_deg} does not fit the "
                            f"{view_nr}x{view_nc} view geometry: {exc}"
                        ) from exc

                alpha = cell_cfg.alpha
                for img in (img_a, img_b):
                    a = alpha if alpha is not None else default_alpha(img.nr, img.nc)
                    assert_count_law(apply_linear_ramp(img, a), cell_cfg.scale_set())

                result = stitch_pair(img_a, img_b, cell_cfg)
                report = result.report
                rows.append(
                    {
                        "size_mpx": size_mpx,
                        "transform": transform,
                        "rep": rep,
                        "nr": view_nr,
                        "nc": view_nc,
                        "window_min": lo,
                        "window_max": hi,
                        "features_a": report["features"][img_a.image_id],
                        "features_b": report["features"][img_b.image_id],
                        "matched_pairs": report["matched_pairs"],
                        "inliers": report["registration"]["inliers"],
                        "success": int(report["success"]),
                        "detection_s": report["stage_seconds"]["detection"],
                        "description_s": report["stage_seconds"]["description"],
                        "matching_s": report["stage_seconds"]["matching"],
                        "stitching_s": report["stage_seconds"]["stitching"],
                        "total_s": report["total_seconds"],
                    }
                )
    return rows


def rows_to_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_COLUMNS)
    writer.writeheader()
    writer.writerows(rows)
    return buf.getvalue()


def format_table(rows: list[dict]) -> str:
    """Median stage times and feature counts per (size, transform) cell."""
    cells: dict[tuple, list[dict]] = {}
    for row in rows:
        cells.setdefault((row["size_mpx"], row["transform"]), []).append(row)
    header = (
        f"{'size_mpx':>9} {'transform':>11} {'feats':>6} {'pairs':>6} "
        f"{'detect':>8} {'descr':>8} {'match':>8} {'stitch':>8} {'total':>8}"
    )
    lines = [header, "-" * len(header)]
    for key in sorted(cells):
        group = cells[key]
        med = lambda name: statistics.median(r[name] for r in group)
        lines.append(
            f"{key[0]:>9g} {key[1]:>11} {med('features_a'):>6.0f} "
            f"{med('matched_pairs'):>6.0f} {med('detection_s'):>8.3f} "
            f"{med('description_s'):>8.3f} {med('matching_s'):>8.3f} "
            f"{med('stitching_s'):>8.3f} {med('total_s'):>8.3f}"
        )
    return "\n".join(lines)
