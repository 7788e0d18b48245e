"""Command-line front end: detect, match, stitch, mosaic, bench."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .bench import format_table, parse_bench_spec, rows_to_csv, run_bench
from .errors import ConfigError
from .imaging import load_image, save_png
from .mosaic import plan_and_stitch
from .pipeline import PipelineConfig, load_config, prepare_image, stitch_pair

EXIT_OK = 0
EXIT_REGISTRATION_FAILURE = 2
EXIT_PARTIAL_MOSAIC = 3
EXIT_CONFIG_ERROR = 4


def _config_parent() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(add_help=False)
    p.add_argument("--config", help="flat `key = value` config file")
    p.add_argument("--alpha", help="ramp coefficient, or `auto`")
    p.add_argument("--window-min", type=int, dest="window_min")
    p.add_argument("--window-max", type=int, dest="window_max")
    p.add_argument("--beta0", type=float)
    p.add_argument("--d", type=int, dest="d")
    p.add_argument(
        "--no-orientation",
        action="store_const",
        const=False,
        dest="orientation_normalize",
        help="disable dominant-orientation normalization",
    )
    p.add_argument("--delta-s", type=float, dest="delta_s")
    p.add_argument(
        "--match-strategy",
        choices=["nearest_neighbor", "threshold_all"],
        dest="match_strategy",
    )
    p.add_argument("--ransac-iters", type=int, dest="ransac_iters")
    p.add_argument("--ransac-tol", type=float, dest="ransac_tol")
    p.add_argument("--min-inliers", type=int, dest="min_inliers")
    p.add_argument("--seed", type=int)
    p.add_argument("--threads", type=int)
    p.add_argument("--blend", choices=["feather", "overwrite"])
    p.add_argument("--resample", choices=["bilinear", "nearest"])
    return p


def build_config(args: argparse.Namespace) -> PipelineConfig:
    cfg = load_config(args.config) if args.config else PipelineConfig()
    overrides = {}
    for name in (
        "window_min",
        "window_max",
        "beta0",
        "d",
        "orientation_normalize",
        "delta_s",
        "match_strategy",
        "ransac_iters",
        "ransac_tol",
        "min_inliers",
        "seed",
        "threads",
        "blend",
        "resample",
    ):
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    if getattr(args, "alpha", None) is not None:
        raw = args.alpha
        try:
            overrides["alpha"] = None if raw.lower() in ("auto", "none") else float(raw)
        except ValueError:
            raise ConfigError(f"--alpha must be a number or `auto`, got {raw!r}") from None
    return cfg.with_overrides(overrides)


def _write_lines(lines, path) -> None:
    text = "\n".join(lines) + ("\n" if lines else "")
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_detect(args) -> int:
    cfg = build_config(args)
    lines = []
    for path in args.images:
        prep = prepare_image(load_image(path), cfg)
        for k, fp in enumerate(prep.described.features):
            record = {
                "image_id": prep.image.image_id,
                "row": fp.row,
                "col": fp.col,
                "scale": fp.scale,
                "polarity": fp.polarity,
                "value": fp.value,
            }
            if args.descriptors:
                record["descriptor"] = prep.described.descriptors[k].tolist()
            lines.append(json.dumps(record))
    _write_lines(lines, args.output)
    return EXIT_OK


def cmd_match(args) -> int:
    from .matcher import match_features

    cfg = build_config(args)
    prep_a = prepare_image(load_image(args.image_a), cfg)
    prep_b = prepare_image(load_image(args.image_b), cfg)
    pairs = match_features(prep_a.described, prep_b.described, cfg.matcher_config())
    lines = [
        json.dumps({"p1": list(m.p1), "p2": list(m.p2), "delta": m.delta})
        for m in pairs
    ]
    _write_lines(lines, args.output)
    return EXIT_OK


def cmd_stitch(args) -> int:
    cfg = build_config(args)
    result = stitch_pair(load_image(args.image_a), load_image(args.image_b), cfg)
    report_text = json.dumps(result.report, indent=2)
    if args.report:
        Path(args.report).write_text(report_text + "\n", encoding="utf-8")
    else:
        print(report_text)
    if result.success and result.composite is not None and args.output:
        save_png(args.output, result.composite)
    if not result.success:
        print("registration failed: no transform with sufficient consensus", file=sys.stderr)
        return EXIT_REGISTRATION_FAILURE
    return EXIT_OK


def _collect_inputs(inputs: list[str]) -> list[str]:
    if len(inputs) == 1 and Path(inputs[0]).is_dir():
        exts = {".png", ".jpg", ".jpeg", ".pgm"}
        found = sorted(
            str(p) for p in Path(inputs[0]).iterdir() if p.suffix.lower() in exts
        )
        if not found:
            raise ConfigError(f"no images found in directory {inputs[0]}")
        return found
    return inputs


def cmd_mosaic(args) -> int:
    cfg = build_config(args)
    paths = _collect_inputs(args.inputs)
    if len(paths) < 2:
        raise ConfigError("mosaic needs at least 2 input images")
    images = []
    seen = set()
    for path in paths:
        img = load_image(path)
        if img.image_id in seen:
            img = type(img)(pixels=img.pixels, image_id=f"{img.image_id}#{len(seen)}")
        seen.add(img.image_id)
        images.append(img)

    plan, composite = plan_and_stitch(images, cfg)
    plan_doc = {
        "rounds": [
            {"reference_id": r.reference_id, "stitched_ids": r.stitched_ids}
            for r in plan.rounds
        ],
        "final_unmatched": plan.final_unmatched,
        "pair_inliers": {f"{a}|{b}": n for (a, b), n in sorted(plan.pair_inliers.items())},
        "stage_seconds": plan.stage_seconds,
        "total_seconds": plan.total_seconds,
    }
    if args.plan:
        Path(args.plan).write_text(json.dumps(plan_doc, indent=2) + "\n", encoding="utf-8")
    else:
        print(json.dumps(plan_doc, indent=2))
    if args.output:
        save_png(args.output, composite)
    if plan.final_unmatched:
        print(f"unmatched images: {', '.join(plan.final_unmatched)}", file=sys.stderr)
        return EXIT_PARTIAL_MOSAIC
    return EXIT_OK


def cmd_bench(args) -> int:
    cfg = build_config(args)
    spec = parse_bench_spec(args.spec)
    rows = run_bench(spec, cfg)
    if args.output:
        Path(args.output).write_text(rows_to_csv(rows), encoding="utf-8")
    print(format_table(rows))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    parent = _config_parent()
    parser = argparse.ArgumentParser(
        prog="peakstitch",
        description="Window-extremum feature detection and image stitching",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("detect", parents=[parent], help="dump feature points as JSON lines")
    p.add_argument("images", nargs="+")
    p.add_argument("--descriptors", action="store_true", help="include descriptor vectors")
    p.add_argument("-o", "--output", help="write JSON lines here instead of stdout")
    p.set_defaults(func=cmd_detect)

    p = sub.add_parser("match", parents=[parent], help="dump matched pairs as JSON lines")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("-o", "--output", help="write JSON lines here instead of stdout")
    p.set_defaults(func=cmd_match)

    p = sub.add_parser("stitch", parents=[parent], help="stitch two images")
    p.add_argument("image_a")
    p.add_argument("image_b")
    p.add_argument("-o", "--output", help="composite PNG path")
    p.add_argument("--report", help="JSON run report path")
    p.set_defaults(func=cmd_stitch)

    p = sub.add_parser("mosaic", parents=[parent], help="stitch many images without layout")
    p.add_argument("inputs", nargs="+", help="image files or one directory")
    p.add_argument("-o", "--output", help="composite PNG path")
    p.add_argument("--plan", help="mosaic plan JSON path")
    p.set_defaults(func=cmd_mosaic)

    p = sub.add_parser("bench", parents=[parent], help="run the synthetic benchmark")
    p.add_argument("spec", help="benchmark description JSON file")
    p.add_argument("-o", "--output", help="CSV results path")
    p.set_defaults(func=cmd_bench)

    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR


if __name__ == "__main__":
    sys.exit(main())
