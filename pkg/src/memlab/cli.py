"""Single command-line entry point for all pipelines.

Exit codes: 0 success, 1 usage error, 2 data/protocol error. All subcommands
are non-interactive; randomized subsampling honors --seed and defaults to a
fixed seed so outputs are CI-reproducible.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from . import analysis, edits, faceprep, imagecore, labels, metrics, predictor
from .errors import MemlabError


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(message)


_OP_ALIASES = {op.value.lower(): op for op in edits.EditOp}


def _resolve_op(name: str) -> edits.EditOp:
    key = name.replace("-", "").replace("_", "").lower()
    if key not in _OP_ALIASES:
        raise _UsageError(f"unknown op {name!r}; choose from "
                          + ", ".join(sorted(_OP_ALIASES)))
    return _OP_ALIASES[key]


def _predictor_from_args(args) -> predictor.PredictorHandle:
    spec = args.predictor or os.environ.get("MEMLAB_PREDICTOR_CMD")
    if spec is None:
        raise _UsageError("no predictor given (use --predictor or "
                          "MEMLAB_PREDICTOR_CMD)")
    if spec == args.predictor:
        return predictor.parse_handle(spec)
    return predictor.PredictorHandle.command(spec)


def _build_parser() -> _Parser:
    parser = _Parser(prog="memlab",
                     description="photo-editing memorability experiment toolkit")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    p = sub.add_parser("prep",
                       help="oval-mask, crop, and resize a directory of photos")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", dest="out_dir", required=True)
    p.add_argument("--axis-frac-x", type=float, default=0.80)
    p.add_argument("--axis-frac-y", type=float, default=0.90)
    p.add_argument("--fill", default="255,255,255",
                   help="background RGB as r,g,b")
    p.add_argument("--out-size", type=int, default=128)
    p.add_argument("--feather", type=float, default=0.02)

    p = sub.add_parser("edit",
                       help="apply one editing operator to an image file")
    p.add_argument("input")
    p.add_argument("output")
    p.add_argument("--op")
    p.add_argument("--recipe", help="recipe JSON file (first entry is used)")
    p.add_argument("--mask", help="mask image for the background operators")
    for flag in ("--amount", "--sigma", "--darken", "--strength", "--kelvin",
                 "--radius-frac", "--inner"):
        p.add_argument(flag, type=float, default=None)

    p = sub.add_parser("metrics",
                       help="descriptor CSV for a directory of images")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--oval", action="store_true",
                   help="exclude the area outside the standard oval mask")
    p.add_argument("--mask", help="explicit mask image applied to every file")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("bin",
                       help="percentile-threshold scores into low/med/high")
    p.add_argument("--scores", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--low-frac", type=float, default=0.10)
    p.add_argument("--high-frac", type=float, default=0.10)

    p = sub.add_parser("predict",
                       help="score a directory of images to a CSV")
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--predictor", default=None,
                   help="stub | store:<csv> | cmd:<command>")
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)

    p = sub.add_parser("experiment",
                       help="apply recipes to a dataset and report score deltas")
    p.add_argument("--images", required=True,
                   help="image directory or prep manifest CSV")
    p.add_argument("--recipes", required=True,
                   help="recipe JSON file, or 'defaults' for all nine operators")
    p.add_argument("--out", required=True)
    p.add_argument("--predictor", default=None)
    p.add_argument("--workers", type=int, default=os.cpu_count() or 1)
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("class-analysis",
                       help="per-class descriptor means and histograms")
    p.add_argument("--labels", required=True)
    p.add_argument("--images", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--no-oval", action="store_true",
                   help="use whole images instead of the oval interior")
    p.add_argument("--seed", type=int, default=0)

    p = sub.add_parser("report",
                       help="re-render summary and charts from a run manifest")
    p.add_argument("--manifest", required=True)
    p.add_argument("--out", required=True)

    return parser


def _cmd_prep(args) -> int:
    fill = tuple(int(v) for v in args.fill.split(","))
    cfg = faceprep.PrepConfig(
        axis_frac_x=args.axis_frac_x, axis_frac_y=args.axis_frac_y,
        fill=fill, out_size=args.out_size, feather=args.feather,
    )
    rows = faceprep.prepare_dataset(args.in_dir, args.out_dir, cfg)
    ok = sum(1 for r in rows if r["status"].startswith("ok"))
    print(f"prepared {ok}/{len(rows)} files -> {args.out_dir}")
    return 0


_PARAM_FLAGS = ("amount", "sigma", "darken", "strength", "kelvin",
                "radius_frac", "inner")


def _cmd_edit(args) -> int:
    if args.recipe:
        recipe = edits.load_recipes(args.recipe)[0]
    elif args.op:
        recipe = edits.EditRecipe(op=_resolve_op(args.op))
    else:
        raise _UsageError("edit needs --op or --recipe")
    # precedence: explicit flag > recipe file > operator default
    overrides = {}
    for name in _PARAM_FLAGS:
        value = getattr(args, name)
        if value is not None:
            overrides[name] = value
    if args.op and args.recipe:
        recipe = edits.EditRecipe(op=_resolve_op(args.op), params=recipe.params,
                                  mask=recipe.mask)
    if overrides:
        allowed = set(edits.DEFAULT_PARAMS[recipe.op])
        params = dict(recipe.params)
        params.update({k: v for k, v in overrides.items() if k in allowed})
        recipe = edits.EditRecipe(op=recipe.op, params=params, mask=recipe.mask)
    mask = None
    if args.mask:
        mask = imagecore.mask_from_image(imagecore.decode_image(args.mask))
    img = imagecore.decode_image(args.input)
    imagecore.encode_image(edits.apply_recipe(img, recipe, mask=mask), args.output)
    return 0


def _cmd_metrics(args) -> int:
    paths = analysis.discover_images(args.images)
    rows = {}
    mask_cache: dict[tuple[int, int], imagecore.Mask] = {}
    explicit = None
    if args.mask:
        explicit = imagecore.mask_from_image(imagecore.decode_image(args.mask))
    for p in paths:
        img = imagecore.decode_image(p)
        mask = explicit
        if mask is None and args.oval:
            key = (img.width, img.height)
            if key not in mask_cache:
                mask_cache[key] = faceprep.make_oval_mask(
                    img.width, img.height, faceprep.PrepConfig()
                )
            mask = mask_cache[key]
        rows[predictor.image_id_for(p)] = metrics.stats_record(
            img, mask, seed=args.seed
        )
    metrics.write_metrics_csv(rows, args.out)
    print(f"wrote {len(rows)} descriptor rows -> {args.out}")
    return 0


def _cmd_bin(args) -> int:
    table = predictor.load_score_csv(args.scores)
    split = labels.SplitSpec(low_frac=args.low_frac, high_frac=args.high_frac)
    labeled, thresholds = labels.bin_dataset(table, split)
    labels.save_label_csv(labeled, thresholds, args.out)
    print(f"thresholds: t_low={thresholds.t_low:.4f} "
          f"t_high={thresholds.t_high:.4f} -> {args.out}")
    return 0


def _cmd_predict(args) -> int:
    handle = _predictor_from_args(args)
    paths = analysis.discover_images(args.images)
    table = analysis._score_paths(handle, paths, args.workers)
    predictor.save_score_csv(table, args.out)
    print(f"scored {len(table)} images -> {args.out}")
    return 0


def _cmd_experiment(args) -> int:
    handle = _predictor_from_args(args)
    if args.recipes == "defaults":
        pairs = [(analysis.tool_name(r), r) for r in edits.default_recipes()]
    else:
        with open(args.recipes, "r", encoding="utf-8") as fh:
            raw = json.load(fh)
        objs = raw if isinstance(raw, list) else [raw]
        pairs = analysis.expand_recipes(objs)
    cfg = analysis.ExperimentConfig(
        images=args.images, recipes=pairs, predictor=handle,
        out_dir=args.out, workers=args.workers, seed=args.seed,
    )
    report = analysis.run_edit_experiment(cfg)
    analysis.emit_report(report, args.out)
    print(f"experiment over {report.image_count} images, "
          f"{len(report.results)} recipes -> {args.out}")
    return 0


def _cmd_class_analysis(args) -> int:
    labeled = labels.load_label_csv(args.labels)
    analysis.class_analysis(labeled, args.images, args.out,
                            apply_oval=not args.no_oval, seed=args.seed)
    print(f"class analysis -> {args.out}")
    return 0


def _cmd_report(args) -> int:
    analysis.rerender_from_manifest(args.manifest, args.out)
    print(f"re-rendered report -> {args.out}")
    return 0


_COMMANDS = {
    "prep": _cmd_prep,
    "edit": _cmd_edit,
    "metrics": _cmd_metrics,
    "bin": _cmd_bin,
    "predict": _cmd_predict,
    "experiment": _cmd_experiment,
    "class-analysis": _cmd_class_analysis,
    "report": _cmd_report,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        try:
            args = parser.parse_args(argv)
        except SystemExit as exc:  # --help exits 0 through here
            return int(exc.code or 0)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return 1
        return _COMMANDS[args.command](args)
    except _UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 1
    except (MemlabError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


def entrypoint() -> None:
    raise SystemExit(main())


if __name__ == "__main__":
    entrypoint()
