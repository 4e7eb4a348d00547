"""Experiment runner and paired-score statistics.

run_edit_experiment scores a dataset once, applies each recipe to every
image, scores the edited copies from temporary files, and reports per-recipe
delta statistics. Aggregation is always over id-sorted collections, so
results do not depend on worker count, and no wall-clock data enters the
emitted files: a run is bit-reproducible given a deterministic predictor.
"""

from __future__ import annotations

import json
import re
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import faceprep, imagecore, labels, metrics, svgchart
from .edits import EditOp, EditRecipe
from .edits import apply_recipe as _apply_recipe
from .errors import ContractError, MemlabError, PredictorError
from .labels import MemClass
from .metrics import Histogram, StatsRecord
from .predictor import (
    PredictorHandle,
    PredictorKind,
    ScoreTable,
    image_id_for,
    predict_batch,
)

IMAGE_SUFFIXES = (".png", ".jpg", ".jpeg")


@dataclass(frozen=True)
class DeltaStats:
    """Paired score-change statistics (edited minus original)."""

    mean: float
    std: float
    median: float
    p5: float
    p95: float
    n: int
    direction_positive_frac: float


def delta_stats(original: Sequence[float], edited: Sequence[float]) -> DeltaStats:
    """Statistics of edited[i] - original[i]; std is the population form."""
    if len(original) != len(edited):
        raise ContractError("paired score lists must have equal length")
    if not original:
        raise ContractError("paired score lists must be nonempty")
    deltas = np.asarray(edited, dtype=np.float64) - np.asarray(original,
                                                               dtype=np.float64)
    dl = deltas.tolist()
    return DeltaStats(
        mean=float(np.mean(deltas)),
        std=float(np.std(deltas)),
        median=labels.percentile(dl, 50.0),
        p5=labels.percentile(dl, 5.0),
        p95=labels.percentile(dl, 95.0),
        n=len(dl),
        direction_positive_frac=float(np.count_nonzero(deltas > 0) / len(dl)),
    )


def direction_fraction(deltas: Sequence[float], expected_sign: int) -> float:
    """Fraction of deltas with the expected strict sign; zeros never count."""
    if expected_sign not in (-1, 1):
        raise ContractError("expected_sign must be +1 or -1")
    if not len(deltas):
        raise ContractError("direction_fraction of an empty list")
    arr = np.asarray(deltas, dtype=np.float64)
    hits = arr > 0 if expected_sign > 0 else arr < 0
    return float(np.count_nonzero(hits) / arr.size)


def select_reliable_subset(predicted: ScoreTable, reference: ScoreTable,
                           n: int) -> tuple[ScoreTable, float, float]:
    """The n overlapping ids with smallest |predicted - reference| error.

    Ties at the cutoff go to lexicographically smaller ids. Returns the
    selected predicted scores plus (max, mean) absolute error over them.
    """
    common = sorted(set(predicted) & set(reference))
    if len(common) < n:
        raise ContractError(
            f"need {n} overlapping ids, only {len(common)} available"
        )
    ranked = sorted(common, key=lambda k: (abs(predicted[k] - reference[k]), k))
    chosen = ranked[:n]
    errs = [abs(predicted[k] - reference[k]) for k in chosen]
    table = {k: predicted[k] for k in sorted(chosen)}
    return table, (max(errs) if errs else 0.0), (sum(errs) / n if n else 0.0)


# ---------------------------------------------------------------------------
# Experiment runner


@dataclass(frozen=True)
class ExperimentConfig:
    images: str                      # dataset directory or a prep manifest CSV
    recipes: list[tuple[str, EditRecipe]]   # (label, recipe) incl. sweep points
    predictor: PredictorHandle
    out_dir: str
    workers: int = 1
    seed: int = 0

    def __post_init__(self):
        if not self.recipes:
            raise ContractError("experiment needs at least one recipe")
        if self.workers < 1:
            raise ContractError("workers must be >= 1")


@dataclass
class RecipeResult:
    label: str
    slug: str
    recipe: EditRecipe
    rows: list[tuple[str, float, float, float]]  # id, original, edited, delta
    stats: Optional[DeltaStats]
    failures: list[tuple[str, str]] = field(default_factory=list)
    aborted: Optional[str] = None


@dataclass
class ExperimentReport:
    config: ExperimentConfig
    image_count: int
    results: list[RecipeResult]


_TOOL_NAMES = {
    EditOp.SHARPEN: "Sharpening",
    EditOp.BLUR_BACKGROUND: "Background blurring",
    EditOp.BLUR_DARKEN_BACKGROUND: "BG blurring + darkening",
    EditOp.GRAYSCALE: "Grayscale",
    EditOp.CONTRAST: "Contrast increasing",
    EditOp.VIBRANCE: "Vibrance (Saturation)",
    EditOp.CLARITY: "Clarity (Structure)",
    EditOp.VIGNETTE: "Vignetting",
}


def tool_name(recipe: EditRecipe) -> str:
    if recipe.op is EditOp.COLOR_TEMPERATURE:
        kelvin = recipe.resolved_params()["kelvin"]
        return f"Color temperature {kelvin:g}K"
    return _TOOL_NAMES[recipe.op]


def _slugify(text: str) -> str:
    return re.sub(r"[^a-z0-9]+", "-", text.lower()).strip("-")


def expand_recipes(raw_objs: list[dict]) -> list[tuple[str, EditRecipe]]:
    """Recipe JSON objects -> (label, recipe) pairs, expanding ``sweep``.

    ``sweep`` maps a parameter name to a list of values; each value becomes
    its own labeled experiment point.
    """
    out: list[tuple[str, EditRecipe]] = []
    for obj in raw_objs:
        base = EditRecipe.from_json_obj(obj)
        sweep = obj.get("sweep") if isinstance(obj, dict) else None
        if not sweep:
            out.append((tool_name(base), base))
            continue
        for param, values in sorted(sweep.items()):
            for value in values:
                params = dict(base.params)
                params[param] = float(value)
                swept = EditRecipe(op=base.op, params=params, mask=base.mask)
                out.append((f"{tool_name(base)} [{param}={value:g}]", swept))
    return out


def discover_images(source) -> list[Path]:
    """Dataset paths from a directory (sorted) or a prep manifest CSV.

    File stems are the image ids, so they must be unique within a dataset.
    """
    src = Path(source)
    if src.is_dir():
        paths = sorted(p for p in src.iterdir()
                       if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES)
    elif src.is_file():
        paths = faceprep.load_manifest_outputs(src)
    else:
        raise FileNotFoundError(f"dataset not found: {source}")
    seen: dict[str, Path] = {}
    for p in paths:
        if p.stem in seen:
            raise ContractError(
                f"duplicate image id {p.stem!r}: {seen[p.stem]} vs {p}"
            )
        seen[p.stem] = p
    return paths


def _score_paths(handle: PredictorHandle, paths: list[Path],
                 workers: int) -> ScoreTable:
    if not paths:
        return {}
    if handle.kind is PredictorKind.STUB and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            scores = list(pool.map(
                lambda p: predict_batch(handle, [p]), paths
            ))
        merged: ScoreTable = {}
        for part in scores:
            merged.update(part)
        return merged
    if handle.kind is PredictorKind.EXTERNAL_COMMAND and workers > 1:
        shards = [list(s) for s in np.array_split(np.asarray(paths, dtype=object),
                                                  workers) if len(s)]
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(lambda s: predict_batch(handle, s), shards))
        merged = {}
        for part in parts:
            merged.update(part)
        return merged
    return predict_batch(handle, paths)


def _edit_one(path: Path, recipe: EditRecipe, out_dir: Path):
    img = imagecore.decode_image(path)
    edited = _apply_recipe(img, recipe)
    target = out_dir / (path.stem + ".png")
    imagecore.encode_image(edited, target)
    return target


def _score_originals(cfg: ExperimentConfig,
                     paths: list[Path]) -> tuple[ScoreTable, list[tuple[str, str]]]:
    """Original scores plus per-image failures (undecodable files etc.).

    Only the stub decodes images in-process, so only there can a single bad
    file be isolated; store lookups and external commands fail as a batch.
    """
    if cfg.predictor.kind is not PredictorKind.STUB:
        return _score_paths(cfg.predictor, paths, cfg.workers), []

    def _one(path: Path):
        try:
            return path, predict_batch(cfg.predictor, [path]), None
        except (MemlabError, OSError) as exc:
            return path, None, f"{type(exc).__name__}: {exc}"

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
            scored = list(pool.map(_one, paths))
    else:
        scored = [_one(p) for p in paths]
    table: ScoreTable = {}
    failures = []
    for path, part, err in scored:
        if err is None:
            table.update(part)
        else:
            failures.append((image_id_for(path), err))
    return table, failures


def run_edit_experiment(cfg: ExperimentConfig) -> ExperimentReport:
    """Score originals once, then edit + score per recipe.

    Per-image failures are excluded from the statistics and recorded; a
    predictor protocol failure aborts only the affected recipe.
    """
    all_paths = discover_images(cfg.images)
    originals, global_failures = _score_originals(cfg, all_paths)
    paths = [p for p in all_paths if image_id_for(p) in originals]

    results: list[RecipeResult] = []
    for label, recipe in cfg.recipes:
        slug = _slugify(label)
        failures: list[tuple[str, str]] = list(global_failures)
        with tempfile.TemporaryDirectory(prefix="memlab-edit-") as tmp:
            tmp_dir = Path(tmp)

            def _safe_edit(path: Path):
                try:
                    return path, _edit_one(path, recipe, tmp_dir), None
                except (MemlabError, OSError) as exc:
                    return path, None, f"{type(exc).__name__}: {exc}"

            if cfg.workers > 1:
                with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                    edited = list(pool.map(_safe_edit, paths))
            else:
                edited = [_safe_edit(p) for p in paths]

            ok_paths = []
            for path, target, err in edited:
                if err is None:
                    ok_paths.append(target)
                else:
                    failures.append((image_id_for(path), err))

            try:
                edited_scores = _score_paths(cfg.predictor, ok_paths, cfg.workers)
            except (PredictorError, MemlabError, OSError) as exc:
                results.append(RecipeResult(
                    label=label, slug=slug, recipe=recipe, rows=[], stats=None,
                    failures=failures, aborted=f"{type(exc).__name__}: {exc}",
                ))
                continue

        rows = []
        for target in ok_paths:
            image_id = image_id_for(target)
            if image_id not in originals:
                failures.append((image_id, "missing original score"))
                continue
            orig = originals[image_id]
            new = edited_scores[image_id]
            rows.append((image_id, orig, new, new - orig))
        rows.sort(key=lambda r: (-r[1], r[0]))
        stats = delta_stats([r[1] for r in rows], [r[2] for r in rows]) \
            if rows else None
        results.append(RecipeResult(
            label=label, slug=slug, recipe=recipe, rows=rows, stats=stats,
            failures=sorted(failures),
        ))
    return ExperimentReport(config=cfg, image_count=len(all_paths), results=results)


# ---------------------------------------------------------------------------
# Report emission

SUMMARY_HEADER = "tool,mean,std,median,p5,p95,direction_frac,n"
ROWS_HEADER = "image_id,original_score,edited_score,delta"


def format_summary_row(tool: str, st: DeltaStats) -> str:
    return (
        f"{tool},{st.mean:+.3f},{st.std:.3f},{st.median:+.3f},"
        f"{st.p5:.3f},{st.p95:.3f},{st.direction_positive_frac:.3f},{st.n}"
    )


def emit_report(report: ExperimentReport, out_dir) -> None:
    """Write summary CSV, per-recipe row CSVs, charts, and the run manifest."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)

    summary_lines = [SUMMARY_HEADER]
    manifest_entries = []
    for res in report.results:
        recipe_dir = out / "recipes" / res.slug
        recipe_dir.mkdir(parents=True, exist_ok=True)
        rows_path = recipe_dir / "rows.csv"
        with open(rows_path, "w", encoding="utf-8") as fh:
            fh.write(ROWS_HEADER + "\n")
            for image_id, orig, new, delta in res.rows:
                fh.write(f"{image_id},{orig!r},{new!r},{delta!r}\n")

        series_svg = svgchart.line_chart(
            [("original", [r[1] for r in res.rows]),
             ("edited", [r[2] for r in res.rows])],
            title=res.label,
        )
        (recipe_dir / "series.svg").write_text(series_svg, encoding="utf-8")
        deltas_svg = svgchart.range_bar_chart(
            [r[3] for r in res.rows], title=f"{res.label}: delta"
        )
        (recipe_dir / "deltas.svg").write_text(deltas_svg, encoding="utf-8")

        if res.stats is not None:
            summary_lines.append(format_summary_row(res.label, res.stats))
        manifest_entries.append({
            "label": res.label,
            "slug": res.slug,
            "recipe": res.recipe.to_json_obj(),
            "rows_csv": str(Path("recipes") / res.slug / "rows.csv"),
            "n": len(res.rows),
            "n_failed": len(res.failures),
            "failures": [{"image_id": i, "error": e} for i, e in res.failures],
            "aborted": res.aborted,
        })

    (out / "summary.csv").write_text("\n".join(summary_lines) + "\n",
                                     encoding="utf-8")
    from . import __version__

    manifest = {
        "version": __version__,
        "config": {
            "images": str(report.config.images),
            "out_dir": str(report.config.out_dir),
            "predictor": {
                "kind": report.config.predictor.kind.value,
                "source": report.config.predictor.source,
            },
            "workers": report.config.workers,
            "seed": report.config.seed,
        },
        "image_count": report.image_count,
        "recipes": manifest_entries,
    }
    with open(out / "run_manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2)
        fh.write("\n")


def rerender_from_manifest(manifest_path, out_dir) -> None:
    """Rebuild summary and charts from a saved run's row CSVs."""
    src = Path(manifest_path)
    base = src.parent
    with open(src, "r", encoding="utf-8") as fh:
        manifest = json.load(fh)

    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    summary_lines = [SUMMARY_HEADER]
    for entry in manifest["recipes"]:
        rows = []
        with open(base / entry["rows_csv"], "r", encoding="utf-8") as fh:
            header = fh.readline().rstrip("\n")
            if header != ROWS_HEADER:
                raise ContractError(f"bad rows header in {entry['rows_csv']}")
            for line in fh:
                image_id, orig, new, delta = line.rstrip("\n").split(",")
                rows.append((image_id, float(orig), float(new), float(delta)))
        recipe_dir = out / "recipes" / entry["slug"]
        recipe_dir.mkdir(parents=True, exist_ok=True)
        series_svg = svgchart.line_chart(
            [("original", [r[1] for r in rows]),
             ("edited", [r[2] for r in rows])],
            title=entry["label"],
        )
        (recipe_dir / "series.svg").write_text(series_svg, encoding="utf-8")
        deltas_svg = svgchart.range_bar_chart(
            [r[3] for r in rows], title=f"{entry['label']}: delta"
        )
        (recipe_dir / "deltas.svg").write_text(deltas_svg, encoding="utf-8")
        if rows:
            st = delta_stats([r[1] for r in rows], [r[2] for r in rows])
            summary_lines.append(format_summary_row(entry["label"], st))
    (out / "summary.csv").write_text("\n".join(summary_lines) + "\n",
                                     encoding="utf-8")


# ---------------------------------------------------------------------------
# Class analysis


def class_analysis(labeled: dict[str, tuple[float, MemClass]], image_dir,
                   out_dir, prep_cfg: Optional[faceprep.PrepConfig] = None,
                   apply_oval: bool = True,
                   seed: int = 0) -> dict[MemClass, tuple[StatsRecord, Histogram]]:
    """Per-class mean descriptors and mean histograms, oval region only.

    Emits a class-summary CSV (volume in 10^3 units) plus one histogram CSV
    per class; empty classes are skipped with a warning comment row.
    """
    img_dir = Path(image_dir)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = prep_cfg or faceprep.PrepConfig()

    members: dict[MemClass, list[str]] = {c: [] for c in MemClass}
    for image_id in sorted(labeled):
        members[labeled[image_id][1]].append(image_id)

    def _find(image_id: str) -> Path:
        for suffix in IMAGE_SUFFIXES:
            p = img_dir / (image_id + suffix)
            if p.is_file():
                return p
        raise FileNotFoundError(f"no image for id {image_id!r} in {img_dir}")

    results: dict[MemClass, tuple[StatsRecord, Histogram]] = {}
    lines = [metrics.CLASS_CSV_HEADER]
    for cls in MemClass:
        ids = members[cls]
        if not ids:
            lines.append(f"# warning: class {cls.label} is empty, skipped")
            continue
        records = []
        images = []
        mask_cache: dict[tuple[int, int], imagecore.Mask] = {}
        for image_id in ids:
            img = imagecore.decode_image(_find(image_id))
            key = (img.width, img.height)
            if apply_oval and key not in mask_cache:
                mask_cache[key] = faceprep.make_oval_mask(img.width, img.height, cfg)
            mask = mask_cache[key] if apply_oval else None
            records.append(metrics.stats_record(img, mask, seed=seed))
            images.append((img, mask))
        mean_record = StatsRecord(
            mean=float(np.mean([r.mean for r in records])),
            std=float(np.mean([r.std for r in records])),
            mean_grad=float(np.mean([r.mean_grad for r in records])),
            gamut_volume=float(np.mean([r.gamut_volume for r in records])),
            wlf=float(np.mean([r.wlf for r in records])),
        )
        # all class images share prepared dimensions in practice; histogram
        # uses each image's own mask via per-image accumulation
        total = np.zeros(256)
        for img, mask in images:
            hist = metrics.mean_histogram([img], mask)
            total += hist.bins
        histogram = Histogram(bins=total / len(images),
                              normalization=metrics.Normalization.PROBABILITY)
        results[cls] = (mean_record, histogram)
        lines.append(metrics.format_class_row(cls.label, mean_record))
        metrics.write_histogram_csv(histogram, out / f"hist_{cls.label}.csv")

    (out / "class_stats.csv").write_text("\n".join(lines) + "\n", encoding="utf-8")
    return results
