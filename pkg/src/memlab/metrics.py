"""Statistical image descriptors: intensity stats, mean gradient, CIELAB
gamut volume, multilevel perceptual contrast, and class-mean histograms.

Masked variants exclude background pixels: a pixel is included when its mask
weight is >= 0.5. Intensity statistics are computed on Rec. 709 luma of the
gamma-encoded values, range [0, 255].
"""

from __future__ import annotations

import enum
import functools
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.spatial import ConvexHull, QhullError

from . import imagecore
from .errors import ContractError, EmptyDomainError, ParameterError
from .imagecore import Encoding, Image, Mask, ScalarField

HULL_POINT_CAP = 50_000


@dataclass(frozen=True)
class StatsRecord:
    """One descriptor row: mean, std, mean gradient, gamut volume, contrast."""

    mean: float
    std: float
    mean_grad: float
    gamut_volume: float
    wlf: float


class Normalization(enum.Enum):
    COUNTS = "counts"
    PROBABILITY = "probability"


@dataclass(frozen=True)
class Histogram:
    """256-bin luma histogram (bin index = luma rounded to nearest integer)."""

    bins: np.ndarray
    normalization: Normalization

    def __post_init__(self):
        if self.bins.shape != (256,):
            raise ContractError("histogram must have exactly 256 bins")


def _inclusion(img: Image, mask: Optional[Mask]) -> Optional[np.ndarray]:
    if mask is None:
        return None
    if (mask.width, mask.height) != (img.width, img.height):
        raise ContractError(
            f"mask {mask.width}x{mask.height} does not match "
            f"image {img.width}x{img.height}"
        )
    return mask.weights >= 0.5


def _included_values(plane: np.ndarray, included: Optional[np.ndarray]) -> np.ndarray:
    vals = plane.ravel() if included is None else plane[included]
    if vals.size == 0:
        raise EmptyDomainError("no included pixels")
    return vals


def luma_field(img: Image, mask: Optional[Mask] = None) -> ScalarField:
    """Rec. 709 luma per pixel in [0, 255]; the mask only checks dimensions."""
    if img.encoding is not Encoding.SRGB8:
        raise ContractError(f"luma_field takes SRGB8, got {img.encoding.name}")
    _inclusion(img, mask)
    return ScalarField.from_array(imagecore.luma_plane(img))


def intensity_stats(img: Image, mask: Optional[Mask] = None) -> tuple[float, float]:
    """Population mean and standard deviation of the masked luma field."""
    vals = _included_values(imagecore.luma_plane(img), _inclusion(img, mask))
    return float(np.mean(vals)), float(np.std(vals))


def mean_gradient(img: Image, mask: Optional[Mask] = None) -> float:
    """Mean central-difference gradient magnitude over included pixels."""
    grad = imagecore.gradient_magnitude(img).values
    return float(np.mean(_included_values(grad, _inclusion(img, mask))))


def _lab_points(img: Image, included: Optional[np.ndarray]) -> np.ndarray:
    if img.encoding is Encoding.SRGB8:
        lab = imagecore.srgb_array_to_lab(img.data)
    elif img.encoding is Encoding.CIELAB_F:
        lab = img.data
    else:
        raise ContractError("gamut_volume takes SRGB8 or CIELAB_F images")
    pts = lab.reshape(-1, 3) if included is None else lab[included]
    if pts.size == 0:
        raise EmptyDomainError("no included pixels")
    return pts


def gamut_volume(img: Image, mask: Optional[Mask] = None, seed: int = 0) -> float:
    """Volume of the 3-D convex hull of the pixels' (L*, a*, b*) cloud.

    Duplicate points are removed first; degenerate clouds (fewer than four
    unique points, collinear or coplanar) have volume 0. Above
    HULL_POINT_CAP unique points the cloud is subsampled uniformly with the
    given seed so cost stays bounded and results stay reproducible.
    """
    pts = np.unique(_lab_points(img, _inclusion(img, mask)), axis=0)
    if len(pts) < 4:
        return 0.0
    if len(pts) > HULL_POINT_CAP:
        rng = np.random.default_rng(seed)
        idx = np.sort(rng.choice(len(pts), HULL_POINT_CAP, replace=False))
        pts = pts[idx]
    # collinear/coplanar clouds (up to float fuzz) have no volume
    sv = np.linalg.svd(pts - pts.mean(axis=0), compute_uv=False)
    if sv[-1] <= 1e-9 * max(sv[0], 1.0):
        return 0.0
    try:
        return float(ConvexHull(pts).volume)
    except QhullError:
        return 0.0  # flat simplex despite the rank check


@functools.lru_cache(maxsize=1)
def srgb_gamut_hull_volume() -> float:
    """Hull volume of the full 8-bit sRGB cube surface mapped to CIELAB.

    Upper bound for gamut_volume of any 8-bit image: every pixel lies inside
    the hull of the cube boundary's image.
    """
    axis = np.arange(256, dtype=np.float64)
    grid = np.stack(np.meshgrid(axis, axis, indexing="ij"), axis=-1).reshape(-1, 2)
    faces = []
    for fixed in (0.0, 255.0):
        col = np.full((len(grid), 1), fixed)
        faces.append(np.hstack([col, grid]))
        faces.append(np.hstack([grid[:, :1], col, grid[:, 1:]]))
        faces.append(np.hstack([grid, col]))
    pts = np.unique(np.vstack(faces), axis=0)
    return float(ConvexHull(imagecore.srgb_array_to_lab(pts)).volume)


def _block_average(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    h2, w2 = h // 2, w // 2
    p = plane[: 2 * h2, : 2 * w2]
    return (p[0::2, 0::2] + p[0::2, 1::2] + p[1::2, 0::2] + p[1::2, 1::2]) / 4.0


def _neighborhood_contrast(plane: np.ndarray,
                           included: Optional[np.ndarray]) -> float:
    """Mean over included pixels of mean |difference| to valid 8-neighbors.

    Out-of-bounds and excluded neighbors do not participate; a pixel with no
    valid neighbor contributes 0.
    """
    h, w = plane.shape
    work = plane.astype(np.float64).copy()
    if included is not None:
        work[~included] = np.nan
    padded = np.pad(work, 1, constant_values=np.nan)
    acc = np.zeros((h, w))
    cnt = np.zeros((h, w))
    for dy in (-1, 0, 1):
        for dx in (-1, 0, 1):
            if dy == 0 and dx == 0:
                continue
            nb = padded[1 + dy:1 + dy + h, 1 + dx:1 + dx + w]
            valid = ~np.isnan(nb)
            diff = np.where(valid, np.abs(work - nb), 0.0)
            acc += np.where(valid, diff, 0.0)
            cnt += valid
    per_pixel = np.where(cnt > 0, acc / np.maximum(cnt, 1), 0.0)
    if included is None:
        return float(np.mean(per_pixel))
    return float(np.mean(per_pixel[included]))


def wlf_contrast(img: Image, mask: Optional[Mask] = None,
                 levels: Optional[int] = None,
                 channel_weights: Sequence[float] = (1 / 3, 1 / 3, 1 / 3)) -> float:
    """Pyramid perceptual contrast in raw CIELAB units.

    The image is converted to CIELAB, reduced by 2x2 block averaging while
    the smaller dimension stays >= 8 (or to an explicit level count), and at
    every level each channel's 8-neighborhood mean absolute difference is
    averaged over pixels. Channels combine by ``channel_weights``; levels are
    averaged with equal weight. No 0-255 rescaling is applied to L*.
    """
    if min(img.width, img.height) < 8:
        raise ParameterError("wlf_contrast needs images of at least 8x8")
    if len(channel_weights) != 3:
        raise ParameterError("channel_weights must have 3 entries")
    if img.encoding is Encoding.SRGB8:
        lab = imagecore.srgb_array_to_lab(img.data)
    elif img.encoding is Encoding.CIELAB_F:
        lab = img.data.astype(np.float64)
    else:
        raise ContractError("wlf_contrast takes SRGB8 or CIELAB_F images")

    included = _inclusion(img, mask)
    if included is not None and not included.any():
        raise EmptyDomainError("no included pixels")
    max_levels = 1
    h, w = img.height, img.width
    while min(h // 2, w // 2) >= 8:
        h, w = h // 2, w // 2
        max_levels += 1
    if levels is None:
        levels = max_levels
    elif levels < 1 or min(img.height, img.width) // 2 ** (levels - 1) < 1:
        raise ParameterError(f"infeasible level count {levels}")

    weights = np.asarray(channel_weights, dtype=np.float64)
    planes = [lab[:, :, c] for c in range(3)]
    inc = included
    inc_f = None if inc is None else inc.astype(np.float64)
    level_terms = []
    for level in range(levels):
        if level > 0:
            planes = [_block_average(p) for p in planes]
            if inc_f is not None:
                inc_f = _block_average(inc_f)
                inc = inc_f >= 0.5
                if not inc.any():
                    break  # mask vanished at this scale; stop descending
        term = sum(
            weights[c] * _neighborhood_contrast(planes[c], inc) for c in range(3)
        )
        level_terms.append(term)
    return float(np.mean(level_terms))


def mean_histogram(imgs: Iterable[Image], mask: Optional[Mask] = None) -> Histogram:
    """Average of the per-image 256-bin probability histograms of masked luma."""
    total = np.zeros(256, dtype=np.float64)
    count = 0
    for img in imgs:
        vals = _included_values(imagecore.luma_plane(img), _inclusion(img, mask))
        idx = np.clip(np.rint(vals), 0, 255).astype(np.intp)
        hist = np.bincount(idx, minlength=256).astype(np.float64)
        total += hist / hist.sum()
        count += 1
    if count == 0:
        raise ContractError("mean_histogram needs at least one image")
    return Histogram(bins=total / count, normalization=Normalization.PROBABILITY)


def stats_record(img: Image, mask: Optional[Mask] = None,
                 seed: int = 0) -> StatsRecord:
    """Bundle the five descriptors; gamut volume stays in raw cubic units."""
    mean, std = intensity_stats(img, mask)
    return StatsRecord(
        mean=mean,
        std=std,
        mean_grad=mean_gradient(img, mask),
        gamut_volume=gamut_volume(img, mask, seed=seed),
        wlf=wlf_contrast(img, mask),
    )


METRICS_CSV_HEADER = "image_id,mean,std,mean_grad,gamut_volume,wlf"


def write_metrics_csv(rows: dict[str, StatsRecord], path) -> None:
    """Per-image descriptor table; volume in raw cubic CIELAB units."""
    lines = [METRICS_CSV_HEADER]
    for image_id in sorted(rows):
        r = rows[image_id]
        lines.append(
            f"{image_id},{r.mean!r},{r.std!r},{r.mean_grad!r},"
            f"{r.gamut_volume!r},{r.wlf!r}"
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def write_histogram_csv(hist: Histogram, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("bin,value\n")
        for i, v in enumerate(hist.bins):
            fh.write(f"{i},{float(v)!r}\n")


def format_class_row(label: str, rec: StatsRecord) -> str:
    """Presentation row for class summaries: volume scaled to 10^3 units."""
    return (
        f"{label},{rec.mean:.1f},{rec.std:.1f},{rec.mean_grad:.1f},"
        f"{rec.gamut_volume / 1000.0:.1f},{rec.wlf:.1f}"
    )


CLASS_CSV_HEADER = "class,mean,std,mean_grad,gamut_volume_1e3,wlf"
