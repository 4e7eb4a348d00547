"""Synthetic test images: gradients, smoothed color textures, and
portrait-like ellipse cards.

Everything is seeded and mid-toned on purpose: the cards stay away from the
0/255 rails so operator effects (sharpening, contrast, vignetting) move the
descriptors monotonically instead of saturating.
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from . import imagecore
from .imagecore import Encoding, Image, round_to_u8


def gradient_card(size: int, horizontal: bool, lo=(40, 60, 90),
                  hi=(210, 180, 120)) -> Image:
    ramp = np.linspace(0.0, 1.0, size)
    t = ramp[np.newaxis, :, np.newaxis] if horizontal else ramp[:, np.newaxis, np.newaxis]
    t = np.broadcast_to(t, (size, size, 1))
    lo_c = np.asarray(lo, dtype=np.float64)
    hi_c = np.asarray(hi, dtype=np.float64)
    return Image.from_array(round_to_u8(lo_c + t * (hi_c - lo_c)), Encoding.SRGB8)


def texture_card(size: int, rng: np.random.Generator, smooth_sigma: float = 2.0,
                 spread: float = 60.0) -> Image:
    base = rng.uniform(90, 166, size=3)
    noise = rng.standard_normal((size, size, 3))
    smooth = np.stack(
        [imagecore.blur_plane(noise[:, :, c], smooth_sigma) for c in range(3)],
        axis=-1,
    )
    smooth /= max(float(np.abs(smooth).max()), 1e-9)
    return Image.from_array(round_to_u8(base + spread * smooth), Encoding.SRGB8)


def checker_card(size: int, block: int = 2, lo: int = 60, hi: int = 200,
                 tint=(1.0, 0.9, 0.75), ramp: float = 0.0) -> Image:
    """Tinted checkerboard; ``ramp`` adds independent R/B color gradients so
    the color cloud spans three dimensions instead of two points."""
    idx = (np.add.outer(np.arange(size) // block, np.arange(size) // block)) % 2
    plane = np.where(idx == 0, float(lo), float(hi))
    tinted = plane[:, :, np.newaxis] * np.asarray(tint, dtype=np.float64)
    if ramp:
        axis = np.linspace(-ramp, ramp, size)
        tinted[:, :, 0] += axis[np.newaxis, :]
        tinted[:, :, 2] += axis[:, np.newaxis]
    return Image.from_array(round_to_u8(tinted), Encoding.SRGB8)


def portrait_card(size: int, rng: np.random.Generator) -> Image:
    """Rough face stand-in: tinted background, skin ellipse, eye/mouth blobs."""
    bg = rng.uniform(70, 130, size=3)
    canvas = np.broadcast_to(bg, (size, size, 3)).copy()
    yy, xx = np.mgrid[0:size, 0:size].astype(np.float64)
    cy, cx = (size - 1) / 2.0, (size - 1) / 2.0
    face = ((xx - cx) / (0.30 * size)) ** 2 + ((yy - cy) / (0.38 * size)) ** 2 <= 1.0
    skin = np.array([198.0, 160.0, 128.0]) + rng.uniform(-18, 18, size=3)
    canvas[face] = skin
    for side in (-1, 1):
        ex, ey = cx + side * 0.12 * size, cy - 0.10 * size
        eye = ((xx - ex) / (0.045 * size)) ** 2 + ((yy - ey) / (0.03 * size)) ** 2 <= 1.0
        canvas[eye] = (45.0, 40.0, 38.0)
    mouth = (np.abs(xx - cx) <= 0.10 * size) & (np.abs(yy - (cy + 0.18 * size)) <= 0.025 * size)
    canvas[mouth] = (170.0, 75.0, 80.0)
    smooth = np.stack(
        [imagecore.blur_plane(canvas[:, :, c], 1.0) for c in range(3)], axis=-1
    )
    return Image.from_array(round_to_u8(smooth), Encoding.SRGB8)


def make_corpus(n: int = 20, size: int = 128, seed: int = 7) -> list[tuple[str, Image]]:
    """Deterministic mixed corpus of n named cards."""
    rng = np.random.default_rng(seed)
    cards: list[tuple[str, Image]] = []
    makers = [
        lambda i: gradient_card(size, horizontal=(i % 2 == 0),
                                lo=tuple(rng.uniform(30, 80, 3)),
                                hi=tuple(rng.uniform(170, 225, 3))),
        lambda i: texture_card(size, rng, smooth_sigma=rng.uniform(1.5, 3.0)),
        lambda i: portrait_card(size, rng),
        lambda i: checker_card(size, block=int(rng.integers(2, 5)),
                               lo=int(rng.integers(50, 90)),
                               hi=int(rng.integers(170, 210)),
                               tint=(1.0, rng.uniform(0.8, 1.0),
                                     rng.uniform(0.6, 0.9)),
                               ramp=rng.uniform(10.0, 20.0)),
    ]
    for i in range(n):
        name = f"card{i:03d}"
        cards.append((name, makers[i % len(makers)](i)))
    return cards


def write_corpus(out_dir, n: int = 20, size: int = 128, seed: int = 7) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = []
    for name, img in make_corpus(n=n, size=size, seed=seed):
        p = out / f"{name}.png"
        imagecore.encode_image(img, p)
        paths.append(p)
    return paths
