"""Face-photo normalization: oval masking, square crop, resize to 128x128.

The pipeline composites the photo over a fill color through a centered
elliptical mask inscribed in the centered square crop, then resizes the
square to the output size. Applying it to an already-prepared image is a
no-op outside the feather band.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import imagecore
from .errors import MemlabError, ParameterError
from .imagecore import Encoding, Image, Mask, round_to_u8


@dataclass(frozen=True)
class PrepConfig:
    axis_frac_x: float = 0.80
    axis_frac_y: float = 0.90
    fill: tuple[int, int, int] = (255, 255, 255)
    out_size: int = 128
    feather: float = 0.02   # fraction of the smaller dimension

    def __post_init__(self):
        if not 0.0 < self.axis_frac_x <= 1.0 or not 0.0 < self.axis_frac_y <= 1.0:
            raise ParameterError("axis fractions must be in (0, 1]")
        if self.out_size < 8:
            raise ParameterError("out_size must be >= 8")
        if not 0.0 <= self.feather < 0.5:
            raise ParameterError("feather must be in [0, 0.5)")
        if len(self.fill) != 3 or any(not 0 <= v <= 255 for v in self.fill):
            raise ParameterError("fill must be an RGB triple in [0, 255]")


def make_oval_mask(width: int, height: int, cfg: PrepConfig) -> Mask:
    """Centered ellipse with semi-axes (axis_frac_x*w/2, axis_frac_y*h/2)."""
    return imagecore.elliptical_mask(
        width, height,
        semi_x=cfg.axis_frac_x * width / 2.0,
        semi_y=cfg.axis_frac_y * height / 2.0,
        feather_px=cfg.feather * min(width, height),
    )


def prepare_face(img: Image, cfg: PrepConfig = PrepConfig()) -> Image:
    """Oval-mask, square-crop, and resize one photo to out_size x out_size."""
    if img.encoding is not Encoding.SRGB8:
        raise MemlabError("prepare_face takes SRGB8 images")
    side = min(img.width, img.height)
    left = (img.width - side) // 2
    top = (img.height - side) // 2
    square = img.data[top:top + side, left:left + side, :].astype(np.float64)
    weights = make_oval_mask(side, side, cfg).weights[:, :, np.newaxis]
    fill = np.asarray(cfg.fill, dtype=np.float64)
    composite = Image.from_array(
        round_to_u8(weights * square + (1.0 - weights) * fill), Encoding.SRGB8
    )
    return imagecore.resize_bilinear(composite, cfg.out_size, cfg.out_size)


def prepare_dataset(in_dir, out_dir, cfg: PrepConfig = PrepConfig()) -> list[dict]:
    """Prepare every file in ``in_dir``; failures are recorded, not fatal.

    Returns the manifest rows and writes ``manifest.csv`` in ``out_dir``
    (columns source,output,status; config echoed in a comment header).
    Sources smaller than out_size in either dimension are upscaled and
    flagged with status ``ok_upscaled``.
    """
    in_path = Path(in_dir)
    out_path = Path(out_dir)
    if not in_path.is_dir():
        raise NotADirectoryError(f"not a directory: {in_dir}")
    out_path.mkdir(parents=True, exist_ok=True)

    rows = []
    used_names: set[str] = set()
    for src in sorted(p for p in in_path.iterdir() if p.is_file()):
        name = src.stem + ".png"
        k = 1
        while name in used_names:
            name = f"{src.stem}_{k}.png"
            k += 1
        try:
            img = imagecore.decode_image(src)
            prepared = prepare_face(img, cfg)
            imagecore.encode_image(prepared, out_path / name)
            used_names.add(name)
            upscaled = min(img.width, img.height) < cfg.out_size
            status = "ok_upscaled" if upscaled else "ok"
            rows.append({"source": str(src), "output": name, "status": status})
        except MemlabError as exc:
            rows.append({"source": str(src), "output": "", "status": f"failed: {exc}"})

    manifest = out_path / "manifest.csv"
    with open(manifest, "w", encoding="utf-8", newline="") as fh:
        fh.write(
            f"# prep: axis_frac_x={cfg.axis_frac_x} axis_frac_y={cfg.axis_frac_y} "
            f"fill={cfg.fill[0]}/{cfg.fill[1]}/{cfg.fill[2]} "
            f"out_size={cfg.out_size} feather={cfg.feather}\n"
        )
        writer = csv.writer(fh)
        writer.writerow(["source", "output", "status"])
        for row in rows:
            writer.writerow([row["source"], row["output"], row["status"]])
    return rows


def load_manifest_outputs(manifest_path) -> list[Path]:
    """Paths of successfully prepared images listed in a manifest CSV."""
    base = Path(manifest_path).parent
    out = []
    with open(manifest_path, "r", encoding="utf-8", newline="") as fh:
        data_lines = [ln for ln in fh if not ln.startswith("#")]
    reader = csv.DictReader(data_lines)
    for row in reader:
        if row["status"].startswith("ok"):
            out.append(base / row["output"])
    return out
