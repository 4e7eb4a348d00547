"""Image containers, sRGB/CIELAB conversions, and filtering primitives.

All pixel math is done in float64 and rounded once (round-half-to-even) when
an 8-bit result is produced, so every operation is bit-reproducible across
runs and platforms. Conversions assume sRGB primaries and the D65 white
point; convolution edge handling is always replicate (clamp).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from PIL import Image as _PILImage
from PIL import UnidentifiedImageError

from .errors import ContractError, FormatError, ParameterError


class Encoding(enum.Enum):
    SRGB8 = "srgb8"            # gamma-encoded uint8, 3 channels
    LINEAR_RGB_F = "linear"    # linear-light float in [0, 1], 3 channels
    CIELAB_F = "cielab"        # float, L* in [0, 100], 3 channels
    GRAY_F = "gray"            # float in [0, 1], 1 channel


_EXPECTED_CHANNELS = {
    Encoding.SRGB8: 3,
    Encoding.LINEAR_RGB_F: 3,
    Encoding.CIELAB_F: 3,
    Encoding.GRAY_F: 1,
}


@dataclass(frozen=True)
class Image:
    """A dimensioned pixel buffer with an explicit color-encoding tag.

    ``data`` is row-major with shape (height, width, channels); SRGB8 is
    stored as uint8, the float encodings as float64.
    """

    width: int
    height: int
    channels: int
    encoding: Encoding
    data: np.ndarray

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ContractError("image dimensions must be positive")
        expected = _EXPECTED_CHANNELS[self.encoding]
        if self.channels != expected:
            raise ContractError(
                f"{self.encoding.name} images must have {expected} channels, "
                f"got {self.channels}"
            )
        if self.data.shape != (self.height, self.width, self.channels):
            raise ContractError(
                f"buffer shape {self.data.shape} does not match "
                f"{(self.height, self.width, self.channels)}"
            )
        if self.encoding is Encoding.SRGB8:
            if self.data.dtype != np.uint8:
                raise ContractError("SRGB8 buffers must be uint8")
        else:
            if self.data.dtype != np.float64:
                raise ContractError("float encodings use float64 buffers")
            lo = float(self.data.min()) if self.data.size else 0.0
            hi = float(self.data.max()) if self.data.size else 0.0
            if self.encoding in (Encoding.LINEAR_RGB_F, Encoding.GRAY_F):
                if lo < -1e-9 or hi > 1 + 1e-9:
                    raise ContractError("values outside [0, 1]")
            elif self.encoding is Encoding.CIELAB_F:
                lmin = float(self.data[..., 0].min())
                lmax = float(self.data[..., 0].max())
                if lmin < -1e-9 or lmax > 100 + 1e-9:
                    raise ContractError("L* outside [0, 100]")

    @classmethod
    def from_array(cls, arr: np.ndarray, encoding: Encoding) -> "Image":
        """Build an Image from a (h, w) or (h, w, c) array, coercing dtype."""
        a = np.asarray(arr)
        if a.ndim == 2:
            a = a[:, :, np.newaxis]
        if a.ndim != 3:
            raise ContractError(f"expected 2-D or 3-D array, got ndim={a.ndim}")
        if encoding is Encoding.SRGB8:
            a = a.astype(np.uint8, copy=True) if a.dtype != np.uint8 else a.copy()
        else:
            a = a.astype(np.float64, copy=True)
        a.setflags(write=False)
        h, w, c = a.shape
        return cls(width=w, height=h, channels=c, encoding=encoding, data=a)


@dataclass(frozen=True)
class Mask:
    """Per-pixel inclusion weights in [0, 1]; 1 means foreground/included."""

    width: int
    height: int
    weights: np.ndarray

    def __post_init__(self):
        if self.weights.shape != (self.height, self.width):
            raise ContractError("mask weights shape does not match dimensions")
        if self.weights.size:
            lo, hi = float(self.weights.min()), float(self.weights.max())
            if lo < -1e-9 or hi > 1 + 1e-9:
                raise ContractError("mask weights outside [0, 1]")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "Mask":
        a = np.asarray(arr, dtype=np.float64).copy()
        a.setflags(write=False)
        h, w = a.shape
        return cls(width=w, height=h, weights=a)


@dataclass(frozen=True)
class ScalarField:
    """One real value per pixel (luma, gradient magnitude, ...)."""

    width: int
    height: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (self.height, self.width):
            raise ContractError("field shape does not match dimensions")

    @classmethod
    def from_array(cls, arr: np.ndarray) -> "ScalarField":
        a = np.asarray(arr, dtype=np.float64).copy()
        a.setflags(write=False)
        h, w = a.shape
        return cls(width=w, height=h, values=a)


# Rec. 709 luma coefficients, applied to gamma-encoded values.
LUMA_WEIGHTS = (0.2126, 0.7152, 0.0722)

# sRGB <-> XYZ (D65), Bruce Lindbloom's matrices.
_RGB_TO_XYZ = np.array([
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
])
_XYZ_TO_RGB = np.array([
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
])
D65_WHITE = np.array([0.95047, 1.00000, 1.08883])

_LAB_DELTA = 6.0 / 29.0


def _require_encoding(img: Image, *encodings: Encoding) -> None:
    if img.encoding not in encodings:
        names = "/".join(e.name for e in encodings)
        raise ContractError(f"expected {names} image, got {img.encoding.name}")


def round_to_u8(arr: np.ndarray) -> np.ndarray:
    """Round-half-to-even, clamp to [0, 255], cast to uint8."""
    return np.clip(np.rint(arr), 0, 255).astype(np.uint8)


# ---------------------------------------------------------------------------
# File I/O


def decode_image(path) -> Image:
    """Decode a PNG or JPEG file into a 3-channel SRGB8 image.

    Grayscale and palette files are expanded to three equal channels.
    Unreadable files raise OSError; undecodable content raises FormatError.
    """
    fh = open(path, "rb")  # propagate OSError for missing/unreadable files
    try:
        try:
            with _PILImage.open(fh) as im:
                if im.format not in ("PNG", "JPEG"):
                    raise FormatError(f"unsupported format {im.format!r}: {path}")
                arr = np.asarray(im.convert("RGB"), dtype=np.uint8)
        except UnidentifiedImageError as exc:
            raise FormatError(f"not a decodable image: {path}") from exc
        except (OSError, SyntaxError, ValueError) as exc:
            raise FormatError(f"corrupt or truncated image: {path}") from exc
    finally:
        fh.close()
    return Image.from_array(arr, Encoding.SRGB8)


def encode_image(img: Image, path) -> None:
    """Write an SRGB8 or GRAY_F image to disk (PNG by default, lossless)."""
    if img.encoding is Encoding.SRGB8:
        pil = _PILImage.fromarray(img.data, mode="RGB")
    elif img.encoding is Encoding.GRAY_F:
        pil = _PILImage.fromarray(round_to_u8(img.data[:, :, 0] * 255.0), mode="L")
    else:
        raise ContractError(
            f"cannot encode {img.encoding.name}; convert to SRGB8 or GRAY_F first"
        )
    suffix = Path(path).suffix.lower()
    fmt = "JPEG" if suffix in (".jpg", ".jpeg") else "PNG"
    pil.save(path, format=fmt)


# ---------------------------------------------------------------------------
# Color conversions


def srgb_transfer_decode(v01: np.ndarray) -> np.ndarray:
    """sRGB electro-optical transfer: gamma value in [0,1] -> linear light."""
    v01 = np.asarray(v01, dtype=np.float64)
    return np.where(v01 <= 0.04045, v01 / 12.92, ((v01 + 0.055) / 1.055) ** 2.4)


def srgb_transfer_encode(lin: np.ndarray) -> np.ndarray:
    """Inverse transfer: linear light -> gamma value (unclamped)."""
    lin = np.asarray(lin, dtype=np.float64)
    # guard keeps the power branch away from negatives; np.where picks the result
    safe = np.maximum(lin, 0.0031308)
    return np.where(lin <= 0.0031308, 12.92 * lin, 1.055 * safe ** (1.0 / 2.4) - 0.055)


def srgb_to_linear(img: Image) -> Image:
    """SRGB8 -> linear-light float RGB."""
    _require_encoding(img, Encoding.SRGB8)
    lin = srgb_transfer_decode(img.data.astype(np.float64) / 255.0)
    return Image.from_array(lin, Encoding.LINEAR_RGB_F)


def linear_to_srgb(img: Image) -> Image:
    """Linear-light float RGB -> SRGB8 with clamping."""
    _require_encoding(img, Encoding.LINEAR_RGB_F)
    return Image.from_array(round_to_u8(srgb_transfer_encode(img.data) * 255.0),
                            Encoding.SRGB8)


def _lab_f(t: np.ndarray) -> np.ndarray:
    d3 = _LAB_DELTA ** 3
    return np.where(t > d3, np.cbrt(t), t / (3 * _LAB_DELTA ** 2) + 4.0 / 29.0)


def _lab_f_inv(f: np.ndarray) -> np.ndarray:
    return np.where(f > _LAB_DELTA, f ** 3, 3 * _LAB_DELTA ** 2 * (f - 4.0 / 29.0))


def srgb_array_to_lab(u8: np.ndarray) -> np.ndarray:
    """(…, 3) uint8 sRGB -> (…, 3) float CIELAB under D65."""
    lin = srgb_transfer_decode(np.asarray(u8, dtype=np.float64) / 255.0)
    xyz = lin @ _RGB_TO_XYZ.T
    f = _lab_f(xyz / D65_WHITE)
    lab = np.empty_like(f)
    lab[..., 0] = 116.0 * f[..., 1] - 16.0
    lab[..., 1] = 500.0 * (f[..., 0] - f[..., 1])
    lab[..., 2] = 200.0 * (f[..., 1] - f[..., 2])
    return lab


def lab_array_to_srgb(lab: np.ndarray) -> np.ndarray:
    """(…, 3) float CIELAB -> (…, 3) uint8 sRGB, out-of-gamut channel-clipped."""
    lab = np.asarray(lab, dtype=np.float64)
    fy = (lab[..., 0] + 16.0) / 116.0
    fx = fy + lab[..., 1] / 500.0
    fz = fy - lab[..., 2] / 200.0
    xyz = np.stack([_lab_f_inv(fx), _lab_f_inv(fy), _lab_f_inv(fz)], axis=-1)
    lin = (xyz * D65_WHITE) @ _XYZ_TO_RGB.T
    return round_to_u8(srgb_transfer_encode(lin) * 255.0)


def srgb_to_lab(img: Image) -> Image:
    """SRGB8 -> CIELAB (D65 white, sRGB primaries)."""
    _require_encoding(img, Encoding.SRGB8)
    lab = srgb_array_to_lab(img.data)
    # float slack from the transfer chain can leave L* at 100 + 1 ulp
    lab[..., 0] = np.clip(lab[..., 0], 0.0, 100.0)
    return Image.from_array(lab, Encoding.CIELAB_F)


def lab_to_srgb(img: Image) -> Image:
    """CIELAB -> SRGB8 with out-of-gamut clipping."""
    _require_encoding(img, Encoding.CIELAB_F)
    return Image.from_array(lab_array_to_srgb(img.data), Encoding.SRGB8)


# ---------------------------------------------------------------------------
# Filtering primitives


def gaussian_kernel(sigma: float) -> np.ndarray:
    """Normalized 1-D Gaussian, radius ceil(3*sigma)."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    radius = math.ceil(3.0 * sigma)
    x = np.arange(-radius, radius + 1, dtype=np.float64)
    k = np.exp(-(x * x) / (2.0 * sigma * sigma))
    return k / k.sum()


def blur_plane(plane: np.ndarray, sigma: float) -> np.ndarray:
    """Separable Gaussian blur of a 2-D float array, replicate edges."""
    k = gaussian_kernel(sigma)
    r = len(k) // 2
    h, w = plane.shape
    out = np.zeros((h, w), dtype=np.float64)
    padded = np.pad(plane, ((r, r), (0, 0)), mode="edge")
    for i, weight in enumerate(k):
        out += weight * padded[i:i + h, :]
    out2 = np.zeros((h, w), dtype=np.float64)
    padded = np.pad(out, ((0, 0), (r, r)), mode="edge")
    for i, weight in enumerate(k):
        out2 += weight * padded[:, i:i + w]
    return out2


def gaussian_blur(img: Image, sigma: float) -> Image:
    """Gaussian blur, all channels, output encoding equals input encoding."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    planes = img.data.astype(np.float64)
    blurred = np.stack(
        [blur_plane(planes[:, :, c], sigma) for c in range(img.channels)], axis=-1
    )
    if img.encoding is Encoding.SRGB8:
        return Image.from_array(round_to_u8(blurred), Encoding.SRGB8)
    return Image.from_array(blurred, img.encoding)


def luma_plane(img: Image) -> np.ndarray:
    """Single-plane reduction used by gradients and statistics.

    SRGB8 / linear RGB use Rec. 709 weights (SRGB8 scaled to [0, 255]),
    CIELAB uses L*, GRAY_F uses its channel scaled to [0, 1].
    """
    if img.encoding is Encoding.SRGB8:
        f = img.data.astype(np.float64)
        return f[:, :, 0] * LUMA_WEIGHTS[0] + f[:, :, 1] * LUMA_WEIGHTS[1] \
            + f[:, :, 2] * LUMA_WEIGHTS[2]
    if img.encoding is Encoding.LINEAR_RGB_F:
        f = img.data
        return f[:, :, 0] * LUMA_WEIGHTS[0] + f[:, :, 1] * LUMA_WEIGHTS[1] \
            + f[:, :, 2] * LUMA_WEIGHTS[2]
    if img.encoding is Encoding.CIELAB_F:
        return img.data[:, :, 0].astype(np.float64)
    return img.data[:, :, 0].astype(np.float64)


def gradient_magnitude(img: Image) -> ScalarField:
    """Central-difference gradient magnitude of the luma plane.

    Borders use replicate padding, so edge pixels see a one-sided half
    difference.
    """
    plane = luma_plane(img)
    p = np.pad(plane, 1, mode="edge")
    gx = (p[1:-1, 2:] - p[1:-1, :-2]) / 2.0
    gy = (p[2:, 1:-1] - p[:-2, 1:-1]) / 2.0
    return ScalarField.from_array(np.sqrt(gx * gx + gy * gy))


def resize_bilinear(img: Image, width: int, height: int) -> Image:
    """Bilinear resize with half-pixel-centered sampling."""
    if width < 1 or height < 1:
        raise ParameterError("target size must be at least 1x1")
    sw, sh = img.width, img.height
    xs = np.clip((np.arange(width, dtype=np.float64) + 0.5) * (sw / width) - 0.5,
                 0.0, sw - 1.0)
    ys = np.clip((np.arange(height, dtype=np.float64) + 0.5) * (sh / height) - 0.5,
                 0.0, sh - 1.0)
    x0 = np.floor(xs).astype(np.intp)
    y0 = np.floor(ys).astype(np.intp)
    x1 = np.minimum(x0 + 1, sw - 1)
    y1 = np.minimum(y0 + 1, sh - 1)
    fx = (xs - x0)[np.newaxis, :, np.newaxis]
    fy = (ys - y0)[:, np.newaxis, np.newaxis]
    f = img.data.astype(np.float64)
    top = f[y0[:, None], x0[None, :], :] * (1 - fx) + f[y0[:, None], x1[None, :], :] * fx
    bot = f[y1[:, None], x0[None, :], :] * (1 - fx) + f[y1[:, None], x1[None, :], :] * fx
    out = top * (1 - fy) + bot * fy
    if img.encoding is Encoding.SRGB8:
        return Image.from_array(round_to_u8(out), Encoding.SRGB8)
    return Image.from_array(out, img.encoding)


def elliptical_mask(width: int, height: int, semi_x: float, semi_y: float,
                    feather_px: float) -> Mask:
    """Centered ellipse mask: interior 1, exterior 0, linear outward feather.

    The feather band extends outward from the ellipse so the weight-1 region
    is exactly the ellipse interior.
    """
    if semi_x <= 0 or semi_y <= 0:
        raise ParameterError("ellipse semi-axes must be positive")
    if feather_px < 0:
        raise ParameterError("feather width must be >= 0")
    cy, cx = (height - 1) / 2.0, (width - 1) / 2.0
    yy = (np.arange(height, dtype=np.float64) - cy)[:, None] / semi_y
    xx = (np.arange(width, dtype=np.float64) - cx)[None, :] / semi_x
    rho = np.sqrt(xx * xx + yy * yy)
    if feather_px == 0:
        weights = (rho <= 1.0).astype(np.float64)
    else:
        drho = feather_px / min(semi_x, semi_y)
        weights = np.clip((1.0 + drho - rho) / drho, 0.0, 1.0)
    return Mask.from_array(weights)


def mask_from_image(img: Image) -> Mask:
    """Interpret an image file as a mask: luma scaled to [0, 1] weights."""
    if img.encoding is Encoding.SRGB8:
        return Mask.from_array(luma_plane(img) / 255.0)
    if img.encoding is Encoding.GRAY_F:
        return Mask.from_array(img.data[:, :, 0])
    raise ContractError(f"cannot build a mask from {img.encoding.name}")
