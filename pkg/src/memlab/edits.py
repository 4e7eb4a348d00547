"""The nine photo-editing operators and their recipe plumbing.

All operators are pure functions from SRGB8 images to SRGB8 images. Sharpen,
contrast and vignette work on gamma-encoded values (the way consumer editors
behave), clarity works on CIELAB L*, vibrance on HSV saturation, and the
color temperature shift on linearized RGB via Bradford adaptation.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import imagecore
from .errors import ContractError, ParameterError, RecipeError
from .imagecore import Encoding, Image, Mask, round_to_u8


class EditOp(enum.Enum):
    SHARPEN = "Sharpen"
    BLUR_BACKGROUND = "BlurBackground"
    BLUR_DARKEN_BACKGROUND = "BlurDarkenBackground"
    GRAYSCALE = "Grayscale"
    CONTRAST = "Contrast"
    COLOR_TEMPERATURE = "ColorTemperature"
    VIBRANCE = "Vibrance"
    CLARITY = "Clarity"
    VIGNETTE = "Vignette"


DEFAULT_PARAMS: dict[EditOp, dict[str, float]] = {
    EditOp.SHARPEN: {"amount": 1.0, "sigma": 1.5},
    EditOp.BLUR_BACKGROUND: {"sigma": 4.0},
    EditOp.BLUR_DARKEN_BACKGROUND: {"sigma": 4.0, "darken": 0.7},
    EditOp.GRAYSCALE: {},
    EditOp.CONTRAST: {"strength": 1.25},
    EditOp.COLOR_TEMPERATURE: {"kelvin": 5000.0},
    EditOp.VIBRANCE: {"amount": 0.3},
    EditOp.CLARITY: {"amount": 0.5, "radius_frac": 0.05},
    EditOp.VIGNETTE: {"strength": 0.5, "inner": 0.4},
}

_MASKABLE = {EditOp.BLUR_BACKGROUND, EditOp.BLUR_DARKEN_BACKGROUND}


@dataclass(frozen=True)
class EditRecipe:
    """A named operator plus its parameter set; the unit of experiment config."""

    op: EditOp
    params: dict = field(default_factory=dict)
    mask: Optional[str] = None

    def __post_init__(self):
        allowed = set(DEFAULT_PARAMS[self.op])
        unknown = set(self.params) - allowed
        if unknown:
            raise RecipeError(
                f"unknown parameter(s) {sorted(unknown)} for {self.op.value}"
            )
        if self.mask is not None and self.op not in _MASKABLE:
            raise RecipeError(f"{self.op.value} does not take a mask")

    def resolved_params(self) -> dict:
        merged = dict(DEFAULT_PARAMS[self.op])
        merged.update(self.params)
        return merged

    def to_json_obj(self) -> dict:
        obj: dict = {"op": self.op.value}
        obj.update(self.params)
        if self.mask is not None:
            obj["mask"] = self.mask
        return obj

    @classmethod
    def from_json_obj(cls, obj: dict) -> "EditRecipe":
        if not isinstance(obj, dict) or "op" not in obj:
            raise RecipeError("recipe must be an object with an 'op' field")
        name = obj["op"]
        try:
            op = EditOp(name)
        except ValueError:
            raise RecipeError(f"unknown op name {name!r}") from None
        params = {}
        mask = None
        for key, value in obj.items():
            if key == "op":
                continue
            if key == "mask":
                mask = str(value)
                continue
            if key == "sweep":  # expanded by the experiment layer
                continue
            try:
                params[key] = float(value)
            except (TypeError, ValueError):
                raise RecipeError(f"parameter {key!r} must be numeric") from None
        return cls(op=op, params=params, mask=mask)


def load_recipes(path) -> list[EditRecipe]:
    """Read a recipe file: one JSON object or an array of objects."""
    with open(path, "r", encoding="utf-8") as fh:
        try:
            raw = json.load(fh)
        except json.JSONDecodeError as exc:
            raise RecipeError(f"invalid recipe JSON in {path}: {exc}") from exc
    objs = raw if isinstance(raw, list) else [raw]
    return [EditRecipe.from_json_obj(o) for o in objs]


def save_recipes(recipes: list[EditRecipe], path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump([r.to_json_obj() for r in recipes], fh, indent=2)
        fh.write("\n")


def default_recipes() -> list[EditRecipe]:
    """All nine operators at their default parameters."""
    return [EditRecipe(op=op) for op in EditOp]


# ---------------------------------------------------------------------------
# Operators


def _require_srgb(img: Image) -> np.ndarray:
    if img.encoding is not Encoding.SRGB8:
        raise ContractError(f"operators take SRGB8 images, got {img.encoding.name}")
    return img.data.astype(np.float64)


def _fallback_mask(img: Image) -> Mask:
    # portrait-style default: centered ellipse, 5% soft edge
    return imagecore.elliptical_mask(
        img.width, img.height,
        semi_x=0.38 * img.width, semi_y=0.45 * img.height,
        feather_px=0.05 * min(img.width, img.height),
    )


def _check_mask(img: Image, mask: Mask) -> np.ndarray:
    if (mask.width, mask.height) != (img.width, img.height):
        raise ContractError(
            f"mask {mask.width}x{mask.height} does not match "
            f"image {img.width}x{img.height}"
        )
    return mask.weights[:, :, np.newaxis]


def sharpen(img: Image, amount: float = 1.0, sigma: float = 1.5) -> Image:
    """Unsharp mask per channel in gamma space."""
    if amount < 0:
        raise ParameterError(f"amount must be >= 0, got {amount}")
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    f = _require_srgb(img)
    blurred = np.stack(
        [imagecore.blur_plane(f[:, :, c], sigma) for c in range(3)], axis=-1
    )
    return Image.from_array(round_to_u8(f + amount * (f - blurred)), Encoding.SRGB8)


def blur_background(img: Image, mask: Optional[Mask] = None,
                    sigma: float = 4.0) -> Image:
    """Keep the masked foreground, Gaussian-blur everything else."""
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    f = _require_srgb(img)
    w = _check_mask(img, mask if mask is not None else _fallback_mask(img))
    blurred = np.stack(
        [imagecore.blur_plane(f[:, :, c], sigma) for c in range(3)], axis=-1
    )
    return Image.from_array(round_to_u8(w * f + (1.0 - w) * blurred), Encoding.SRGB8)


def blur_darken_background(img: Image, mask: Optional[Mask] = None,
                           sigma: float = 4.0, darken: float = 0.7) -> Image:
    """blur_background with the background additionally scaled by ``darken``."""
    if not 0.0 < darken <= 1.0:
        raise ParameterError(f"darken must be in (0, 1], got {darken}")
    if sigma <= 0:
        raise ParameterError(f"sigma must be > 0, got {sigma}")
    f = _require_srgb(img)
    w = _check_mask(img, mask if mask is not None else _fallback_mask(img))
    blurred = np.stack(
        [imagecore.blur_plane(f[:, :, c], sigma) for c in range(3)], axis=-1
    )
    return Image.from_array(
        round_to_u8(w * f + (1.0 - w) * (darken * blurred)), Encoding.SRGB8
    )


def grayscale(img: Image) -> Image:
    """Rec. 709 luma on gamma values, replicated into three channels."""
    f = _require_srgb(img)
    y = round_to_u8(
        f[:, :, 0] * imagecore.LUMA_WEIGHTS[0]
        + f[:, :, 1] * imagecore.LUMA_WEIGHTS[1]
        + f[:, :, 2] * imagecore.LUMA_WEIGHTS[2]
    )
    return Image.from_array(np.repeat(y[:, :, np.newaxis], 3, axis=2), Encoding.SRGB8)


def contrast_curve(v01, strength: float):
    """Per-channel gamma-space contrast curve on normalized values."""
    return np.clip(0.5 + strength * (np.asarray(v01, dtype=np.float64) - 0.5),
                   0.0, 1.0)


def increase_contrast(img: Image, strength: float = 1.25) -> Image:
    """Expand contrast around mid-gray; strength 1 is the identity."""
    if strength < 1:
        raise ParameterError(f"strength must be >= 1, got {strength}")
    f = _require_srgb(img)
    return Image.from_array(
        round_to_u8(contrast_curve(f / 255.0, strength) * 255.0), Encoding.SRGB8
    )


# Bradford cone-response matrix and its inverse.
_BRADFORD = np.array([
    [0.8951, 0.2664, -0.1614],
    [-0.7502, 1.7135, 0.0367],
    [0.0389, -0.0685, 1.0296],
])
_BRADFORD_INV = np.array([
    [0.9869929, -0.1470543, 0.1599627],
    [0.4323053, 0.5183603, 0.0492912],
    [-0.0085287, 0.0400428, 0.9684867],
])


def daylight_chromaticity(kelvin: float) -> tuple[float, float]:
    """CIE daylight-locus chromaticity for a correlated color temperature."""
    t = float(kelvin)
    if t <= 7000.0:
        x = 0.244063 + 0.09911e3 / t + 2.9678e6 / t ** 2 - 4.6070e9 / t ** 3
    else:
        x = 0.237040 + 0.24748e3 / t + 1.9018e6 / t ** 2 - 2.0064e9 / t ** 3
    y = -3.000 * x * x + 2.870 * x - 0.275
    return x, y


def _bradford_matrix(src_white: np.ndarray, dst_white: np.ndarray) -> np.ndarray:
    src = _BRADFORD @ src_white
    dst = _BRADFORD @ dst_white
    return _BRADFORD_INV @ np.diag(dst / src) @ _BRADFORD


def color_temperature(img: Image, kelvin: float = 5000.0) -> Image:
    """Shift the scene white from D65 to the daylight white at ``kelvin``."""
    if not 4000.0 <= kelvin <= 10000.0:
        raise ParameterError(f"kelvin must be in [4000, 10000], got {kelvin}")
    f = _require_srgb(img)
    x, y = daylight_chromaticity(kelvin)
    dst_white = np.array([x / y, 1.0, (1.0 - x - y) / y])
    adapt = _bradford_matrix(imagecore.D65_WHITE, dst_white)
    lin = imagecore.srgb_transfer_decode(f / 255.0)
    xyz = lin @ imagecore._RGB_TO_XYZ.T
    lin_out = (xyz @ adapt.T) @ imagecore._XYZ_TO_RGB.T
    return Image.from_array(
        round_to_u8(imagecore.srgb_transfer_encode(lin_out) * 255.0), Encoding.SRGB8
    )


def rgb_to_hsv(rgb: np.ndarray) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Vectorized RGB [0,1] -> (hue in turns, saturation, value)."""
    rgb = np.asarray(rgb, dtype=np.float64)
    r, g, b = rgb[..., 0], rgb[..., 1], rgb[..., 2]
    v = np.max(rgb, axis=-1)
    c = v - np.min(rgb, axis=-1)
    s = np.where(v > 0, c / np.where(v > 0, v, 1.0), 0.0)
    safe_c = np.where(c > 0, c, 1.0)
    h6 = np.zeros_like(v)
    is_r = (v == r) & (c > 0)
    is_g = (v == g) & ~is_r & (c > 0)
    is_b = (v == b) & ~is_r & ~is_g & (c > 0)
    h6 = np.where(is_r, ((g - b) / safe_c) % 6.0, h6)
    h6 = np.where(is_g, (b - r) / safe_c + 2.0, h6)
    h6 = np.where(is_b, (r - g) / safe_c + 4.0, h6)
    return h6 / 6.0, s, v


def hsv_to_rgb(h: np.ndarray, s: np.ndarray, v: np.ndarray) -> np.ndarray:
    """Inverse of rgb_to_hsv; hue in turns."""
    h6 = (np.asarray(h, dtype=np.float64) % 1.0) * 6.0
    i = np.floor(h6)
    f = h6 - i
    i = i.astype(np.intp) % 6
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    choices_r = np.stack([v, q, p, p, t, v])
    choices_g = np.stack([t, v, v, q, p, p])
    choices_b = np.stack([p, p, t, v, v, q])
    idx = i[np.newaxis, ...]
    r = np.take_along_axis(choices_r, idx, axis=0)[0]
    g = np.take_along_axis(choices_g, idx, axis=0)[0]
    b = np.take_along_axis(choices_b, idx, axis=0)[0]
    return np.stack([r, g, b], axis=-1)


def vibrance_curve(s, amount: float):
    """Saturation boost weighted toward mid-saturated pixels.

    The 4s(1-s) weight peaks at s=0.5 and vanishes at s=0 and s=1, so
    neutral and fully saturated colors are untouched.
    """
    s = np.asarray(s, dtype=np.float64)
    return np.clip(s + amount * 4.0 * s * (1.0 - s), 0.0, 1.0)


def vibrance_rgb(rgb01: np.ndarray, amount: float) -> np.ndarray:
    """Float core of the vibrance operator; hue and value are preserved."""
    h, s, v = rgb_to_hsv(rgb01)
    return hsv_to_rgb(h, vibrance_curve(s, amount), v)


def vibrance(img: Image, amount: float = 0.3) -> Image:
    if amount < 0:
        raise ParameterError(f"amount must be >= 0, got {amount}")
    f = _require_srgb(img)
    return Image.from_array(
        round_to_u8(vibrance_rgb(f / 255.0, amount) * 255.0), Encoding.SRGB8
    )


def clarity(img: Image, amount: float = 0.5, radius_frac: float = 0.05) -> Image:
    """Local contrast: unsharp mask on CIELAB L* only, chroma untouched."""
    if amount < 0:
        raise ParameterError(f"amount must be >= 0, got {amount}")
    if not 0.0 < radius_frac < 1.0:
        raise ParameterError(f"radius_frac must be in (0, 1), got {radius_frac}")
    _require_srgb(img)
    sigma = radius_frac * min(img.width, img.height)
    lab = imagecore.srgb_array_to_lab(img.data)
    lum = lab[:, :, 0]
    lab[:, :, 0] = np.clip(
        lum + amount * (lum - imagecore.blur_plane(lum, sigma)), 0.0, 100.0
    )
    return Image.from_array(imagecore.lab_array_to_srgb(lab), Encoding.SRGB8)


def smoothstep(edge0: float, edge1: float, x: np.ndarray) -> np.ndarray:
    t = np.clip((np.asarray(x, dtype=np.float64) - edge0) / (edge1 - edge0), 0.0, 1.0)
    return t * t * (3.0 - 2.0 * t)


def vignette(img: Image, strength: float = 0.5, inner: float = 0.4) -> Image:
    """Radial darkening: full brightness inside ``inner``, 1-strength at corners."""
    if not 0.0 <= strength <= 1.0:
        raise ParameterError(f"strength must be in [0, 1], got {strength}")
    if not 0.0 <= inner < 1.0:
        raise ParameterError(f"inner must be in [0, 1), got {inner}")
    f = _require_srgb(img)
    cy, cx = (img.height - 1) / 2.0, (img.width - 1) / 2.0
    yy = (np.arange(img.height, dtype=np.float64) - cy)[:, None]
    xx = (np.arange(img.width, dtype=np.float64) - cx)[None, :]
    rmax = np.hypot(cy, cx)
    r = np.hypot(yy, xx) / max(rmax, 1e-12)
    factor = 1.0 - strength * smoothstep(inner, 1.0, r)
    return Image.from_array(round_to_u8(f * factor[:, :, np.newaxis]), Encoding.SRGB8)


_DISPATCH = {
    EditOp.SHARPEN: sharpen,
    EditOp.GRAYSCALE: grayscale,
    EditOp.CONTRAST: increase_contrast,
    EditOp.COLOR_TEMPERATURE: color_temperature,
    EditOp.VIBRANCE: vibrance,
    EditOp.CLARITY: clarity,
    EditOp.VIGNETTE: vignette,
}


def apply_recipe(img: Image, recipe: EditRecipe,
                 mask: Optional[Mask] = None) -> Image:
    """Dispatch a recipe to its operator. Deterministic, bit-for-bit.

    ``mask`` overrides the recipe's mask file for the background operators;
    if neither is given they fall back to the built-in centered ellipse.
    """
    params = recipe.resolved_params()
    if recipe.op in _MASKABLE:
        if mask is None and recipe.mask is not None:
            mask = imagecore.mask_from_image(imagecore.decode_image(recipe.mask))
        fn = blur_background if recipe.op is EditOp.BLUR_BACKGROUND \
            else blur_darken_background
        return fn(img, mask=mask, **params)
    return _DISPATCH[recipe.op](img, **params)
