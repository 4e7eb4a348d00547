import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from PIL import Image as PILImage

from memlab import imagecore as ic
from memlab.errors import ContractError, FormatError, ParameterError
from memlab.imagecore import Encoding, Image

from conftest import constant_image, random_srgb


# ---------------------------------------------------------------------------
# Image type invariants


def test_image_buffer_shape_must_match():
    with pytest.raises(ContractError):
        Image(width=2, height=2, channels=3, encoding=Encoding.SRGB8,
              data=np.zeros((2, 3, 3), dtype=np.uint8))


def test_encoding_channel_consistency():
    with pytest.raises(ContractError):
        Image.from_array(np.zeros((2, 2, 1)), Encoding.CIELAB_F)
    with pytest.raises(ContractError):
        Image.from_array(np.zeros((2, 2, 3)), Encoding.GRAY_F)


def test_float_range_validation():
    with pytest.raises(ContractError):
        Image.from_array(np.full((2, 2, 3), 1.5), Encoding.LINEAR_RGB_F)
    lab = np.zeros((2, 2, 3))
    lab[0, 0, 0] = 101.0
    with pytest.raises(ContractError):
        Image.from_array(lab, Encoding.CIELAB_F)


# ---------------------------------------------------------------------------
# decode / encode


def test_decode_white_png(tmp_path):
    p = tmp_path / "white.png"
    PILImage.fromarray(np.full((2, 2, 3), 255, dtype=np.uint8)).save(p)
    img = ic.decode_image(p)
    assert (img.width, img.height, img.channels) == (2, 2, 3)
    assert img.encoding is Encoding.SRGB8
    assert (img.data == 255).all()


def test_decode_grayscale_expands_to_three_channels(tmp_path):
    p = tmp_path / "gray.png"
    PILImage.fromarray(np.full((3, 3), 77, dtype=np.uint8), mode="L").save(p)
    img = ic.decode_image(p)
    assert img.channels == 3
    assert (img.data == 77).all()


def test_decode_truncated_file_is_format_error(tmp_path):
    good = tmp_path / "ok.png"
    PILImage.fromarray(np.zeros((8, 8, 3), dtype=np.uint8)).save(good)
    bad = tmp_path / "bad.png"
    bad.write_bytes(good.read_bytes()[:40])
    with pytest.raises(FormatError):
        ic.decode_image(bad)


def test_decode_missing_file_is_os_error(tmp_path):
    with pytest.raises(OSError):
        ic.decode_image(tmp_path / "nope.png")


def test_decode_unsupported_format_rejected(tmp_path):
    p = tmp_path / "x.gif"
    PILImage.fromarray(np.zeros((4, 4, 3), dtype=np.uint8)).save(p, "GIF")
    with pytest.raises(FormatError, match="GIF"):
        ic.decode_image(p)


def test_encode_decode_1x1_black(tmp_path):
    img = Image.from_array(np.zeros((1, 1, 3), dtype=np.uint8), Encoding.SRGB8)
    p = tmp_path / "black.png"
    ic.encode_image(img, p)
    assert np.array_equal(ic.decode_image(p).data, img.data)


def test_encode_rejects_lab(tmp_path):
    lab = Image.from_array(np.zeros((2, 2, 3)), Encoding.CIELAB_F)
    with pytest.raises(ContractError):
        ic.encode_image(lab, tmp_path / "x.png")


def test_png_roundtrip_random_images(tmp_path):
    rng = np.random.default_rng(3)
    for i in range(20):
        img = random_srgb(rng, 8, 8)
        p = tmp_path / f"r{i}.png"
        ic.encode_image(img, p)
        assert np.array_equal(ic.decode_image(p).data, img.data)


def test_decode_jpeg(tmp_path):
    p = tmp_path / "x.jpg"
    PILImage.fromarray(np.full((16, 16, 3), 128, dtype=np.uint8)).save(p, "JPEG")
    img = ic.decode_image(p)
    assert (img.width, img.height) == (16, 16)


# ---------------------------------------------------------------------------
# transfer function and Lab


def _transfer_decode_scalar(v):
    v = v / 255.0
    return v / 12.92 if v <= 0.04045 else ((v + 0.055) / 1.055) ** 2.4


def test_srgb_to_linear_endpoints_and_midpoint():
    img = Image.from_array(
        np.array([[[0, 128, 255]]], dtype=np.uint8).repeat(3, axis=2)[..., :3],
        Encoding.SRGB8,
    )
    ramp = Image.from_array(
        np.array([[[0, 0, 0], [128, 128, 128], [255, 255, 255]]], dtype=np.uint8),
        Encoding.SRGB8,
    )
    lin = ic.srgb_to_linear(ramp)
    assert lin.data[0, 0, 0] == 0.0
    assert lin.data[0, 2, 0] == 1.0
    assert lin.data[0, 1, 0] == pytest.approx(_transfer_decode_scalar(128), abs=1e-12)
    assert lin.data[0, 1, 0] == pytest.approx(0.2159, abs=1e-4)


def test_linear_roundtrip_within_one_code_value():
    ramp = np.arange(256, dtype=np.uint8).reshape(16, 16)
    img = Image.from_array(np.repeat(ramp[:, :, None], 3, axis=2), Encoding.SRGB8)
    back = ic.linear_to_srgb(ic.srgb_to_linear(img))
    assert np.abs(back.data.astype(int) - img.data.astype(int)).max() <= 1


def _lab_oracle(r, g, b):
    """Scalar sRGB -> CIELAB chain, independent of the vectorized path."""
    def dec(v):
        v = v / 255.0
        return v / 12.92 if v <= 0.04045 else ((v + 0.055) / 1.055) ** 2.4

    rl, gl, bl = dec(r), dec(g), dec(b)
    x = 0.4124564 * rl + 0.3575761 * gl + 0.1804375 * bl
    y = 0.2126729 * rl + 0.7151522 * gl + 0.0721750 * bl
    z = 0.0193339 * rl + 0.1191920 * gl + 0.9503041 * bl

    def f(t):
        d = 6.0 / 29.0
        return t ** (1.0 / 3.0) if t > d ** 3 else t / (3 * d * d) + 4.0 / 29.0

    fx, fy, fz = f(x / 0.95047), f(y / 1.0), f(z / 1.08883)
    return 116 * fy - 16, 500 * (fx - fy), 200 * (fy - fz)


def test_lab_white_point():
    lab = ic.srgb_to_lab(constant_image(255, 2)).data[0, 0]
    assert lab[0] == pytest.approx(100.0, abs=1e-6)
    assert abs(lab[1]) < 0.01 and abs(lab[2]) < 0.01


def test_lab_black():
    lab = ic.srgb_to_lab(constant_image(0, 2)).data[0, 0]
    assert np.allclose(lab, 0.0, atol=1e-9)


def test_lab_pure_red_against_oracle():
    red = Image.from_array(
        np.tile(np.array([255, 0, 0], dtype=np.uint8), (2, 2, 1)), Encoding.SRGB8
    )
    lab = ic.srgb_to_lab(red).data[0, 0]
    oracle = _lab_oracle(255, 0, 0)
    assert np.allclose(lab, oracle, atol=1e-9)
    assert lab == pytest.approx((53.24, 80.09, 67.20), abs=0.05)


def test_lab_roundtrip_random_pixels():
    rng = np.random.default_rng(5)
    img = random_srgb(rng, 32, 32)
    back = ic.lab_to_srgb(ic.srgb_to_lab(img))
    assert np.abs(back.data.astype(int) - img.data.astype(int)).max() <= 1


def test_lab_requires_srgb():
    with pytest.raises(ContractError):
        ic.srgb_to_lab(Image.from_array(np.zeros((2, 2, 3)), Encoding.LINEAR_RGB_F))
    with pytest.raises(ContractError):
        ic.lab_to_srgb(constant_image(100, 2))


# ---------------------------------------------------------------------------
# gaussian blur


def test_blur_of_constant_is_identity():
    img = constant_image(93, 16)
    assert np.array_equal(ic.gaussian_blur(img, 2.5).data, img.data)


def test_blur_rejects_bad_sigma():
    with pytest.raises(ParameterError):
        ic.gaussian_blur(constant_image(1, 8), 0.0)
    with pytest.raises(ParameterError):
        ic.gaussian_blur(constant_image(1, 8), -1.0)


def test_blur_impulse_mass_is_one():
    field = np.zeros((31, 31))
    field[15, 15] = 1.0
    img = Image.from_array(field, Encoding.GRAY_F)
    out = ic.gaussian_blur(img, 2.0)
    assert out.data.sum() == pytest.approx(1.0, abs=1e-6)


def _conv1d_replicate_oracle(row, kernel):
    r = len(kernel) // 2
    n = len(row)
    out = np.zeros(n)
    for x in range(n):
        acc = 0.0
        for i, w in enumerate(kernel):
            acc += w * row[min(max(x + i - r, 0), n - 1)]
        out[x] = acc
    return out


def test_blur_matches_dense_convolution_oracle():
    rng = np.random.default_rng(9)
    row = rng.random(17)
    img = Image.from_array(row.reshape(1, 17), Encoding.GRAY_F)
    out = ic.gaussian_blur(img, 0.3).data[0, :, 0]
    oracle = _conv1d_replicate_oracle(row, ic.gaussian_kernel(0.3))
    assert np.abs(out - oracle).max() < 1e-6


def test_blur_kernel_radius_and_normalization():
    k = ic.gaussian_kernel(1.5)
    assert len(k) == 2 * math.ceil(4.5) + 1
    assert k.sum() == pytest.approx(1.0, abs=1e-12)


def test_blur_preserves_mean_of_smooth_image():
    # replicate-edge bias cancels on smooth content; 64 px >= 6 sigma
    ramp = np.linspace(0.2, 0.8, 64)
    plane = np.add.outer(ramp, ramp) / 2.0
    img = Image.from_array(plane, Encoding.GRAY_F)
    out = ic.gaussian_blur(img, 3.0)
    rel = abs(out.data.mean() - plane.mean()) / plane.mean()
    assert rel < 1e-4


# ---------------------------------------------------------------------------
# gradient magnitude


def test_gradient_constant_is_zero():
    assert (ic.gradient_magnitude(constant_image(70, 8)).values == 0).all()


def test_gradient_of_ramp_is_one_in_interior():
    ramp = np.tile(np.arange(32, dtype=np.float64) / 255.0, (8, 1))
    img = Image.from_array(ramp, Encoding.GRAY_F)
    grad = ic.gradient_magnitude(img).values * 255.0
    assert np.allclose(grad[1:-1, 1:-1], 1.0, atol=1e-9)


def test_gradient_matches_bruteforce_oracle():
    rng = np.random.default_rng(2)
    plane = rng.random((5, 5))
    img = Image.from_array(plane, Encoding.GRAY_F)
    got = ic.gradient_magnitude(img).values

    expected = np.zeros((5, 5))
    for y in range(5):
        for x in range(5):
            x0, x1 = max(x - 1, 0), min(x + 1, 4)
            y0, y1 = max(y - 1, 0), min(y + 1, 4)
            gx = (plane[y, x1] - plane[y, x0]) / 2.0
            gy = (plane[y1, x] - plane[y0, x]) / 2.0
            expected[y, x] = math.sqrt(gx * gx + gy * gy)
    assert np.array_equal(got, expected)


def test_gradient_translation_equivariance():
    rng = np.random.default_rng(4)
    base = rng.random((20, 20))
    shifted = base[2:, 3:]
    g_full = ic.gradient_magnitude(Image.from_array(base, Encoding.GRAY_F)).values
    g_shift = ic.gradient_magnitude(Image.from_array(shifted, Encoding.GRAY_F)).values
    # compare away from both borders: the replicate rows differ, interior not
    assert np.array_equal(g_full[3:-1, 4:-1], g_shift[1:-1, 1:-1])


# ---------------------------------------------------------------------------
# resize


def test_resize_same_size_is_identity():
    rng = np.random.default_rng(6)
    img = random_srgb(rng, 9, 13)
    out = ic.resize_bilinear(img, 13, 9)
    assert np.array_equal(out.data, img.data)


def test_resize_constant_stays_constant():
    img = constant_image(128, 10)
    out = ic.resize_bilinear(img, 7, 3)
    assert (out.data == 128).all()


def test_resize_2x2_average():
    arr = np.zeros((2, 2, 3), dtype=np.uint8)
    arr[1, :, :] = 255
    img = Image.from_array(arr, Encoding.SRGB8)
    out = ic.resize_bilinear(img, 1, 1)
    assert (out.data == 128).all()  # 127.5 rounds half-to-even


def test_resize_rejects_zero_target():
    with pytest.raises(ParameterError):
        ic.resize_bilinear(constant_image(0, 4), 0, 4)


@settings(max_examples=25, deadline=None)
@given(
    seed=st.integers(0, 10_000),
    w=st.integers(1, 9),
    h=st.integers(1, 9),
)
def test_resize_never_leaves_input_range(seed, w, h):
    rng = np.random.default_rng(seed)
    img = random_srgb(rng, 6, 6)
    out = ic.resize_bilinear(img, w, h)
    assert out.data.min() >= img.data.min()
    assert out.data.max() <= img.data.max()


# ---------------------------------------------------------------------------
# masks


def test_elliptical_mask_feather_band():
    mask = ic.elliptical_mask(100, 100, 30, 30, feather_px=6)
    assert mask.weights[50, 50] == 1.0
    assert mask.weights[0, 0] == 0.0
    # on-axis pixel inside the feather band gets a fractional weight
    assert 0.0 < mask.weights[50, 50 + 33] < 1.0


def test_mask_from_image_scales_luma():
    img = constant_image(255, 4)
    mask = ic.mask_from_image(img)
    assert np.allclose(mask.weights, 1.0, atol=1e-6)
