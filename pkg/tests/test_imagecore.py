import numpy as np
import pytest

from sdcomp.errors import PpmError
from sdcomp.imagecore import (
    Image, Rect, crop, load_ppm, rgb_to_ycbcr, round_half_away, save_ppm, ycbcr_to_rgb,
)


def px(img):
    return tuple(int(v) for v in img.pixels[0, 0])


def test_load_single_pixel():
    img = load_ppm(b"P6\n1 1\n255\n" + bytes([255, 0, 0]))
    assert (img.width, img.height) == (1, 1)
    assert px(img) == (255, 0, 0)


@pytest.mark.parametrize("data", [
    b"P5\n1 1\n255\n\x00",
    b"P6\n2 1\n255\n\x00\x00\x00",
    b"P6\n1 1\n65535\n" + bytes(6),
    b"P6\n1\n255\n\x00\x00\x00",
    b"P6 0 1 255 ",
    b"",
])
def test_load_rejects(data):
    with pytest.raises(PpmError):
        load_ppm(data)


def test_header_whitespace_variants():
    img = load_ppm(b"P6 2\t1\r\n255 " + bytes(range(6)))
    assert img.to_bytes() == bytes(range(6))


def test_save_black_pixel():
    assert save_ppm(Image.filled(1, 1, (0, 0, 0))) == b"P6\n1 1\n255\n\x00\x00\x00"


def test_save_header_declares_dims():
    assert save_ppm(Image.filled(2, 2, (9, 9, 9))).startswith(b"P6\n2 2\n255\n")


def test_ppm_roundtrip_random():
    rng = np.random.default_rng(1)
    img = Image(rng.integers(0, 256, (16, 16, 3), dtype=np.uint8))
    assert load_ppm(save_ppm(img)) == img


def test_image_invariants():
    with pytest.raises(ValueError):
        Image(np.zeros((0, 3, 3), np.uint8))
    with pytest.raises(ValueError):
        Image.from_bytes(2, 2, bytes(11))
    img = Image.filled(3, 2, (1, 2, 3))
    assert len(img.to_bytes()) == 3 * 2 * 3
    assert not img.pixels.flags.writeable


def ycc(rgb):
    planes = rgb_to_ycbcr(Image.filled(1, 1, rgb))
    return tuple(int(p[0, 0]) for p in planes)


def test_ycbcr_black_white():
    assert ycc((0, 0, 0)) == (0, 128, 128)
    assert ycc((255, 255, 255)) == (255, 128, 128)


def test_ycbcr_red():
    # 0.299*255 = 76.245 -> 76; 128 - 0.168736*255 = 84.97232 -> 85;
    # 128 + 0.5*255 = 255.5 -> 256 -> clamp 255
    assert ycc((255, 0, 0)) == (76, 85, 255)


def test_ycbcr_to_rgb_neutral():
    one = lambda v: np.full((1, 1), v, np.uint8)
    assert px(ycbcr_to_rgb(one(0), one(128), one(128))) == (0, 0, 0)
    assert px(ycbcr_to_rgb(one(255), one(128), one(128))) == (255, 255, 255)


def test_ycbcr_to_rgb_shape_check():
    with pytest.raises(ValueError):
        ycbcr_to_rgb(np.zeros((2, 2)), np.zeros((2, 2)), np.zeros((2, 3)))


def test_color_roundtrip_all_colors():
    # Exhaustive over all 2**24 colors; the observed worst case is 1.
    c = np.arange(2 ** 24, dtype=np.uint32)
    rgb = np.stack([(c >> 16) & 255, (c >> 8) & 255, c & 255], -1).astype(np.uint8)
    img = Image(rgb.reshape(4096, 4096, 3))
    back = ycbcr_to_rgb(*rgb_to_ycbcr(img))
    err = np.abs(back.pixels.astype(int) - img.pixels.astype(int)).max()
    assert err <= 1


@pytest.mark.parametrize("x, r", [
    (0.5, 1), (-0.5, -1), (1.5, 2), (2.5, 3), (-2.5, -3), (0.49999999999999994, 0),
    (2.4999999, 2), (-0.2, 0), (254.5, 255),
])
def test_round_half_away(x, r):
    assert round_half_away(x) == r


def test_crop_identity_and_pixel():
    rng = np.random.default_rng(3)
    img = Image(rng.integers(0, 256, (5, 7, 3), dtype=np.uint8))
    assert crop(img, Rect(0, 0, 7, 5)) == img
    one = crop(img, Rect(0, 0, 1, 1))
    assert one.to_bytes() == img.pixels[0, 0].tobytes()
    sub = crop(img, Rect(2, 1, 3, 4))
    assert (sub.width, sub.height) == (3, 4)
    assert np.array_equal(sub.pixels, img.pixels[1:5, 2:5])


@pytest.mark.parametrize("r", [Rect(0, 0, 8, 5), Rect(5, 0, 3, 1), Rect(0, 0, 0, 1), Rect(-1, 0, 1, 1)])
def test_crop_out_of_bounds(r):
    with pytest.raises(ValueError):
        crop(Image.filled(7, 5, (0, 0, 0)), r)
