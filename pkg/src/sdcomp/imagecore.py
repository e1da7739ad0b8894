"""Pixel buffers, BT.601 full-range color transforms, cropping and PPM I/O.

All rounding is half-away-from-zero so results do not depend on the
platform's default rounding mode.
"""

from __future__ import annotations

import re
from typing import NamedTuple

import numpy as np

from .errors import PpmError


class Rect(NamedTuple):
    x: int
    y: int
    w: int
    h: int

    def within(self, width: int, height: int) -> bool:
        return (
            self.x >= 0
            and self.y >= 0
            and self.w >= 1
            and self.h >= 1
            and self.x + self.w <= width
            and self.y + self.h <= height
        )

    @property
    def area(self) -> int:
        return self.w * self.h


class Image:
    """Immutable 8-bit RGB raster backed by a ``(height, width, 3)`` array."""

    __slots__ = ("_pixels",)

    def __init__(self, pixels: np.ndarray):
        arr = np.asarray(pixels)
        if arr.ndim != 3 or arr.shape[2] != 3:
            raise ValueError(f"expected (h, w, 3) array, got shape {arr.shape}")
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("image must be at least 1x1")
        if arr.dtype != np.uint8:
            raise ValueError(f"expected uint8 samples, got {arr.dtype}")
        arr = np.ascontiguousarray(arr).copy()
        arr.flags.writeable = False
        self._pixels = arr

    @classmethod
    def from_bytes(cls, width: int, height: int, data: bytes) -> "Image":
        if len(data) != width * height * 3:
            raise ValueError(
                f"pixel buffer holds {len(data)} bytes, need {width * height * 3}"
            )
        return cls(np.frombuffer(data, dtype=np.uint8).reshape(height, width, 3))

    @classmethod
    def filled(cls, width: int, height: int, rgb) -> "Image":
        arr = np.empty((height, width, 3), dtype=np.uint8)
        arr[...] = np.asarray(rgb, dtype=np.uint8)
        return cls(arr)

    @property
    def pixels(self) -> np.ndarray:
        return self._pixels

    @property
    def width(self) -> int:
        return self._pixels.shape[1]

    @property
    def height(self) -> int:
        return self._pixels.shape[0]

    def to_bytes(self) -> bytes:
        return self._pixels.tobytes()

    def __eq__(self, other) -> bool:
        if not isinstance(other, Image):
            return NotImplemented
        return self._pixels.shape == other._pixels.shape and bool(
            np.array_equal(self._pixels, other._pixels)
        )

    def __hash__(self):
        return hash((self.width, self.height, self.to_bytes()))

    def __repr__(self) -> str:
        return f"Image({self.width}x{self.height})"


def round_half_away(x):
    """Round to nearest integer, ties away from zero, as float64.

    ``a - floor(a)`` is exact in binary floating point, so the tie test does
    not suffer from the double rounding of ``floor(a + 0.5)``.
    """
    x = np.asarray(x, dtype=np.float64)
    a = np.abs(x)
    fl = np.floor(a)
    r = np.where(a - fl >= 0.5, fl + 1.0, fl)
    return np.copysign(r, x)


def to_u8(x) -> np.ndarray:
    return np.clip(round_half_away(x), 0, 255).astype(np.uint8)


_HEADER = re.compile(
    rb"P6\s+(\d+)\s+(\d+)\s+(\d+)\s"
)


def load_ppm(data: bytes) -> Image:
    """Parse a binary P6 PPM with maxval 255."""
    data = bytes(data)
    if not data.startswith(b"P6"):
        raise PpmError("not a binary PPM (magic must be 'P6')")
    m = _HEADER.match(data)
    if m is None:
        raise PpmError("malformed PPM header")
    width, height, maxval = (int(g) for g in m.groups())
    if maxval != 255:
        raise PpmError(f"unsupported maxval {maxval}, only 255 is accepted")
    if width < 1 or height < 1:
        raise PpmError(f"invalid dimensions {width}x{height}")
    start = m.end()
    need = width * height * 3
    body = data[start:start + need]
    if len(body) < need:
        raise PpmError(f"truncated pixel data: {len(body)} of {need} bytes")
    return Image.from_bytes(width, height, body)


def save_ppm(img: Image) -> bytes:
    return b"P6\n%d %d\n255\n" % (img.width, img.height) + img.to_bytes()


def rgb_to_ycbcr(img: Image) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Return uint8 ``(Y, Cb, Cr)`` planes, each ``(height, width)``."""
    px = img.pixels.astype(np.float64)
    r, g, b = px[..., 0], px[..., 1], px[..., 2]
    y = 0.299 * r + 0.587 * g + 0.114 * b
    cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b
    cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b
    return to_u8(y), to_u8(cb), to_u8(cr)


def ycbcr_to_rgb(y, cb, cr) -> Image:
    y = np.asarray(y, dtype=np.float64)
    cb = np.asarray(cb, dtype=np.float64) - 128.0
    cr = np.asarray(cr, dtype=np.float64) - 128.0
    if not (y.shape == cb.shape == cr.shape) or y.ndim != 2:
        raise ValueError("planes must be equal-size 2-D arrays")
    r = y + 1.402 * cr
    g = y - 0.344136 * cb - 0.714136 * cr
    b = y + 1.772 * cb
    return Image(np.stack([to_u8(r), to_u8(g), to_u8(b)], axis=-1))


def crop(img: Image, r: Rect) -> Image:
    if not Rect(*r).within(img.width, img.height):
        raise ValueError(f"rect {tuple(r)} outside {img.width}x{img.height} image")
    return Image(img.pixels[r.y:r.y + r.h, r.x:r.x + r.w])
