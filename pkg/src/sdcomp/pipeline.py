"""Image + priors -> SDC1 stream, and (possibly truncated) stream -> image."""

from __future__ import annotations

from dataclasses import astuple, dataclass

import numpy as np

from . import container
from .container import RegionUnit, StructuredBitstream
from .imagecore import Image, Rect, crop
from .priors import Level, Ranking, SemanticPriors, group_by_level
from .regioncodec import decode_region, encode_region, mask_rle_decode, mask_rle_encode


@dataclass(frozen=True)
class QualityProfile:
    """Quality index per level; lower index means finer quantization."""

    l1: int = 2
    l2: int = 3
    l3: int = 4
    other: int = 5
    background: int = 6

    def __post_init__(self):
        qs = astuple(self)
        if not all(isinstance(q, int) and 1 <= q <= 8 for q in qs):
            raise ValueError(f"quality indices must be integers in [1, 8], got {qs}")
        if list(qs) != sorted(qs):
            raise ValueError(f"profile must be non-decreasing from L1 to background, got {qs}")

    @classmethod
    def parse(cls, text: str) -> "QualityProfile":
        parts = [p.strip() for p in text.split(",")]
        if len(parts) != 5:
            raise ValueError(f"profile needs 5 comma-separated indices, got {text!r}")
        try:
            return cls(*(int(p) for p in parts))
        except ValueError as e:
            raise ValueError(f"bad profile {text!r}: {e}") from None

    def for_level(self, level: Level) -> int:
        return astuple(self)[int(level) - 1]

    def __str__(self) -> str:
        return ",".join(str(q) for q in astuple(self))


DEFAULT_PROFILE = QualityProfile()


def mean_color(img: Image) -> tuple[int, int, int]:
    n = img.width * img.height
    sums = img.pixels.reshape(-1, 3).astype(np.int64).sum(axis=0)
    return tuple(int((2 * s + n) // (2 * n)) for s in sums)


def encode_image(
    img: Image,
    priors: SemanticPriors,
    ranking: Ranking,
    profile: QualityProfile = DEFAULT_PROFILE,
) -> bytes:
    if (priors.image_width, priors.image_height) != (img.width, img.height):
        raise ValueError(
            f"priors describe a {priors.image_width}x{priors.image_height} image, "
            f"got {img.width}x{img.height}"
        )
    units = []
    groups = group_by_level(priors, ranking)
    for level, members in zip((Level.L1, Level.L2, Level.L3, Level.OTHER), groups):
        q = profile.for_level(level)
        for o in members:
            payload = encode_region(crop(img, o.bbox), o.mask, q)
            mask_bytes = mask_rle_encode(o.mask) if o.mask is not None else None
            units.append(RegionUnit(level, o.id, o.bbox, q, payload.data, mask_bytes))
    full = Rect(0, 0, img.width, img.height)
    q = profile.background
    units.append(RegionUnit(Level.BACKGROUND, 0, full, q, encode_region(img, None, q).data))
    stream = StructuredBitstream(img.width, img.height, mean_color(img), tuple(units))
    return container.serialize(stream)


def composite_order(units) -> list[RegionUnit]:
    """Least important first, so the most important content is drawn last."""
    return sorted(units, key=lambda u: (-int(u.level), u.object_id))


def decode_unit(u: RegionUnit) -> tuple[Image, np.ndarray | None]:
    """Decoded pixels of one unit plus its mask (``None`` for full bbox)."""
    x, y, w, h = u.bbox
    pixels = decode_region(u.payload, w, h, u.quality)
    mask = mask_rle_decode(u.mask_bytes, w, h) if u.mask_bytes else None
    return pixels, mask


def decode_image(data: bytes, max_level: int = 5) -> Image:
    if not 1 <= max_level <= 5:
        raise ValueError(f"max level {max_level} outside [1, 5]")
    s = container.parse(data)
    canvas = np.empty((s.height, s.width, 3), dtype=np.uint8)
    canvas[...] = s.mean_color
    kept = [u for u in s.units if u.level <= max_level]
    for u in composite_order(kept):
        pixels, mask = decode_unit(u)
        x, y, w, h = u.bbox
        dst = canvas[y:y + h, x:x + w]
        if mask is None:
            dst[...] = pixels.pixels
        else:
            dst[mask] = pixels.pixels[mask]
    return Image(canvas)
