"""SDC1 structured bitstream: a 16-byte header followed by region units.

Layout, all integers little-endian::

    header  magic "SDC1" | version u8 | width u32 | height u32 | mean r,g,b u8
    unit    level u8 | object_id u16 | x u16 | y u16 | w u16 | h u16 |
            quality u8 | mask_len u32 | payload_len u32 | mask | payload

Units carry no count; they run to the end of input, sorted by
``(level, object_id)``. Cutting the stream after any unit therefore leaves a
valid stream, which is what :func:`truncate` relies on.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Optional

from .errors import BitstreamError
from .imagecore import Rect
from .priors import Level

MAGIC = b"SDC1"
VERSION = 1
HEADER = struct.Struct("<4sBII3B")
UNIT = struct.Struct("<BHHHHHBII")
HEADER_SIZE = HEADER.size  # 16
UNIT_HEADER_SIZE = UNIT.size  # 20


@dataclass(frozen=True)
class RegionUnit:
    level: Level
    object_id: int
    bbox: Rect
    quality: int
    payload: bytes
    mask_bytes: Optional[bytes] = None

    def __post_init__(self):
        object.__setattr__(self, "level", Level(int(self.level)))
        object.__setattr__(self, "bbox", Rect(*self.bbox))
        if not self.mask_bytes:
            object.__setattr__(self, "mask_bytes", None)

    @property
    def size(self) -> int:
        return UNIT_HEADER_SIZE + len(self.mask_bytes or b"") + len(self.payload)


@dataclass(frozen=True)
class StructuredBitstream:
    width: int
    height: int
    mean_color: tuple[int, int, int]
    units: tuple[RegionUnit, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "units", tuple(self.units))
        object.__setattr__(self, "mean_color", tuple(self.mean_color))


def _check_unit(u: RegionUnit, width: int, height: int) -> None:
    if not 1 <= int(u.level) <= 5:
        raise BitstreamError(f"level code {int(u.level)} outside [1, 5]")
    if not 1 <= u.quality <= 8:
        raise BitstreamError(f"unit {u.object_id}: quality {u.quality} outside [1, 8]")
    if not Rect(*u.bbox).within(width, height):
        raise BitstreamError(f"unit {u.object_id}: bbox {tuple(u.bbox)} outside frame")
    background = u.level == Level.BACKGROUND
    if background:
        if u.object_id != 0:
            raise BitstreamError("background unit must have object id 0")
        if tuple(u.bbox) != (0, 0, width, height):
            raise BitstreamError("background unit must cover the full frame")
        if u.mask_bytes:
            raise BitstreamError("background unit cannot carry a mask")
    elif u.object_id < 1:
        raise BitstreamError(f"object unit at level {int(u.level)} has id {u.object_id}")


def _check_order(units) -> None:
    seen = set()
    prev = None
    for u in units:
        key = (int(u.level), u.object_id)
        if prev is not None and key <= prev:
            raise BitstreamError(f"unit {key} out of order after {prev}")
        if u.object_id in seen:
            raise BitstreamError(f"duplicate object id {u.object_id}")
        seen.add(u.object_id)
        prev = key


def serialize(s: StructuredBitstream) -> bytes:
    if not (1 <= s.width <= 0xFFFFFFFF and 1 <= s.height <= 0xFFFFFFFF):
        raise BitstreamError(f"invalid frame size {s.width}x{s.height}")
    if len(s.mean_color) != 3 or not all(0 <= c <= 255 for c in s.mean_color):
        raise BitstreamError(f"invalid mean color {s.mean_color}")
    _check_order(s.units)
    out = [HEADER.pack(MAGIC, VERSION, s.width, s.height, *s.mean_color)]
    for u in s.units:
        _check_unit(u, s.width, s.height)
        mask = u.mask_bytes or b""
        try:
            out.append(UNIT.pack(int(u.level), u.object_id, *u.bbox, u.quality,
                                 len(mask), len(u.payload)))
        except struct.error as e:
            raise BitstreamError(f"unit {u.object_id}: field out of range ({e})") from None
        out.append(mask)
        out.append(u.payload)
    return b"".join(out)


def _parse_header(data: bytes) -> tuple[int, int, tuple[int, int, int]]:
    if len(data) < HEADER_SIZE:
        if not MAGIC.startswith(data[:4]):
            raise BitstreamError("bad magic, not an SDC1 stream")
        raise BitstreamError(f"header truncated: {len(data)} of {HEADER_SIZE} bytes")
    magic, version, width, height, r, g, b = HEADER.unpack_from(data)
    if magic != MAGIC:
        raise BitstreamError("bad magic, not an SDC1 stream")
    if version != VERSION:
        raise BitstreamError(f"unsupported SDC version {version}")
    if width < 1 or height < 1:
        raise BitstreamError(f"invalid frame size {width}x{height}")
    return width, height, (r, g, b)


def iter_unit_spans(data: bytes):
    """Yield ``(unit, end_offset)`` for each unit, validating as it goes."""
    data = bytes(data)
    width, height, _ = _parse_header(data)
    pos = HEADER_SIZE
    n = len(data)
    prev = None
    seen = set()
    while pos < n:
        if n - pos < UNIT_HEADER_SIZE:
            raise BitstreamError(f"unit header truncated at offset {pos}")
        level, oid, x, y, w, h, q, mlen, plen = UNIT.unpack_from(data, pos)
        pos += UNIT_HEADER_SIZE
        if mlen + plen > n - pos:
            raise BitstreamError(
                f"unit {oid} declares {mlen + plen} bytes, only {n - pos} remain"
            )
        if not 1 <= level <= 5:
            raise BitstreamError(f"level code {level} outside [1, 5]")
        unit = RegionUnit(
            Level(level), oid, Rect(x, y, w, h), q,
            data[pos + mlen:pos + mlen + plen],
            data[pos:pos + mlen] if mlen else None,
        )
        _check_unit(unit, width, height)
        key = (level, oid)
        if prev is not None and key <= prev:
            raise BitstreamError(f"unit {key} out of order after {prev}")
        if oid in seen:
            raise BitstreamError(f"duplicate object id {oid}")
        seen.add(oid)
        prev = key
        pos += mlen + plen
        yield unit, pos


def parse(data: bytes) -> StructuredBitstream:
    data = bytes(data)
    width, height, mean = _parse_header(data)
    units = [u for u, _ in iter_unit_spans(data)]
    return StructuredBitstream(width, height, mean, tuple(units))


def truncate(data: bytes, max_level: int) -> bytes:
    """Byte prefix keeping the header and every unit with level <= max_level."""
    if not 1 <= max_level <= 5:
        raise ValueError(f"max level {max_level} outside [1, 5]")
    data = bytes(data)
    end = HEADER_SIZE
    _parse_header(data)
    for unit, unit_end in iter_unit_spans(data):
        if unit.level <= max_level:
            end = unit_end
    return data[:end]


def inspect(data: bytes) -> dict:
    s = parse(data)
    units = []
    per_level = {int(lvl): 0 for lvl in Level}
    for u in s.units:
        units.append({
            "level": int(u.level),
            "object_id": u.object_id,
            "bbox": list(u.bbox),
            "quality": u.quality,
            "mask_bytes": len(u.mask_bytes or b""),
            "payload_bytes": len(u.payload),
            "unit_bytes": u.size,
        })
        per_level[int(u.level)] += u.size
    total = len(data)
    return {
        "width": s.width,
        "height": s.height,
        "mean_color": list(s.mean_color),
        "unit_count": len(units),
        "units": units,
        "header_bytes": HEADER_SIZE,
        "bytes_per_level": per_level,
        "total_bytes": total,
        "bpp": 8 * total / (s.width * s.height),
    }


def format_manifest(m: dict) -> str:
    lines = [
        f"SDC1 {m['width']}x{m['height']}  mean={tuple(m['mean_color'])}  "
        f"units={m['unit_count']}  bytes={m['total_bytes']}  bpp={m['bpp']:.6g}",
        f"{'level':>5} {'id':>5} {'bbox':>22} {'q':>2} {'mask':>7} {'payload':>9}",
    ]
    for u in m["units"]:
        bbox = ",".join(str(v) for v in u["bbox"])
        lines.append(
            f"{u['level']:>5} {u['object_id']:>5} {bbox:>22} {u['quality']:>2} "
            f"{u['mask_bytes']:>7} {u['payload_bytes']:>9}"
        )
    return "\n".join(lines)
