"""MSB-first bit writer/reader with unsigned and signed Exp-Golomb codes.

ue(v): floor(log2(v+1)) zero bits followed by v+1 in binary.
se(v): v > 0 maps to ue(2v-1), v <= 0 maps to ue(-2v).

Bits are staged as '0'/'1' text and packed once; for the symbol counts a
region produces this is much faster than shifting Python ints per bit.
"""

from __future__ import annotations

from .errors import RegionDecodeError

# ue values this large only come from corrupt input; refuse instead of
# materialising enormous integers.
MAX_PREFIX_ZEROS = 32

_UE_CACHE = []
for _v in range(4096):
    _s = bin(_v + 1)[2:]
    _UE_CACHE.append("0" * (len(_s) - 1) + _s)
del _v, _s


def ue_bits(v: int) -> str:
    if v < 0:
        raise ValueError(f"ue() needs a non-negative value, got {v}")
    if v < 4096:
        return _UE_CACHE[v]
    s = bin(v + 1)[2:]
    return "0" * (len(s) - 1) + s


def se_bits(v: int) -> str:
    return ue_bits(2 * v - 1 if v > 0 else -2 * v)


class BitWriter:
    def __init__(self):
        self._parts: list[str] = []

    def ue(self, v: int) -> None:
        self._parts.append(ue_bits(v))

    def se(self, v: int) -> None:
        self._parts.append(se_bits(v))

    def bits(self) -> str:
        return "".join(self._parts)

    def getvalue(self) -> bytes:
        """Packed bytes, zero-padded up to the next byte boundary."""
        s = self.bits()
        if not s:
            return b""
        nbytes = (len(s) + 7) // 8
        s = s.ljust(nbytes * 8, "0")
        return int(s, 2).to_bytes(nbytes, "big")


class BitReader:
    def __init__(self, data: bytes):
        data = bytes(data)
        self._bits = bin(int.from_bytes(data, "big"))[2:].zfill(8 * len(data)) if data else ""
        self.pos = 0

    @property
    def remaining(self) -> int:
        return len(self._bits) - self.pos

    def ue(self) -> int:
        one = self._bits.find("1", self.pos)
        if one < 0:
            raise RegionDecodeError("bitstream exhausted inside an Exp-Golomb prefix")
        zeros = one - self.pos
        if zeros > MAX_PREFIX_ZEROS:
            raise RegionDecodeError(f"Exp-Golomb prefix of {zeros} zeros is too long")
        end = one + zeros + 1
        if end > len(self._bits):
            raise RegionDecodeError("bitstream exhausted inside an Exp-Golomb suffix")
        self.pos = end
        return int(self._bits[one:end], 2) - 1

    def se(self) -> int:
        k = self.ue()
        return (k + 1) // 2 if k & 1 else -(k // 2)

    def expect_padding(self) -> None:
        """Require that only fewer than 8 zero bits remain."""
        rest = self._bits[self.pos:]
        if len(rest) >= 8 or "1" in rest:
            raise RegionDecodeError(f"{len(rest)} trailing bits after the last symbol")
