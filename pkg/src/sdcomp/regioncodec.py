"""Bit-exact lossy codec for one rectangular region.

Pipeline: BT.601 YCbCr 4:4:4, optional mask mean-fill, edge-replicated
padding to multiples of 8, 8x8 orthonormal DCT-II, dead-zone uniform
quantizer with step ``2**(q-1) * (4+u+v) / 4``, then per block a DPCM DC
(signed Exp-Golomb) followed by zigzag AC ``(run ue, level se)`` pairs and
an ``ue(63)`` end-of-block. Planes are coded Y, Cb, Cr.

The transform is evaluated as a direct double sum so every implementation
that follows the same order produces identical floats:

    coef[u, v] = sum_x sum_y basis[u, v, x, y] * f[x, y]
    basis[u, v, x, y] = (a(u) * cos_ux) * (a(v) * cos_vy)

accumulated from 0.0 with ``x`` in the outer loop and ``y`` in the inner
loop. The inverse uses the same basis with ``u`` outer and ``v`` inner.
Cosines come from a table of correctly rounded ``cos(k*pi/16)`` values, not
from the platform libm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bitio import MAX_PREFIX_ZEROS, BitWriter
from .errors import RegionDecodeError
from .imagecore import Image, rgb_to_ycbcr, round_half_away, to_u8, ycbcr_to_rgb

Q_MIN, Q_MAX = 1, 8
BLOCK = 8
EOB = 63

# Natural (row * 8 + col) index of each zigzag position.
ZIGZAG = np.array([
     0,  1,  8, 16,  9,  2,  3, 10, 17, 24, 32, 25, 18, 11,  4,  5,
    12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13,  6,  7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55, 62, 63,
])

# cos(k * pi / 16), k = 0..8, correctly rounded.
_COS16 = (
    1.0,
    0.9807852804032304,
    0.9238795325112867,
    0.8314696123025452,
    0.7071067811865476,
    0.5555702330196022,
    0.3826834323650898,
    0.19509032201612828,
    0.0,
)
_SQRT_1_8 = 0.3535533905932738


def _cos_pi16(k: int) -> float:
    k %= 32
    if k > 16:
        k = 32 - k
    if k > 8:
        return -_COS16[16 - k]
    return _COS16[k]


def _basis() -> np.ndarray:
    a = [_SQRT_1_8] + [0.5] * 7
    c = np.array([[a[u] * _cos_pi16((2 * x + 1) * u) for x in range(8)] for u in range(8)])
    # basis[u, v, x, y] = c[u, x] * c[v, y]; elementwise product, no summation.
    return c[:, None, :, None] * c[None, :, None, :]


BASIS = _basis()


def quant_step(q: int, u: int, v: int) -> float:
    if not Q_MIN <= q <= Q_MAX:
        raise ValueError(f"quality index {q} outside [{Q_MIN}, {Q_MAX}]")
    if not (0 <= u < 8 and 0 <= v < 8):
        raise ValueError(f"frequency ({u}, {v}) outside the 8x8 block")
    return float(2 ** (q - 1)) * (4 + u + v) / 4


def quant_table(q: int) -> np.ndarray:
    return np.array([[quant_step(q, u, v) for v in range(8)] for u in range(8)])


def fdct_blocks(blocks: np.ndarray) -> np.ndarray:
    """Forward DCT of an ``(n, 8, 8)`` stack of level-shifted samples."""
    blocks = np.asarray(blocks, dtype=np.float64)
    acc = np.zeros(blocks.shape[:1] + (8, 8))
    for x in range(8):
        for y in range(8):
            acc = acc + BASIS[:, :, x, y] * blocks[:, x, y, None, None]
    return acc


def idct_blocks(coefs: np.ndarray) -> np.ndarray:
    coefs = np.asarray(coefs, dtype=np.float64)
    acc = np.zeros(coefs.shape[:1] + (8, 8))
    # acc never holds -0.0, so skipping zero coefficients leaves every sum
    # bit-identical to the full u-then-v accumulation.
    for u in range(8):
        for v in range(8):
            c = coefs[:, u, v]
            live = np.flatnonzero(c)
            if live.size == c.size:
                acc += BASIS[u, v] * c[:, None, None]
            elif live.size:
                acc[live] += BASIS[u, v] * c[live, None, None]
    return acc


def quantize(coefs: np.ndarray, q: int) -> np.ndarray:
    return round_half_away(coefs / quant_table(q)).astype(np.int64)


def dequantize(indices: np.ndarray, q: int) -> np.ndarray:
    return indices * quant_table(q)


@dataclass(frozen=True)
class RegionPayload:
    data: bytes
    coded_w: int
    coded_h: int


def _padded(n: int) -> int:
    return -(-n // BLOCK) * BLOCK


def _to_blocks(plane: np.ndarray) -> np.ndarray:
    h, w = plane.shape
    return (
        plane.reshape(h // 8, 8, w // 8, 8).transpose(0, 2, 1, 3).reshape(-1, 8, 8)
    )


def _from_blocks(blocks: np.ndarray, h: int, w: int) -> np.ndarray:
    return blocks.reshape(h // 8, w // 8, 8, 8).transpose(0, 2, 1, 3).reshape(h, w)


def _mean_fill(plane: np.ndarray, mask: np.ndarray) -> np.ndarray:
    count = int(mask.sum())
    if count == plane.size:
        return plane
    if count == 0:
        # Nothing visible; a flat mid-gray plane codes to zero coefficients.
        return np.full_like(plane, 128)
    total = int(plane[mask].astype(np.int64).sum())
    mean = (2 * total + count) // (2 * count)
    out = plane.copy()
    out[~mask] = mean
    return out


def _write_plane(bw: BitWriter, indices: np.ndarray) -> None:
    zz = indices.reshape(-1, 64)[:, ZIGZAG]
    dc = zz[:, 0]
    dc_diff = np.diff(dc, prepend=0).tolist()
    ac = zz[:, 1:]
    rows, cols = np.nonzero(ac)
    vals = ac[rows, cols].tolist()
    rows = rows.tolist()
    cols = cols.tolist()
    k = 0
    nnz = len(rows)
    for b, d in enumerate(dc_diff):
        bw.se(d)
        prev = -1
        while k < nnz and rows[k] == b:
            bw.ue(cols[k] - prev - 1)
            bw.se(vals[k])
            prev = cols[k]
            k += 1
        bw.ue(EOB)


def _ue_symbols(data: bytes) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Split a payload into its chain of ue codewords.

    Every symbol of a region payload or mask is a ue codeword (se is mapped
    onto ue), so codeword boundaries can be found without the grammar.
    Returns ``(values, ends, bits)``; ``ends[i]`` is the bit offset just past
    codeword ``i``. The chain stops at the first codeword that is incomplete
    or has an over-long prefix.
    """
    bits = np.unpackbits(np.frombuffer(data, dtype=np.uint8))
    n = bits.size
    empty = np.zeros(0, dtype=np.int64)
    if n == 0:
        return empty, empty, bits
    pos = np.arange(n, dtype=np.int64)
    next_one = np.where(bits == 1, pos, n)
    next_one = np.minimum.accumulate(next_one[::-1])[::-1]
    ends_all = (2 * next_one - pos + 1).tolist()
    starts = []
    p = 0
    while p < n:
        e = ends_all[p]
        if e > n:
            break
        starts.append(p)
        p = e
    s = np.array(starts, dtype=np.int64)
    ones = next_one[s]
    zeros = ones - s
    bad = np.flatnonzero(zeros > MAX_PREFIX_ZEROS)
    if bad.size:
        cut = int(bad[0])
        s, ones, zeros = s[:cut], ones[:cut], zeros[:cut]
    vals = np.zeros(s.size, dtype=np.int64)
    for j in range(int(zeros.max(initial=-1)) + 1):
        take = bits[np.minimum(ones + j, n - 1)].astype(np.int64)
        vals = np.where(zeros >= j, vals * 2 + take, vals)
    return vals - 1, ones + zeros + 1, bits


def _se(k: np.ndarray) -> np.ndarray:
    return np.where(k & 1, (k + 1) >> 1, -(k >> 1))


def _check_tail(bits: np.ndarray, used: int) -> None:
    if bits.size - used >= 8 or bits[used:].any():
        raise RegionDecodeError(f"{bits.size - used} trailing bits after the last symbol")


def _read_planes(data: bytes, nblocks: int, nplanes: int = 3) -> list[np.ndarray]:
    """Parse ``nplanes`` planes of ``nblocks`` blocks into quantized indices.

    A block is DC, then alternating (run, level) symbols up to a run of
    EOB. Only run slots can end a block, so each block's EOB is the first
    EOB-valued symbol at the run parity after its DC.
    """
    vals, ends, bits = _ue_symbols(data)
    n = vals.size
    sentinel = n + 1
    eob_at = np.where(vals == EOB, np.arange(n), sentinel)
    next_eob = np.full(n + 2, sentinel, dtype=np.int64)
    for par in (0, 1):
        sub = eob_at[par::2]
        next_eob[par:n:2] = np.minimum.accumulate(sub[::-1])[::-1]
    next_eob = next_eob.tolist()
    total = nblocks * nplanes
    starts = [0] * total
    eobs = [0] * total
    d = 0
    for b in range(total):
        e = next_eob[d + 1] if d + 1 < n else sentinel
        if e >= n:
            raise RegionDecodeError(f"bitstream exhausted in block {b % nblocks}")
        starts[b] = d
        eobs[b] = e
        d = e + 1
    _check_tail(bits, int(ends[d - 1]))

    S = np.array(starts, dtype=np.int64)
    E = np.array(eobs, dtype=np.int64)
    dc = np.cumsum(_se(vals[S]).reshape(nplanes, nblocks), axis=1).ravel()
    npairs = (E - S - 1) // 2
    blk = np.repeat(np.arange(total), npairs)
    first = np.cumsum(npairs) - npairs
    j = np.arange(blk.size) - first[blk]
    run_pos = S[blk] + 1 + 2 * j
    steps = vals[run_pos] + 1
    cs = np.cumsum(steps)
    zpos = cs - (cs - steps)[first[blk]]
    if blk.size and int(zpos.max()) > 63:
        b = int(blk[np.argmax(zpos > 63)]) % nblocks
        raise RegionDecodeError(f"AC run overflows block {b}")
    levels = vals[run_pos + 1]
    if blk.size and not levels.all():
        b = int(blk[np.argmin(levels != 0)]) % nblocks
        raise RegionDecodeError(f"zero AC level in block {b}")
    zz = np.zeros(total * 64, dtype=np.int64)
    zz[np.arange(total) * 64] = dc
    zz[blk * 64 + zpos] = _se(levels)
    out = np.zeros((total, 64), dtype=np.int64)
    out[:, ZIGZAG] = zz.reshape(total, 64)
    return list(out.reshape(nplanes, nblocks, 8, 8))


def encode_region(img: Image, mask=None, q: int = 1) -> RegionPayload:
    """Encode an RGB crop, optionally restricted to a boolean ``(h, w)`` mask."""
    if not Q_MIN <= q <= Q_MAX:
        raise ValueError(f"quality index {q} outside [{Q_MIN}, {Q_MAX}]")
    h, w = img.height, img.width
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (h, w):
            raise ValueError(f"mask shape {mask.shape} does not match crop {(h, w)}")
    ph, pw = _padded(h), _padded(w)
    bw = BitWriter()
    for plane in rgb_to_ycbcr(img):
        if mask is not None:
            plane = _mean_fill(plane, mask)
        padded = np.pad(plane, ((0, ph - h), (0, pw - w)), mode="edge")
        blocks = _to_blocks(padded.astype(np.float64) - 128.0)
        _write_plane(bw, quantize(fdct_blocks(blocks), q))
    return RegionPayload(bw.getvalue(), pw, ph)


def decode_region(data, width: int, height: int, q: int) -> Image:
    if isinstance(data, RegionPayload):
        data = data.data
    if not Q_MIN <= q <= Q_MAX:
        raise RegionDecodeError(f"quality index {q} outside [{Q_MIN}, {Q_MAX}]")
    if width < 1 or height < 1:
        raise RegionDecodeError(f"invalid region size {width}x{height}")
    ph, pw = _padded(height), _padded(width)
    nblocks = (ph // 8) * (pw // 8)
    planes = []
    for indices in _read_planes(bytes(data), nblocks):
        samples = idct_blocks(dequantize(indices, q)) + 128.0
        planes.append(to_u8(_from_blocks(samples, ph, pw))[:height, :width])
    return ycbcr_to_rgb(*planes)


def _runs(mask: np.ndarray) -> list[int]:
    flat = np.asarray(mask, dtype=bool).ravel()
    edges = np.flatnonzero(flat[1:] != flat[:-1]) + 1
    bounds = np.concatenate(([0], edges, [flat.size]))
    runs = np.diff(bounds).tolist()
    if flat.size and flat[0]:
        runs.insert(0, 0)
    return runs


def mask_to_runs(mask) -> list[int]:
    """Alternating run lengths, starting with a (possibly empty) run of 0-bits."""
    return _runs(mask)


def runs_to_mask(runs, width: int, height: int) -> np.ndarray:
    runs = [int(r) for r in runs]
    if any(r < 0 for r in runs):
        raise ValueError("negative run length")
    if sum(runs) != width * height:
        raise ValueError(f"runs sum to {sum(runs)}, expected {width * height}")
    values = np.arange(len(runs)) % 2 == 1
    return np.repeat(values, runs).reshape(height, width)


def mask_rle_encode(mask) -> bytes:
    """ue-coded run lengths; a trailing empty 1-run keeps the count even."""
    runs = _runs(mask)
    if len(runs) % 2:
        runs.append(0)
    bw = BitWriter()
    for r in runs:
        bw.ue(r)
    return bw.getvalue()


def mask_rle_decode(data: bytes, width: int, height: int) -> np.ndarray:
    total = width * height
    if total < 1:
        raise RegionDecodeError(f"invalid mask size {width}x{height}")
    runs, ends, bits = _ue_symbols(bytes(data))
    acc = np.cumsum(runs)
    k = int(np.searchsorted(acc, total))
    if k == runs.size:
        raise RegionDecodeError("mask bitstream exhausted")
    if acc[k] != total:
        raise RegionDecodeError(f"mask runs sum to {int(acc[k])}, expected {total}")
    k += 1
    if k % 2:
        if k == runs.size:
            raise RegionDecodeError("mask bitstream exhausted")
        if runs[k] != 0:
            raise RegionDecodeError("mask runs overrun the region")
        k += 1
    _check_tail(bits, int(ends[k - 1]))
    return runs_to_mask(runs[:k].tolist(), width, height)
