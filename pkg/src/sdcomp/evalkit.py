"""Rate-distortion measurement: bpp, PSNR, RD sweeps and BD-rate."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np

from . import container
from .errors import RdCurveError
from .imagecore import Image
from .pipeline import QualityProfile, decode_image, encode_image
from .priors import RANKED_LEVELS, Ranking, SemanticPriors

CSV_FIELDS = ("filter", "profile", "bpp", "psnr_full", "psnr_objects")


def psnr(a: Image, b: Image, mask: Optional[np.ndarray] = None) -> float:
    """PSNR in dB over all RGB samples, or only those under a full-frame mask.

    Identical inputs give ``math.inf``.
    """
    if (a.width, a.height) != (b.width, b.height):
        raise ValueError(f"size mismatch: {a.width}x{a.height} vs {b.width}x{b.height}")
    diff = a.pixels.astype(np.float64) - b.pixels.astype(np.float64)
    if mask is not None:
        mask = np.asarray(mask, dtype=bool)
        if mask.shape != (a.height, a.width):
            raise ValueError(f"mask shape {mask.shape} is not full-frame")
        if not mask.any():
            raise ValueError("mask selects no pixels")
        diff = diff[mask]
    mse = float(np.mean(diff * diff))
    if mse == 0.0:
        return math.inf
    return 10.0 * math.log10(255.0 ** 2 / mse)


def bpp(stream: bytes, width: int, height: int) -> float:
    if width * height < 1:
        raise ValueError("image must have at least one pixel")
    return 8 * len(stream) / (width * height)


def ranked_object_mask(priors: SemanticPriors, ranking: Ranking) -> np.ndarray:
    """Union of the footprints (mask or bbox) of every L1..L3 object."""
    out = np.zeros((priors.image_height, priors.image_width), dtype=bool)
    for o in priors.objects:
        if ranking.level(o.id) in RANKED_LEVELS:
            x, y, w, h = o.bbox
            out[y:y + h, x:x + w] |= o.footprint()
    return out


def rd_sweep(
    img: Image,
    priors: SemanticPriors,
    ranking: Ranking,
    filters: Iterable[int],
    profiles: Sequence[QualityProfile],
) -> list[dict]:
    """One row per (filter, profile), filter-major, in the order given."""
    filters = list(filters)
    streams = {str(p): encode_image(img, priors, ranking, p) for p in profiles}
    objects = ranked_object_mask(priors, ranking)
    rows = []
    for t in filters:
        for p in profiles:
            sent = container.truncate(streams[str(p)], t)
            rec = decode_image(sent)
            rows.append({
                "filter": int(t),
                "profile": str(p),
                "bpp": bpp(sent, img.width, img.height),
                "psnr_full": psnr(img, rec),
                "psnr_objects": psnr(img, rec, objects) if objects.any() else math.nan,
            })
    return rows


def _fmt(v) -> str:
    return format(v, ".6g") if isinstance(v, float) else str(v)


def write_rd_csv(rows: Iterable[dict], fh=None) -> str:
    buf = fh if fh is not None else io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_FIELDS)
    for r in rows:
        w.writerow([_fmt(r[k]) for k in CSV_FIELDS])
    return buf.getvalue() if fh is None else ""


def read_rd_csv(text: str) -> list[dict]:
    rows = []
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None or set(CSV_FIELDS) - set(reader.fieldnames):
        raise RdCurveError(f"RD CSV needs columns {', '.join(CSV_FIELDS)}")
    for r in reader:
        try:
            rows.append({
                "filter": int(r["filter"]),
                "profile": r["profile"],
                "bpp": float(r["bpp"]),
                "psnr_full": float(r["psnr_full"]),
                "psnr_objects": float(r["psnr_objects"]),
            })
        except (TypeError, ValueError) as e:
            raise RdCurveError(f"bad RD CSV row {r}: {e}") from None
    return rows


@dataclass(frozen=True)
class RdPoint:
    rate: float
    quality: float

    def __post_init__(self):
        if not (self.rate > 0 and math.isfinite(self.rate)):
            raise RdCurveError(f"rate must be positive and finite, got {self.rate}")
        if not math.isfinite(self.quality):
            raise RdCurveError(f"quality must be finite, got {self.quality}")


@dataclass(frozen=True)
class RdCurve:
    points: tuple[RdPoint, ...]

    def __post_init__(self):
        pts = tuple(self.points)
        object.__setattr__(self, "points", pts)
        if len(pts) < 4:
            raise RdCurveError(f"an RD curve needs at least 4 points, got {len(pts)}")
        for a, b in zip(pts, pts[1:]):
            if not b.rate > a.rate:
                raise RdCurveError("rates must be strictly increasing")
            if b.quality < a.quality:
                raise RdCurveError("quality must be non-decreasing in rate")

    @classmethod
    def from_pairs(cls, pairs) -> "RdCurve":
        """Build from ``(rate, quality)`` pairs in any order."""
        return cls(tuple(RdPoint(float(r), float(q)) for r, q in sorted(pairs)))

    @classmethod
    def from_rows(cls, rows, metric: str = "psnr_full") -> "RdCurve":
        return cls.from_pairs((r["bpp"], r[metric]) for r in rows)

    @property
    def rates(self) -> np.ndarray:
        return np.array([p.rate for p in self.points])

    @property
    def qualities(self) -> np.ndarray:
        return np.array([p.quality for p in self.points])


def fit_log_rate(curve: RdCurve) -> np.ndarray:
    """Least-squares cubic of log10(rate) in quality, highest power first."""
    q = curve.qualities
    vander = np.vander(q, 4)
    if np.linalg.matrix_rank(vander) < 4:
        raise RdCurveError("degenerate cubic fit: fewer than 4 distinct qualities")
    coefs, *_ = np.linalg.lstsq(vander, np.log10(curve.rates), rcond=None)
    return coefs


def bd_rate(anchor: RdCurve, test: RdCurve) -> float:
    """Average rate difference of ``test`` vs ``anchor`` at equal quality, in %.

    Negative means the test codec needs fewer bits.
    """
    lo = max(anchor.qualities.min(), test.qualities.min())
    hi = min(anchor.qualities.max(), test.qualities.max())
    if not hi > lo:
        raise RdCurveError(f"quality ranges do not overlap ({lo:.6g} >= {hi:.6g})")
    areas = []
    for curve in (anchor, test):
        antideriv = np.polyint(fit_log_rate(curve))
        areas.append(np.polyval(antideriv, hi) - np.polyval(antideriv, lo))
    avg_diff = (areas[1] - areas[0]) / (hi - lo)
    return (10.0 ** avg_diff - 1.0) * 100.0
