"""Semantic priors sidecar: grounded objects, captions and a 3-level ranking.

The sidecar is JSON::

    {"image": {"width": W, "height": H},
     "objects": [{"id": 1, "label": "dog", "bbox": [x, y, w, h],
                  "score": 0.9, "mask_rle": [zeros, ones, zeros, ...]}],
     "captions": {"short": "...", "long": "..."},
     "ranking": {"L1": [1], "L2": [], "L3": []}}

``mask_rle`` is row-major over the bbox, starts with a run of 0-bits and
sums to ``w * h``. ``captions``, ``ranking`` and ``mask_rle`` are optional.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from enum import IntEnum
from typing import Mapping, Optional

import numpy as np

from .errors import PriorsError
from .imagecore import Rect
from .regioncodec import mask_to_runs, runs_to_mask


class Level(IntEnum):
    L1 = 1
    L2 = 2
    L3 = 3
    OTHER = 4
    BACKGROUND = 5


RANKED_LEVELS = (Level.L1, Level.L2, Level.L3)


@dataclass(frozen=True, eq=False)
class GroundedObject:
    id: int
    label: str
    bbox: Rect
    score: float = 1.0
    mask: Optional[np.ndarray] = None

    def __eq__(self, other):
        if not isinstance(other, GroundedObject):
            return NotImplemented
        if (self.id, self.label, self.bbox, self.score) != (
            other.id, other.label, other.bbox, other.score
        ):
            return False
        if self.mask is None or other.mask is None:
            return self.mask is None and other.mask is None
        return bool(np.array_equal(self.mask, other.mask))

    __hash__ = None

    def footprint(self) -> np.ndarray:
        """Boolean ``(h, w)`` coverage within the bbox."""
        if self.mask is not None:
            return self.mask
        return np.ones((self.bbox.h, self.bbox.w), dtype=bool)


@dataclass(frozen=True)
class Captions:
    short: str
    long: str


@dataclass(frozen=True)
class Ranking:
    """Object id -> importance level (L1..L3). Missing ids are 'other'."""

    level_of: Mapping[int, Level] = field(default_factory=dict)

    @classmethod
    def from_levels(cls, levels: Mapping) -> "Ranking":
        """Build from ``{1: [ids], 2: [ids], 3: [ids]}`` (keys may be 'L1' etc)."""
        level_of: dict[int, Level] = {}
        for key, ids in levels.items():
            lvl = Level(int(key.lstrip("Ll")) if isinstance(key, str) else int(key))
            if lvl not in RANKED_LEVELS:
                raise ValueError(f"ranking level must be L1..L3, got {key!r}")
            for i in ids:
                if int(i) in level_of:
                    raise ValueError(f"id {i} ranked at more than one level")
                level_of[int(i)] = lvl
        return cls(level_of)

    def ids_at(self, level: Level) -> list[int]:
        return sorted(i for i, lvl in self.level_of.items() if lvl == level)

    def level(self, object_id: int) -> Level:
        return self.level_of.get(object_id, Level.OTHER)

    def to_json(self) -> dict:
        return {f"L{int(lvl)}": self.ids_at(lvl) for lvl in RANKED_LEVELS}


@dataclass(frozen=True)
class SemanticPriors:
    image_width: int
    image_height: int
    objects: tuple[GroundedObject, ...] = ()
    captions: Optional[Captions] = None
    ranking: Optional[Ranking] = None

    def __post_init__(self):
        object.__setattr__(self, "objects", tuple(self.objects))
        validate_priors(self)

    def object_ids(self) -> set[int]:
        return {o.id for o in self.objects}

    def with_ranking(self, ranking: Ranking, captions: Optional[Captions] = None):
        return replace(self, ranking=ranking, captions=captions or self.captions)


def validate_priors(p: SemanticPriors) -> None:
    if p.image_width < 1 or p.image_height < 1:
        raise PriorsError(f"invalid image size {p.image_width}x{p.image_height}")
    seen = set()
    for o in p.objects:
        if not isinstance(o.id, int) or o.id < 1:
            raise PriorsError(f"object id must be a positive integer, got {o.id!r}")
        if o.id > 0xFFFF:
            raise PriorsError(f"object id {o.id} does not fit in 16 bits")
        if o.id in seen:
            raise PriorsError(f"duplicate object id {o.id}")
        seen.add(o.id)
        if not o.bbox.within(p.image_width, p.image_height):
            raise PriorsError(
                f"object {o.id}: bbox {list(o.bbox)} outside "
                f"{p.image_width}x{p.image_height} image"
            )
        if not 0.0 <= o.score <= 1.0:
            raise PriorsError(f"object {o.id}: score {o.score} outside [0, 1]")
        if o.mask is not None and o.mask.shape != (o.bbox.h, o.bbox.w):
            raise PriorsError(
                f"object {o.id}: mask shape {o.mask.shape} != bbox {(o.bbox.h, o.bbox.w)}"
            )
    if p.captions is not None and not (p.captions.short and p.captions.long):
        raise PriorsError("captions must be non-empty")
    if p.ranking is not None:
        check_ranking(p.ranking, seen)


def check_ranking(ranking: Ranking, known_ids) -> None:
    for i, lvl in ranking.level_of.items():
        if i not in known_ids:
            raise PriorsError(f"ranked id {i} is not a known object")
        if lvl not in RANKED_LEVELS:
            raise PriorsError(f"id {i} ranked at invalid level {lvl!r}")


def _int(v, what):
    if isinstance(v, bool) or not isinstance(v, int):
        raise PriorsError(f"{what} must be an integer, got {v!r}")
    return v


def _parse_object(d) -> GroundedObject:
    if not isinstance(d, dict):
        raise PriorsError("each object must be a JSON object")
    try:
        oid = _int(d["id"], "id")
        label = d["label"]
        bbox = d["bbox"]
    except KeyError as e:
        raise PriorsError(f"object missing key {e}") from None
    if not isinstance(label, str):
        raise PriorsError(f"object {oid}: label must be a string")
    if not isinstance(bbox, list) or len(bbox) != 4:
        raise PriorsError(f"object {oid}: bbox must be [x, y, w, h]")
    rect = Rect(*(_int(v, f"object {oid} bbox") for v in bbox))
    if rect.w < 1 or rect.h < 1 or rect.x < 0 or rect.y < 0:
        raise PriorsError(f"object {oid}: degenerate bbox {bbox}")
    score = d.get("score", 1.0)
    if isinstance(score, bool) or not isinstance(score, (int, float)) or math.isnan(score):
        raise PriorsError(f"object {oid}: score must be a number")
    mask = None
    if d.get("mask_rle") is not None:
        runs = d["mask_rle"]
        if not isinstance(runs, list):
            raise PriorsError(f"object {oid}: mask_rle must be a list")
        runs = [_int(r, f"object {oid} mask_rle") for r in runs]
        if any(r < 0 for r in runs) or sum(runs) != rect.w * rect.h:
            raise PriorsError(
                f"object {oid}: mask_rle covers {sum(runs)} pixels, bbox has {rect.w * rect.h}"
            )
        mask = runs_to_mask(runs, rect.w, rect.h)
    return GroundedObject(oid, label, rect, float(score), mask)


def parse_priors(text) -> SemanticPriors:
    try:
        doc = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise PriorsError(f"priors are not valid JSON: {e}") from None
    if not isinstance(doc, dict):
        raise PriorsError("priors document must be a JSON object")
    try:
        width = _int(doc["image"]["width"], "image.width")
        height = _int(doc["image"]["height"], "image.height")
    except (KeyError, TypeError):
        raise PriorsError("priors need image.width and image.height") from None
    objects = doc.get("objects", [])
    if not isinstance(objects, list):
        raise PriorsError("objects must be a list")
    objs = [_parse_object(o) for o in objects]

    captions = None
    if doc.get("captions") is not None:
        c = doc["captions"]
        if not isinstance(c, dict) or not all(
            isinstance(c.get(k), str) for k in ("short", "long")
        ):
            raise PriorsError("captions need string 'short' and 'long'")
        captions = Captions(c["short"], c["long"])

    ranking = None
    if doc.get("ranking") is not None:
        r = doc["ranking"]
        if not isinstance(r, dict) or set(r) - {"L1", "L2", "L3"}:
            raise PriorsError("ranking keys must be L1, L2, L3")
        for k, ids in r.items():
            if not isinstance(ids, list):
                raise PriorsError(f"ranking {k} must be a list of ids")
            for i in ids:
                _int(i, f"ranking {k} id")
        try:
            ranking = Ranking.from_levels(r)
        except ValueError as e:
            raise PriorsError(str(e)) from None

    return SemanticPriors(width, height, tuple(objs), captions, ranking)


def priors_to_json(p: SemanticPriors) -> dict:
    objects = []
    for o in sorted(p.objects, key=lambda o: o.id):
        d = {"id": o.id, "label": o.label, "bbox": list(o.bbox), "score": o.score}
        if o.mask is not None:
            d["mask_rle"] = mask_to_runs(o.mask)
        objects.append(d)
    doc = {"image": {"width": p.image_width, "height": p.image_height}, "objects": objects}
    if p.captions is not None:
        doc["captions"] = {"short": p.captions.short, "long": p.captions.long}
    if p.ranking is not None:
        doc["ranking"] = p.ranking.to_json()
    return doc


def dump_priors(p: SemanticPriors) -> str:
    """Sidecar JSON text with one object per line."""
    doc = priors_to_json(p)
    lines = ["{", f'  "image": {json.dumps(doc["image"])},', '  "objects": [']
    objs = [f"    {json.dumps(o)}" for o in doc["objects"]]
    lines.append(",\n".join(objs))
    tail = [k for k in ("captions", "ranking") if k in doc]
    lines.append("  ]" + ("," if tail else ""))
    for i, k in enumerate(tail):
        comma = "," if i < len(tail) - 1 else ""
        lines.append(f'  "{k}": {json.dumps(doc[k], ensure_ascii=False)}{comma}')
    lines.append("}")
    return "\n".join(line for line in lines if line) + "\n"


def salience(o: GroundedObject, width: int, height: int) -> float:
    """Area/centrality score used by the offline ranker."""
    area_term = math.sqrt(o.bbox.area / (width * height))
    cx = o.bbox.x + o.bbox.w / 2
    cy = o.bbox.y + o.bbox.h / 2
    dist = math.hypot(cx - width / 2, cy - height / 2)
    half_diag = math.hypot(width, height) / 2
    return 0.5 * area_term + 0.5 * (1 - dist / half_diag)


def heuristic_rank(priors: SemanticPriors) -> Ranking:
    """Deterministic stand-in for the LMM ranking.

    Objects are sorted by :func:`salience` (descending, ties by id) and cut
    into thirds: the first ``ceil(n/3)`` go to L1, the next ``ceil(n/3)``
    (or what is left) to L2, the rest to L3.
    """
    n = len(priors.objects)
    if n == 0:
        raise PriorsError("cannot rank an image with no objects")
    W, H = priors.image_width, priors.image_height
    order = sorted(priors.objects, key=lambda o: (-salience(o, W, H), o.id))
    third = -(-n // 3)
    level_of = {}
    for i, o in enumerate(order):
        level_of[o.id] = Level.L1 if i < third else Level.L2 if i < 2 * third else Level.L3
    return Ranking(level_of)


def group_by_level(
    priors: SemanticPriors, ranking: Ranking
) -> tuple[list[GroundedObject], list[GroundedObject], list[GroundedObject], list[GroundedObject]]:
    """Split objects into (L1, L2, L3, other), each sorted by id."""
    check_ranking(ranking, priors.object_ids())
    groups: dict[Level, list[GroundedObject]] = {lvl: [] for lvl in Level}
    for o in sorted(priors.objects, key=lambda o: o.id):
        groups[ranking.level(o.id)].append(o)
    return groups[Level.L1], groups[Level.L2], groups[Level.L3], groups[Level.OTHER]
