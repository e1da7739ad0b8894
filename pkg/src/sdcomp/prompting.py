"""Two-step LMM conversation: captions first, then a three-level ranking.

Transports are plain objects with a ``complete(prompts, image)`` method that
returns the model's text or raises :class:`~sdcomp.errors.TransportError`.
Two are provided: :class:`HttpTransport` for chat-completions style
endpoints, and :class:`ReplayTransport` which replays a fixture file.
"""

from __future__ import annotations

import base64
import json
import os
import re
import urllib.error
import urllib.request
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Protocol, Sequence

from .errors import CaptionParseError, RankingParseError, TransportError
from .imagecore import Image, save_ppm
from .priors import Captions, GroundedObject, Level, Ranking, SemanticPriors

CAPTION_PROMPT = (
    "Look at the image and describe it with two captions.\n"
    "Answer with exactly two lines and nothing else:\n"
    "SHORT: <one short sentence naming the main content>\n"
    "LONG: <a detailed description of all salient objects, their attributes "
    "and how they relate to each other>"
)

RANKING_PROMPT = (
    "You are given an image, two captions of it, and the objects found in it.\n"
    "Short caption: {short}\n"
    "Long caption: {long}\n"
    "Objects (id, label, bounding box [x,y,w,h] in pixels):\n"
    "{objects}\n"
    "Rank the objects by how important they are for understanding the image. "
    "Put every important object into one of three levels, L1 being the most "
    "important; objects that do not matter may be left out.\n"
    "Answer with exactly three lines and nothing else:\n"
    "L1: [ids]\n"
    "L2: [ids]\n"
    "L3: [ids]\n"
    "Write ids as a comma-separated list, and [] for an empty level."
)


@dataclass(frozen=True)
class PromptText:
    role: str
    text: str
    attach_image: bool = False

    def __post_init__(self):
        if self.role not in ("system", "user"):
            raise ValueError(f"unknown prompt role {self.role!r}")
        if not self.text:
            raise ValueError("prompt text must be non-empty")


class LmmTransport(Protocol):
    def complete(self, prompts: Sequence[PromptText], image: Optional[bytes]) -> str: ...


def build_caption_prompt() -> PromptText:
    return PromptText("user", CAPTION_PROMPT, attach_image=True)


def object_line(o: GroundedObject) -> str:
    x, y, w, h = o.bbox
    return f"id={o.id} label={o.label} bbox=[{x},{y},{w},{h}]"


def build_ranking_prompt(captions: Captions, objects: Sequence[GroundedObject]) -> PromptText:
    if not objects:
        raise ValueError("ranking prompt needs at least one object")
    lines = "\n".join(object_line(o) for o in sorted(objects, key=lambda o: o.id))
    text = RANKING_PROMPT.format(short=captions.short, long=captions.long, objects=lines)
    return PromptText("user", text, attach_image=True)


_SHORT = "SHORT:"
_LONG = "LONG:"


def parse_caption_response(text: str) -> Captions:
    i, j = text.find(_SHORT), text.find(_LONG)
    if i < 0 or j < 0:
        raise CaptionParseError("caption answer lacks SHORT: and LONG: markers")
    s_start, l_start = i + len(_SHORT), j + len(_LONG)
    short = text[s_start:j] if j > i else text[s_start:]
    long = text[l_start:i] if i > j else text[l_start:]
    short, long = short.strip(), long.strip()
    if not short or not long:
        raise CaptionParseError("caption answer has an empty SHORT or LONG caption")
    return Captions(short, long)


_LEVEL_LINE = re.compile(r"(?<![A-Za-z0-9_])L([123])\s*:\s*\[([^\[\]]*)\]")
_ID = re.compile(r"[0-9]{1,9}")


def parse_ranking_response(text: str, known_ids) -> Ranking:
    """Extract ``L1: [..]``, ``L2: [..]``, ``L3: [..]`` from free-form text."""
    known = set(known_ids)
    found: dict[int, list[int]] = {}
    for m in _LEVEL_LINE.finditer(text):
        lvl = int(m.group(1))
        if lvl in found:
            raise RankingParseError(f"level L{lvl} appears more than once")
        ids = []
        body = m.group(2).strip()
        if body:
            for tok in body.split(","):
                tok = tok.strip()
                if not _ID.fullmatch(tok):
                    raise RankingParseError(f"L{lvl}: {tok[:24]!r} is not an object id")
                ids.append(int(tok))
        found[lvl] = ids
    missing = [f"L{k}" for k in (1, 2, 3) if k not in found]
    if missing:
        raise RankingParseError(f"ranking answer lacks {', '.join(missing)}")
    level_of: dict[int, Level] = {}
    for lvl in (1, 2, 3):
        for i in found[lvl]:
            if i not in known:
                raise RankingParseError(f"L{lvl} names unknown object id {i}")
            if i in level_of:
                raise RankingParseError(f"object id {i} ranked more than once")
            level_of[i] = Level(lvl)
    return Ranking(level_of)


def rank_via_lmm(
    transport: LmmTransport, image: Image, priors: SemanticPriors
) -> tuple[Captions, Ranking]:
    if not priors.objects:
        raise ValueError("cannot rank an image with no objects")
    img_bytes = save_ppm(image)
    captions = parse_caption_response(transport.complete([build_caption_prompt()], img_bytes))
    q2 = build_ranking_prompt(captions, priors.objects)
    ranking = parse_ranking_response(
        transport.complete([q2], img_bytes), priors.object_ids()
    )
    return captions, ranking


class HttpTransport:
    """POSTs chat-completions JSON and returns ``choices[0].message.content``.

    Images are sent as base64 data URLs of the PPM bytes handed in.
    """

    def __init__(self, url: str, token: Optional[str] = None, model: str = "internvl-chat",
                 timeout: float = 120.0, image_mime: str = "image/x-portable-pixmap"):
        self.url = url
        self.token = token
        self.model = model
        self.timeout = timeout
        self.image_mime = image_mime

    @classmethod
    def from_env(cls, **kw) -> "HttpTransport":
        url = os.environ.get("SDCOMP_LMM_URL")
        if not url:
            raise TransportError("SDCOMP_LMM_URL is not set")
        return cls(url, os.environ.get("SDCOMP_LMM_TOKEN"), **kw)

    def request_body(self, prompts: Sequence[PromptText], image: Optional[bytes]) -> dict:
        messages = []
        for p in prompts:
            content = [{"type": "text", "text": p.text}]
            if p.attach_image and image is not None:
                b64 = base64.b64encode(image).decode("ascii")
                content.append({
                    "type": "image_url",
                    "image_url": {"url": f"data:{self.image_mime};base64,{b64}"},
                })
            messages.append({"role": p.role, "content": content})
        return {"model": self.model, "messages": messages}

    def complete(self, prompts, image):
        body = json.dumps(self.request_body(prompts, image)).encode("utf-8")
        headers = {"Content-Type": "application/json"}
        if self.token:
            headers["Authorization"] = f"Bearer {self.token}"
        req = urllib.request.Request(self.url, data=body, headers=headers, method="POST")
        try:
            with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                raw = resp.read()
        except (urllib.error.URLError, OSError, ValueError) as e:
            raise TransportError(f"LMM request failed: {e}") from e
        return extract_content(raw)


def extract_content(raw: bytes) -> str:
    try:
        content = json.loads(raw)["choices"][0]["message"]["content"]
    except (ValueError, KeyError, IndexError, TypeError) as e:
        raise TransportError(f"malformed LMM response: {e}") from None
    if not isinstance(content, str):
        raise TransportError("LMM response content is not text")
    return content


class ReplayTransport:
    """Replays scripted answers in order; records every request.

    Fixture format: ``{"responses": ["text", {"error": "reason"}, ...]}``.
    An ``{"error": ...}`` entry makes that call fail with a transport error.
    """

    def __init__(self, responses):
        self._responses = list(responses)
        self.calls: list[list[PromptText]] = []

    @classmethod
    def from_file(cls, path) -> "ReplayTransport":
        try:
            doc = json.loads(Path(path).read_text(encoding="utf-8"))
            responses = doc["responses"]
        except (OSError, ValueError, KeyError, TypeError) as e:
            raise TransportError(f"cannot load replay fixture {path}: {e}") from None
        if not isinstance(responses, list):
            raise TransportError("replay fixture 'responses' must be a list")
        return cls(responses)

    def complete(self, prompts, image):
        self.calls.append(list(prompts))
        idx = len(self.calls) - 1
        if idx >= len(self._responses):
            raise TransportError(f"replay fixture has no response for call {idx + 1}")
        r = self._responses[idx]
        if isinstance(r, dict) and "error" in r:
            raise TransportError(f"replayed failure: {r['error']}")
        if not isinstance(r, str):
            raise TransportError(f"replay response {idx + 1} is not text")
        return r
