"""
Grammar, parser and emitter for structured solution strings.

Two schemas are understood:

    answer_only:   <Answer>payload</Answer>
    think_answer:  <Think>free text</Think> <Answer>payload</Answer>

Grounding payloads are ``[start, end]`` in decimal seconds, highlight
payloads are ``[(clip_index, score), ...]``. Tags match case-insensitively;
emission always uses the capitalized form and three fractional digits.
"""
from __future__ import annotations

import enum
import re
from dataclasses import dataclass
from typing import Optional, Union

from django.core.exceptions import ValidationError

from .exceptions import SchemaMismatch
from .temporal import SALIENT_THRESHOLD, SaliencyTrack, new_interval, TimeInterval


class Schema(str, enum.Enum):
    ANSWER_ONLY = "answer_only"
    THINK_ANSWER = "think_answer"


class Task(str, enum.Enum):
    GROUNDING = "grounding"
    HIGHLIGHT = "highlight"


DECIMALS = 3

_REAL = r"-?\d+(?:\.\d+)?"
_ANSWER_ONLY_RE = re.compile(r"^\s*<answer>(.*?)</answer>\s*$", re.IGNORECASE | re.DOTALL)
_THINK_ANSWER_RE = re.compile(
    r"^\s*<think>(.*?)</think>\s*<answer>(.*?)</answer>\s*$", re.IGNORECASE | re.DOTALL
)
_THINK_CLOSE_RE = re.compile(r"</think>", re.IGNORECASE)
_INTERVAL_RE = re.compile(rf"^\s*\[\s*({_REAL})\s*,\s*({_REAL})\s*\]\s*$")
_PAIR = rf"\(\s*(\d+)\s*,\s*({_REAL})\s*\)"
_PAIR_RE = re.compile(_PAIR)
_PAIR_LIST_RE = re.compile(rf"^\s*\[\s*(?:{_PAIR}(?:\s*,\s*{_PAIR})*)?\s*\]\s*$")


@dataclass(frozen=True)
class HighlightPayload:
    """(clip_index, score) pairs in emission order."""

    clips: tuple

    def __post_init__(self):
        object.__setattr__(
            self, "clips", tuple((int(i), float(s)) for i, s in self.clips)
        )

    @property
    def indices(self) -> list:
        return [i for i, _ in self.clips]

    def salient_clips(self, threshold: float = SALIENT_THRESHOLD) -> frozenset:
        return frozenset(i for i, s in self.clips if s >= threshold)

    def to_track(self, num_clips: int, clip_len: float) -> SaliencyTrack:
        """Unlisted clips score 0."""
        scores = [0.0] * num_clips
        for index, score in self.clips:
            scores[index] = score
        return SaliencyTrack(clip_len, tuple(scores))


Payload = Union[TimeInterval, HighlightPayload]


@dataclass(frozen=True)
class ParsedOutput:
    think_text: Optional[str]
    answer_payload: Optional[Payload]
    well_formed: bool


MALFORMED = ParsedOutput(think_text=None, answer_payload=None, well_formed=False)


def _parse_interval(body: str):
    match = _INTERVAL_RE.match(body)
    if match is None:
        return False, None
    try:
        return True, new_interval(float(match.group(1)), float(match.group(2)))
    except ValidationError:
        return True, None


def _parse_highlight(body: str):
    if _PAIR_LIST_RE.match(body) is None:
        return False, None
    try:
        pairs = [(int(i), float(s)) for i, s in _PAIR_RE.findall(body)]
    except ValueError:
        # index past the interpreter's int-conversion digit limit
        return True, None
    indices = [i for i, _ in pairs]
    if len(set(indices)) != len(indices):
        return True, None
    if any(not (0.0 <= s <= 1.0) for _, s in pairs):
        return True, None
    return True, HighlightPayload(tuple(pairs))


def parse_output(raw_text, schema: Schema, task: Task) -> ParsedOutput:
    """
    Total parser: any input yields a ParsedOutput. Grammar-level failure gives
    ``well_formed=False``; a well-formed answer whose numbers are not a valid
    payload (e.g. reversed bounds) gives ``well_formed=True`` without payload.
    """
    if isinstance(raw_text, (bytes, bytearray)):
        raw_text = bytes(raw_text).decode("utf-8", errors="replace")
    if not isinstance(raw_text, str):
        return MALFORMED

    schema = Schema(schema)
    think_text = None
    if schema is Schema.THINK_ANSWER:
        match = _THINK_ANSWER_RE.match(raw_text)
        if match is None:
            return MALFORMED
        think_text, body = match.group(1), match.group(2)
    else:
        match = _ANSWER_ONLY_RE.match(raw_text)
        if match is None:
            return MALFORMED
        body = match.group(1)

    if Task(task) is Task.GROUNDING:
        matched, payload = _parse_interval(body)
    else:
        matched, payload = _parse_highlight(body)

    if not matched:
        return MALFORMED
    return ParsedOutput(think_text=think_text, answer_payload=payload, well_formed=True)


def extract_answer(raw_text, schema: Schema, task: Task) -> Optional[Payload]:
    """
    Lenient decoding used for task rewards: the active schema first, then the
    other one. Structure itself is judged by the format reward.
    """
    schema = Schema(schema)
    for candidate in (schema, *(s for s in Schema if s is not schema)):
        parsed = parse_output(raw_text, candidate, task)
        if parsed.well_formed:
            return parsed.answer_payload
    return None


def _fmt(value: float) -> str:
    return f"{value:.{DECIMALS}f}"


def render_payload(payload: Payload) -> str:
    if isinstance(payload, TimeInterval):
        return f"[{_fmt(payload.start)}, {_fmt(payload.end)}]"
    pairs = ", ".join(f"({index}, {_fmt(score)})" for index, score in payload.clips)
    return f"[{pairs}]"


def emit_output(payload: Payload, think_text: Optional[str] = None, schema=Schema.ANSWER_ONLY) -> str:
    """
    Canonical rendering. Under think_answer a missing ``think_text`` renders
    an empty Think block, which parses back as ``""``.
    """
    schema = Schema(schema)
    answer = f"<Answer>{render_payload(payload)}</Answer>"
    if schema is Schema.ANSWER_ONLY:
        if think_text is not None:
            raise SchemaMismatch("The answer_only schema has no Think block.")
        return answer
    think_text = think_text or ""
    if _THINK_CLOSE_RE.search(think_text):
        raise SchemaMismatch("Think text must not contain a closing Think tag.")
    return f"<Think>{think_text}</Think>{answer}"
