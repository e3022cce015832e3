"""Extract bracketed answers from free-form model output."""

from __future__ import annotations

import re
from typing import Sequence

from .errors import MalformedResponse

_WS = re.compile(r"\s+")
_QUOTES = "'\"`"


def bracket_spans(text: str) -> list[str]:
    """Contents of innermost balanced ``[...]`` spans, in order.

    A ``[`` restarts the current span, so ``[a [b] c]`` yields ``["b"]``;
    stray closing brackets and unterminated openings are ignored.
    """
    spans = []
    start = -1
    for i, ch in enumerate(text):
        if ch == "[":
            start = i
        elif ch == "]" and start >= 0:
            spans.append(text[start + 1 : i])
            start = -1
    return spans


def _clean(span: str) -> str:
    return _WS.sub(" ", span).strip()


def parse_concepts(raw: str, limit: int) -> list[str]:
    """Bracketed concept names, deduplicated case-insensitively, capped at ``limit``.

    Empty text means "no concepts". Non-empty text without a single bracket
    pair is malformed.
    """
    if limit < 1:
        raise ValueError("limit must be >= 1")
    spans = bracket_spans(raw)
    if not spans:
        if raw.strip():
            raise MalformedResponse("no bracketed concepts in response", raw)
        return []
    out: list[str] = []
    seen: set[str] = set()
    for s in spans:
        c = _clean(s)
        if not c:
            continue
        k = c.casefold()
        if k in seen:
            continue
        seen.add(k)
        out.append(c)
        if len(out) == limit:
            break
    return out


def parse_verdict(raw: str) -> bool:
    """The last ``[yes]``/``[no]`` span decides; returns True for yes."""
    for s in reversed(bracket_spans(raw)):
        v = _clean(s).casefold()
        if v == "yes":
            return True
        if v == "no":
            return False
    raise MalformedResponse("no bracketed [yes]/[no] verdict", raw)


def parse_match(raw: str, candidates: Sequence[str]) -> str | None:
    """Candidate named by the last bracket span; ``None`` for empty brackets."""
    if not candidates:
        raise ValueError("candidates must be non-empty")
    spans = bracket_spans(raw)
    if not spans:
        raise MalformedResponse("no bracketed answer", raw)
    answer = _clean(spans[-1])
    if len(answer) >= 2 and answer[0] == answer[-1] and answer[0] in _QUOTES:
        answer = _clean(answer[1:-1])
    if not answer:
        return None
    key = answer.casefold()
    for c in candidates:
        if _clean(c).casefold() == key:
            return c
    raise MalformedResponse(f"answer {answer!r} is not one of the candidates", raw)
