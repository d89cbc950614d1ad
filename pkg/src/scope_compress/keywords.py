"""Rule-based keyword extraction and the short-summary keyword fallback."""

from __future__ import annotations

import math
import re
from dataclasses import dataclass
from typing import Callable

from .text import DEFAULT_TOKENIZER, Tokenizer


@dataclass(frozen=True)
class KeywordSet:
    chunk_ref: int
    terms: tuple[str, ...] = ()

    def joined(self) -> str:
        return "; ".join(self.terms)


STOP_CAPITALIZED = frozenset(
    """
    a an the this that these those it its he she they we you i me my our your their his her them us
    in on at by for from to of with without into onto over under about after before during since
    until while when where why how what which who whom whose if then than so but and or nor yet
    as also however moreover furthermore therefore thus hence although though because besides
    there here some any each every all both either neither many most more much few several such
    no not yes one first second third finally next last today yesterday tomorrow now again
    is are was were be been being do does did have has had can could will would shall should may might must
    let note see please yes ok okay
    """.split()
)

_MONTHS = (
    r"(?:Jan(?:uary)?|Feb(?:ruary)?|Mar(?:ch)?|Apr(?:il)?|May|June?|July?|Aug(?:ust)?|"
    r"Sep(?:t(?:ember)?)?|Oct(?:ober)?|Nov(?:ember)?|Dec(?:ember)?)\.?"
)
_DATE = re.compile(
    rf"\b\d{{4}}-\d{{2}}-\d{{2}}\b"
    rf"|\b\d{{1,2}}/\d{{1,2}}/\d{{2,4}}\b"
    rf"|\b{_MONTHS}\s+\d{{1,2}}(?:st|nd|rd|th)?,?\s+\d{{4}}\b"
    rf"|\b\d{{1,2}}(?:st|nd|rd|th)?\s+{_MONTHS}\s+\d{{4}}\b"
    rf"|\b{_MONTHS}\s+\d{{4}}\b"
)
_UNITS = (
    r"%|percent|per\s?cent|km|kg|mg|g|m|cm|mm|mi|miles?|ft|feet|lbs?|tons?|hours?|hrs?|minutes?|min|"
    r"seconds?|s|ms|days?|weeks?|months?|years?|°[CF]?|degrees?|USD|EUR|GB|MB|KB|TB|GHz|MHz|Hz|W|kW|MW|V|"
    r"million|billion|trillion|thousand"
)
_NUMBER = re.compile(
    rf"(?:[$€£¥])?\b\d+(?:[.,]\d+)*(?:\s?(?:{_UNITS})\b|%)?"
)
_QUOTED = re.compile(r"\"[^\"\n]{1,80}\"|“[^”\n]{1,80}”")
_CAP_WORD = r"[A-Z][\w'’\-]*"
_CAPITALIZED = re.compile(rf"\b{_CAP_WORD}(?:[ \t]+{_CAP_WORD})*")


def _rule_matches(text: str) -> list[tuple[int, int]]:
    spans: list[tuple[int, int]] = []
    for rx in (_QUOTED, _DATE, _NUMBER):
        spans.extend(m.span() for m in rx.finditer(text))
    for m in _CAPITALIZED.finditer(text):
        words = m.group().split()
        # strip stop-listed capitalized words from the front (sentence starts, "The", "In", ...)
        start = m.start()
        while words and words[0].lower() in STOP_CAPITALIZED:
            start = text.index(words[0], start) + len(words[0])
            words = words[1:]
            while start < m.end() and text[start] in " \t":
                start += 1
        if not words:
            continue
        if len(words) == 1 and words[0].lower() in STOP_CAPITALIZED:
            continue
        spans.append((start, m.end()))
    return spans


def extract_terms(text: str) -> list[str]:
    """Capitalized spans, numbers (with units), dates and short quoted spans.

    Overlapping matches resolve to the earliest, then longest. Terms are
    deduplicated case-insensitively in first-occurrence order.
    """
    spans = sorted(_rule_matches(text), key=lambda s: (s[0], -(s[1] - s[0])))
    terms: list[str] = []
    seen: set[str] = set()
    last_end = -1
    for a, b in spans:
        if a < last_end:
            continue
        term = text[a:b].strip()
        last_end = b
        if not term:
            continue
        key = term.casefold()
        if key not in seen:
            seen.add(key)
            terms.append(term)
    return terms


Extractor = Callable[[str], list[str]]


def extract_keywords(chunk, extractor: Extractor | None = None) -> KeywordSet:
    """Keywords for a chunk (anything with ``text`` and ``original_index``) or a bare string."""
    if isinstance(chunk, str):
        text, ref = chunk, 0
    else:
        text, ref = chunk.text, chunk.original_index
    if not text:
        raise ValueError("cannot extract keywords from empty text")
    terms = (extractor or extract_terms)(text)
    lowered = text.casefold()
    terms = [t for t in terms if t and t.casefold() in lowered]
    return KeywordSet(ref, tuple(terms))


def truncation_floor(target_len: int, fraction: float = 0.3) -> int:
    return math.ceil(fraction * target_len)


def cap_keywords(terms, target_len: int, tokenizer: Tokenizer | None = None) -> str:
    """Join terms with ``"; "``, keeping whole terms while they fit in ``target_len`` tokens."""
    tok = tokenizer or DEFAULT_TOKENIZER
    out = ""
    for t in terms:
        candidate = f"{out}; {t}" if out else t
        if tok.count(candidate) <= target_len:
            out = candidate
        elif not out:
            return tok.truncate(t, target_len)
        else:
            break
    return out


def substitute_if_truncated(
    compressed: str,
    kw: KeywordSet,
    target_len: int,
    tokenizer: Tokenizer | None = None,
    floor_fraction: float = 0.3,
) -> str:
    """Replace an overly short summary with the chunk's keywords.

    Short means fewer than ``ceil(floor_fraction * target_len)`` tokens. With
    no keywords the summary is returned unchanged.
    """
    tok = tokenizer or DEFAULT_TOKENIZER
    if tok.count(compressed) >= truncation_floor(target_len, floor_fraction) or not kw.terms:
        return compressed
    return cap_keywords(kw.terms, target_len, tok) or compressed
