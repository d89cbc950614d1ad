"""Token counting and lossless structural segmentation.

Every splitter returns :class:`Segment` objects whose ``text`` plus
``trailing_separator`` concatenate back to the parent string exactly, so
compressed chunks can be reassembled with the original whitespace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Protocol, Sequence, Union

# ---------------------------------------------------------------------------
# Tokenizers
# ---------------------------------------------------------------------------


class Tokenizer(Protocol):
    name: str

    def spans(self, text: str) -> list[tuple[int, int]]:
        """Character spans of each token, in order."""
        ...

    def count(self, text: str) -> int:
        ...

    def truncate(self, text: str, n_tokens: int) -> str:
        ...


class RegexTokenizer:
    """Words (``\\w+``) and single punctuation marks are tokens; whitespace is not.

    Cutting a string right after a token end and re-tokenizing the prefix
    yields exactly that many tokens, which makes budget arithmetic exact.
    """

    name = "regex"
    _pattern = re.compile(r"\w+|[^\w\s]")

    def spans(self, text: str) -> list[tuple[int, int]]:
        return [m.span() for m in self._pattern.finditer(text)]

    def count(self, text: str) -> int:
        return len(self._pattern.findall(text))

    def truncate(self, text: str, n_tokens: int) -> str:
        if n_tokens <= 0:
            return ""
        for i, m in enumerate(self._pattern.finditer(text), start=1):
            if i == n_tokens:
                return text[: m.end()]
        return text

    def __repr__(self) -> str:
        return "RegexTokenizer()"


class HFTokenizer:
    """Wraps a Hugging Face fast tokenizer; special tokens are not counted."""

    def __init__(self, model_id: str, tokenizer=None):
        if tokenizer is None:
            from transformers import AutoTokenizer

            tokenizer = AutoTokenizer.from_pretrained(model_id, use_fast=True)
        self._tok = tokenizer
        self.name = f"hf:{model_id}"

    def spans(self, text: str) -> list[tuple[int, int]]:
        enc = self._tok(text, add_special_tokens=False, return_offsets_mapping=True)
        return [tuple(o) for o in enc["offset_mapping"]]

    def count(self, text: str) -> int:
        if not text:
            return 0
        return len(self._tok(text, add_special_tokens=False)["input_ids"])

    def truncate(self, text: str, n_tokens: int) -> str:
        if n_tokens <= 0:
            return ""
        spans = self.spans(text)
        if len(spans) <= n_tokens:
            return text
        return text[: spans[n_tokens - 1][1]]


DEFAULT_TOKENIZER = RegexTokenizer()


def get_tokenizer(spec: str | None) -> Tokenizer:
    """``None``/``"regex"`` -> built-in regex tokenizer; ``"hf:MODEL_ID"`` -> HF tokenizer."""
    from .errors import ConfigError

    if spec is None or spec == "regex":
        return DEFAULT_TOKENIZER
    if spec.startswith("hf:"):
        try:
            return HFTokenizer(spec[3:])
        except Exception as exc:  # noqa: BLE001 - surfaced as config error
            raise ConfigError(f"cannot load tokenizer {spec!r}: {exc}") from exc
    raise ConfigError(f"unknown tokenizer spec {spec!r}")


def count_tokens(text: str, tokenizer: Tokenizer | None = None) -> int:
    return (tokenizer or DEFAULT_TOKENIZER).count(text)


# ---------------------------------------------------------------------------
# Segmentation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Segment:
    text: str
    kind: str  # "section" | "paragraph" | "sentence"
    start_offset: int
    trailing_separator: str = ""

    @property
    def end_offset(self) -> int:
        return self.start_offset + len(self.text)


SegmentLike = Union[Segment, str]

_WHITESPACE_RUN = re.compile(r"\s+")
_MD_HEADING = re.compile(r"#{1,6}[ \t]+\S")
_UNDERLINE = re.compile(r"([=\-~^*#+`])\1{2,}[ \t]*$")
_LIST_ITEM = re.compile(r"(?:[-*+•]|\d{1,3}[.)])[ \t]+\S")
_TERMINALS = ".!?…"
_CLOSERS = "\"'”’)]"

ABBREVIATIONS = frozenset(
    """
    dr mr mrs ms prof sr jr st mt vs e.g i.e cf al fig figs eq eqs vol
    pp ed eds approx dept est inc ltd co corp gen col lt sgt capt rev gov
    jan feb mar apr jun jul aug sep sept oct nov dec u.s u.k a.m p.m ph.d
    """.split()
)


def _split(text: str, kind: str, is_break) -> list[Segment]:
    segments: list[Segment] = []
    start = 0
    for m in _WHITESPACE_RUN.finditer(text):
        if m.start() == 0:
            continue
        if m.end() == len(text) or is_break(text, m, start):
            segments.append(Segment(text[start : m.start()], kind, start, m.group()))
            start = m.end()
    if start < len(text):
        segments.append(Segment(text[start:], kind, start, ""))
    return segments


def _starts_heading(text: str, pos: int) -> bool:
    line_end = text.find("\n", pos)
    line = text[pos:] if line_end == -1 else text[pos:line_end]
    if _MD_HEADING.match(line):
        return True
    if line_end == -1 or not line.strip():
        return False
    nxt_end = text.find("\n", line_end + 1)
    nxt = text[line_end + 1 :] if nxt_end == -1 else text[line_end + 1 : nxt_end]
    return bool(_UNDERLINE.match(nxt)) and len(nxt.strip()) >= min(3, len(line.strip()))


def _section_break(text: str, m: re.Match, seg_start: int) -> bool:
    newlines = m.group().count("\n")
    if newlines >= 3:
        return True
    return newlines >= 1 and _starts_heading(text, m.end())


def _paragraph_break(text: str, m: re.Match, seg_start: int) -> bool:
    return m.group().count("\n") >= 2


def _sentence_break(text: str, m: re.Match, seg_start: int) -> bool:
    end = m.start()
    if "\n" in m.group() and _LIST_ITEM.match(text, m.end()):
        return True
    j = end
    while j > seg_start and text[j - 1] in _CLOSERS:
        j -= 1
    if j == seg_start or text[j - 1] not in _TERMINALS:
        return False
    last_word = text[seg_start:end].rsplit(None, 1)[-1]
    core = last_word.rstrip("\"'”’)]")
    if core.endswith(".") and not core.endswith(".."):
        stem = core.rstrip(".").lstrip("(\"'“‘[").lower()
        if stem in ABBREVIATIONS:
            return False
        nxt = text[m.end() : m.end() + 1]
        if nxt.islower():
            return False
    return True


def _text_of(seg: SegmentLike) -> str:
    return seg.text if isinstance(seg, Segment) else seg


def split_sections(text: str) -> list[Segment]:
    """Split at runs of two or more blank lines and before heading lines."""
    return _split(text, "section", _section_break)


def split_paragraphs(section: SegmentLike) -> list[Segment]:
    """Split a section at blank lines."""
    return _split(_text_of(section), "paragraph", _paragraph_break)


def split_sentences(paragraph: SegmentLike) -> list[Segment]:
    """Rule-based sentence boundaries: terminal punctuation, guarded by an abbreviation list.

    A period followed by a lowercase word does not end a sentence, and a line
    break before a list marker always does.
    """
    return _split(_text_of(paragraph), "sentence", _sentence_break)


def rejoin(segments: Sequence[Segment]) -> str:
    return "".join(s.text + s.trailing_separator for s in segments)
