"""Three-level semantic chunking: sections, paragraphs, similarity-guided sentence groups."""

from __future__ import annotations

import logging
from dataclasses import dataclass, field, replace
from typing import Sequence

import numpy as np

from .backends import Embedder, cosine_similarity
from .errors import ConfigError, InputError
from .text import (
    DEFAULT_TOKENIZER,
    Segment,
    SegmentLike,
    Tokenizer,
    split_paragraphs,
    split_sections,
    split_sentences,
)

log = logging.getLogger(__name__)

CANDIDATE_DIP = "candidate-dip"
FORCED_END = "forced-end"
HARD_SPLIT = "hard-split"
SPLIT_PROVENANCE = (CANDIDATE_DIP, FORCED_END, HARD_SPLIT)


@dataclass(frozen=True)
class ChunkerConfig:
    max_token: int = 800
    min_token: int = 200
    tau: float = 0.5
    tiny_merge_threshold: int = 100

    def __post_init__(self):
        if self.max_token < 1 or self.min_token < 1:
            raise ConfigError("max_token and min_token must be positive")
        if self.min_token >= self.max_token:
            raise ConfigError("min_token must be smaller than max_token")
        if not -1.0 < self.tau < 1.0:
            raise ConfigError("tau must lie in (-1, 1)")
        if not 0 < self.tiny_merge_threshold <= self.min_token:
            raise ConfigError("tiny_merge_threshold must be in (0, min_token]")


@dataclass
class Chunk:
    text: str
    original_index: int
    token_count: int
    trailing_separator: str = ""
    embedding: np.ndarray | None = field(default=None, repr=False)
    similarity: float | None = None
    raw_similarity: float | None = None
    # how the boundary at the end of this chunk was chosen, for sentence-level splits only
    split_provenance: str | None = None
    source: str = "section"

    def to_dict(self) -> dict:
        return {
            "index": self.original_index,
            "tokens": self.token_count,
            "source": self.source,
            "split_provenance": self.split_provenance,
            "raw_similarity": self.raw_similarity,
            "similarity": self.similarity,
            "trailing_separator": self.trailing_separator,
            "text": self.text,
        }


@dataclass
class _Unit:
    """A sentence, or one token-bounded piece of an oversized sentence."""

    start: int
    end: int
    sep: str
    tokens: int
    hard_piece: bool = False  # boundary after this unit is inside one sentence


def _hard_split(sentence: Segment, base: int, max_token: int, tok: Tokenizer) -> list[_Unit]:
    text = sentence.text
    spans = tok.spans(text)
    units = []
    for k in range(0, len(spans), max_token):
        group = spans[k : k + max_token]
        a = 0 if k == 0 else group[0][0]
        last = k + max_token >= len(spans)
        b = len(text) if last else group[-1][1]
        nxt = len(text) if last else spans[k + max_token][0]
        sep = sentence.trailing_separator if last else text[b:nxt]
        units.append(_Unit(base + a, base + b, sep, len(group), hard_piece=not last))
    # text between token pieces that is not whitespace stays attached to the piece
    fixed = []
    for i, u in enumerate(units):
        if i + 1 < len(units) and u.sep.strip():
            fixed.append(_Unit(u.start, u.end + len(u.sep), "", u.tokens, u.hard_piece))
        else:
            fixed.append(u)
    return fixed


def _units(paragraph_text: str, cfg: ChunkerConfig, tok: Tokenizer, notes: list[str] | None) -> list[_Unit]:
    units: list[_Unit] = []
    for s in split_sentences(paragraph_text):
        n = tok.count(s.text)
        if n > cfg.max_token:
            msg = f"sentence of {n} tokens exceeds max_token={cfg.max_token}; hard-split at token boundaries"
            log.warning(msg)
            if notes is not None:
                notes.append(msg)
            units.extend(_hard_split(s, s.start_offset, cfg.max_token, tok))
        else:
            units.append(_Unit(s.start_offset, s.end_offset, s.trailing_separator, n))
    return units


def _label(cut: int, cand: set[int], units: list[_Unit]) -> str:
    if cut in cand:
        return CANDIDATE_DIP
    if units[cut - 1].hard_piece:
        return HARD_SPLIT
    return FORCED_END


def plan_paragraph_splits(
    counts: Sequence[int], sims: Sequence[float], cfg: ChunkerConfig
) -> list[tuple[int, int, str | None]]:
    """Greedy bounded segmentation of a unit sequence.

    Returns ``(start, end, provenance)`` triples, end exclusive; provenance
    describes the cut at ``end`` and is ``None`` for the final bound.
    ``sims[i]`` is the similarity between unit ``i`` and ``i + 1``.
    """
    n = len(counts)
    prefix = np.concatenate([[0], np.cumsum(counts)]).astype(int)

    def tokens(a: int, b: int) -> int:
        return int(prefix[b] - prefix[a])

    cand = {i + 1 for i, s in enumerate(sims) if s < cfg.tau}
    bounds: list[list] = []
    start = 0
    while start < n:
        remaining = tokens(start, n)
        if remaining < cfg.min_token and bounds:
            _merge_or_rebalance(bounds, n, tokens, cand, sims, cfg)
            break
        end = start + 1
        while end < n and tokens(start, end + 1) <= cfg.max_token:
            end += 1
        if end == n:
            bounds.append([start, n, None])
            break
        valid = [c for c in range(start + 1, end + 1) if c in cand and tokens(start, c) >= cfg.min_token]
        if valid:
            # deepest dip first, then most balanced against the rest of the window
            cut = min(valid, key=lambda c: (sims[c - 1], abs(tokens(start, c) - tokens(c, end)), -c))
            prov = CANDIDATE_DIP
        else:
            cut = end
            prov = None
        bounds.append([start, cut, prov])
        start = cut
    return [tuple(b) for b in bounds]


def _merge_or_rebalance(bounds, n, tokens, cand, sims, cfg) -> None:
    prev_start, prev_cut, _ = bounds[-1]
    if tokens(prev_start, n) <= cfg.max_token:
        bounds[-1] = [prev_start, n, None]
        return
    options = [
        c for c in range(prev_start + 1, prev_cut)
        if cfg.min_token <= tokens(prev_start, c) <= cfg.max_token
        and cfg.min_token <= tokens(c, n) <= cfg.max_token
    ]
    if options:
        dips = [c for c in options if c in cand]
        if dips:
            cut = min(dips, key=lambda c: (sims[c - 1], prev_cut - c))
            prov = CANDIDATE_DIP
        else:
            cut = max(options)
            prov = None
        bounds[-1] = [prev_start, cut, prov]
        bounds.append([cut, n, None])
    else:
        bounds.append([prev_cut, n, None])


def _adjacent_similarities(texts: list[str], embedder: Embedder) -> list[float]:
    if len(texts) < 2:
        return []
    vecs = embedder.embed(texts)
    return [cosine_similarity(vecs[i], vecs[i + 1]) for i in range(len(vecs) - 1)]


def chunk_paragraph(
    paragraph: SegmentLike,
    cfg: ChunkerConfig,
    embedder: Embedder,
    tokenizer: Tokenizer | None = None,
    notes: list[str] | None = None,
) -> list[Chunk]:
    """Split an oversized paragraph into sentence groups of at most ``max_token`` tokens.

    Cuts prefer adjacent-sentence similarity dips below ``tau``; when no dip
    gives a valid chunk inside the greedy window, the window end is used.
    The returned chunks carry the paragraph's trailing separator on the last
    one and are indexed from 0.
    """
    tok = tokenizer or DEFAULT_TOKENIZER
    text = paragraph.text if isinstance(paragraph, Segment) else paragraph
    tail_sep = paragraph.trailing_separator if isinstance(paragraph, Segment) else ""
    units = _units(text, cfg, tok, notes)
    if not units:
        return []
    sims = _adjacent_similarities([text[u.start : u.end] for u in units], embedder)
    cand = {i + 1 for i, s in enumerate(sims) if s < cfg.tau}
    bounds = plan_paragraph_splits([u.tokens for u in units], sims, cfg)

    chunks = []
    for k, (a, b, prov) in enumerate(bounds):
        last = k == len(bounds) - 1
        body = text[units[a].start : units[b - 1].end]
        sep = tail_sep if last else units[b - 1].sep
        if last and units[b - 1].sep:
            # whitespace after the final sentence inside the paragraph text
            sep = units[b - 1].sep + tail_sep
        label = None if last else (prov or _label(b, cand, units))
        chunks.append(Chunk(body, k, tok.count(body), sep, split_provenance=label, source="sentences"))
    return chunks


def _merge_tiny(chunks: list[Chunk], cfg: ChunkerConfig, tok: Tokenizer) -> list[Chunk]:
    if not chunks:
        return chunks
    out = []
    acc = chunks[0]
    for c in chunks[1:]:
        if acc.token_count < cfg.tiny_merge_threshold or c.token_count < cfg.tiny_merge_threshold:
            merged_text = acc.text + acc.trailing_separator + c.text
            n = tok.count(merged_text)
            if n <= cfg.max_token:
                acc = Chunk(merged_text, 0, n, c.trailing_separator,
                            split_provenance=c.split_provenance, source="merged")
                continue
        out.append(acc)
        acc = c
    out.append(acc)
    return out


def semantic_chunk(
    essay: str,
    cfg: ChunkerConfig,
    embedder: Embedder,
    tokenizer: Tokenizer | None = None,
    notes: list[str] | None = None,
    embed: bool = True,
) -> list[Chunk]:
    """Chunk a document; joining ``text + trailing_separator`` over the result reproduces ``essay``.

    Leading whitespace of the essay, if any, is part of the first chunk's text.
    """
    if not essay or not essay.strip():
        raise InputError("cannot chunk an empty essay")
    tok = tokenizer or DEFAULT_TOKENIZER
    chunks: list[Chunk] = []
    for section in split_sections(essay):
        n = tok.count(section.text)
        if n <= cfg.max_token:
            chunks.append(Chunk(section.text, 0, n, section.trailing_separator, source="section"))
            continue
        paragraphs = split_paragraphs(section)
        for j, para in enumerate(paragraphs):
            sep = para.trailing_separator
            if j == len(paragraphs) - 1:
                sep += section.trailing_separator
            para = replace(para, trailing_separator=sep)
            m = tok.count(para.text)
            if m <= cfg.max_token:
                chunks.append(Chunk(para.text, 0, m, sep, source="paragraph"))
            else:
                chunks.extend(chunk_paragraph(para, cfg, embedder, tok, notes))
    chunks = _merge_tiny(chunks, cfg, tok)
    for i, c in enumerate(chunks):
        c.original_index = i
    if embed:
        vectors = embedder.embed([c.text for c in chunks])
        for c, v in zip(chunks, vectors):
            c.embedding = v
    return chunks


def normalize_similarity(raw: float) -> float:
    """Negative cosines clamp to 0; values in [0, 1] pass through."""
    return min(1.0, max(0.0, raw))


def score_chunks(chunks: Sequence[Chunk], essay_embedding) -> list[Chunk]:
    """Attach raw and normalized cosine similarity to the full-context embedding."""
    out = []
    for c in chunks:
        if c.embedding is None:
            raise ConfigError(f"chunk {c.original_index} has no embedding")
        raw = cosine_similarity(c.embedding, essay_embedding)
        out.append(replace(c, raw_similarity=raw, similarity=normalize_similarity(raw)))
    return out
