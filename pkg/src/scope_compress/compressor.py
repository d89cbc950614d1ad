"""Plan execution: per-chunk summarization in ascending-relevance order with early stop."""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Mapping, Sequence

from .allocator import CompressionPlan, PlanEntry
from .backends import Summarizer, SummaryRequest
from .chunker import Chunk
from .errors import BackendError, ConfigError
from .keywords import KeywordSet, cap_keywords, substitute_if_truncated
from .text import DEFAULT_TOKENIZER, Tokenizer

log = logging.getLogger(__name__)

SUMMARIZED = "summarized"
KEPT_VERBATIM = "kept_verbatim"
SUBSTITUTED_KEYWORDS = "substituted_keywords"
EARLY_STOPPED = "early_stopped"

OVERSHOOT_TOLERANCE = 0.2


@dataclass
class ChunkOutcome:
    chunk_ref: int
    action: str
    output_text: str
    achieved_tokens: int
    requested_tokens: int
    original_tokens: int = 0
    model_calls: int = 0
    retries: int = 0
    keyword_mode: str = "none"
    warnings: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return asdict(self)


def _with_keyword_prefix(text: str, kw: KeywordSet) -> str:
    return f"[Keywords: {kw.joined()}]\n{text}"


def compress_chunk(
    chunk: Chunk,
    entry: PlanEntry,
    kw: KeywordSet,
    summarizer: Summarizer,
    tokenizer: Tokenizer | None = None,
    floor_fraction: float = 0.3,
) -> ChunkOutcome:
    """Summarize one chunk to its planned length.

    Never drops a chunk: on summarizer failure the keywords stand in, and
    with no keywords the original text is kept.
    """
    if entry.chunk_ref != chunk.original_index:
        raise ValueError(f"plan entry {entry.chunk_ref} does not match chunk {chunk.original_index}")
    tok = tokenizer or DEFAULT_TOKENIZER
    length = chunk.token_count
    target = entry.target_len
    base = dict(chunk_ref=chunk.original_index, requested_tokens=target, original_tokens=length)
    if target >= length:
        return ChunkOutcome(action=KEPT_VERBATIM, output_text=chunk.text, achieved_tokens=length, **base)

    prefix = summarizer.instruction_capable and bool(kw.terms)
    mode = "prefix" if prefix else "substitution"
    source = _with_keyword_prefix(chunk.text, kw) if prefix else chunk.text
    warnings: list[str] = []
    calls = retries = 0

    def call(n: int) -> str:
        nonlocal calls
        calls += 1
        return summarizer.summarize(SummaryRequest.for_target(source, max(1, n), kw.terms))

    try:
        out = call(target)
        achieved = tok.count(out)
        if achieved > (1 + OVERSHOOT_TOLERANCE) * target:
            retries = 1
            try:
                retry = call(target - (achieved - target))
                out, achieved = retry, tok.count(retry)
            except BackendError as exc:
                warnings.append(f"overshoot retry failed, keeping first summary: {exc}")
            if achieved > (1 + OVERSHOOT_TOLERANCE) * target:
                warnings.append(f"summary overshoots target ({achieved} > {target}) after retry")
    except BackendError as exc:
        if kw.terms:
            text = cap_keywords(kw.terms, target, tok)
            warnings.append(f"summarizer failed, substituted keywords: {exc}")
            return ChunkOutcome(action=SUBSTITUTED_KEYWORDS, output_text=text, achieved_tokens=tok.count(text),
                                model_calls=calls, retries=retries, keyword_mode=mode, warnings=warnings, **base)
        msg = f"summarizer failed and chunk has no keywords; kept verbatim: {exc}"
        log.warning(msg)
        warnings.append(msg)
        return ChunkOutcome(action=KEPT_VERBATIM, output_text=chunk.text, achieved_tokens=length,
                            model_calls=calls, retries=retries, keyword_mode=mode, warnings=warnings, **base)

    final = substitute_if_truncated(out, kw, target, tok, floor_fraction)
    action = SUMMARIZED if final == out else SUBSTITUTED_KEYWORDS
    return ChunkOutcome(action=action, output_text=final, achieved_tokens=tok.count(final), model_calls=calls,
                        retries=retries, keyword_mode=mode, warnings=warnings, **base)


def run_plan(
    chunks: Sequence[Chunk],
    plan: CompressionPlan,
    keywords: Mapping[int, KeywordSet],
    summarizer: Summarizer,
    tokenizer: Tokenizer | None = None,
    early_stop: bool = True,
    parallel: int = 1,
    floor_fraction: float = 0.3,
) -> list[ChunkOutcome]:
    """Compress chunks in plan order; returns outcomes in that same order.

    Early stop is checked on achieved reduction before each chunk (or each
    window of ``parallel`` chunks): once ``plan.delta_total`` tokens are gone
    the rest are emitted verbatim as ``early_stopped``.
    """
    if parallel < 1:
        raise ConfigError("parallel must be >= 1")
    by_ref = {c.original_index: c for c in chunks}
    if sorted(by_ref) != sorted(plan.order) or len(plan.order) != len(chunks):
        raise ValueError("plan entries do not cover the chunks one-to-one")
    tok = tokenizer or DEFAULT_TOKENIZER
    outcomes: list[ChunkOutcome] = []
    reduced = 0
    entries = plan.entries
    workers = min(parallel, max(1, summarizer.max_concurrency)) if parallel > 1 else 1
    step = workers

    def one(entry: PlanEntry) -> ChunkOutcome:
        c = by_ref[entry.chunk_ref]
        return compress_chunk(c, entry, keywords.get(entry.chunk_ref, KeywordSet(entry.chunk_ref)),
                              summarizer, tok, floor_fraction)

    with ThreadPoolExecutor(max_workers=workers) if workers > 1 else _NullPool() as pool:
        i = 0
        while i < len(entries):
            if early_stop and reduced >= plan.delta_total:
                for e in entries[i:]:
                    c = by_ref[e.chunk_ref]
                    outcomes.append(ChunkOutcome(e.chunk_ref, EARLY_STOPPED, c.text, c.token_count,
                                                 e.target_len, original_tokens=c.token_count))
                break
            window = entries[i : i + step]
            results = list(pool.map(one, window))
            for r in results:
                reduced += r.original_tokens - r.achieved_tokens
            outcomes.extend(results)
            i += step
    return outcomes


class _NullPool:
    def __enter__(self):
        return self

    def __exit__(self, *exc):
        return False

    def map(self, fn, items):
        return map(fn, items)
