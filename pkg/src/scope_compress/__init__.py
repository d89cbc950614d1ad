"""Generative prompt compression by semantic chunking and budgeted summarization."""

__version__ = "0.1.0"

from .allocator import CompressionPlan, PlanEntry, allocate, compute_delta  # noqa: E402
from .backends import (  # noqa: E402
    BackendHandle,
    SummaryRequest,
    cosine_similarity,
    embed_texts,
    parse_spec,
    resolve_embedder,
    resolve_summarizer,
    summarize,
)
from .chunker import Chunk, ChunkerConfig, chunk_paragraph, score_chunks, semantic_chunk  # noqa: E402
from .compressor import ChunkOutcome, compress_chunk, run_plan  # noqa: E402
from .errors import BackendError, ConfigError, GenerationError, InputError, ScopeError  # noqa: E402
from .keywords import KeywordSet, extract_keywords, substitute_if_truncated  # noqa: E402
from .pipeline import CompressionResult, RunConfig, compress, reassemble  # noqa: E402
from .text import Segment, count_tokens, split_paragraphs, split_sections, split_sentences  # noqa: E402

__all__ = [
    "BackendError", "BackendHandle", "Chunk", "ChunkOutcome", "ChunkerConfig", "CompressionPlan",
    "CompressionResult", "ConfigError", "GenerationError", "InputError", "KeywordSet", "PlanEntry",
    "RunConfig", "ScopeError", "Segment", "SummaryRequest", "allocate", "chunk_paragraph", "compress",
    "compress_chunk", "compute_delta", "cosine_similarity", "count_tokens", "embed_texts",
    "extract_keywords", "parse_spec", "reassemble", "resolve_embedder", "resolve_summarizer",
    "run_plan", "score_chunks", "semantic_chunk", "split_paragraphs", "split_sections",
    "split_sentences", "substitute_if_truncated", "summarize",
]
