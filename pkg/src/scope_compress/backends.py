"""Embedding and summarization backends.

Providers are selected with a spec string:

    stub:NAME[?k=v&...]     deterministic, no downloads (tests, CI)
    local:MODEL_ID[?k=v]    in-process model; ``local:extractive`` needs no weights
    http:URL                JSON-over-POST service (see ``HttpEmbedder``/``HttpSummarizer``)
"""

from __future__ import annotations

import hashlib
import logging
import math
import threading
import time
from dataclasses import dataclass, field
from typing import Any, Callable, Sequence
from urllib.parse import parse_qsl

import numpy as np

from .errors import BackendError, ConfigError, GenerationError
from .text import DEFAULT_TOKENIZER, HFTokenizer, Tokenizer, split_paragraphs, split_sentences

log = logging.getLogger(__name__)

EMBEDDER = "embedder"
SUMMARIZER = "summarizer"
PROVIDERS = ("local", "http", "stub")


# ---------------------------------------------------------------------------
# Handles and requests
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class BackendHandle:
    kind: str
    provider: str
    name: str
    config: dict[str, Any] = field(default_factory=dict)

    @property
    def spec(self) -> str:
        return f"{self.provider}:{self.name}"


def parse_spec(spec: str, kind: str) -> BackendHandle:
    """Parse ``provider:name[?k=v&...]`` into a handle.

    Query parameters are only split off for stub/local providers; an http
    URL is kept verbatim.
    """
    if kind not in (EMBEDDER, SUMMARIZER):
        raise ConfigError(f"unknown backend kind {kind!r}")
    provider, sep, rest = spec.partition(":")
    if not sep or provider not in PROVIDERS or not rest:
        raise ConfigError(f"bad backend spec {spec!r}; expected http:URL, local:MODEL_ID or stub:NAME")
    config: dict[str, Any] = {}
    name = rest
    if provider != "http" and "?" in rest:
        name, _, query = rest.partition("?")
        config = {k: _coerce(v) for k, v in parse_qsl(query, keep_blank_values=True)}
    return BackendHandle(kind, provider, name, config)


def _coerce(value: str) -> Any:
    for cast in (int, float):
        try:
            return cast(value)
        except ValueError:
            pass
    if value.lower() in ("true", "false"):
        return value.lower() == "true"
    return value


@dataclass(frozen=True)
class SummaryRequest:
    text: str
    target_tokens: int
    min_tokens: int = 0
    keywords: tuple[str, ...] = ()

    def __post_init__(self):
        if not self.text.strip():
            raise ValueError("summary request text must be nonempty")
        if self.target_tokens < 1:
            raise ValueError("target_tokens must be positive")
        if not 0 <= self.min_tokens <= self.target_tokens:
            raise ValueError("need 0 <= min_tokens <= target_tokens")

    @classmethod
    def for_target(cls, text: str, target: int, keywords: Sequence[str] = ()) -> "SummaryRequest":
        """Build a request with ``min_tokens = ceil(target / 2)``."""
        return cls(text, target, math.ceil(0.5 * target), tuple(keywords))


# ---------------------------------------------------------------------------
# Embedders
# ---------------------------------------------------------------------------


def cosine_similarity(a, b) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ConfigError(f"embedding dimension mismatch: {a.shape} vs {b.shape}")
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ValueError("cosine similarity is undefined for a zero vector")
    return float(np.clip(np.dot(a, b) / (na * nb), -1.0, 1.0))


class Embedder:
    """Base embedder: validation, order-preserving cache, dimension check.

    Subclasses implement ``_embed_batch``. The cache is keyed by text hash and
    lives as long as the instance.
    """

    handle: BackendHandle
    dim: int | None = None
    max_input_tokens: int | None = None
    max_concurrency: int = 1

    def __init__(self, handle: BackendHandle):
        self.handle = handle
        self._cache: dict[str, np.ndarray] = {}
        self._lock = threading.Lock()
        self.calls = 0

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            raise ValueError("empty embedding batch")
        if any(not t for t in texts):
            raise ValueError("cannot embed an empty string")
        keys = [hashlib.sha256(t.encode("utf-8")).hexdigest() for t in texts]
        with self._lock:
            missing = {k: t for k, t in zip(keys, texts) if k not in self._cache}
        if missing:
            vectors = self._embed_batch(list(missing.values()))
            if len(vectors) != len(missing):
                raise BackendError(
                    f"embedder returned {len(vectors)} vectors for {len(missing)} texts",
                    provider=self.handle.spec, retryable=False,
                )
            with self._lock:
                self.calls += 1
                for k, v in zip(missing, vectors):
                    v = np.asarray(v, dtype=float)
                    if self.dim is None:
                        self.dim = v.shape[0]
                    if v.shape != (self.dim,):
                        raise ConfigError(f"{self.handle.spec}: expected dim {self.dim}, got {v.shape}")
                    if not np.all(np.isfinite(v)):
                        raise BackendError("non-finite embedding component", provider=self.handle.spec)
                    self._cache[k] = v
        with self._lock:
            return [self._cache[k].copy() for k in keys]

    def clear_cache(self) -> None:
        with self._lock:
            self._cache.clear()

    def _embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        raise NotImplementedError


def embed_texts(embedder: Embedder, texts: Sequence[str]) -> list[np.ndarray]:
    return embedder.embed(texts)


class HashEmbedder(Embedder):
    """Feature-hashed bag of lowercased words, L2-normalized.

    Texts that share words get positive cosine; disjoint vocabularies are
    near-orthogonal. A text with no word characters hashes as one feature.
    """

    def __init__(self, handle: BackendHandle | None = None, dim: int = 256):
        handle = handle or BackendHandle(EMBEDDER, "stub", "hash", {"dim": dim})
        super().__init__(handle)
        self.dim = int(handle.config.get("dim", dim))
        if self.dim < 2:
            raise ConfigError("hash embedder dim must be >= 2")

    def vector(self, text: str) -> np.ndarray:
        v = np.zeros(self.dim)
        words = [w.lower() for w in DEFAULT_TOKENIZER._pattern.findall(text) if w[0].isalnum() or w[0] == "_"]
        for w in words or [text.strip() or text]:
            h = hashlib.blake2b(w.encode("utf-8"), digest_size=8).digest()
            idx = int.from_bytes(h[:4], "little") % self.dim
            v[idx] += 1.0 if h[4] & 1 else -1.0
        norm = np.linalg.norm(v)
        if norm == 0.0:
            # colliding +1/-1 features cancelled out
            v[0] = 1.0
            norm = 1.0
        return v / norm

    def _embed_batch(self, texts):
        return [self.vector(t) for t in texts]


class SentenceTransformerEmbedder(Embedder):
    def __init__(self, handle: BackendHandle, model=None):
        super().__init__(handle)
        if model is None:
            try:
                from sentence_transformers import SentenceTransformer

                model = SentenceTransformer(handle.name, device=handle.config.get("device"))
            except Exception as exc:  # noqa: BLE001
                raise BackendError(f"cannot load embedding model {handle.name!r}: {exc}",
                                   provider=handle.spec, retryable=False) from exc
        self.model = model
        self.max_input_tokens = getattr(model, "max_seq_length", None)

    def _embed_batch(self, texts):
        out = self.model.encode(list(texts), convert_to_numpy=True, normalize_embeddings=True,
                                batch_size=int(self.handle.config.get("batch_size", 32)))
        return list(out)


# ---------------------------------------------------------------------------
# HTTP transport
# ---------------------------------------------------------------------------


class HttpClient:
    """POST JSON with retries: 3 retries after the first attempt, backoff 0.5 s doubling."""

    retries = 3
    backoff = 0.5

    def __init__(self, base_url: str, timeout: float = 60.0, transport=None,
                 sleep: Callable[[float], None] = time.sleep):
        import httpx

        self.base_url = base_url.rstrip("/")
        self._client = httpx.Client(timeout=timeout, transport=transport)
        self._sleep = sleep

    def post(self, path: str, payload: dict) -> dict:
        import httpx

        url = f"{self.base_url}{path}"
        last = ""
        for attempt in range(self.retries + 1):
            if attempt:
                self._sleep(self.backoff * 2 ** (attempt - 1))
            try:
                resp = self._client.post(url, json=payload)
            except httpx.HTTPError as exc:
                last = f"{type(exc).__name__}: {exc}"
                log.warning("POST %s failed (attempt %d): %s", url, attempt + 1, last)
                continue
            if resp.status_code == 200:
                try:
                    return resp.json()
                except ValueError as exc:
                    raise BackendError(f"{url}: invalid JSON response", provider=url, retryable=False) from exc
            last = f"HTTP {resp.status_code}: {resp.text[:500]}"
            log.warning("POST %s -> %s (attempt %d)", url, last, attempt + 1)
        raise BackendError(f"{url} unreachable after {self.retries + 1} attempts; last error {last}", provider=url)


class HttpEmbedder(Embedder):
    """``POST /embed {"texts": [...]}`` -> ``{"vectors": [[...]], "dim": int}``."""

    max_concurrency = 4

    def __init__(self, handle: BackendHandle, client: HttpClient | None = None):
        super().__init__(handle)
        self.client = client or HttpClient(handle.name)

    def _embed_batch(self, texts):
        body = self.client.post("/embed", {"texts": list(texts)})
        vectors = body.get("vectors")
        if not isinstance(vectors, list):
            raise BackendError("/embed response lacks 'vectors'", provider=self.handle.spec, retryable=False)
        dim = body.get("dim")
        if dim is not None and any(len(v) != dim for v in vectors):
            raise ConfigError(f"{self.handle.spec}: vectors disagree with declared dim {dim}")
        return [np.asarray(v, dtype=float) for v in vectors]


# ---------------------------------------------------------------------------
# Summarizers
# ---------------------------------------------------------------------------


class Summarizer:
    """Base summarizer.

    ``instruction_capable`` backends get keywords prefixed onto the source
    text by the compressor; the rest rely on post-hoc keyword substitution.
    """

    handle: BackendHandle
    instruction_capable = False
    max_concurrency = 1

    def __init__(self, handle: BackendHandle, tokenizer: Tokenizer | None = None):
        self.handle = handle
        self.tokenizer = tokenizer or DEFAULT_TOKENIZER
        self.calls = 0
        self._lock = threading.Lock()

    def summarize(self, req: SummaryRequest) -> str:
        with self._lock:
            self.calls += 1
        out = self._generate(req)
        if not out or not out.strip():
            raise GenerationError("summarizer returned empty output", provider=self.handle.spec)
        return out.strip()

    def _generate(self, req: SummaryRequest) -> str:
        raise NotImplementedError


def summarize(summarizer: Summarizer, req: SummaryRequest) -> str:
    return summarizer.summarize(req)


class TruncateSummarizer(Summarizer):
    """Returns the first ``ceil(scale * target)`` tokens of the text verbatim."""

    def __init__(self, handle=None, tokenizer=None, scale: float = 1.0):
        handle = handle or BackendHandle(SUMMARIZER, "stub", "truncate")
        super().__init__(handle, tokenizer)
        self.scale = float(handle.config.get("scale", scale))
        if self.scale <= 0:
            raise ConfigError("truncate scale must be positive")

    def _generate(self, req):
        return self.tokenizer.truncate(req.text, max(1, math.ceil(self.scale * req.target_tokens)))


class EchoSummarizer(Summarizer):
    """Returns the input text unchanged."""

    def __init__(self, handle=None, tokenizer=None):
        super().__init__(handle or BackendHandle(SUMMARIZER, "stub", "echo"), tokenizer)

    def _generate(self, req):
        return req.text


class EmptySummarizer(Summarizer):
    """Always produces empty output; exercises the failure path."""

    def __init__(self, handle=None, tokenizer=None):
        super().__init__(handle or BackendHandle(SUMMARIZER, "stub", "empty"), tokenizer)

    def _generate(self, req):
        return ""


class ExtractiveSummarizer(Summarizer):
    """Sentence-selection summarizer that runs without model weights.

    Sentences are scored by centrality (hashed bag-of-words cosine to the
    text centroid), a lead bonus, and a bonus for containing a keyword, then
    picked greedily under ``target_tokens``. If the picks fall short of
    ``min_tokens`` the best remaining sentence is truncated to fill the gap.
    """

    def __init__(self, handle=None, tokenizer=None):
        handle = handle or BackendHandle(SUMMARIZER, "local", "extractive")
        super().__init__(handle, tokenizer)
        self._vec = HashEmbedder(dim=int(handle.config.get("dim", 512)))
        self.lead_weight = float(handle.config.get("lead", 0.1))
        self.keyword_weight = float(handle.config.get("keyword", 0.3))

    def _units(self, text: str) -> list[str]:
        units = []
        for para in split_paragraphs(text):
            units.extend(s.text for s in split_sentences(para))
        return [u for u in units if u.strip()]

    def _generate(self, req):
        tok = self.tokenizer
        units = self._units(req.text)
        if not units:
            return tok.truncate(req.text, req.target_tokens)
        vecs = np.array([self._vec.vector(u) for u in units])
        centroid = vecs.mean(axis=0)
        cnorm = np.linalg.norm(centroid) or 1.0
        kws = [k.lower() for k in req.keywords]
        scored = []
        for i, u in enumerate(units):
            score = float(vecs[i] @ centroid) / cnorm
            score += self.lead_weight / (1 + i)
            if kws and any(k in u.lower() for k in kws):
                score += self.keyword_weight
            scored.append((-score, i))
        scored.sort()
        lengths = [tok.count(u) for u in units]
        chosen: dict[int, str] = {}
        used = 0
        for _, i in scored:
            if lengths[i] and used + lengths[i] <= req.target_tokens:
                chosen[i] = units[i]
                used += lengths[i]
        if used < req.min_tokens or not chosen:
            for _, i in scored:
                if i not in chosen:
                    chosen[i] = tok.truncate(units[i], req.target_tokens - used)
                    break
        return " ".join(chosen[i] for i in sorted(chosen))


class Seq2SeqSummarizer(Summarizer):
    """Hugging Face seq2seq model (BART, T5, ...); budgets map to generation bounds."""

    def __init__(self, handle: BackendHandle, tokenizer=None, model=None, hf_tokenizer=None):
        try:
            if model is None or hf_tokenizer is None:
                from transformers import AutoModelForSeq2SeqLM, AutoTokenizer

                hf_tokenizer = hf_tokenizer or AutoTokenizer.from_pretrained(handle.name, use_fast=True)
                model = model or AutoModelForSeq2SeqLM.from_pretrained(handle.name)
        except Exception as exc:  # noqa: BLE001
            raise BackendError(f"cannot load summarization model {handle.name!r}: {exc}",
                               provider=handle.spec, retryable=False) from exc
        super().__init__(handle, tokenizer or HFTokenizer(handle.name, hf_tokenizer))
        self.model = model.eval()
        self.hf_tokenizer = hf_tokenizer
        self.prefix = str(handle.config.get("prefix", ""))
        self.num_beams = int(handle.config.get("beams", 4))
        seed = handle.config.get("seed")
        if seed is not None:
            import torch

            torch.manual_seed(int(seed))

    def _generate(self, req):
        import torch

        enc = self.hf_tokenizer(self.prefix + req.text, return_tensors="pt", truncation=True)
        with torch.no_grad():
            out = self.model.generate(
                **enc,
                max_new_tokens=req.target_tokens,
                min_new_tokens=req.min_tokens,
                num_beams=self.num_beams,
                no_repeat_ngram_size=3,
                early_stopping=True,
            )
        return self.hf_tokenizer.decode(out[0], skip_special_tokens=True)


class HttpSummarizer(Summarizer):
    """``POST /summarize {"text", "max_tokens", "min_tokens", "keywords"}`` -> ``{"summary": str}``."""

    max_concurrency = 4

    def __init__(self, handle: BackendHandle, tokenizer=None, client: HttpClient | None = None,
                 instruction_capable: bool = True):
        super().__init__(handle, tokenizer)
        self.client = client or HttpClient(handle.name)
        self.instruction_capable = instruction_capable

    def _generate(self, req):
        body = self.client.post("/summarize", {
            "text": req.text,
            "max_tokens": req.target_tokens,
            "min_tokens": req.min_tokens,
            "keywords": list(req.keywords),
        })
        summary = body.get("summary")
        if not isinstance(summary, str):
            raise BackendError("/summarize response lacks 'summary'", provider=self.handle.spec, retryable=False)
        return summary


# ---------------------------------------------------------------------------
# Resolution
# ---------------------------------------------------------------------------

_STUB_SUMMARIZERS = {"truncate": TruncateSummarizer, "echo": EchoSummarizer, "empty": EmptySummarizer}


def resolve_embedder(spec: str | BackendHandle | Embedder) -> Embedder:
    if isinstance(spec, Embedder):
        return spec
    handle = spec if isinstance(spec, BackendHandle) else parse_spec(spec, EMBEDDER)
    if handle.provider == "stub":
        if handle.name != "hash":
            raise ConfigError(f"unknown stub embedder {handle.name!r}; available: hash")
        return HashEmbedder(handle)
    if handle.provider == "http":
        return HttpEmbedder(handle)
    return SentenceTransformerEmbedder(handle)


def resolve_summarizer(spec: str | BackendHandle | Summarizer, tokenizer: Tokenizer | None = None) -> Summarizer:
    if isinstance(spec, Summarizer):
        return spec
    handle = spec if isinstance(spec, BackendHandle) else parse_spec(spec, SUMMARIZER)
    if handle.provider == "stub":
        try:
            cls = _STUB_SUMMARIZERS[handle.name]
        except KeyError:
            raise ConfigError(
                f"unknown stub summarizer {handle.name!r}; available: {', '.join(_STUB_SUMMARIZERS)}"
            ) from None
        return cls(handle, tokenizer)
    if handle.provider == "http":
        return HttpSummarizer(handle, tokenizer,
                              instruction_capable=bool(handle.config.get("instruct", True)))
    if handle.name == "extractive":
        return ExtractiveSummarizer(handle, tokenizer)
    return Seq2SeqSummarizer(handle, tokenizer)
