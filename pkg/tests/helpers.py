"""Shared generators and checks for the test suite."""

import itertools
import math
import random
from pathlib import Path

from scope_compress.allocator import allocate, compute_delta, floor_tokens
from scope_compress.chunker import HARD_SPLIT, SPLIT_PROVENANCE, ChunkerConfig
from scope_compress.text import DEFAULT_TOKENIZER as TOK
from scope_compress.text import split_paragraphs, split_sections, split_sentences

FIXTURES = Path(__file__).parent / "fixtures"

TOPICS = [
    "river delta sediment flood plain estuary tide silt channel levee basin".split(),
    "compiler parser token grammar lexer syntax tree bytecode register optimizer".split(),
    "orchestra violin concerto tempo symphony rehearsal conductor melody harmony score".split(),
    "glacier ice moraine crevasse snowfield alpine meltwater valley summit ridge".split(),
    "market inflation interest bond equity dividend liquidity credit yield currency".split(),
]
FILLER = "the a of and to in that with for on by as from which this its their were was is".split()
EXTRAS = [
    "Dr. Smith agreed", "e.g. the second case", "about 3.5 km away", "on 12 March 2020",
    'the "open window" rule', "Marie Curie", "in 1903", "at 40 percent", "the U.S. office", "i.e. twice",
]


def _sentence(rng: random.Random, topic: list[str], n_words: int | None = None) -> str:
    n = n_words or rng.randint(6, 28)
    words = [rng.choice(topic) if rng.random() < 0.55 else rng.choice(FILLER) for _ in range(n)]
    if rng.random() < 0.25:
        words.insert(rng.randrange(len(words)), rng.choice(EXTRAS))
    s = " ".join(words)
    return s[0].upper() + s[1:] + rng.choice([".", ".", ".", "?", "!"])


def _paragraph(rng: random.Random, topic: list[str]) -> str:
    roll = rng.random()
    if roll < 0.04:
        # one unpunctuated run-on sentence longer than a chunk
        return _sentence(rng, topic, rng.randint(820, 1100))
    if roll < 0.12:
        sents = [_sentence(rng, rng.choice(TOPICS) if rng.random() < 0.3 else topic)
                 for _ in range(rng.randint(40, 90))]
    elif roll < 0.18:
        return "\n".join(f"- {_sentence(rng, topic, rng.randint(3, 9))}" for _ in range(rng.randint(2, 6)))
    else:
        sents = [_sentence(rng, topic) for _ in range(rng.randint(1, 10))]
    return " ".join(sents)


def make_essay(rng: random.Random, n_tokens: int) -> str:
    """Synthetic multi-topic document with headings, lists, huge paragraphs and run-on sentences."""
    parts: list[str] = []
    count = 0
    while count < n_tokens:
        topic = rng.choice(TOPICS)
        heading = rng.random()
        if parts and heading < 0.3:
            parts.append(f"\n\n## {topic[0].title()} {topic[1]}\n\n")
        elif parts and heading < 0.4:
            title = f"{topic[2].title()} notes"
            parts.append(f"\n\n\n{title}\n{'=' * len(title)}\n\n")
        elif parts:
            parts.append(rng.choice(["\n\n", "\n\n", "\n \n", "\n\n\n\n"]))
        for k in range(rng.randint(1, 4)):
            if k:
                parts.append("\n\n")
            p = _paragraph(rng, topic)
            parts.append(p)
            count += TOK.count(p)
    return "".join(parts) + rng.choice(["", "\n", "\n\n"])


def _sentence_spans(essay):
    spans = []
    for sec in split_sections(essay):
        for para in split_paragraphs(sec):
            base = sec.start_offset + para.start_offset
            for s in split_sentences(para):
                spans.append((base + s.start_offset, base + s.end_offset, TOK.count(s.text)))
    return spans


def _paragraph_ends(essay):
    ends = set()
    for sec in split_sections(essay):
        for para in split_paragraphs(sec):
            ends.add(sec.start_offset + para.end_offset)
    return ends


def check_chunk_integrity(essay, chunks, cfg=ChunkerConfig()):
    assert "".join(c.text + c.trailing_separator for c in chunks) == essay
    assert all(c.token_count <= cfg.max_token for c in chunks)
    assert [c.original_index for c in chunks] == list(range(len(chunks)))
    spans, pos = [], 0
    for c in chunks:
        spans.append((pos, pos + len(c.text)))
        pos += len(c.text) + len(c.trailing_separator)
    para_ends = _paragraph_ends(essay)
    for c, (a, b) in zip(chunks[:-1], spans[:-1]):
        assert c.split_provenance in SPLIT_PROVENANCE + (None,)
        if b not in para_ends:
            assert c.split_provenance in SPLIT_PROVENANCE
    for sa, sb, n in _sentence_spans(essay):
        covering = [k for k, (a, b) in enumerate(spans) if a < sb and sa < b]
        if n <= cfg.max_token:
            assert len(covering) == 1, (sa, sb)
            a, b = spans[covering[0]]
            assert a <= sa and sb <= b
        else:
            assert len(covering) == -(-n // cfg.max_token)
            assert all(chunks[k].split_provenance == HARD_SPLIT for k in covering[:-1])


# --- independent oracle -------------------------------------------------------

def oracle_shares(lengths, sims, delta):
    """Water-filling by bisection: share_i = min(cap_i, lam * w_i)."""
    caps = [n - floor_tokens(n) for n in lengths]
    weights = [n * (1 - s) for n, s in zip(lengths, sims)]

    def fill(ws, cs, amount):
        if amount <= 0 or not any(ws):
            return [0.0] * len(ws)
        lo, hi = 0.0, 1.0
        while sum(min(c, hi * w) for c, w in zip(cs, ws)) < amount:
            hi *= 2
        for _ in range(200):
            mid = (lo + hi) / 2
            if sum(min(c, mid * w) for c, w in zip(cs, ws)) < amount:
                lo = mid
            else:
                hi = mid
        return [min(c, hi * w) for c, w in zip(cs, ws)]

    pos_cap = sum(c for c, w in zip(caps, weights) if w > 0)
    if pos_cap >= delta:
        return fill(weights, caps, delta), caps
    first = [c if w > 0 else 0.0 for c, w in zip(caps, weights)]
    rest_caps = [c if w == 0 else 0 for c, w in zip(caps, weights)]
    second = fill([float(n) if w == 0 else 0.0 for n, w in zip(lengths, weights)], rest_caps, delta - pos_cap)
    return [a + b for a, b in zip(first, second)], caps


def oracle_apportion(shares, caps, delta):
    """Brute force: among integer vectors summing to delta, minimize squared error; ties to lower index."""
    ranges = [range(max(0, math.floor(q) - 1), min(c, math.ceil(q) + 1) + 1) for q, c in zip(shares, caps)]
    best = None
    for d in itertools.product(*ranges):
        if sum(d) != delta:
            continue
        key = (round(sum((x - q) ** 2 for x, q in zip(d, shares)), 9), tuple(-x for x in d))
        if best is None or key < best[0]:
            best = (key, d)
    return list(best[1])


def run_oracle_agreement(trials: int, seed: int = 0) -> int:
    rng = random.Random(seed)
    checked = 0
    for _ in range(trials):
        n = rng.randint(1, 6)
        lengths = [rng.randint(1, 400) for _ in range(n)]
        sims = [rng.choice([0.0, 1.0, rng.random(), round(rng.random(), 1)]) for _ in range(n)]
        rho = rng.choice([1.5, 2, 3, 5, rng.uniform(1, 8)])
        delta = compute_delta(sum(lengths), rho)
        caps = [x - floor_tokens(x) for x in lengths]
        if sum(caps) < delta:
            continue
        shares, caps = oracle_shares(lengths, sims, delta)
        expect = oracle_apportion(shares, caps, delta)
        plan = allocate(lengths, sims, rho=rho)
        got = [plan.entry_for(i).reduction for i in range(n)]
        assert got == expect, (lengths, sims, rho, got, expect)
        checked += 1
    return checked
