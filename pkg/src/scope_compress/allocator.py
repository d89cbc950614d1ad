"""Relevance-weighted token budgets.

Given chunk lengths ``L_i`` and normalized similarities ``S_i``:

    delta   = L_total - floor(L_total / rho)
    w_i     = L_i * (1 - S_i)
    delta_i = delta * w_i / sum(w)
    target  = L_i - delta_i

Real-valued reductions are integerized by largest-remainder apportionment so
the reductions sum to ``delta`` exactly.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field
from typing import Sequence

from .errors import ConfigError


@dataclass(frozen=True)
class PlanEntry:
    chunk_ref: int
    length: int
    similarity: float
    weight: float
    real_reduction: float  # delta * w_i / sum(w), before floor clamping
    clamped_reduction: float
    reduction: int
    target_len: int


@dataclass
class CompressionPlan:
    total_tokens: int
    target_total: int
    delta_total: int
    rho: float
    entries: list[PlanEntry]
    warnings: list[str] = field(default_factory=list)

    @property
    def order(self) -> list[int]:
        return [e.chunk_ref for e in self.entries]

    def entry_for(self, chunk_ref: int) -> PlanEntry:
        for e in self.entries:
            if e.chunk_ref == chunk_ref:
                return e
        raise KeyError(chunk_ref)

    def to_dict(self) -> dict:
        return {
            "total_tokens": self.total_tokens,
            "target_total": self.target_total,
            "delta_total": self.delta_total,
            "rho": self.rho,
            "order": self.order,
            "entries": [asdict(e) for e in self.entries],
            "warnings": list(self.warnings),
        }


def compute_delta(total: int, rho: float) -> int:
    """Number of tokens to remove: ``total - floor(total / rho)``."""
    if rho < 1:
        raise ConfigError(f"compression ratio must be >= 1, got {rho}")
    if total <= 0:
        raise ValueError("total token count must be positive")
    return total - math.floor(total / rho)


def floor_tokens(length: int) -> int:
    """Smallest target a chunk may be given: ``max(5, ceil(0.05 L))``, never above ``L``."""
    return min(length, max(5, math.ceil(0.05 * length)))


def apportion(shares: Sequence[float], total: int, caps: Sequence[int] | None = None) -> list[int]:
    """Largest-remainder rounding of ``shares`` to integers summing to ``total``.

    Remainder ties go to the lower index. ``caps`` bounds each integer from above.
    """
    base = [math.floor(s + 1e-9) for s in shares]
    if caps is not None:
        base = [min(b, c) for b, c in zip(base, caps)]
    leftover = total - sum(base)
    order = sorted(range(len(shares)), key=lambda i: (-(shares[i] - base[i]), i))
    for i in order:
        if leftover <= 0:
            break
        if caps is None or base[i] < caps[i]:
            base[i] += 1
            leftover -= 1
    if leftover != 0:
        raise ValueError("shares cannot be apportioned within caps")
    return base


def _water_fill(delta: float, weights: list[float], caps: list[int], fallback: list[float]) -> tuple[list[float], bool]:
    """Split ``delta`` proportionally to ``weights`` with per-item caps.

    Clamped items are removed and their overflow redistributed by weight over
    the rest. Returns the shares and whether the length fallback was used.
    """
    n = len(weights)
    shares = [0.0] * n
    free = [i for i in range(n) if caps[i] > 0]
    remaining = float(delta)
    used_fallback = False
    while remaining > 1e-9 and free:
        w = [weights[i] for i in free]
        if sum(w) <= 0:
            w = [fallback[i] for i in free]
            used_fallback = True
        wsum = sum(w)
        proposal = {i: remaining * wi / wsum for i, wi in zip(free, w)}
        over = [i for i in free if shares[i] + proposal[i] > caps[i] + 1e-9]
        if not over:
            for i in free:
                shares[i] += proposal[i]
            remaining = 0.0
            break
        for i in over:
            remaining -= caps[i] - shares[i]
            shares[i] = float(caps[i])
        free = [i for i in free if i not in over]
    if remaining > 1e-6:
        raise ValueError("reduction exceeds total capacity")
    return shares, used_fallback


def allocate(lengths_or_chunks, similarities: Sequence[float] | None = None, rho: float = 2.0,
             refs: Sequence[int] | None = None) -> CompressionPlan:
    """Build a :class:`CompressionPlan`.

    Accepts either a list of chunks (with ``token_count``, ``similarity`` and
    ``original_index``) or parallel sequences of lengths and similarities.
    Entries come back sorted ascending by similarity, ties by index.
    """
    if similarities is None:
        chunks = list(lengths_or_chunks)
        lengths = [c.token_count for c in chunks]
        similarities = [c.similarity for c in chunks]
        refs = [c.original_index for c in chunks]
    else:
        lengths = list(lengths_or_chunks)
    if not lengths:
        raise ValueError("cannot allocate over zero chunks")
    if len(similarities) != len(lengths):
        raise ValueError("lengths and similarities differ in length")
    if any(s is None or not 0.0 <= s <= 1.0 for s in similarities):
        raise ValueError("similarities must be normalized to [0, 1]")
    if any(n < 0 for n in lengths):
        raise ValueError("negative chunk length")
    refs = list(refs) if refs is not None else list(range(len(lengths)))

    total = sum(lengths)
    delta = compute_delta(total, rho)
    target_total = total - delta
    warnings: list[str] = []

    weights = [n * (1.0 - s) for n, s in zip(lengths, similarities)]
    floors = [floor_tokens(n) for n in lengths]
    caps = [n - f for n, f in zip(lengths, floors)]
    if sum(caps) < delta:
        floors = [min(n, 1) for n in lengths]
        caps = [n - f for n, f in zip(lengths, floors)]
        warnings.append("per-chunk floors relaxed to 1 token: ratio too high for the floor rule")
        if sum(caps) < delta:
            raise ConfigError(f"ratio {rho} leaves fewer tokens ({target_total}) than chunks ({len(lengths)})")

    if delta > 0 and sum(weights) == 0:
        warnings.append("all chunks fully relevant (sum of weights is 0); reductions allocated by length")
    shares, used_fallback = _water_fill(delta, weights, caps, [float(n) for n in lengths])
    if used_fallback and sum(weights) > 0:
        warnings.append("weights exhausted before the reduction was placed; remainder allocated by length")
    reductions = apportion(shares, delta, caps)
    wsum = sum(weights)
    formula = [delta * w / wsum if wsum > 0 else 0.0 for w in weights]

    entries = [
        PlanEntry(r, n, s, w, f, sh, d, n - d)
        for r, n, s, w, f, sh, d in zip(refs, lengths, similarities, weights, formula, shares, reductions)
    ]
    entries.sort(key=lambda e: (e.similarity, e.chunk_ref))
    return CompressionPlan(total, target_total, delta, float(rho), entries, warnings)
