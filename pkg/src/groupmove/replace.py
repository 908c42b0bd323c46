"""Entropy reduction phase: hit item replacement.

Items the shared predictor gets right may be swapped for the reserved ``HIT``
token; the receiver restores them with the same predictor.  Entropy depends
only on symbol counts, so the choice reduces to how many predictable items
of each symbol to replace.  :func:`replace` makes that choice with the
accumulation, concentration and multiple-symbol rules;
:func:`hir_bruteforce` enumerates every count vector and serves as the
reference optimum.

A predictor is any object with ``argmax(context) -> symbol``.  Sequences may
carry merged verbatim runs; ``spans`` lists ``(length, group_size)`` pieces
of the sequence, and the prediction context restarts at each piece.  Inside a
piece the context is one symbol per column: the unbracketed item, or the
first member's symbol of a verbatim column.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from itertools import combinations
from typing import Hashable, Iterable, Iterator, Mapping, Protocol, Sequence

import numpy as np

from .merge import DELIM, HIT

Spans = Sequence[tuple[int, int]]


class Predictor(Protocol):
    def argmax(self, context: Sequence[int]) -> int: ...


class InstanceTooLarge(ValueError):
    pass


# --------------------------------------------------------------------------
# Entropy


def _xlog2x(c: float) -> float:
    return c * math.log2(c) if c > 0 else 0.0


def entropy_from_counts(counts: Iterable[float]) -> float:
    counts = [c for c in counts if c > 0]
    n = sum(counts)
    if n <= 0:
        raise ValueError("entropy of an empty distribution")
    h = math.log2(n) - sum(_xlog2x(c) for c in counts) / n
    return max(h, 0.0)


def shannon_entropy(seq: Sequence[Hashable]) -> float:
    """Empirical entropy in bits per symbol."""
    if len(seq) == 0:
        raise ValueError("entropy of an empty sequence")
    return entropy_from_counts(Counter(seq).values())


# --------------------------------------------------------------------------
# Predictability


def _pieces(length: int, spans: Spans | None) -> list[tuple[int, int, int]]:
    if spans is None:
        return [(0, length, 1)]
    out, start = [], 0
    for size, n in spans:
        if n < 1:
            raise ValueError("group size must be >= 1")
        out.append((start, size, n))
        start += size
    if start != length:
        raise ValueError(f"spans cover {start} items, sequence has {length}")
    return out


def _scan(seq: Sequence[int], predictor: Predictor, spans: Spans | None) -> Iterator[tuple[int, int, int]]:
    """Yield ``(position, token, predicted)`` for every eligible (unbracketed) item.

    HIT tokens are restored from the guess so later contexts see real symbols.
    """
    for start, size, n in _pieces(len(seq), spans):
        ctx: list[int] = []
        verbatim = False
        chunk = 0
        for p in range(start, start + size):
            tok = seq[p]
            if tok == DELIM:
                verbatim = not verbatim
                chunk = 0
                continue
            if verbatim:
                if chunk % n == 0:
                    ctx.append(tok)
                chunk += 1
                continue
            guess = predictor.argmax(ctx)
            yield p, tok, guess
            ctx.append(guess if tok == HIT else tok)
        if verbatim:
            raise ValueError("unterminated verbatim run")


def predictable_items(seq: Sequence[int], predictor: Predictor, spans: Spans | None = None) -> list[int]:
    """Positions whose item equals the predictor's guess from the restored context."""
    return [p for p, tok, guess in _scan(seq, predictor, spans) if tok == guess]


# --------------------------------------------------------------------------
# Statistics and rules


@dataclass
class SymbolStats:
    """Symbol counts of a sequence plus predictable-item counts.

    ``counts`` covers every token (including ``HIT`` and ``DELIM``);
    ``predictable[s]`` is the number of not-yet-replaced predictable items
    of symbol ``s``.
    """

    counts: dict[int, int]
    predictable: dict[int, int]

    @classmethod
    def of(cls, seq: Sequence[int], positions: Iterable[int]) -> "SymbolStats":
        counts = Counter(seq)
        counts.setdefault(HIT, 0)
        return cls(dict(counts), dict(Counter(seq[p] for p in positions)))

    @property
    def n_hit(self) -> int:
        return self.counts.get(HIT, 0)

    @property
    def length(self) -> int:
        return sum(self.counts.values())

    def entropy(self) -> float:
        return entropy_from_counts(self.counts.values())

    def candidates(self) -> list[int]:
        return sorted(s for s, m in self.predictable.items() if m > 0)

    def apply(self, symbols: Iterable[int]) -> None:
        """Move every predictable item of ``symbols`` to HIT."""
        for s in symbols:
            m = self.predictable.get(s, 0)
            self.counts[s] -= m
            self.counts[HIT] = self.n_hit + m
            self.predictable[s] = 0


def entropy_delta(stats: SymbolStats, moves: Mapping[int, int]) -> float:
    """Entropy change (bits/symbol) from moving ``moves[s]`` items of ``s`` to HIT."""
    moved = 0
    changed: dict[int, int] = {}
    for s, k in moves.items():
        if k < 0 or k > stats.predictable.get(s, 0):
            raise ValueError(f"cannot move {k} items of symbol {s}")
        if k:
            changed[s] = stats.counts[s] - k
            moved += k
    if not moved:
        return 0.0
    changed[HIT] = stats.n_hit + moved
    n = stats.length
    before = sum(_xlog2x(stats.counts.get(s, 0)) for s in changed)
    after = sum(_xlog2x(c) for c in changed.values())
    return -(after - before) / n


def rule_accumulation(stats: SymbolStats) -> list[int]:
    """Symbols whose every item is predictable; replacing them removes the symbol.

    Folding a lone symbol into an empty HIT only renames it, so a single
    symbol qualifies only once HIT already holds items.
    """
    full = [s for s in stats.candidates() if stats.predictable[s] == stats.counts[s]]
    if len(full) == 1 and stats.n_hit == 0:
        return []
    return full


def concentrates(n_sym: int, m_sym: int, n_hit: int) -> bool:
    """Whether moving ``m_sym`` items of a symbol to HIT widens their count gap."""
    return abs((n_sym - m_sym) - (n_hit + m_sym)) > abs(n_sym - n_hit)


def rule_concentration(stats: SymbolStats) -> int | None:
    for s in sorted(stats.candidates(), key=lambda s: (-stats.predictable[s], s)):
        if concentrates(stats.counts[s], stats.predictable[s], stats.n_hit):
            return s
    return None


def rule_multiple(stats: SymbolStats, max_size: int = 5) -> tuple[int, ...] | None:
    """Smallest (then lexicographically first) symbol set whose joint replacement lowers entropy."""
    cands = stats.candidates()
    for size in range(2, min(max_size, len(cands)) + 1):
        for combo in combinations(cands, size):
            if entropy_delta(stats, {s: stats.predictable[s] for s in combo}) < -1e-12:
                return combo
    return None


# --------------------------------------------------------------------------
# Replace / restore


@dataclass(frozen=True)
class IntermediateSequence:
    items: tuple[int, ...]
    replaced_positions: tuple[int, ...]
    spans: tuple[tuple[int, int], ...] | None = None
    # entropy before replacement followed by the entropy after each rule firing
    entropy_trace: tuple[float, ...] = field(default=(), compare=False)
    # (rule name, symbols) per firing, aligned with entropy_trace[1:]
    steps: tuple[tuple[str, tuple[int, ...]], ...] = field(default=(), compare=False)


def replace(
    seq: Sequence[int],
    predictor: Predictor,
    spans: Spans | None = None,
    max_combination: int = 5,
) -> IntermediateSequence:
    """Replace predictable items with HIT so that the sequence entropy is minimal.

    Accumulation runs once; then concentration and multiple-symbol firings
    alternate, concentration first, until neither applies.  Every firing is
    checked to strictly lower the entropy.
    """
    seq = list(seq)
    positions = predictable_items(seq, predictor, spans)
    stats = SymbolStats.of(seq, positions)
    trace = [stats.entropy()] if seq else []
    steps: list[tuple[str, tuple[int, ...]]] = []
    chosen: set[int] = set()

    def fire(rule: str, symbols: Sequence[int]) -> None:
        stats.apply(symbols)
        chosen.update(symbols)
        h = stats.entropy()
        if not h < trace[-1]:
            raise AssertionError(f"{rule} rule on {symbols} did not lower the entropy")
        trace.append(h)
        steps.append((rule, tuple(symbols)))

    acc = rule_accumulation(stats)
    if acc:
        fire("accumulation", acc)
    while True:
        s = rule_concentration(stats)
        if s is not None:
            fire("concentration", [s])
            continue
        combo = rule_multiple(stats, max_combination)
        if combo is None:
            break
        fire("multiple", combo)

    replaced = tuple(p for p in positions if seq[p] in chosen)
    for p in replaced:
        seq[p] = HIT
    return IntermediateSequence(
        tuple(seq), replaced, None if spans is None else tuple(spans), tuple(trace), tuple(steps)
    )


def replace_all(seq: Sequence[int], predictor: Predictor, spans: Spans | None = None) -> list[int]:
    """The naive policy: every predictable item becomes HIT."""
    out = list(seq)
    for p in predictable_items(seq, predictor, spans):
        out[p] = HIT
    return out


def restore(seq, predictor: Predictor, spans: Spans | None = None) -> list[int]:
    """Substitute each HIT with the predictor's guess from the restored prefix."""
    if isinstance(seq, IntermediateSequence):
        spans = seq.spans if spans is None else spans
        seq = seq.items
    out = list(seq)
    for p, tok, guess in _scan(seq, predictor, spans):
        if tok == HIT:
            out[p] = guess
    return out


def hir_bruteforce(
    seq: Sequence[int], predictor: Predictor, spans: Spans | None = None, limit: int = 20
) -> float:
    """Minimum entropy over every intermediate sequence, by count enumeration."""
    positions = predictable_items(seq, predictor, spans)
    if len(positions) > limit:
        raise InstanceTooLarge(f"{len(positions)} predictable items exceed the limit of {limit}")
    stats = SymbolStats.of(list(seq), positions)
    return hir_optimum(stats)


def hir_optimum(stats: SymbolStats) -> float:
    """Enumerate every ``0 <= k_s <= m_s`` and return the least entropy."""
    cands = stats.candidates()
    n = stats.length
    if not cands:
        return stats.entropy()
    fixed = sum(_xlog2x(c) for s, c in stats.counts.items() if s not in cands and s != HIT)
    grids = np.meshgrid(*[np.arange(stats.predictable[s] + 1) for s in cands], indexing="ij")
    ks = np.stack([g.ravel() for g in grids], axis=1).astype(float)
    base = np.array([stats.counts[s] for s in cands], dtype=float)
    left = base[None, :] - ks
    hit = stats.n_hit + ks.sum(axis=1)

    def xlogx(a):
        return np.where(a > 0, a * np.log2(np.where(a > 0, a, 1.0)), 0.0)

    total = fixed + xlogx(left).sum(axis=1) + xlogx(hit)
    h = math.log2(n) - total / n
    return float(max(h.min(), 0.0))
