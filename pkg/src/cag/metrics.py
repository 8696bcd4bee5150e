"""ROUGE-N, ROUGE-L, ROUGE-S and compression ratio.

Texts are lowercased and split on runs of non-alphanumeric characters.
No stemming, no stop-word removal, single reference. ROUGE-S counts every
ordered token pair with unlimited gap.

LCS uses a bit-parallel recurrence and skip-bigram overlap uses blocked
numpy counting, so scoring a full document against its summary stays
practical well past 10^5 tokens.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass

import numpy as np

from cag.errors import InvalidArg

_TOKEN_RE = re.compile(r"[^\W_]+")


@dataclass(frozen=True)
class RougeScore:
    precision: float
    recall: float
    f1: float

    @classmethod
    def from_counts(cls, overlap: int, candidate_total: int, reference_total: int) -> "RougeScore":
        p = overlap / candidate_total if candidate_total else 0.0
        r = overlap / reference_total if reference_total else 0.0
        f = 2 * p * r / (p + r) if p + r > 0 else 0.0
        return cls(p, r, f)

    def as_dict(self) -> dict[str, float]:
        return {"precision": self.precision, "recall": self.recall, "f1": self.f1}


@dataclass(frozen=True)
class RougeScores:
    rouge_n: RougeScore
    rouge_l: RougeScore
    rouge_s: RougeScore
    n: int = 2
    rouge_1: RougeScore | None = None

    def as_dict(self) -> dict:
        out = {
            "rouge_n": {"n": self.n, **self.rouge_n.as_dict()},
            "rouge_l": self.rouge_l.as_dict(),
            "rouge_s": self.rouge_s.as_dict(),
        }
        if self.rouge_1 is not None:
            out["rouge_1"] = self.rouge_1.as_dict()
        return out


ZERO = RougeScore(0.0, 0.0, 0.0)


def tokenize_for_rouge(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


def _tokens(x: str | list[str]) -> list[str]:
    return tokenize_for_rouge(x) if isinstance(x, str) else list(x)


def _ngrams(tokens: list[str], n: int) -> Counter:
    return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))


def rouge_n(candidate: str | list[str], reference: str | list[str], n: int = 2) -> RougeScore:
    """Clipped n-gram overlap. Accepts raw text or pre-tokenized lists."""
    if not isinstance(n, int) or n < 1:
        raise InvalidArg(f"n must be a positive integer, got {n!r}")
    cand = _ngrams(_tokens(candidate), n)
    ref = _ngrams(_tokens(reference), n)
    overlap = sum((cand & ref).values())
    return RougeScore.from_counts(overlap, sum(cand.values()), sum(ref.values()))


def lcs_length(a: list, b: list) -> int:
    """Length of the longest common subsequence.

    Bit-parallel (Allison-Dix): one big-int update per element of ``b``.
    """
    if len(a) < len(b):
        a, b = b, a
    if not b:
        return 0
    masks: dict = {}
    for i, tok in enumerate(a):
        masks[tok] = masks.get(tok, 0) | (1 << i)
    full = (1 << len(a)) - 1
    row = 0
    for tok in b:
        m = masks.get(tok, 0)
        x = m | row
        row = x & ((x - ((row << 1) | 1)) ^ x) & full
    return row.bit_count()


def rouge_l(candidate: str | list[str], reference: str | list[str]) -> RougeScore:
    cand, ref = _tokens(candidate), _tokens(reference)
    return RougeScore.from_counts(lcs_length(cand, ref), len(cand), len(ref))


def _pairs(n: int) -> int:
    return n * (n - 1) // 2


# cap on block working-set entries, keeps memory around a few hundred MB at worst
_BLOCK_ENTRIES = 1 << 22


def _skip_bigram_block(ids: np.ndarray, vocab: int, lo: int, hi: int) -> np.ndarray:
    """Counts[a - lo, b] = #{i < j : ids[i] == a, ids[j] == b} for a in [lo, hi)."""
    width = hi - lo
    counts = np.zeros((vocab, width), dtype=np.int64)  # indexed [b, a - lo]
    prefix = np.zeros(width, dtype=np.int64)
    step = max(1, _BLOCK_ENTRIES // max(width, 1))
    for start in range(0, len(ids), step):
        blk = ids[start:start + step]
        hit = np.zeros((len(blk), width), dtype=np.int64)
        inside = (blk >= lo) & (blk < hi)
        hit[np.nonzero(inside)[0], blk[inside] - lo] = 1
        before = prefix + np.cumsum(hit, axis=0) - hit
        np.add.at(counts, blk, before)
        prefix += hit.sum(axis=0)
    return counts.T


def _skip_bigram_overlap(cand: list[str], ref: list[str]) -> int:
    shared = sorted(set(cand) & set(ref))
    if not shared:
        return 0
    index = {tok: i for i, tok in enumerate(shared)}
    c_ids = np.fromiter((index[t] for t in cand if t in index), dtype=np.int64)
    r_ids = np.fromiter((index[t] for t in ref if t in index), dtype=np.int64)
    vocab = len(shared)
    rows = max(1, _BLOCK_ENTRIES // vocab)
    total = 0
    for lo in range(0, vocab, rows):
        hi = min(vocab, lo + rows)
        total += int(np.minimum(
            _skip_bigram_block(c_ids, vocab, lo, hi),
            _skip_bigram_block(r_ids, vocab, lo, hi),
        ).sum())
    return total


def rouge_s(candidate: str | list[str], reference: str | list[str]) -> RougeScore:
    cand, ref = _tokens(candidate), _tokens(reference)
    overlap = _skip_bigram_overlap(cand, ref) if len(cand) > 1 and len(ref) > 1 else 0
    return RougeScore.from_counts(overlap, _pairs(len(cand)), _pairs(len(ref)))


def rouge_all(candidate: str, reference: str, n: int = 2) -> RougeScores:
    cand, ref = tokenize_for_rouge(candidate), tokenize_for_rouge(reference)
    return RougeScores(
        rouge_n=rouge_n(cand, ref, n),
        rouge_l=rouge_l(cand, ref),
        rouge_s=rouge_s(cand, ref),
        n=n,
        rouge_1=rouge_n(cand, ref, 1) if n != 1 else None,
    )


def compression_ratio(original_chars: int, output_chars: int) -> float:
    """``1 - output/original``; negative when the output grew."""
    if original_chars <= 0:
        raise InvalidArg("original_chars must be positive")
    if output_chars < 0:
        raise InvalidArg("output_chars must be non-negative")
    return 1 - output_chars / original_chars
