"""Brute-force reference implementations, deliberately naive.

Nothing here imports from ``cag`` so the checks stay independent of the
code under test.
"""

from __future__ import annotations

from itertools import combinations


def multiset_overlap(a: list, b: list) -> int:
    remaining = list(b)
    hits = 0
    for item in a:
        if item in remaining:
            remaining.remove(item)
            hits += 1
    return hits


def prf(overlap: int, cand_total: int, ref_total: int) -> tuple[float, float, float]:
    p = overlap / cand_total if cand_total else 0.0
    r = overlap / ref_total if ref_total else 0.0
    f = 2 * p * r / (p + r) if p + r else 0.0
    return p, r, f


def ngrams(tokens: list, n: int) -> list:
    return [tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1)]


def rouge_n(cand: list, ref: list, n: int):
    c, r = ngrams(cand, n), ngrams(ref, n)
    return prf(multiset_overlap(c, r), len(c), len(r))


def lcs_table(a: list, b: list) -> int:
    t = [[0] * (len(b) + 1) for _ in range(len(a) + 1)]
    for i in range(1, len(a) + 1):
        for j in range(1, len(b) + 1):
            if a[i - 1] == b[j - 1]:
                t[i][j] = t[i - 1][j - 1] + 1
            else:
                t[i][j] = max(t[i - 1][j], t[i][j - 1])
    return t[-1][-1]


def rouge_l(cand: list, ref: list):
    return prf(lcs_table(cand, ref), len(cand), len(ref))


def skip_bigrams(tokens: list) -> list:
    return [(tokens[i], tokens[j]) for i, j in combinations(range(len(tokens)), 2)]


def rouge_s(cand: list, ref: list):
    c, r = skip_bigrams(cand), skip_bigrams(ref)
    return prf(multiset_overlap(c, r), len(c), len(r))


def fallback_windows(text: str, size: int, overlap: int) -> list[str]:
    """Expected chunks when only the empty separator applies."""
    if not text:
        return []
    stride = size - overlap
    out = [text[0:size]]
    i = 1
    while (i - 1) * stride + size < len(text):
        out.append(text[i * stride:i * stride + size])
        i += 1
    return out
