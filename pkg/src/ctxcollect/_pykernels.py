"""Pure-Python reference kernels.

These are the fallback for :mod:`ctxcollect._ckernels` and define its exact
semantics; the compiled module must return identical values.
"""

from __future__ import annotations

from collections import Counter

FNV_OFFSET = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
_MASK64 = (1 << 64) - 1


def ngram_match_stats(hyp: str, ref: str, max_order: int) -> list[tuple[int, int, int]]:
    """Per-order ``(hyp_total, ref_total, clipped_matches)`` for orders 1..max_order."""
    stats = []
    for n in range(1, max_order + 1):
        h = Counter(hyp[i : i + n] for i in range(len(hyp) - n + 1))
        r = Counter(ref[i : i + n] for i in range(len(ref) - n + 1))
        small, large = (h, r) if len(h) <= len(r) else (r, h)
        matched = sum(min(c, large[g]) for g, c in small.items())
        stats.append((max(len(hyp) - n + 1, 0), max(len(ref) - n + 1, 0), matched))
    return stats


def bm25_accumulate(scores, docs, tfs, doc_len, idf: float, k1: float, b: float, avg_len: float) -> None:
    """Add one term's BM25 contribution for every posting into ``scores`` in place."""
    for j in range(len(docs)):
        d = docs[j]
        tf = tfs[j]
        scores[d] += idf * (tf * (k1 + 1.0)) / (tf + k1 * (1.0 - b + b * doc_len[d] / avg_len))


def fnv1a64(data: bytes) -> int:
    h = FNV_OFFSET
    for byte in data:
        h ^= byte
        h = (h * FNV_PRIME) & _MASK64
    return h


def hashed_ngram_vector(text: str, dim: int, min_n: int, max_n: int) -> list[float]:
    """Signed feature-hashed counts of character n-grams, lengths min_n..max_n."""
    vec = [0.0] * dim
    encoded = [c.encode("utf-8", "surrogatepass") for c in text]
    length = len(text)
    for n in range(min_n, max_n + 1):
        for i in range(length - n + 1):
            h = fnv1a64(b"".join(encoded[i : i + n]))
            bucket = (h >> 1) % dim
            if h & 1:
                vec[bucket] -= 1.0
            else:
                vec[bucket] += 1.0
    return vec
