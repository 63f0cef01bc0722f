"""Independent brute-force reference implementations used as test oracles.

None of these import the code they check, except the tokenizer, which is
specified and tested on its own.
"""

from __future__ import annotations

import math


def collapse_ws(text: str) -> str:
    out = []
    in_ws = False
    for ch in text:
        if ch.isspace():
            if not in_ws:
                out.append(" ")
            in_ws = True
        else:
            out.append(ch)
            in_ws = False
    return "".join(out)


def _matched(a: list[str], b: list[str]) -> int:
    # merge of two sorted lists counts min(count_a, count_b) per gram
    a, b = sorted(a), sorted(b)
    i = j = m = 0
    while i < len(a) and j < len(b):
        if a[i] == b[j]:
            m += 1
            i += 1
            j += 1
        elif a[i] < b[j]:
            i += 1
        else:
            j += 1
    return m


def chrf_oracle(hyp: str, ref: str, max_order: int = 6, collapse: bool = True) -> float:
    if collapse:
        hyp, ref = collapse_ws(hyp), collapse_ws(ref)
    if hyp == "" and ref == "":
        return 1.0
    if hyp == "" or ref == "":
        return 0.0
    ps, rs = [], []
    for n in range(1, max_order + 1):
        hg = [hyp[i : i + n] for i in range(len(hyp) - n + 1)]
        rg = [ref[i : i + n] for i in range(len(ref) - n + 1)]
        if not hg and not rg:
            continue
        m = _matched(hg, rg)
        ps.append(m / len(hg) if hg else 0.0)
        rs.append(m / len(rg) if rg else 0.0)
    p = sum(ps) / len(ps)
    r = sum(rs) / len(rs)
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def bm25_oracle(docs, query_tokens, tokenize, k, k1=1.2, b=0.75):
    """Textbook BM25 by direct summation over the distinct query terms."""
    toks = {doc_id: tokenize(text) for doc_id, text in docs}
    n = len(docs)
    if n == 0:
        return []
    avg = sum(len(t) for t in toks.values()) / n
    if avg == 0:
        return []
    terms = []
    for t in query_tokens:
        if t not in terms:
            terms.append(t)
    out = []
    for doc_id, dt in toks.items():
        s = 0.0
        for t in terms:
            tf = dt.count(t)
            if tf == 0:
                continue
            n_t = sum(1 for other in toks.values() if t in other)
            idf = max(0.0, math.log(1 + (n - n_t + 0.5) / (n_t + 0.5)))
            s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len(dt) / avg))
        if s > 0:
            out.append((doc_id, s))
    out.sort(key=lambda p: (-p[1], p[0]))
    return out[:k]


def _word(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def trigram_oracle(docs, clauses, k):
    """Substring scan over every document; docs are (doc_id, text, filename)."""
    literals = []
    for clause in clauses:
        for lit in clause:
            if lit not in literals:
                literals.append(lit)
    out = []
    for doc_id, text, filename in docs:
        if not all(any(lit in text for lit in clause) for clause in clauses):
            continue
        score = 0.0
        for lit in literals:
            starts = [i for i in range(len(text) - len(lit) + 1) if text[i : i + len(lit)] == lit]
            if not starts:
                continue
            score += len(starts)
            if any(
                (i == 0 or not _word(text[i - 1])) and (i + len(lit) == len(text) or not _word(text[i + len(lit)]))
                for i in starts
            ):
                score += 2.0
            if lit in filename:
                score += 5.0
        out.append((doc_id, score))
    out.sort(key=lambda p: (-p[1], p[0]))
    return out[:k]


def fnv1a64(data: bytes) -> int:
    h = 14695981039346656037
    for byte in data:
        h = ((h ^ byte) * 1099511628211) % (2**64)
    return h


def hashed_vector(text: str, dim: int) -> list[float]:
    vec = [0.0] * dim
    for n in (3, 4, 5):
        for i in range(len(text) - n + 1):
            h = fnv1a64(text[i : i + n].encode("utf-8", "surrogatepass"))
            vec[(h >> 1) % dim] += -1.0 if h % 2 else 1.0
    norm = math.sqrt(sum(v * v for v in vec))
    return [v / norm for v in vec] if norm else vec


def dense_oracle(docs, query, k, dim):
    q = hashed_vector(query, dim)
    if not any(q):
        return []
    out = []
    for doc_id, text in docs:
        v = hashed_vector(text, dim)
        if any(v):
            out.append((doc_id, sum(a * b for a, b in zip(q, v))))
    # scores equal to 12 decimals count as ties
    out.sort(key=lambda p: (-round(p[1], 12), p[0]))
    return out[:k]


def rrf_oracle(rankings, k_const=60.0):
    scores = {}
    for ranking in rankings:
        for pos, doc_id in enumerate(ranking):
            scores[doc_id] = scores.get(doc_id, 0.0) + 1.0 / (k_const + pos + 1)
    return sorted(scores.items(), key=lambda p: (-p[1], p[0]))
