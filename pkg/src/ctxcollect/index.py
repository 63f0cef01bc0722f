"""Sparse, substring and dense indices over documents, plus rank fusion.

Every ranking breaks score ties by ascending ``doc_id``. Indices are never
mutated by queries, so one index can serve concurrent readers.
"""

from __future__ import annotations

import base64
import hashlib
import heapq
import json
import math
import re
import struct
from array import array
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from ctxcollect._backend import bm25_accumulate, hashed_ngram_vector

SOURCES = ("bm25", "trigram", "dense", "fused", "heuristic")

BOUNDARY_BONUS = 2.0
FILENAME_BONUS = 5.0
DENSE_DIM = 1024
DENSE_TIE_DECIMALS = 12
RRF_K = 60.0


@dataclass(frozen=True)
class ScoredCandidate:
    doc_id: str
    score: float
    source: str


def _rank(pairs: Iterable[tuple[str, float]], k: int | None, source: str) -> list[ScoredCandidate]:
    key = lambda p: (-p[1], p[0])
    ordered = sorted(pairs, key=key) if k is None else heapq.nsmallest(k, pairs, key=key)
    return [ScoredCandidate(doc_id, score, source) for doc_id, score in ordered]


# ---------------------------------------------------------------------------
# Tokenization
# ---------------------------------------------------------------------------

_RUN = re.compile(r"\w+")
_SUBTOKEN = re.compile(r"[A-Z]+(?=[A-Z][a-z])|[A-Z]?[a-z]+|[A-Z]+|\d+")


def tokenize_code(text: str) -> list[str]:
    """Lowercased identifier and number runs, each followed by its subtokens.

    >>> tokenize_code("get_user_id(x)")
    ['get_user_id', 'get', 'user', 'id', 'x']
    """
    tokens = []
    for m in _RUN.finditer(text):
        run = m.group(0)
        full = run.lower()
        tokens.append(full)
        parts = [
            p.lower() for piece in run.split("_") if piece for p in (_SUBTOKEN.findall(piece) if piece.isascii() else [piece])
        ]
        if parts != [full]:
            tokens.extend(parts)
    return tokens


# ---------------------------------------------------------------------------
# BM25
# ---------------------------------------------------------------------------


@dataclass
class Bm25Index:
    docs: list[str]
    postings: dict[str, list[tuple[int, int]]]
    doc_len: list[int]
    avg_len: float
    k1: float = 1.2
    b: float = 0.75
    _arrays: dict[str, tuple[array, array]] = field(default_factory=dict, repr=False, compare=False)
    _doc_len_arr: array = field(default_factory=lambda: array("d"), repr=False, compare=False)

    def idf(self, term: str) -> float:
        n_t = len(self.postings.get(term, ()))
        n = len(self.docs)
        return max(0.0, math.log(1.0 + (n - n_t + 0.5) / (n_t + 0.5)))


def bm25_build(docs: Iterable[tuple[str, str]], k1: float = 1.2, b: float = 0.75) -> Bm25Index:
    ids: list[str] = []
    lengths: list[int] = []
    postings: dict[str, list[tuple[int, int]]] = {}
    for idx, (doc_id, text) in enumerate(docs):
        tokens = tokenize_code(text)
        ids.append(doc_id)
        lengths.append(len(tokens))
        counts: dict[str, int] = {}
        for tok in tokens:
            counts[tok] = counts.get(tok, 0) + 1
        for tok, tf in counts.items():
            postings.setdefault(tok, []).append((idx, tf))
    avg = sum(lengths) / len(lengths) if lengths else 0.0
    index = Bm25Index(ids, postings, lengths, avg, k1, b)
    index._arrays = {
        term: (array("q", (d for d, _ in plist)), array("d", (float(tf) for _, tf in plist)))
        for term, plist in postings.items()
    }
    index._doc_len_arr = array("d", (float(n) for n in lengths))
    return index


def bm25_scores(index: Bm25Index, query: str) -> array:
    scores = array("d", bytes(8 * len(index.docs)))
    if not index.docs or index.avg_len == 0:
        return scores
    for term in dict.fromkeys(tokenize_code(query)):
        arrays = index._arrays.get(term)
        if arrays is None:
            continue
        idf = index.idf(term)
        if idf > 0:
            bm25_accumulate(scores, arrays[0], arrays[1], index._doc_len_arr, idf, index.k1, index.b, index.avg_len)
    return scores


def bm25_top_k(index: Bm25Index, query: str, k: int) -> list[ScoredCandidate]:
    """Top ``k`` documents by BM25 over the distinct query terms; zero scores dropped."""
    if k < 1:
        raise ValueError("k must be >= 1")
    scores = bm25_scores(index, query)
    return _rank(((index.docs[i], s) for i, s in enumerate(scores) if s > 0), k, "bm25")


# ---------------------------------------------------------------------------
# Trigram substring search
# ---------------------------------------------------------------------------


@dataclass
class TrigramIndex:
    docs: list[str]
    texts: list[str]
    filenames: dict[int, str]
    # gram -> {doc index: ascending offsets}, doc indices inserted in ascending order
    grams: dict[str, dict[int, list[int]]]


def trigram_build(docs: Iterable[Sequence[str]]) -> TrigramIndex:
    """Index ``(doc_id, text)`` or ``(doc_id, text, filename)`` tuples."""
    ids: list[str] = []
    texts: list[str] = []
    filenames: dict[int, str] = {}
    grams: dict[str, dict[int, list[int]]] = {}
    for idx, item in enumerate(docs):
        doc_id, text = item[0], item[1]
        ids.append(doc_id)
        texts.append(text)
        filenames[idx] = item[2] if len(item) > 2 else doc_id
        for off in range(len(text) - 2):
            grams.setdefault(text[off : off + 3], {}).setdefault(idx, []).append(off)
    return TrigramIndex(ids, texts, filenames, grams)


def _is_word(ch: str) -> bool:
    return ch.isalnum() or ch == "_"


def _scan(text: str, literal: str) -> list[int]:
    positions = []
    pos = text.find(literal)
    while pos >= 0:
        positions.append(pos)
        pos = text.find(literal, pos + 1)
    return positions


def find_literal(index: TrigramIndex, literal: str) -> dict[int, list[int]]:
    """All occurrence offsets of ``literal`` per document (overlapping matches count)."""
    if not literal:
        return {}
    if len(literal) < 3:
        hits = {}
        for idx, text in enumerate(index.texts):
            positions = _scan(text, literal)
            if positions:
                hits[idx] = positions
        return hits
    pieces = [(j, literal[j : j + 3]) for j in range(len(literal) - 2)]
    postings = []
    for j, gram in pieces:
        plist = index.grams.get(gram)
        if not plist:
            return {}
        postings.append((len(plist), j, plist))
    postings.sort(key=lambda p: (p[0], p[1]))
    _, anchor_shift, anchor = postings[0]
    hits = {}
    for idx, offsets in anchor.items():
        if any(idx not in plist for _, _, plist in postings[1:]):
            continue
        text = index.texts[idx]
        positions = [off - anchor_shift for off in offsets if off >= anchor_shift and text.startswith(literal, off - anchor_shift)]
        if positions:
            hits[idx] = positions
    return hits


def _literal_score(text: str, filename: str, literal: str, positions: list[int]) -> float:
    score = float(len(positions))
    end = len(literal)
    for p in positions:
        if (p == 0 or not _is_word(text[p - 1])) and (p + end == len(text) or not _is_word(text[p + end])):
            score += BOUNDARY_BONUS
            break
    if literal in filename:
        score += FILENAME_BONUS
    return score


def trigram_search(index: TrigramIndex, clauses: Sequence[Sequence[str]], k: int) -> list[ScoredCandidate]:
    """Documents where every clause has at least one literal as a substring.

    Each distinct matched literal contributes its occurrence count, a bonus if
    some occurrence sits on word boundaries, and a bonus if the literal also
    appears in the document's filename.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not clauses or any(not clause for clause in clauses):
        raise ValueError("clauses must be non-empty lists of literals")
    literals = list(dict.fromkeys(lit for clause in clauses for lit in clause))
    hits = {lit: find_literal(index, lit) for lit in literals}
    matching: set[int] | None = None
    for clause in clauses:
        docs = set().union(*(hits[lit].keys() for lit in clause))
        matching = docs if matching is None else matching & docs
        if not matching:
            return []
    pairs = []
    for idx in matching:
        text = index.texts[idx]
        filename = index.filenames[idx]
        score = sum(_literal_score(text, filename, lit, hits[lit][idx]) for lit in literals if idx in hits[lit])
        pairs.append((index.docs[idx], score))
    return _rank(pairs, k, "trigram")


# ---------------------------------------------------------------------------
# Hashed character n-gram vectors
# ---------------------------------------------------------------------------


def embed_hashed(text: str, dim: int = DENSE_DIM) -> np.ndarray:
    """L2-normalized signed hash of character 3- to 5-gram counts (FNV-1a 64)."""
    if dim < 16:
        raise ValueError("dim must be >= 16")
    vec = np.asarray(hashed_ngram_vector(text, dim, 3, 5), dtype=np.float64)
    norm = float(np.sqrt(vec @ vec))
    if norm == 0.0:
        return vec
    return vec / norm


@dataclass
class HashedVectorIndex:
    dim: int
    docs: list[str]
    vectors: dict[int, np.ndarray]
    embed: Callable[[str, int], np.ndarray] = field(default=embed_hashed, repr=False, compare=False)
    _rows: list[int] = field(default_factory=list, repr=False, compare=False)
    _matrix: np.ndarray | None = field(default=None, repr=False, compare=False)


def dense_build(
    docs: Iterable[tuple[str, str]], dim: int = DENSE_DIM, embed: Callable[[str, int], np.ndarray] = embed_hashed
) -> HashedVectorIndex:
    """Embed every document; ``embed`` may be any provider returning unit vectors."""
    ids: list[str] = []
    vectors: dict[int, np.ndarray] = {}
    for idx, (doc_id, text) in enumerate(docs):
        ids.append(doc_id)
        vec = embed(text, dim)
        if np.any(vec):
            vectors[idx] = vec
    index = HashedVectorIndex(dim, ids, vectors, embed)
    index._rows = list(vectors)
    index._matrix = np.vstack([vectors[i] for i in index._rows]) if vectors else np.zeros((0, dim))
    return index


def dense_top_k(index: HashedVectorIndex, query: str, k: int) -> list[ScoredCandidate]:
    if k < 1:
        raise ValueError("k must be >= 1")
    q = index.embed(query, index.dim)
    if not np.any(q) or index._matrix is None or not index._rows:
        return []
    sims = index._matrix @ q
    # cosines equal to 12 decimals are ties (float noise would otherwise order them)
    return _rank(((index.docs[row], round(float(s), DENSE_TIE_DECIMALS)) for row, s in zip(index._rows, sims)), k, "dense")


# ---------------------------------------------------------------------------
# Fusion
# ---------------------------------------------------------------------------


def rrf_fuse(rankings: Sequence[Sequence[str]], k_const: float = RRF_K) -> list[ScoredCandidate]:
    """Reciprocal-rank fusion: sum of ``1 / (k_const + rank)`` with 1-based ranks."""
    scores: dict[str, float] = {}
    for ranking in rankings:
        if len(set(ranking)) != len(ranking):
            raise ValueError("rankings must not contain duplicate doc ids")
        for rank, doc_id in enumerate(ranking, start=1):
            scores[doc_id] = scores.get(doc_id, 0.0) + 1.0 / (k_const + rank)
    return _rank(scores.items(), None, "fused")


# ---------------------------------------------------------------------------
# Cache files
# ---------------------------------------------------------------------------

CACHE_MAGIC = b"CTXIDX\x00"
CACHE_VERSION = 2
_HEADER = struct.Struct("<7sH32s")


def corpus_hash(docs: Iterable[Sequence[str]]) -> bytes:
    digest = hashlib.sha256()
    for item in docs:
        for part in item:
            data = part.encode("utf-8", "surrogatepass")
            digest.update(struct.pack("<Q", len(data)))
            digest.update(data)
    return digest.digest()


def serialize_index(index) -> bytes:
    """Deterministic JSON byte form of an index (the pluggable embed function is not stored)."""
    if isinstance(index, Bm25Index):
        state = {
            "kind": "bm25",
            "docs": index.docs,
            "postings": {t: [[d, tf] for d, tf in pl] for t, pl in index.postings.items()},
            "doc_len": index.doc_len,
            "avg_len": index.avg_len,
            "k1": index.k1,
            "b": index.b,
        }
    elif isinstance(index, TrigramIndex):
        state = {
            "kind": "trigram",
            "docs": index.docs,
            "texts": index.texts,
            "filenames": [[i, name] for i, name in index.filenames.items()],
            "grams": {g: [[d, offs] for d, offs in pl.items()] for g, pl in index.grams.items()},
        }
    elif isinstance(index, HashedVectorIndex):
        rows = sorted(index.vectors)
        state = {
            "kind": "dense",
            "dim": index.dim,
            "docs": index.docs,
            "rows": rows,
            "vectors": [base64.b64encode(index.vectors[r].astype("<f8").tobytes()).decode("ascii") for r in rows],
        }
    else:
        raise TypeError(f"cannot serialize {type(index).__name__}")
    return json.dumps(state, ensure_ascii=False, separators=(",", ":")).encode("utf-8")


def deserialize_index(payload: bytes):
    state = json.loads(payload.decode("utf-8"))
    kind = state.get("kind")
    if kind == "bm25":
        postings = {t: [(int(d), int(tf)) for d, tf in pl] for t, pl in state["postings"].items()}
        index = Bm25Index(state["docs"], postings, state["doc_len"], state["avg_len"], state["k1"], state["b"])
        index._arrays = {
            t: (array("q", (d for d, _ in pl)), array("d", (float(tf) for _, tf in pl))) for t, pl in postings.items()
        }
        index._doc_len_arr = array("d", (float(n) for n in index.doc_len))
        return index
    if kind == "trigram":
        filenames = {int(i): name for i, name in state["filenames"]}
        grams = {g: {int(d): offs for d, offs in pl} for g, pl in state["grams"].items()}
        return TrigramIndex(state["docs"], state["texts"], filenames, grams)
    if kind == "dense":
        dim, rows = state["dim"], state["rows"]
        vectors = {r: np.frombuffer(base64.b64decode(blob), dtype="<f8").astype(np.float64) for r, blob in zip(rows, state["vectors"])}
        index = HashedVectorIndex(dim, state["docs"], vectors)
        index._rows = list(rows)
        index._matrix = np.vstack([vectors[r] for r in rows]) if rows else np.zeros((0, dim))
        return index
    raise ValueError(f"unknown index kind {kind!r}")


def save_index(index, path: str | Path, digest: bytes) -> None:
    payload = serialize_index(index)
    Path(path).write_bytes(_HEADER.pack(CACHE_MAGIC, CACHE_VERSION, digest) + payload)


def load_index(path: str | Path, digest: bytes):
    """Return the cached index, or ``None`` if missing, stale, or from another version."""
    path = Path(path)
    if not path.is_file():
        return None
    blob = path.read_bytes()
    if len(blob) < _HEADER.size:
        return None
    magic, version, stored = _HEADER.unpack_from(blob)
    if magic != CACHE_MAGIC or version != CACHE_VERSION or stored != digest:
        return None
    try:
        return deserialize_index(blob[_HEADER.size :])
    except (ValueError, KeyError, TypeError):
        return None  # corrupt payload: rebuild


def cached_build(kind: str, docs: list[tuple[str, str]], cache_dir: str | Path | None, **kwargs):
    """Build an index of ``kind`` (bm25, trigram, dense), reusing a cache file when valid."""
    builders = {"bm25": bm25_build, "trigram": trigram_build, "dense": dense_build}
    build = builders[kind]
    if cache_dir is None or "embed" in kwargs:
        return build(docs, **kwargs)
    digest = corpus_hash([(kind, repr(sorted(kwargs.items())))] + [tuple(d) for d in docs])
    path = Path(cache_dir) / f"{kind}-{digest.hex()[:24]}.idx"
    index = load_index(path, digest)
    if index is None:
        index = build(docs, **kwargs)
        path.parent.mkdir(parents=True, exist_ok=True)
        save_index(index, path, digest)
    return index
