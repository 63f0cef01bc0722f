"""Context-collection strategies and budgeted context assembly.

A strategy turns a completion point and its snapshot into an ordered list of
snippets; :func:`assemble` serializes them as ``<|file_sep|>path\\ntext\\n``
blocks under a budget of approximate tokens (one unit per four characters).
"""

from __future__ import annotations

import dataclasses
import hashlib
import json
import math
import random
import re
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path, PurePosixPath
from typing import Callable, Iterable, Mapping, Sequence

from ctxcollect.chunk import Chunk, adjacent_chunk, block_chunks, char_window_chunks, line_window_chunks
from ctxcollect.dataset import CompletionPoint, Dataset, RepoSnapshot
from ctxcollect.index import bm25_top_k, cached_build, dense_top_k, rrf_fuse, trigram_search
from ctxcollect.parse import extract_definitions, extract_referenced_symbols, enclosing_blocks, imported_files
from ctxcollect.textutil import head_lines, language_for_path, split_lines, tail_lines, units

SEPARATOR = "<|file_sep|>"
# separator text occurring inside a snippet is rewritten so block counts stay exact
SEPARATOR_ESCAPE = "<|file_sep​|>"
SOURCE_SUFFIXES = (".py", ".pyi", ".kt", ".kts")
QUERY_MODES = ("tail", "full_file", "around", "chunks")


@dataclass(frozen=True)
class Snippet:
    file_path: str
    text: str
    score: float = 0.0
    provenance: str = ""

    def __post_init__(self):
        if not self.text:
            raise ValueError("snippet text must be non-empty")


@dataclass(frozen=True)
class ContextDocument:
    snippets: tuple[Snippet, ...]
    rendered: str
    budget_units_used: int


@dataclass
class CollectorConfig:
    strategy: str = "empty"
    budget_units: int = 8000
    top_k: int = 10
    rng_seed: int = 0
    weights: dict[str, float] = field(default_factory=lambda: {"samefile": 0.0, "pathdist": 0.0, "refs": 0.0})
    rerank: bool = False
    prefix_query_lines: int = 50
    suffix_query_lines: int = 10
    around_lines: int = 40
    query_mode: str = "tail"
    symbol_limit: int = 8
    clause_size: int = 4
    import_line_cap: int = 200
    chunking: str = "line"  # line | char
    line_window: int = 30
    line_stride: int = 15
    char_size: int = 2000
    char_overlap: int = 500
    retriever_k: int = 10
    rrf_k: float = 60.0
    dense_dim: int = 1024
    cache_dir: str | None = None

    def __post_init__(self):
        if self.strategy not in SNIPPET_STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; choose from {', '.join(SNIPPET_STRATEGIES)}")
        if self.budget_units < 0:
            raise ValueError("budget_units must be >= 0")
        if self.top_k < 1 or self.retriever_k < 1:
            raise ValueError("top_k and retriever_k must be >= 1")
        if self.query_mode not in QUERY_MODES:
            raise ValueError(f"query_mode must be one of {QUERY_MODES}")
        if self.chunking not in ("line", "char"):
            raise ValueError("chunking must be 'line' or 'char'")

    @classmethod
    def from_mapping(cls, data: Mapping) -> CollectorConfig:
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ValueError(f"unknown collector option(s): {', '.join(unknown)}")
        values = dict(data)
        if "weights" in values:
            weights = cls().weights
            weights.update({k: float(v) for k, v in values["weights"].items()})
            values["weights"] = weights
        return cls(**values)

    def to_mapping(self) -> dict:
        return dataclasses.asdict(self)


# ---------------------------------------------------------------------------
# Assembly
# ---------------------------------------------------------------------------


def _block(path: str, text: str) -> str:
    return f"{SEPARATOR}{path}\n{text}\n"


def render_snippets(snippets: Iterable[Snippet]) -> str:
    return "".join(_block(s.file_path, s.text) for s in snippets)


def assemble(snippets: Sequence[Snippet], budget_units: int) -> ContextDocument:
    """Greedy, order-preserving packing under ``budget_units``.

    A snippet that does not fit is dropped, except the first one, which is cut
    back to the longest whole-line head that fits.
    """
    if budget_units < 0:
        raise ValueError("budget_units must be >= 0")
    used = 0
    included: list[Snippet] = []
    for i, snip in enumerate(snippets):
        path = snip.file_path.replace(SEPARATOR, SEPARATOR_ESCAPE).replace("\n", " ")
        text = snip.text.replace(SEPARATOR, SEPARATOR_ESCAPE)
        cost = units(_block(path, text))
        if used + cost <= budget_units:
            used += cost
            included.append(dataclasses.replace(snip, file_path=path, text=text))
            continue
        if i == 0:
            lines = split_lines(text)
            kept = ""
            for line in lines:
                if units(_block(path, kept + line)) > budget_units:
                    break
                kept += line
            if kept:
                cost = units(_block(path, kept))
                used += cost
                included.append(dataclasses.replace(snip, file_path=path, text=kept, provenance=snip.provenance + "+truncated"))
    return ContextDocument(tuple(included), render_snippets(included), used)


# ---------------------------------------------------------------------------
# Helpers
# ---------------------------------------------------------------------------


def stable_hash(text: str) -> int:
    return int.from_bytes(hashlib.sha256(text.encode("utf-8", "surrogatepass")).digest()[:8], "big")


def _other_files(point: CompletionPoint, snapshot: RepoSnapshot) -> list[tuple[str, str]]:
    return [(p, t) for p, t in snapshot.files.items() if p != point.file_path and t]


def _file_snippet(snapshot: RepoSnapshot, path: str, score: float, provenance: str) -> Snippet | None:
    text = snapshot.files.get(path)
    return Snippet(path, text, score, provenance) if text else None


def _point_language(point: CompletionPoint) -> str:
    return language_for_path(point.file_path)


def _co_changed(point: CompletionPoint, snapshot: RepoSnapshot) -> list[str]:
    return [p for p in dict.fromkeys(point.co_changed_files) if p != point.file_path and snapshot.files.get(p)]


# ---------------------------------------------------------------------------
# Strategies (snippet level)
# ---------------------------------------------------------------------------


def snippets_empty(point, snapshot, cfg) -> list[Snippet]:
    return []


def snippets_random_cochange(point: CompletionPoint, snapshot: RepoSnapshot, cfg: CollectorConfig) -> list[Snippet]:
    candidates = list(dict.fromkeys(point.co_changed_files))
    rng = random.Random(cfg.rng_seed ^ stable_hash(point.point_id))
    rng.shuffle(candidates)
    for path in candidates:
        if path == point.file_path:
            continue
        snip = _file_snippet(snapshot, path, 1.0, "random:cochange")
        if snip is not None:
            return [snip]
    return []


def snippets_recent_files(point: CompletionPoint, snapshot: RepoSnapshot, cfg: CollectorConfig) -> list[Snippet]:
    paths = _co_changed(point, snapshot)
    return [Snippet(p, snapshot.files[p], float(len(paths) - i), "recent:cochange") for i, p in enumerate(paths)]


def default_query(point: CompletionPoint, cfg: CollectorConfig) -> str:
    return tail_lines(point.prefix, cfg.prefix_query_lines) + head_lines(point.suffix, cfg.suffix_query_lines)


def snippets_bm25_file(point: CompletionPoint, snapshot: RepoSnapshot, cfg: CollectorConfig) -> list[Snippet]:
    docs = _other_files(point, snapshot)
    if not docs:
        return []
    index = cached_build("bm25", docs, cfg.cache_dir)
    hits = bm25_top_k(index, default_query(point, cfg), 1)
    return [Snippet(h.doc_id, snapshot.files[h.doc_id], h.score, "bm25:file") for h in hits]


def hybrid_queries(point: CompletionPoint, cfg: CollectorConfig) -> list[tuple[str, str]]:
    """Query texts paired with the side of the caret they came from."""
    prefix, suffix = point.prefix, point.suffix
    if cfg.query_mode == "full_file":
        queries = [(prefix + suffix, "prefix")]
    elif cfg.query_mode == "around":
        half = max(1, cfg.around_lines // 2)
        queries = [(tail_lines(prefix, half) + head_lines(suffix, half), "prefix")]
    elif cfg.query_mode == "chunks":
        before = line_window_chunks("<prefix>", prefix, cfg.line_window, cfg.line_window)[-4:]
        after = line_window_chunks("<suffix>", suffix, cfg.line_window, cfg.line_window)[:4]
        queries = [(c.text, "prefix") for c in reversed(before)] + [(c.text, "suffix") for c in after]
    else:
        queries = [
            (tail_lines(prefix, cfg.prefix_query_lines), "prefix"),
            (head_lines(suffix, cfg.suffix_query_lines), "suffix"),
        ]
    return [(q, side) for q, side in queries if q.strip()]


def _corpus_chunks(point: CompletionPoint, snapshot: RepoSnapshot, cfg: CollectorConfig) -> list[Chunk]:
    chunks: list[Chunk] = []
    for path, text in _other_files(point, snapshot):
        if cfg.chunking == "char":
            chunks.extend(char_window_chunks(path, text, cfg.char_size, cfg.char_overlap))
        else:
            chunks.extend(line_window_chunks(path, text, cfg.line_window, cfg.line_stride))
    return chunks


def snippets_hybrid_chunks(point: CompletionPoint, snapshot: RepoSnapshot, cfg: CollectorConfig) -> list[Snippet]:
    out: list[Snippet] = []
    own = snapshot.files.get(point.file_path)
    if own:
        out.append(Snippet(point.file_path, own, 0.0, "hybrid:current-file"))
    for path in _co_changed(point, snapshot):
        out.append(Snippet(path, snapshot.files[path], 0.0, "hybrid:cochange"))

    chunks = _corpus_chunks(point, snapshot, cfg)
    if not chunks:
        return out
    by_id = {c.chunk_id: c for c in chunks}
    docs = [(c.chunk_id, c.text) for c in chunks]
    sparse = cached_build("bm25", docs, cfg.cache_dir)
    dense = cached_build("dense", docs, cfg.cache_dir, dim=cfg.dense_dim)

    per_query: list[list[str]] = []
    side_score: dict[str, tuple[float, str]] = {}
    for query, side in hybrid_queries(point, cfg):
        fused = rrf_fuse(
            [
                [h.doc_id for h in bm25_top_k(sparse, query, cfg.retriever_k)],
                [h.doc_id for h in dense_top_k(dense, query, cfg.retriever_k)],
            ],
            cfg.rrf_k,
        )
        per_query.append([h.doc_id for h in fused])
        for h in fused:
            if h.doc_id not in side_score or h.score > side_score[h.doc_id][0]:
                side_score[h.doc_id] = (h.score, side)

    used_paths = {s.file_path for s in out}
    for hit in rrf_fuse(per_query, cfg.rrf_k)[: cfg.top_k]:
        chunk = by_id[hit.doc_id]
        if chunk.file_path in used_paths:
            continue  # whole file already included
        side = side_score[hit.doc_id][1]
        neighbour = adjacent_chunk(chunk, snapshot, "next" if side == "prefix" else "prev")
        if neighbour is None:
            text = chunk.text
        elif side == "prefix":
            text = chunk.text + neighbour.text
        else:
            text = neighbour.text + chunk.text
        out.append(Snippet(chunk.file_path, text, hit.score, f"hybrid:chunk:{side}"))
    return out


def _definition_table(snapshot: RepoSnapshot) -> dict[str, list]:
    table = snapshot.memo.get("definitions")
    if table is None:
        table = {}
        for path, text in snapshot.files.items():
            if not path.endswith(SOURCE_SUFFIXES):
                continue
            defs = extract_definitions(text, language_for_path(path), path)
            augmented = {(d.span, d.name) for d in defs if d.augmented}
            for d in defs:
                if not d.augmented and (d.span, d.name) in augmented:
                    continue
                table.setdefault(d.name, []).append(d)
        for defs in table.values():
            defs.sort(key=lambda d: (d.file_path, d.span))
        snapshot.memo["definitions"] = table
    return table


def snippets_symbol_defs(point: CompletionPoint, snapshot: RepoSnapshot, cfg: CollectorConfig) -> list[Snippet]:
    language = _point_language(point)
    out: list[Snippet] = []
    seen: set[tuple[str, str]] = set()

    def add(path: str, text: str, provenance: str) -> None:
        if text and (path, text) not in seen:
            seen.add((path, text))
            out.append(Snippet(path, text, 0.0, provenance))

    for path in imported_files(point.prefix + point.suffix, snapshot, language, point.file_path):
        add(path, head_lines(snapshot.files[path], cfg.import_line_cap), "symbols:import")
    table = _definition_table(snapshot)
    for sym in extract_referenced_symbols(point.prefix, point.suffix, language):
        for d in table.get(sym.name, ()):
            if d.file_path != point.file_path:
                add(d.file_path, d.text, f"symbols:def:{sym.name}")
    if not out:
        return snippets_random_cochange(point, snapshot, cfg)
    n = len(out)
    return [dataclasses.replace(s, score=float(n - i)) for i, s in enumerate(out)]


def snippets_block_bm25(point: CompletionPoint, snapshot: RepoSnapshot, cfg: CollectorConfig) -> list[Snippet]:
    blocks: list[Chunk] = []
    for path, text in _other_files(point, snapshot):
        if path.endswith(SOURCE_SUFFIXES):
            blocks.extend(block_chunks(path, text, language_for_path(path)))
    if not blocks:
        return []
    by_id = {c.chunk_id: c for c in blocks}
    index = cached_build("bm25", [(c.chunk_id, c.text) for c in blocks], cfg.cache_dir)
    before, after = enclosing_blocks(point.prefix, point.suffix, _point_language(point))
    best: dict[str, float] = {}
    for query in (before, after):
        if not query.strip():
            continue
        for hit in bm25_top_k(index, query, cfg.top_k):
            best[hit.doc_id] = max(best.get(hit.doc_id, 0.0), hit.score)
    ranked = sorted(best.items(), key=lambda kv: (-kv[1], kv[0]))
    return [Snippet(by_id[cid].file_path, by_id[cid].text, score, "blocks:bm25") for cid, score in ranked]


def trigram_clauses(point: CompletionPoint, cfg: CollectorConfig) -> list[list[str]]:
    names = [s.name for s in extract_referenced_symbols(point.prefix, point.suffix, _point_language(point))]
    names = names[: cfg.symbol_limit]
    if not names:
        return []
    if len(names) <= cfg.clause_size:
        return [names]
    return [names[i : i + cfg.clause_size] for i in range(0, len(names), cfg.clause_size)]


def snippets_trigram(point: CompletionPoint, snapshot: RepoSnapshot, cfg: CollectorConfig) -> list[Snippet]:
    clauses = trigram_clauses(point, cfg)
    docs = _other_files(point, snapshot)
    if not clauses or not docs:
        return []
    index = cached_build("trigram", docs, cfg.cache_dir)
    hits = trigram_search(index, clauses, cfg.top_k)
    if not hits and len(clauses) > 1:
        # conjunction too strict: fall back to one disjunctive clause
        hits = trigram_search(index, [[lit for clause in clauses for lit in clause]], cfg.top_k)
    return [Snippet(h.doc_id, snapshot.files[h.doc_id], h.score, "trigram:file") for h in hits]


# ---------------------------------------------------------------------------
# Re-ranking
# ---------------------------------------------------------------------------


def path_distance(a: str, b: str) -> int:
    da = PurePosixPath(a).parent.parts
    db = PurePosixPath(b).parent.parts
    common = 0
    for x, y in zip(da, db):
        if x != y:
            break
        common += 1
    return (len(da) - common) + (len(db) - common)


def incoming_refs(snapshot: RepoSnapshot, name: str) -> int:
    cache = snapshot.memo.setdefault("incoming_refs", {})
    if name not in cache:
        pattern = re.compile(rf"(?<!\w){re.escape(name)}(?!\w)")
        cache[name] = sum(1 for text in snapshot.files.values() if pattern.search(text))
    return cache[name]


def heuristic_rerank(
    snippets: Sequence[Snippet], point: CompletionPoint, snapshot: RepoSnapshot, weights: Mapping[str, float]
) -> list[Snippet]:
    """Add declaration, path-distance and incoming-reference signals, then stable-sort."""
    w_same = weights.get("samefile", 0.0)
    w_path = weights.get("pathdist", 0.0)
    w_refs = weights.get("refs", 0.0)
    if not (w_same or w_path or w_refs):
        return list(snippets)
    referenced = {s.name for s in extract_referenced_symbols(point.prefix, point.suffix)}
    rescored = []
    for snip in snippets:
        defs = [d for d in extract_definitions(snip.text, language_for_path(snip.file_path)) if not d.augmented]
        defines = any(d.name in referenced for d in defs)
        refs = incoming_refs(snapshot, defs[0].name) if defs else 0
        score = (
            snip.score
            + w_same * float(defines)
            - w_path * path_distance(snip.file_path, point.file_path)
            + w_refs * math.log1p(refs)
        )
        rescored.append(dataclasses.replace(snip, score=score, provenance=snip.provenance + "+heuristic"))
    order = sorted(range(len(rescored)), key=lambda i: -rescored[i].score)
    return [rescored[i] for i in order]


# ---------------------------------------------------------------------------
# Public strategy entry points
# ---------------------------------------------------------------------------

SnippetFn = Callable[[CompletionPoint, RepoSnapshot, CollectorConfig], list]

SNIPPET_STRATEGIES: dict[str, SnippetFn] = {
    "empty": snippets_empty,
    "random": snippets_random_cochange,
    "recent": snippets_recent_files,
    "bm25": snippets_bm25_file,
    "hybrid": snippets_hybrid_chunks,
    "symbols": snippets_symbol_defs,
    "blocks": snippets_block_bm25,
    "trigram": snippets_trigram,
}
STRATEGY_NAMES = tuple(SNIPPET_STRATEGIES)


def collect(point: CompletionPoint, snapshot: RepoSnapshot, cfg: CollectorConfig) -> ContextDocument:
    try:
        strategy = SNIPPET_STRATEGIES[cfg.strategy]
    except KeyError:
        raise ValueError(f"unknown strategy {cfg.strategy!r}; choose from {', '.join(STRATEGY_NAMES)}") from None
    snippets = strategy(point, snapshot, cfg)
    if cfg.rerank:
        snippets = heuristic_rerank(snippets, point, snapshot, cfg.weights)
    return assemble(snippets, cfg.budget_units)


def _with(cfg: CollectorConfig, strategy: str) -> CollectorConfig:
    return dataclasses.replace(cfg, strategy=strategy)


def collect_empty(point, snapshot, cfg) -> ContextDocument:
    return collect(point, snapshot, _with(cfg, "empty"))


def collect_random_cochange(point, snapshot, cfg) -> ContextDocument:
    return collect(point, snapshot, _with(cfg, "random"))


def collect_recent_files(point, snapshot, cfg) -> ContextDocument:
    return collect(point, snapshot, _with(cfg, "recent"))


def collect_bm25_file(point, snapshot, cfg) -> ContextDocument:
    return collect(point, snapshot, _with(cfg, "bm25"))


def collect_hybrid_chunks(point, snapshot, cfg) -> ContextDocument:
    return collect(point, snapshot, _with(cfg, "hybrid"))


def collect_symbol_defs(point, snapshot, cfg) -> ContextDocument:
    return collect(point, snapshot, _with(cfg, "symbols"))


def collect_block_bm25(point, snapshot, cfg) -> ContextDocument:
    return collect(point, snapshot, _with(cfg, "blocks"))


def collect_trigram(point, snapshot, cfg) -> ContextDocument:
    return collect(point, snapshot, _with(cfg, "trigram"))


# ---------------------------------------------------------------------------
# Dataset-level runs and the submission file
# ---------------------------------------------------------------------------


def collect_contexts(dataset: Dataset, cfg: CollectorConfig, parallelism: int = 1) -> dict[str, str]:
    """Rendered context per point id, ordered by point id."""
    if parallelism < 1:
        raise ValueError("parallelism must be >= 1")
    points = sorted(dataset.points, key=lambda p: p.point_id)

    def run(point: CompletionPoint) -> str:
        return collect(point, dataset.snapshot_for(point), cfg).rendered

    if parallelism == 1:
        rendered = [run(p) for p in points]
    else:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            rendered = list(pool.map(run, points))
    return {p.point_id: text for p, text in zip(points, rendered)}


def dump_contexts(contexts: Mapping[str, str]) -> str:
    return "".join(
        json.dumps({"id": pid, "context": contexts[pid]}, ensure_ascii=False) + "\n" for pid in sorted(contexts)
    )


def write_contexts(contexts: Mapping[str, str], path: str | Path) -> None:
    Path(path).write_text(dump_contexts(contexts), encoding="utf-8", newline="\n")


def read_contexts(path: str | Path) -> dict[str, str]:
    contexts = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                contexts[record["id"]] = record["context"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ValueError(f"{path}:{lineno}: bad context line ({exc})") from exc
    return contexts
