"""Retrieval units cut from snapshot files."""

from __future__ import annotations

from dataclasses import dataclass
from itertools import accumulate
from typing import TYPE_CHECKING

from ctxcollect.parse import extract_definitions
from ctxcollect.textutil import split_lines

if TYPE_CHECKING:
    from ctxcollect.dataset import RepoSnapshot

LINE_WINDOW = 30
LINE_STRIDE = 15
CHAR_SIZE = 2000
CHAR_OVERLAP = 500


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    file_path: str
    start_line: int
    end_line: int
    text: str
    kind: str  # line_window | char_window | block
    start_offset: int = 0


def _line_chunk(file_path: str, lines: list[str], start: int, end: int) -> Chunk:
    offset = sum(len(l) for l in lines[:start])
    return Chunk(f"{file_path}#L{start}", file_path, start, end, "".join(lines[start : end + 1]), "line_window", offset)


def line_window_chunks(file_path: str, text: str, window: int = LINE_WINDOW, stride: int = LINE_STRIDE) -> list[Chunk]:
    if window < 1 or not 1 <= stride <= window:
        raise ValueError("need window >= 1 and 1 <= stride <= window")
    lines = split_lines(text)
    offsets = [0, *accumulate(len(l) for l in lines)]
    chunks = []
    for start in range(0, len(lines), stride):
        end = min(start + window, len(lines)) - 1
        chunks.append(
            Chunk(
                f"{file_path}#L{start}",
                file_path,
                start,
                end,
                "".join(lines[start : end + 1]),
                "line_window",
                offsets[start],
            )
        )
    return chunks


def _line_at(text: str, offset: int) -> int:
    return text.count("\n", 0, offset)


def char_window_chunks(file_path: str, text: str, size: int = CHAR_SIZE, overlap: int = CHAR_OVERLAP) -> list[Chunk]:
    if size < 1 or not 0 <= overlap < size:
        raise ValueError("need size >= 1 and 0 <= overlap < size")
    chunks = []
    step = size - overlap
    offset = 0
    while offset < len(text):
        end = min(offset + size, len(text))
        piece = text[offset:end]
        chunks.append(
            Chunk(
                f"{file_path}#C{offset}",
                file_path,
                _line_at(text, offset),
                _line_at(text, end - 1),
                piece,
                "char_window",
                offset,
            )
        )
        if end >= len(text):
            break
        offset += step
    return chunks


def block_chunks(file_path: str, text: str, language: str) -> list[Chunk]:
    """One chunk per function or class; methods carry their class header."""
    lines = split_lines(text)
    chunks = []
    defs = extract_definitions(text, language, file_path)
    augmented = {(d.span, d.name) for d in defs if d.augmented}
    for d in defs:
        if d.kind not in ("function", "class"):
            continue
        if not d.augmented and (d.span, d.name) in augmented:
            continue
        start, end = d.span
        offset = sum(len(l) for l in lines[:start])
        suffix = "A" if d.augmented else ""
        chunks.append(Chunk(f"{file_path}#B{start}{suffix}", file_path, start, end, d.text, "block", offset))
    return chunks


def adjacent_chunk(chunk: Chunk, snapshot: RepoSnapshot, direction: str) -> Chunk | None:
    """Same-size window right after (``next``) or before (``prev``) the chunk."""
    if direction not in ("next", "prev"):
        raise ValueError("direction must be 'next' or 'prev'")
    text = snapshot.read(chunk.file_path)
    if chunk.kind == "char_window":
        return _adjacent_chars(chunk, text, direction)
    lines = split_lines(text)
    size = chunk.end_line - chunk.start_line + 1
    if direction == "next":
        start = chunk.end_line + 1
        if start >= len(lines):
            return None
        end = min(start + size, len(lines)) - 1
    else:
        if chunk.start_line <= 0:
            return None
        end = chunk.start_line - 1
        start = max(0, chunk.start_line - size)
    return _line_chunk(chunk.file_path, lines, start, end)


def _adjacent_chars(chunk: Chunk, text: str, direction: str) -> Chunk | None:
    size = len(chunk.text)
    if direction == "next":
        start = chunk.start_offset + size
        if start >= len(text):
            return None
        end = min(start + size, len(text))
    else:
        if chunk.start_offset <= 0:
            return None
        end = chunk.start_offset
        start = max(0, end - size)
    return Chunk(
        f"{chunk.file_path}#C{start}",
        chunk.file_path,
        _line_at(text, start),
        _line_at(text, end - 1),
        text[start:end],
        "char_window",
        start,
    )
