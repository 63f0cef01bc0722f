"""Line handling shared by the parser, chunker and strategies.

Lines split on ``\\n`` only and keep their terminator, so
``"".join(split_lines(t)) == t`` always holds.
"""

from __future__ import annotations

import math
from pathlib import PurePosixPath

CHARS_PER_UNIT = 4


def split_lines(text: str) -> list[str]:
    if not text:
        return []
    parts = text.split("\n")
    lines = [p + "\n" for p in parts[:-1]]
    if parts[-1]:
        lines.append(parts[-1])
    return lines


def slice_lines(text: str, start_line: int, end_line: int) -> str:
    return "".join(split_lines(text)[start_line : end_line + 1])


def tail_lines(text: str, count: int) -> str:
    return "".join(split_lines(text)[-count:]) if count > 0 else ""


def head_lines(text: str, count: int) -> str:
    return "".join(split_lines(text)[:count]) if count > 0 else ""


def units(text: str) -> int:
    """Approximate token count: one unit per four characters, rounded up."""
    return math.ceil(len(text) / CHARS_PER_UNIT)


def language_for_path(path: str) -> str:
    return "kotlin" if PurePosixPath(path).suffix in (".kt", ".kts") else "python"
