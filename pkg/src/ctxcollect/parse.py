"""Lightweight syntax-aware extraction for Python and Kotlin.

No grammar runtime is involved. Both backends first blank out string
literals and comments (keeping offsets and newlines), then Python is
scanned by indentation and Kotlin by balanced braces. Malformed input never
raises; unparseable regions are skipped and reported via ``diagnostics``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from pathlib import PurePosixPath
from typing import TYPE_CHECKING

from ctxcollect.textutil import head_lines, split_lines, tail_lines

if TYPE_CHECKING:
    from ctxcollect.dataset import RepoSnapshot

PYTHON_KEYWORDS = frozenset(
    """
    False None True and as assert async await break class continue def del elif else
    except finally for from global if import in is lambda nonlocal not or pass raise
    return try while with yield match case self cls
    """.split()
)

KOTLIN_KEYWORDS = frozenset(
    """
    as break class continue do else false for fun if in interface is null object package
    return super this throw true try typealias typeof val var when while by catch
    constructor finally import init where abstract actual annotation companion const
    crossinline data enum expect external final infix inline inner internal lateinit
    noinline open operator out override private protected public reified sealed suspend
    tailrec vararg it
    """.split()
)

KEYWORDS = {"python": PYTHON_KEYWORDS, "kotlin": KOTLIN_KEYWORDS}

FALLBACK_LINES = 50

_WORD = re.compile(r"\w+")


@dataclass(frozen=True)
class SymbolDef:
    name: str
    kind: str  # function | class | object | variable | import
    file_path: str
    span: tuple[int, int]  # 0-based inclusive line range
    text: str
    parent: str | None = None
    augmented: bool = False  # text is parent header(s) + definition, not a plain slice


@dataclass(frozen=True)
class RankedSymbol:
    name: str
    distance_chars: int
    occurrences: int


def _check_language(language: str) -> None:
    if language not in KEYWORDS:
        raise ValueError(f"unsupported language {language!r}")


# ---------------------------------------------------------------------------
# String/comment blanking
# ---------------------------------------------------------------------------


def _blank(chars: list[str], start: int, end: int) -> None:
    for k in range(start, end):
        if chars[k] != "\n":
            chars[k] = " "


def _blank_literal(chars: list[str], start: int, end: int) -> None:
    # a literal still occupies a token slot, so `x = "s"` does not end in `=`
    _blank(chars, start, end)
    if start < end:
        chars[start] = "0"


def _blank_python(text: str) -> str:
    chars = list(text)
    n = len(text)
    i = 0
    while i < n:
        c = text[i]
        if c == "#":
            j = text.find("\n", i)
            j = n if j < 0 else j
            _blank(chars, i, j)
            i = j
        elif c in "\"'":
            quote = c * 3 if text.startswith(c * 3, i) else c
            j = i + len(quote)
            while j < n:
                if text[j] == "\\":
                    j += 2
                    continue
                if text.startswith(quote, j):
                    j += len(quote)
                    break
                if len(quote) == 1 and text[j] == "\n":
                    break
                j += 1
            j = min(j, n)
            _blank_literal(chars, i, j)
            i = j
        else:
            i += 1
    return "".join(chars)


def _blank_kotlin(text: str) -> str:
    chars = list(text)
    n = len(text)
    i = 0
    while i < n:
        c = text[i]
        if text.startswith("//", i):
            j = text.find("\n", i)
            j = n if j < 0 else j
            _blank(chars, i, j)
            i = j
        elif text.startswith("/*", i):
            depth = 0
            j = i
            while j < n:
                if text.startswith("/*", j):
                    depth += 1
                    j += 2
                elif text.startswith("*/", j):
                    depth -= 1
                    j += 2
                    if depth == 0:
                        break
                else:
                    j += 1
            j = min(j, n)
            _blank(chars, i, j)
            i = j
        elif text.startswith('"""', i):
            j = text.find('"""', i + 3)
            j = n if j < 0 else j + 3
            while j < n and text[j] == '"':
                j += 1
            _blank_literal(chars, i, j)
            i = j
        elif c == '"':
            j = i + 1
            template = 0
            while j < n:
                ch = text[j]
                if ch == "\\":
                    j += 2
                    continue
                if text.startswith("${", j):
                    template += 1
                    j += 2
                    continue
                if template and ch == "}":
                    template -= 1
                elif not template and ch == '"':
                    j += 1
                    break
                elif ch == "\n" and not template:
                    break
                j += 1
            j = min(j, n)
            _blank_literal(chars, i, j)
            i = j
        elif c == "'":
            m = re.compile(r"'(?:\\u[0-9a-fA-F]{4}|\\.|[^'\\\n])'").match(text, i)
            if m:
                _blank_literal(chars, i, m.end())
                i = m.end()
            else:
                i += 1
        else:
            i += 1
    return "".join(chars)


# ---------------------------------------------------------------------------
# Python backend
# ---------------------------------------------------------------------------

_PY_DEF = re.compile(r"^[ \t]*(?:async[ \t]+)?def[ \t]+(\w+)")
_PY_CLASS = re.compile(r"^[ \t]*class[ \t]+(\w+)")
_PY_ASSIGN = re.compile(r"^([^\W\d]\w*)[ \t]*(?::[^=]*)?=(?!=)")


def _indent_width(line: str) -> int:
    width = 0
    for ch in line:
        if ch == " ":
            width += 1
        elif ch == "\t":
            width = (width // 8 + 1) * 8
        elif ch == "\f":
            width = 0
        else:
            break
    return width


@dataclass
class _Stmt:
    start: int
    end: int
    indent: int
    code: str  # blanked text of the first line
    full_code: str  # blanked text of all lines
    children: list


def _python_statements(text: str) -> tuple[list[str], list[_Stmt]]:
    """Group lines into logical statements using the blanked text."""
    raw_lines = split_lines(text)
    code = _blank_python(text)
    code_lines = split_lines(code)
    # a line is a continuation if it starts inside brackets, a string, or after a backslash
    cont = [False] * len(code_lines)
    depth = 0
    offset = 0
    backslash = False
    string_spans = _python_string_line_starts(text)
    for idx, line in enumerate(code_lines):
        cont[idx] = depth > 0 or backslash or offset in string_spans
        for ch in line:
            if ch in "([{":
                depth += 1
            elif ch in ")]}":
                depth = max(0, depth - 1)
        stripped = line.rstrip("\r\n")
        backslash = stripped.endswith("\\")
        offset += len(line)
    stmts: list[_Stmt] = []
    for idx, line in enumerate(code_lines):
        if cont[idx]:
            if stmts:
                stmts[-1].end = idx
                stmts[-1].full_code += line
            continue
        if not line.strip():
            continue
        stmts.append(_Stmt(idx, idx, _indent_width(line), line, line, []))
    return raw_lines, stmts


def _python_string_line_starts(text: str) -> set[int]:
    """Offsets of line starts that fall inside a multi-line string literal."""
    starts: set[int] = set()
    n = len(text)
    i = 0
    while i < n:
        c = text[i]
        if c == "#":
            j = text.find("\n", i)
            i = n if j < 0 else j
        elif c in "\"'":
            quote = c * 3 if text.startswith(c * 3, i) else c
            j = i + len(quote)
            while j < n:
                if text[j] == "\\":
                    if j + 1 < n and text[j + 1] == "\n":
                        starts.add(j + 2)
                    j += 2
                    continue
                if text.startswith(quote, j):
                    j += len(quote)
                    break
                if text[j] == "\n":
                    if len(quote) == 1:
                        break
                    starts.add(j + 1)
                j += 1
            i = j
        else:
            i += 1
    return starts


def _nest(stmts: list[_Stmt]) -> list[_Stmt]:
    """Build the indentation tree; a statement owns following deeper statements."""
    roots: list[_Stmt] = []
    stack: list[_Stmt] = []
    for st in stmts:
        while stack and stack[-1].indent >= st.indent:
            stack.pop()
        (stack[-1].children if stack else roots).append(st)
        stack.append(st)
    return roots


def _block_end(st: _Stmt) -> int:
    end = st.end
    node = st
    while node.children:
        node = node.children[-1]
        end = max(end, node.end)
    return end


def _python_defs(text: str, file_path: str, diagnostics: list[str] | None) -> list[SymbolDef]:
    raw_lines, stmts = _python_statements(text)
    roots = _nest(stmts)
    out: list[SymbolDef] = []

    def slice_(s: int, e: int) -> str:
        return "".join(raw_lines[s : e + 1])

    def note(msg: str) -> None:
        if diagnostics is not None:
            diagnostics.append(f"{file_path or '<text>'}: {msg}")

    def walk(siblings: list[_Stmt], parents: list[tuple[str, str]], top: bool) -> None:
        decorator_start: int | None = None
        for st in siblings:
            first = st.code
            if first.lstrip().startswith("@"):
                if decorator_start is None:
                    decorator_start = st.start
                continue
            start = st.start if decorator_start is None else decorator_start
            decorator_start = None
            m_def = _PY_DEF.match(first)
            m_cls = _PY_CLASS.match(first)
            if m_def or m_cls:
                name = (m_def or m_cls).group(1)
                ends_with_colon = st.full_code.rstrip().endswith(":")
                if ends_with_colon and not st.children:
                    note(f"line {st.start + 1}: block '{name}' has no body, skipped")
                    continue
                if not ends_with_colon and ":" not in st.full_code:
                    note(f"line {st.start + 1}: header for '{name}' not terminated, skipped")
                    continue
                if st.children:
                    body_indent = st.children[0].indent
                    for child in st.children[1:]:
                        if child.indent != body_indent:
                            note(f"line {child.start + 1}: inconsistent indentation in '{name}'")
                            break
                end = _block_end(st)
                body = slice_(start, end)
                parent = parents[-1][0] if parents else None
                kind = "function" if m_def else "class"
                out.append(SymbolDef(name, kind, file_path, (start, end), body, parent))
                if m_def and parents:
                    header = "".join(h for _, h in parents)
                    out.append(SymbolDef(name, kind, file_path, (start, end), header + body, parent, True))
                if m_cls:
                    header = slice_(st.start, st.end)
                    walk(st.children, parents + [(name, header)], False)
                continue
            if top:
                m_var = _PY_ASSIGN.match(first)
                if m_var and m_var.group(1) not in PYTHON_KEYWORDS:
                    out.append(
                        SymbolDef(m_var.group(1), "variable", file_path, (st.start, st.end), slice_(st.start, st.end))
                    )

    top_level = [st for st in roots if st.indent == 0]
    walk(top_level, [], True)
    return out


# ---------------------------------------------------------------------------
# Kotlin backend
# ---------------------------------------------------------------------------

_KT_MODS = (
    r"(?:(?:public|private|protected|internal|open|abstract|final|override|suspend|inline|data|sealed"
    r"|enum|inner|lateinit|const|operator|infix|tailrec|external|annotation|companion|expect|actual"
    r"|value|noinline|crossinline)\s+)*"
)
_KT_ANN = r"(?:@[\w.:]+(?:\([^)]*\))?\s+)*"
_KT_DECL = re.compile(rf"^\s*{_KT_ANN}{_KT_MODS}(?P<kw>fun|class|interface|object|val|var)\b(?P<rest>.*)$")
_KT_ANN_LINE = re.compile(r"^\s*(?:@[\w.:]+(?:\([^)\n]*\))?\s*)+$")
_KT_FUN_NAME = re.compile(r"([^\W\d]\w*|`[^`]+`)\s*\(")
_KT_IDENT = re.compile(r"[^\W\d]\w*|`[^`]+`")
_KT_VAR_NAME = re.compile(r"([^\W\d]\w*|`[^`]+`)\s*(?=[:=]|by\b|$)")
_KT_CONTINUE_END = ("=", "->", ",", ".", ":", "&&", "||", "+", "-", "*", "/", "?:", "(")
_KT_CONTINUE_START = (".", "?.", "?:", "&&", "||", "{", ":")


class _Braces:
    """Bracket structure of blanked Kotlin code."""

    def __init__(self, code: str, diagnostics: list[str] | None, label: str):
        self.match: dict[int, int] = {}
        self.line_starts: list[int] = []
        self.line_opener: list[int | None] = []  # innermost open bracket at each line start
        stack: list[tuple[str, int]] = []
        pos = 0
        for line in split_lines(code):
            self.line_starts.append(pos)
            self.line_opener.append(stack[-1][1] if stack else None)
            for k, ch in enumerate(line, start=pos):
                if ch in "({[":
                    stack.append((ch, k))
                elif ch in ")}]":
                    want = {")": "(", "}": "{", "]": "["}[ch]
                    # closers without their opener are ignored
                    idx = len(stack) - 1
                    while idx >= 0 and stack[idx][0] != want:
                        idx -= 1
                    if idx < 0:
                        if diagnostics is not None and ch == "}":
                            diagnostics.append(f"{label}: unmatched '}}' at offset {k}")
                        continue
                    for _, dropped in stack[idx + 1 :]:
                        if diagnostics is not None:
                            diagnostics.append(f"{label}: unclosed bracket at offset {dropped}")
                    opener = stack[idx][1]
                    del stack[idx:]
                    self.match[opener] = k
            pos += len(line)
        self.unclosed = {p for _, p in stack}
        if diagnostics is not None:
            for ch, p in stack:
                if ch == "{":
                    diagnostics.append(f"{label}: unclosed '{{' at offset {p}")

    def line_of(self, offset: int) -> int:
        lo, hi = 0, len(self.line_starts) - 1
        while lo < hi:
            mid = (lo + hi + 1) // 2
            if self.line_starts[mid] <= offset:
                lo = mid
            else:
                hi = mid - 1
        return lo


def _kotlin_decl_end(code: str, braces: _Braces, pos: int, code_lines: list[str]):
    """Return (end_line, body_open_offset) for a declaration starting at ``pos``, or None if degenerate."""
    n = len(code)
    depth = 0
    body_open = None
    i = pos
    while i < n:
        ch = code[i]
        if ch == "{":
            if i not in braces.match:
                return None
            if depth == 0 and body_open is None:
                body_open = i
            i = braces.match[i] + 1
            continue
        if ch in "([":
            depth += 1
        elif ch in ")]":
            depth = max(0, depth - 1)
        elif ch == "\n" and depth == 0:
            line_idx = braces.line_of(i)
            line = code_lines[line_idx].rstrip()
            if line.endswith(_KT_CONTINUE_END) and not line.endswith(("++", "--")):
                i += 1
                continue
            nxt = line_idx + 1
            while nxt < len(code_lines) and not code_lines[nxt].strip():
                nxt += 1
            if nxt < len(code_lines) and code_lines[nxt].lstrip().startswith(_KT_CONTINUE_START):
                if body_open is None or not code_lines[nxt].lstrip().startswith("{"):
                    i += 1
                    continue
            return line_idx, body_open
        i += 1
    return braces.line_of(max(n - 1, 0)), body_open


def _kotlin_name(kw: str, rest: str) -> tuple[str | None, str]:
    if kw == "fun":
        if re.match(r"\s*interface\b", rest):
            m = _KT_IDENT.search(rest.split("interface", 1)[1])
            return (m.group(0) if m else None), "class"
        m = _KT_FUN_NAME.search(rest)
        return (m.group(1) if m else None), "function"
    if kw in ("class", "interface"):
        m = _KT_IDENT.search(rest)
        return (m.group(0) if m else None), "class"
    if kw == "object":
        m = re.match(r"\s*([^\W\d]\w*|`[^`]+`)", rest)
        return (m.group(1) if m else "Companion"), "object"
    if re.match(r"\s*\(", rest):
        return None, "variable"  # destructuring declaration
    m = _KT_VAR_NAME.search(rest.split("=", 1)[0].strip())
    return (m.group(1) if m else None), "variable"


def _kotlin_defs(text: str, file_path: str, diagnostics: list[str] | None) -> list[SymbolDef]:
    label = file_path or "<text>"
    code = _blank_kotlin(text)
    raw_lines = split_lines(text)
    code_lines = split_lines(code)
    braces = _Braces(code, diagnostics, label)
    out: list[SymbolDef] = []

    def slice_(s: int, e: int) -> str:
        return "".join(raw_lines[s : e + 1])

    def walk(region: int | None, first: int, last: int, parents: list[tuple[str, str]]) -> None:
        pending: int | None = None
        idx = first
        while idx <= last:
            if braces.line_opener[idx] != region:
                idx += 1
                continue
            line = code_lines[idx]
            if not line.strip():
                idx += 1
                continue
            m = _KT_DECL.match(line)
            if not m:
                if not _KT_ANN_LINE.match(line):
                    pending = None
                elif pending is None:
                    pending = idx
                idx += 1
                continue
            start = idx if pending is None else pending
            pending = None
            name, kind = _kotlin_name(m.group("kw"), m.group("rest"))
            result = _kotlin_decl_end(code, braces, braces.line_starts[idx] + m.start("kw"), code_lines)
            if result is None:
                if diagnostics is not None:
                    diagnostics.append(f"{label}: line {idx + 1}: declaration body not closed, skipped")
                idx += 1
                continue
            end, body_open = result
            end = min(max(end, idx), last if region is not None else len(raw_lines) - 1)
            if name is not None:
                parent = parents[-1][0] if parents else None
                body = slice_(start, end)
                out.append(SymbolDef(name, kind, file_path, (start, end), body, parent))
                if kind == "function" and parents:
                    header = "".join(h for _, h in parents)
                    out.append(SymbolDef(name, kind, file_path, (start, end), header + body, parent, True))
                if kind in ("class", "object") and body_open is not None:
                    open_line = braces.line_of(body_open)
                    close_line = braces.line_of(braces.match[body_open])
                    header = slice_(idx, open_line)
                    walk(body_open, open_line, close_line, parents + [(name, header)])
            idx = end + 1

    if raw_lines:
        walk(None, 0, len(raw_lines) - 1, [])
    return out


# ---------------------------------------------------------------------------
# Public operations
# ---------------------------------------------------------------------------


def extract_definitions(
    file_text: str, language: str, file_path: str = "", diagnostics: list[str] | None = None
) -> list[SymbolDef]:
    """Definitions in source order; methods are followed by an augmented variant."""
    _check_language(language)
    if not file_text:
        return []
    if language == "python":
        return _python_defs(file_text, file_path, diagnostics)
    return _kotlin_defs(file_text, file_path, diagnostics)


def identifiers(text: str) -> list[re.Match]:
    return [m for m in _WORD.finditer(text) if not m.group(0)[0].isdigit()]


def extract_referenced_symbols(prefix: str, suffix: str, language: str | None = None) -> list[RankedSymbol]:
    """Identifiers around the caret, nearest first.

    Distance is counted in characters from the end of an occurrence to the
    end of the prefix, or from the start of the suffix to the occurrence.
    Without ``language`` the keywords of every supported language are removed.
    """
    if language is None:
        stop = PYTHON_KEYWORDS | KOTLIN_KEYWORDS
    else:
        _check_language(language)
        stop = KEYWORDS[language]
    best: dict[str, int] = {}
    counts: dict[str, int] = {}
    caret = len(prefix)
    for m in identifiers(prefix):
        name = m.group(0)
        if name in stop:
            continue
        dist = caret - m.end()
        best[name] = min(best.get(name, dist), dist)
        counts[name] = counts.get(name, 0) + 1
    for m in identifiers(suffix):
        name = m.group(0)
        if name in stop:
            continue
        dist = m.start()
        best[name] = min(best.get(name, dist), dist)
        counts[name] = counts.get(name, 0) + 1
    ranked = [RankedSymbol(name, best[name], counts[name]) for name in best]
    ranked.sort(key=lambda s: (s.distance_chars, -s.occurrences, s.name))
    return ranked


def _caret_at_top_level(prefix: str, suffix: str) -> bool:
    partial = prefix[prefix.rfind("\n") + 1 :]
    rest = suffix.split("\n", 1)
    current = partial + rest[0]
    if current.strip():
        return _indent_width(current) == 0
    for line in split_lines(rest[1] if len(rest) > 1 else ""):
        if line.strip():
            return _indent_width(line) == 0
    return True


def _caret_line(prefix: str) -> int:
    return prefix.count("\n")


def enclosing_blocks(
    prefix: str, suffix: str, language: str, fallback_lines: int = FALLBACK_LINES
) -> tuple[str, str]:
    """Last complete top-level block before the caret and first one after it."""
    _check_language(language)
    before = ""
    caret_line = _caret_line(prefix)
    blocks = [
        d
        for d in extract_definitions(prefix, language)
        if d.parent is None
        and d.kind in ("function", "class", "object")
        and (d.span[1] < caret_line or (language == "kotlin" and d.text.rstrip().endswith("}")))
    ]
    if language == "python" and blocks:
        # the final block is only finished if the caret sits back at column 0
        last_top = max(d.span[0] for d in blocks)
        later = [st for st in _python_statements(prefix)[1] if st.indent == 0 and st.start > last_top]
        if not later and not _caret_at_top_level(prefix, suffix):
            blocks = [d for d in blocks if d.span[0] != last_top]
    if blocks:
        before = max(blocks, key=lambda d: d.span).text
    else:
        before = tail_lines(prefix, fallback_lines)

    after = ""
    if suffix:
        following = [
            d
            for d in extract_definitions(suffix, language)
            if d.parent is None and d.kind in ("function", "class", "object") and d.span[0] > 0
        ]
        if following:
            after = min(following, key=lambda d: d.span).text
        else:
            after = head_lines(suffix, fallback_lines)
    return before, after


# ---------------------------------------------------------------------------
# Imports
# ---------------------------------------------------------------------------

_PY_IMPORT = re.compile(r"^\s*import\s+(.+)$", re.S)
_PY_FROM = re.compile(r"^\s*from\s+(\.*)([\w.]*)\s+import\s+(.+)$", re.S)
_KT_IMPORT = re.compile(r"^[ \t]*import[ \t]+([\w.`]+?)(\.\*)?(?:[ \t]+as[ \t]+\w+)?[ \t]*;?[ \t]*$", re.M)
_KT_PACKAGE = re.compile(r"^[ \t]*package[ \t]+([\w.`]+)", re.M)


def _resolve_module(parts: list[str], snapshot: RepoSnapshot, base: str | None) -> str | None:
    rel = "/".join(parts)
    candidates = [f"{rel}/__init__.py", f"{rel}.py"] if rel else ["__init__.py"]
    if base is not None:
        for cand in candidates:
            path = f"{base}/{cand}" if base else cand
            if path in snapshot:
                return path
        return None
    for cand in candidates:
        if cand in snapshot:
            return cand
    for cand in candidates:
        hits = sorted((p for p in snapshot.files if p.endswith("/" + cand)), key=lambda p: (len(p), p))
        if hits:
            return hits[0]
    return None


def _python_imports(file_text: str, snapshot: RepoSnapshot, file_path: str | None) -> list[str]:
    found: list[str] = []
    for st in _python_statements(file_text)[1]:
        stmt = " ".join(st.full_code.split())
        m = _PY_FROM.match(stmt)
        if m:
            dots, module, names = m.groups()
            base = None
            if dots:
                if file_path is None:
                    continue
                pieces = PurePosixPath(file_path).parent.parts
                up = len(dots) - 1
                if up > len(pieces):
                    continue
                base = "/".join(pieces[: len(pieces) - up])
            parts = [p for p in module.split(".") if p]
            hit = _resolve_module(parts, snapshot, base)
            if hit:
                found.append(hit)
            for name in names.strip("() ").split(","):
                name = name.strip().split(" as ")[0].strip()
                if name and name != "*" and name.isidentifier():
                    sub = _resolve_module(parts + [name], snapshot, base)
                    if sub:
                        found.append(sub)
            continue
        m = _PY_IMPORT.match(stmt)
        if m:
            for item in m.group(1).split(","):
                module = item.strip().split(" as ")[0].strip()
                if module and all(p.isidentifier() for p in module.split(".")):
                    hit = _resolve_module(module.split("."), snapshot, None)
                    if hit:
                        found.append(hit)
    return found


def kotlin_packages(snapshot: RepoSnapshot) -> dict[str, list[str]]:
    cached = snapshot.memo.get("kotlin_packages")
    if cached is None:
        cached = {}
        for path, text in snapshot.files.items():
            if not path.endswith((".kt", ".kts")):
                continue
            m = _KT_PACKAGE.search(text)
            cached.setdefault(m.group(1).replace("`", "") if m else "", []).append(path)
        snapshot.memo["kotlin_packages"] = cached
    return cached


def _declares(text: str, name: str) -> bool:
    pattern = rf"\b(?:class|interface|object|fun|val|var|typealias)\s+(?:<[^>]*>\s*)?(?:[\w.]+\.)?{re.escape(name)}\b"
    return re.search(pattern, text) is not None


def _kotlin_imports(file_text: str, snapshot: RepoSnapshot, file_path: str | None) -> list[str]:
    packages = kotlin_packages(snapshot)
    found: list[str] = []
    for m in _KT_IMPORT.finditer(_blank_kotlin(file_text)):
        dotted = m.group(1).replace("`", "").split(".")
        if m.group(2):
            found.extend(packages.get(".".join(dotted), []))
            continue
        for cut in range(len(dotted) - 1, 0, -1):
            files = packages.get(".".join(dotted[:cut]))
            if not files:
                continue
            name = dotted[cut]
            declaring = [p for p in files if _declares(snapshot.files[p], name)]
            if not declaring:
                declaring = [p for p in files if PurePosixPath(p).stem == name]
            if declaring:
                found.extend(declaring)
                break
    return found


def imported_files(
    file_text: str, snapshot: RepoSnapshot, language: str, file_path: str | None = None
) -> list[str]:
    """Snapshot paths for the file's resolvable imports, in import order."""
    _check_language(language)
    if language == "python":
        found = _python_imports(file_text, snapshot, file_path)
    else:
        found = _kotlin_imports(file_text, snapshot, file_path)
    return [p for p in dict.fromkeys(found) if p != file_path]
