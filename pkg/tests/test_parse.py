from __future__ import annotations

import random
from pathlib import Path

import pytest
from hypothesis import given
from hypothesis import strategies as st

from builders import make_snapshot
from ctxcollect.parse import (
    KOTLIN_KEYWORDS,
    PYTHON_KEYWORDS,
    enclosing_blocks,
    extract_definitions,
    extract_referenced_symbols,
    identifiers,
    imported_files,
)
from ctxcollect.textutil import split_lines

FIXTURES = Path(__file__).parent / "fixtures"

# (name, kind, parent, span) annotated by reading the fixture, 0-based inclusive lines
PY_EXPECTED = [
    ("Item", "class", None, (9, 31)),
    ("__init__", "function", "Item", (13, 15)),
    ("label", "function", "Item", (17, 23)),
    ("restock", "function", "Item", (25, 31)),
    ("format_items", "function", None, (34, 39)),
    ("Warehouse", "class", None, (42, 54)),
    ("__init__", "function", "Warehouse", (43, 44)),
    ("fetch", "function", "Warehouse", (46, 48)),
    ("total", "function", "Warehouse", (50, 54)),
    ("sync_all", "function", None, (57, 59)),
    ("Empty", "class", None, (62, 65)),
    ("make", "function", "Empty", (63, 65)),
    ("long_function", "function", None, (68, 145)),
    ("last", "function", None, (148, 150)),
]

KT_EXPECTED = [
    ("Point", "class", None, (5, 18)),
    ("norm", "function", "Point", (7, 10)),
    ("plus", "function", "Point", (12, 13)),
    ("Companion", "object", "Point", (15, 17)),
    ("ORIGIN", "variable", "Companion", (16, 16)),
    ("Shape", "class", None, (20, 22)),
    ("area", "function", "Shape", (21, 21)),
    ("Registry", "object", None, (24, 30)),
    ("shapes", "variable", "Registry", (25, 25)),
    ("register", "function", "Registry", (27, 29)),
    ("distance", "function", None, (32, 36)),
    ("DEFAULT_NAME", "variable", None, (38, 38)),
    ("`weird name`", "function", None, (40, 40)),
]


def _slice(text: str, span: tuple[int, int]) -> str:
    return "".join(split_lines(text)[span[0] : span[1] + 1])


class TestPythonDefinitions:
    text = (FIXTURES / "sample_module.py").read_text()

    def test_fixture_size(self):
        assert len(split_lines(self.text)) == 200

    def test_plain_definitions_match_annotation(self):
        defs = [d for d in extract_definitions(self.text, "python", "m.py") if not d.augmented]
        assert [(d.name, d.kind, d.parent, d.span) for d in defs] == PY_EXPECTED

    def test_counts(self):
        defs = extract_definitions(self.text, "python", "m.py")
        plain = [d for d in defs if not d.augmented]
        assert len(plain) == 14
        assert sum(d.kind == "class" for d in plain) == 3
        assert sum(d.parent is not None for d in plain) == 7
        assert sum(d.augmented for d in defs) == 7

    def test_texts_are_slices(self):
        for d in extract_definitions(self.text, "python", "m.py"):
            if not d.augmented:
                assert d.text == _slice(self.text, d.span)

    def test_augmented_starts_with_class_header(self):
        for d in extract_definitions(self.text, "python", "m.py"):
            if d.augmented:
                assert f"class {d.parent}" in d.text.splitlines()[0] or d.text.startswith("@")
                assert d.text.endswith(_slice(self.text, d.span))

    def test_decorator_included(self):
        label = next(d for d in extract_definitions(self.text, "python") if d.name == "label")
        assert label.text.lstrip().startswith("@property")

    def test_string_and_comment_decoys_ignored(self):
        names = {d.name for d in extract_definitions(self.text, "python")}
        assert "not_real" not in names and "fake" not in names

    def test_empty(self):
        assert extract_definitions("", "python") == []

    def test_single_function(self):
        (d,) = extract_definitions("def f():\n  pass", "python")
        assert (d.name, d.kind, d.span) == ("f", "function", (0, 1))

    def test_top_level_assignment(self):
        defs = extract_definitions("X = 1\nY: int = 2\nif X == 1:\n    Z = 3\n", "python")
        assert [(d.name, d.kind) for d in defs] == [("X", "variable"), ("Y", "variable")]

    def test_missing_body_diagnostic(self):
        diags: list[str] = []
        defs = extract_definitions("def broken():\nx = 1\n", "python", "b.py", diags)
        assert diags
        assert [d.name for d in defs if d.kind == "variable"] == ["x"]

    def test_inconsistent_indentation_does_not_raise(self):
        diags: list[str] = []
        text = "class A:\n        def f(self):\n            pass\n    def g(self):\n        pass\n"
        defs = extract_definitions(text, "python", "a.py", diags)
        assert any(d.name == "A" for d in defs)


class TestKotlinDefinitions:
    text = (FIXTURES / "Sample.kt").read_text()

    def test_plain_definitions_match_annotation(self):
        defs = [d for d in extract_definitions(self.text, "kotlin", "S.kt") if not d.augmented]
        assert [(d.name, d.kind, d.parent, d.span) for d in defs] == KT_EXPECTED

    def test_texts_are_slices(self):
        for d in extract_definitions(self.text, "kotlin", "S.kt"):
            if not d.augmented:
                assert d.text == _slice(self.text, d.span)

    def test_annotation_included(self):
        point = next(d for d in extract_definitions(self.text, "kotlin") if d.name == "Point")
        assert point.text.startswith("@Serializable")

    def test_methods_augmented(self):
        aug = [d for d in extract_definitions(self.text, "kotlin") if d.augmented]
        assert {d.name for d in aug} == {"norm", "plus", "area", "register"}
        for d in aug:
            assert d.text.endswith(_slice(self.text, d.span))

    def test_comment_decoy_ignored(self):
        assert "hidden" not in {d.name for d in extract_definitions(self.text, "kotlin")}

    def test_unbalanced_braces(self):
        diags: list[str] = []
        defs = extract_definitions("fun a() {\n  if (x) {\n}\nfun b() = 1\n", "kotlin", "u.kt", diags)
        assert diags
        assert isinstance(defs, list)

    def test_expression_body_continuation(self):
        text = "fun twice(x: Int) =\n    x * 2\n\nfun other() = 0\n"
        defs = extract_definitions(text, "kotlin")
        assert [(d.name, d.span) for d in defs] == [("twice", (0, 1)), ("other", (3, 3))]


class TestRobustness:
    @given(st.text(max_size=300))
    def test_python_never_raises(self, text):
        extract_definitions(text, "python", "f.py", [])

    @given(st.text(alphabet=st.sampled_from("fun class val {}()\"'`/*\n x=$"), max_size=300))
    def test_kotlin_never_raises(self, text):
        extract_definitions(text, "kotlin", "f.kt", [])

    @given(st.text(alphabet=st.sampled_from("def class :\n ()'\"#\\x=@"), max_size=300))
    def test_python_slices_hold(self, text):
        for d in extract_definitions(text, "python", "f.py"):
            assert d.span[0] <= d.span[1]
            if not d.augmented:
                assert d.text == _slice(text, d.span)

    def test_random_bytes(self):
        rng = random.Random(3)
        for _ in range(50):
            raw = bytes(rng.randrange(256) for _ in range(400)).decode("latin-1")
            extract_definitions(raw, "python")
            extract_definitions(raw, "kotlin")

    def test_unknown_language(self):
        with pytest.raises(ValueError):
            extract_definitions("x", "rust")


def _brute_force_ranking(prefix, suffix, stop):
    found = {}
    for text, side in ((prefix, "p"), (suffix, "s")):
        i = 0
        while i < len(text):
            if (text[i].isalpha() or text[i] == "_") and (i == 0 or not (text[i - 1].isalnum() or text[i - 1] == "_")):
                j = i
                while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                name = text[i:j]
                if name not in stop:
                    dist = len(prefix) - j if side == "p" else i
                    d, c = found.get(name, (dist, 0))
                    found[name] = (min(d, dist), c + 1)
                i = j
            else:
                i += 1
    return sorted(((n, d, c) for n, (d, c) in found.items()), key=lambda t: (t[1], -t[2], t[0]))


class TestReferencedSymbols:
    def test_empty(self):
        assert extract_referenced_symbols("", "") == []

    def test_positional(self):
        syms = extract_referenced_symbols("x = Pipeline(", "")
        assert [s.name for s in syms] == ["Pipeline", "x"]

    def test_keywords_removed(self):
        assert [s.name for s in extract_referenced_symbols("def f(self):\n    return ", "", "python")] == ["f"]

    def test_no_subtoken_split(self):
        assert [s.name for s in extract_referenced_symbols("loadUserData(", "")] == ["loadUserData"]

    def test_identifiers_skip_numbers(self):
        assert [m.group(0) for m in identifiers("a1 2b _c 3")] == ["a1", "_c"]

    def test_twelve_identifiers_against_brute_force(self):
        prefix = "import numpy\nresult = compute(alpha, beta)\nfor item in items:\n    total += item.weight * "
        suffix = "scale\n    log(total, gamma)\nreturn result\n"
        syms = extract_referenced_symbols(prefix, suffix, "python")
        expected = _brute_force_ranking(prefix, suffix, PYTHON_KEYWORDS)
        assert len(expected) == 12
        assert [(s.name, s.distance_chars, s.occurrences) for s in syms] == expected

    @given(st.text(alphabet=st.sampled_from("ab_1 (\n.xy"), max_size=80), st.text(alphabet=st.sampled_from("ab_1 (\n.xy"), max_size=80))
    def test_ordering_and_uniqueness(self, prefix, suffix):
        syms = extract_referenced_symbols(prefix, suffix)
        names = [s.name for s in syms]
        assert len(names) == len(set(names))
        keys = [(s.distance_chars, -s.occurrences, s.name) for s in syms]
        assert keys == sorted(keys)
        assert all(s.occurrences >= 1 and s.distance_chars >= 0 for s in syms)
        expected = _brute_force_ranking(prefix, suffix, PYTHON_KEYWORDS | KOTLIN_KEYWORDS)
        assert [(s.name, s.distance_chars, s.occurrences) for s in syms] == expected


class TestEnclosingBlocks:
    def test_fallback_without_blocks(self):
        prefix = "".join(f"x{i} = {i}\n" for i in range(80))
        before, _ = enclosing_blocks(prefix, "", "python")
        assert before == "".join(f"x{i} = {i}\n" for i in range(30, 80))

    def test_prefix_ending_at_function_end(self):
        prefix = "def first():\n    return 1\n\n\ndef second(a):\n    return a\n"
        before, after = enclosing_blocks(prefix, "", "python")
        assert before == "def second(a):\n    return a\n"
        assert after == ""

    def test_caret_inside_function_uses_previous_block(self):
        prefix = "def first():\n    return 1\n\n\ndef second(a):\n    b = a\n    "
        before, _ = enclosing_blocks(prefix, "return b\n", "python")
        assert before == "def first():\n    return 1\n"

    def test_after_is_next_block(self):
        suffix = "    return b\n\n\ndef third():\n    pass\n\n\ndef fourth():\n    pass\n"
        _, after = enclosing_blocks("def f():\n    ", suffix, "python")
        assert after == "def third():\n    pass\n"

    def test_after_fallback(self):
        _, after = enclosing_blocks("x = ", "1\ny = 2\n", "python")
        assert after == "1\ny = 2\n"

    def test_kotlin(self):
        prefix = "fun a(): Int {\n    return 1\n}\n\nfun b() {\n    val x = "
        suffix = "2\n}\n\nfun c() = 3\n"
        before, after = enclosing_blocks(prefix, suffix, "kotlin")
        assert before == "fun a(): Int {\n    return 1\n}\n"
        assert after == "fun c() = 3\n"


class TestImportedFiles:
    snapshot = make_snapshot(
        {
            "pkg/__init__.py": "",
            "pkg/mod.py": "class X: pass\n",
            "pkg/sub/__init__.py": "",
            "pkg/sub/leaf.py": "",
            "src/tools/helpers.py": "",
            "app/main.py": "",
            "app/local.py": "",
        }
    )

    def test_no_imports(self):
        assert imported_files("x = 1\n", self.snapshot, "python") == []

    def test_from_import(self):
        assert imported_files("from pkg.mod import X\n", self.snapshot, "python") == ["pkg/mod.py"]

    def test_five_imports_three_resolvable(self):
        text = (
            "import os\n"
            "import pkg.sub\n"
            "from pkg.mod import X\n"
            "from missing.thing import Y\n"
            "from . import local\n"
        )
        got = imported_files(text, self.snapshot, "python", "app/main.py")
        assert got == ["pkg/sub/__init__.py", "pkg/mod.py", "app/local.py"]

    def test_suffix_match_for_source_roots(self):
        assert imported_files("import tools.helpers\n", self.snapshot, "python") == ["src/tools/helpers.py"]

    def test_parenthesized_multiline(self):
        text = "from pkg.sub import (\n    leaf,\n)\n"
        assert imported_files(text, self.snapshot, "python") == ["pkg/sub/__init__.py", "pkg/sub/leaf.py"]

    def test_excludes_self(self):
        assert imported_files("from pkg import mod\n", self.snapshot, "python", "pkg/mod.py") == ["pkg/__init__.py"]

    def test_kotlin(self):
        snap = make_snapshot(
            {
                "src/geo/Shapes.kt": "package geo\n\nclass Circle\nclass Square\n",
                "src/geo/Util.kt": "package geo\n\nfun area() = 1\n",
                "src/other/Thing.kt": "package other\n\nobject Thing\n",
                "src/app/Main.kt": "package app\n",
            }
        )
        text = "package app\n\nimport geo.Circle\nimport other.*\nimport kotlin.math.sqrt\nimport geo.area as a\n"
        assert imported_files(text, snap, "kotlin", "src/app/Main.kt") == [
            "src/geo/Shapes.kt",
            "src/other/Thing.kt",
            "src/geo/Util.kt",
        ]
