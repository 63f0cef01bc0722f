from __future__ import annotations

import pytest
from hypothesis import given
from hypothesis import strategies as st

from builders import make_snapshot
from ctxcollect.chunk import adjacent_chunk, block_chunks, char_window_chunks, line_window_chunks
from ctxcollect.textutil import split_lines


def numbered(n: int) -> str:
    return "".join(f"line {i}\n" for i in range(n))


class TestLineWindows:
    def test_small_file(self):
        (c,) = line_window_chunks("a.py", numbered(10))
        assert (c.start_line, c.end_line) == (0, 9)

    def test_forty_five_lines(self):
        spans = [(c.start_line, c.end_line) for c in line_window_chunks("a.py", numbered(45), 30, 15)]
        assert spans == [(0, 29), (15, 44), (30, 44)]

    def test_empty(self):
        assert line_window_chunks("a.py", "") == []

    @pytest.mark.parametrize("window,stride", [(0, 1), (10, 0), (10, 11)])
    def test_bad_arguments(self, window, stride):
        with pytest.raises(ValueError):
            line_window_chunks("a.py", "x\n", window, stride)

    def test_ids_unique_and_offsets(self):
        text = numbered(100)
        chunks = line_window_chunks("a.py", text, 20, 7)
        assert len({c.chunk_id for c in chunks}) == len(chunks)
        for c in chunks:
            assert text[c.start_offset :].startswith(c.text)

    @given(st.text(alphabet=st.sampled_from("ab\n"), max_size=200), st.integers(1, 12), st.integers(1, 12))
    def test_reconstruction(self, text, window, stride):
        stride = min(stride, window)
        chunks = line_window_chunks("f", text, window, stride)
        lines = split_lines(text)
        rebuilt = []
        covered = 0
        for c in chunks:
            assert c.text and c.text == "".join(lines[c.start_line : c.end_line + 1])
            rebuilt.extend(lines[max(covered, c.start_line) : c.end_line + 1])
            covered = max(covered, c.end_line + 1)
        assert "".join(rebuilt) == text

    def test_no_trailing_newline(self):
        chunks = line_window_chunks("a.py", "a\nb", 1, 1)
        assert [c.text for c in chunks] == ["a\n", "b"]


class TestCharWindows:
    def test_short_text(self):
        assert len(char_window_chunks("a.kt", "x" * 100)) == 1

    def test_offsets(self):
        chunks = char_window_chunks("a.kt", "x" * 3000, 2000, 500)
        assert [c.start_offset for c in chunks] == [0, 1500]
        assert len(chunks[1].text) == 1500

    def test_empty(self):
        assert char_window_chunks("a.kt", "") == []

    @pytest.mark.parametrize("size,overlap", [(0, 0), (10, 10), (10, -1)])
    def test_bad_arguments(self, size, overlap):
        with pytest.raises(ValueError):
            char_window_chunks("a.kt", "abc", size, overlap)

    @given(st.text(max_size=300), st.integers(1, 50), st.integers(0, 49))
    def test_windows_slice_text(self, text, size, overlap):
        overlap = min(overlap, size - 1)
        chunks = char_window_chunks("f", text, size, overlap)
        for c in chunks:
            assert c.text == text[c.start_offset : c.start_offset + len(c.text)] and c.text
        if text:
            assert chunks[-1].start_offset + len(chunks[-1].text) == len(text)


class TestBlockChunks:
    def test_no_definitions(self):
        assert block_chunks("a.py", "x = 1\n", "python") == []

    def test_two_functions(self):
        text = "def a():\n    return 1\n\n\ndef b():\n    return 2\n"
        chunks = block_chunks("a.py", text, "python")
        assert [c.text for c in chunks] == ["def a():\n    return 1\n", "def b():\n    return 2\n"]

    def test_methods_are_augmented(self):
        text = (
            "class Shape:\n"
            "    def area(self):\n        return 0\n\n"
            "    def perimeter(self):\n        return 0\n\n"
            "    def name(self):\n        return 'shape'\n"
        )
        chunks = block_chunks("s.py", text, "python")
        methods = [c for c in chunks if c.chunk_id.endswith("A")]
        assert len(methods) == 3
        assert all(c.text.startswith("class Shape:\n") for c in methods)
        assert len({c.chunk_id for c in chunks}) == len(chunks)

    def test_kotlin(self):
        text = "class A {\n    fun f() = 1\n}\n\nfun g() {\n}\n"
        chunks = block_chunks("a.kt", text, "kotlin")
        assert [c.kind for c in chunks] == ["block"] * 3
        assert chunks[1].text.startswith("class A {")


class TestAdjacency:
    snap = make_snapshot({"a.py": numbered(60)})

    def test_next_window(self):
        first = line_window_chunks("a.py", numbered(60), 30, 15)[0]
        nxt = adjacent_chunk(first, self.snap, "next")
        assert (nxt.start_line, nxt.end_line) == (30, 59)

    def test_prev_clipped(self):
        chunk = line_window_chunks("a.py", numbered(60), 30, 15)[1]
        prev = adjacent_chunk(chunk, self.snap, "prev")
        assert (prev.start_line, prev.end_line) == (0, 14)

    def test_boundaries(self):
        chunks = line_window_chunks("a.py", numbered(60), 30, 15)
        assert adjacent_chunk(chunks[-1], self.snap, "next") is None
        assert adjacent_chunk(chunks[0], self.snap, "prev") is None

    def test_missing_path(self):
        chunk = line_window_chunks("b.py", numbered(5))[0]
        with pytest.raises(KeyError):
            adjacent_chunk(chunk, self.snap, "next")

    def test_bad_direction(self):
        chunk = line_window_chunks("a.py", numbered(5))[0]
        with pytest.raises(ValueError):
            adjacent_chunk(chunk, self.snap, "up")

    def test_char_windows(self):
        text = "abcdefghij" * 30
        snap = make_snapshot({"k.kt": text})
        first = char_window_chunks("k.kt", text, 100, 20)[0]
        nxt = adjacent_chunk(first, snap, "next")
        assert nxt.start_offset == 100 and nxt.text == text[100:200]
        assert adjacent_chunk(nxt, snap, "prev").text == text[0:100]
