"""Time the compiled kernels against the pure-Python fallback.

    python3 benchmarks/bench_kernels.py [--repeat N]
"""

from __future__ import annotations

import argparse
import random
import time

import numpy as np

from ctxcollect import _pykernels

try:
    from ctxcollect import _ckernels
except ImportError:  # extension not built
    _ckernels = None


def _text(rng: random.Random, n: int) -> str:
    return "".join(rng.choice("abcdefgh \n_()=") for _ in range(n))


def _best(fn, repeat: int) -> float:
    times = []
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        times.append(time.perf_counter() - start)
    return min(times)


def cases(rng: random.Random):
    pairs = [(_text(rng, 400), _text(rng, 400)) for _ in range(50)]
    texts = [_text(rng, 2000) for _ in range(20)]
    n_docs = 20000
    doc_len = np.array([float(rng.randint(5, 200)) for _ in range(n_docs)])
    docs = np.array(sorted(rng.sample(range(n_docs), 5000)), dtype=np.int64)
    tfs = np.array([float(rng.randint(1, 6)) for _ in docs])
    avg = float(doc_len.mean())

    def chrf_stats(k):
        return lambda: [k.ngram_match_stats(a, b, 6) for a, b in pairs]

    def hashing(k):
        return lambda: [k.hashed_ngram_vector(t, 1024, 3, 5) for t in texts]

    def bm25(k):
        def run():
            scores = np.zeros(n_docs)
            for _ in range(20):
                k.bm25_accumulate(scores, docs, tfs, doc_len, 0.8, 1.2, 0.75, avg)

        return run

    return [("ngram_match_stats (50 pairs x 400 chars)", chrf_stats),
            ("hashed_ngram_vector (20 texts x 2000 chars)", hashing),
            ("bm25_accumulate (20 terms x 5000 postings)", bm25)]


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=3)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args(argv)
    rng = random.Random(args.seed)
    print(f"{'kernel':46} {'python':>10} {'cython':>10} {'speedup':>8}")
    for name, make in cases(rng):
        py = _best(make(_pykernels), args.repeat)
        if _ckernels is None:
            print(f"{name:46} {py:10.4f} {'n/a':>10} {'n/a':>8}")
            continue
        cy = _best(make(_ckernels), args.repeat)
        print(f"{name:46} {py:10.4f} {cy:10.4f} {py / cy:7.1f}x")
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
