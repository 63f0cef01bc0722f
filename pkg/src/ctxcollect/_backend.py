"""Kernel selection.

The compiled kernels are used when the extension was built; setting
``CTXCOLLECT_PURE_PYTHON=1`` forces the pure-Python fallback.
"""

from __future__ import annotations

import os

from ctxcollect import _pykernels

BACKEND = "python"
kernels = _pykernels

if not os.environ.get("CTXCOLLECT_PURE_PYTHON"):
    try:
        from ctxcollect import _ckernels
    except ImportError:
        pass
    else:
        kernels = _ckernels
        BACKEND = "cython"

ngram_match_stats = kernels.ngram_match_stats
bm25_accumulate = kernels.bm25_accumulate
hashed_ngram_vector = kernels.hashed_ngram_vector

__all__ = ["BACKEND", "bm25_accumulate", "hashed_ngram_vector", "kernels", "ngram_match_stats"]
