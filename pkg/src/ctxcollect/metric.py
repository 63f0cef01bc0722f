"""chrF between a completion and its ground truth, and score aggregation.

chrF here is the plain harmonic mean (beta = 1) of character n-gram precision
and recall, each averaged arithmetically over orders 1..max_order. Orders for
which neither text has an n-gram are left out of both averages. These choices
may differ from the scorer a hosted leaderboard used.
"""

from __future__ import annotations

import re
from collections import Counter
from dataclasses import dataclass
from statistics import fmean
from typing import Mapping

from ctxcollect._backend import ngram_match_stats

_WS = re.compile(r"\s+")


@dataclass(frozen=True)
class ChrfParams:
    max_order: int = 6
    whitespace_mode: str = "collapse"  # or "keep"

    def __post_init__(self):
        if not 1 <= self.max_order <= 10:
            raise ValueError("max_order must be in 1..10")
        if self.whitespace_mode not in ("keep", "collapse"):
            raise ValueError("whitespace_mode must be 'keep' or 'collapse'")


DEFAULT_PARAMS = ChrfParams()


def char_ngrams(text: str, n: int) -> Counter:
    if n < 1:
        raise ValueError("n must be >= 1")
    return Counter(text[i : i + n] for i in range(len(text) - n + 1))


def normalize(text: str, params: ChrfParams = DEFAULT_PARAMS) -> str:
    if params.whitespace_mode == "collapse":
        return _WS.sub(" ", text)
    return text


def chrf(hypothesis: str, reference: str, params: ChrfParams = DEFAULT_PARAMS) -> float:
    hyp = normalize(hypothesis, params)
    ref = normalize(reference, params)
    if not hyp and not ref:
        return 1.0
    if not hyp or not ref:
        return 0.0
    precisions = []
    recalls = []
    for hyp_total, ref_total, matched in ngram_match_stats(hyp, ref, params.max_order):
        if hyp_total == 0 and ref_total == 0:
            continue
        precisions.append(matched / hyp_total if hyp_total else 0.0)
        recalls.append(matched / ref_total if ref_total else 0.0)
    chr_p = fmean(precisions)
    chr_r = fmean(recalls)
    if chr_p + chr_r == 0:
        return 0.0
    return 2 * chr_p * chr_r / (chr_p + chr_r)


def aggregate_scores(per_point: Mapping[str, Mapping[str, float]]) -> tuple[dict[str, float], float]:
    """Mean per model over points, and the mean of those per-model means."""
    if not per_point:
        raise ValueError("no scores")
    rows = iter(per_point.items())
    first_id, first = next(rows)
    models = list(first)
    if not models:
        raise ValueError("no scores")
    for point_id, scores in rows:
        if set(scores) != set(models):
            raise ValueError(f"point {point_id!r} has models {sorted(scores)}, expected {sorted(models)}")
    per_model = {m: fmean(scores[m] for scores in per_point.values()) for m in models}
    return per_model, fmean(per_model.values())
