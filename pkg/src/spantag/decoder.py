"""Greedy span decoding: threshold, resolve overlaps, fill gaps, tag.

Overlap resolution keeps spans in descending probability order (ties:
smaller l, then smaller r) and accepts a span iff it overlaps nothing
accepted so far; overlap is on open intervals, so (0, 2) and (2, 3) are
compatible. Characters left uncovered afterwards become length-1 spans,
so the output is always a partition of [0, n).
"""

from __future__ import annotations

from typing import Mapping, Sequence

import numpy as np

from .corpus import Span, TaggedSpan


def threshold_candidates(scores: Mapping[Span, float]) -> dict[Span, float]:
    """Spans with probability strictly greater than 0.5."""
    return {span: p for span, p in scores.items() if p > 0.5}


def post_process(candidates: Mapping[Span, float], n: int) -> list[Span]:
    """Resolve overlaps greedily by score, then fill gaps with singletons.

    Always returns a sorted, gapless, non-overlapping partition of [0, n);
    an empty candidate set yields all single-character spans.
    """
    for span in candidates:
        if not (0 <= span.l < span.r <= n):
            raise ValueError(f"candidate span {span} outside a length-{n} sentence")
    order = sorted(candidates.items(), key=lambda item: (-item[1], item[0].l, item[0].r))
    covered = bytearray(n)
    accepted = []
    for span, _ in order:
        if any(covered[span.l : span.r]):
            continue
        accepted.append(span)
        for i in range(span.l, span.r):
            covered[i] = 1
    for i in range(n):
        if not covered[i]:
            accepted.append(Span(i, i + 1))
    accepted.sort()
    return accepted


def assign_tags(
    segmentation: Sequence[Span],
    tag_scores: Mapping[Span, np.ndarray],
    non_word_id: int,
) -> list[TaggedSpan]:
    """Argmax label per span, ties to the lowest tag id. The segmentation
    is already fixed, so a winning non-word label is replaced by the best
    POS tag; the output never contains the non-word id."""
    result = []
    for span in segmentation:
        try:
            scores = tag_scores[span]
        except KeyError:
            raise KeyError(f"no tag scores for span {span}") from None
        best = int(np.argmax(scores))
        if best == non_word_id:
            masked = np.where(np.arange(len(scores)) == non_word_id, -np.inf, scores)
            best = int(np.argmax(masked))
        result.append(TaggedSpan(span, best))
    return result
