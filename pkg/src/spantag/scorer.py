"""Biaffine span scoring.

Segmentation head: probability that span (l, r) is a word,
    sigmoid( [u_l ; 1]^T  W  v_r )          W: (d+1, d)
with u = left MLP of boundary(l), v = right MLP of boundary(r). Only the
left vector is augmented with the constant 1.

Tag head: score of label t for span (l, r),
    [u_l ; 1]^T  W_t  [v_r ; 1]             W_t: (d+1, d+1)
over all labels (POS tags plus non-word), both sides augmented.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping

import numpy as np

from .autograd import Node, ParamStore, matmul, pad_ones, pairwise_bilinear, sigmoid, take_rows, transpose
from .corpus import Span
from .encoder import BoundaryTable
from .layers import glorot_uniform, mlp_forward, uniform_init

DEFAULT_MAX_SPAN_LEN = 7


@dataclass
class ScorerParams:
    seg_left_w: Node
    seg_left_b: Node
    seg_right_w: Node
    seg_right_b: Node
    tag_left_w: Node
    tag_left_b: Node
    tag_right_w: Node
    tag_right_b: Node
    seg_biaffine: Node  # (d+1, d)
    tag_biaffine: Node  # (n_tags, d+1, d+1)
    mlp_size: int
    n_tags: int


def init_scorer_params(
    store: ParamStore, boundary_dim: int, mlp_size: int, n_tags: int
) -> ScorerParams:
    d = mlp_size

    def mlp(name: str) -> tuple[Node, Node]:
        return (
            store.add(f"{name}.weight", (d, boundary_dim), glorot_uniform),
            store.add(f"{name}.bias", (d,), 0.0),
        )

    seg_left_w, seg_left_b = mlp("mlp_seg_left")
    seg_right_w, seg_right_b = mlp("mlp_seg_right")
    tag_left_w, tag_left_b = mlp("mlp_tag_left")
    tag_right_w, tag_right_b = mlp("mlp_tag_right")
    return ScorerParams(
        seg_left_w=seg_left_w,
        seg_left_b=seg_left_b,
        seg_right_w=seg_right_w,
        seg_right_b=seg_right_b,
        tag_left_w=tag_left_w,
        tag_left_b=tag_left_b,
        tag_right_w=tag_right_w,
        tag_right_b=tag_right_b,
        seg_biaffine=store.add("seg_biaffine", (d + 1, d), uniform_init(0.1)),
        tag_biaffine=store.add("tag_biaffine", (n_tags, d + 1, d + 1), uniform_init(0.1)),
        mlp_size=d,
        n_tags=n_tags,
    )


def valid_spans(n: int, max_span_len: int = DEFAULT_MAX_SPAN_LEN) -> list[Span]:
    """All candidate spans of a length-n sentence, longest first excluded:
    0 <= l < r <= n and r - l <= max_span_len."""
    return [
        Span(l, r) for l in range(n) for r in range(l + 1, min(l + max_span_len, n) + 1)
    ]


def seg_prob_matrix(
    table: BoundaryTable,
    params: ScorerParams,
    train_mode: bool = False,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Node:
    """(n+1, n+1) node of sigmoid span probabilities; entry [l, r] scores
    span (l, r). Entries outside 0 <= l < r <= n are meaningless."""
    u = mlp_forward(table.vectors, params.seg_left_w, params.seg_left_b, dropout_rate, train_mode, rng)
    v = mlp_forward(table.vectors, params.seg_right_w, params.seg_right_b, dropout_rate, train_mode, rng)
    raw = matmul(matmul(pad_ones(u), params.seg_biaffine), transpose(v))
    return sigmoid(raw)


def tag_score_rows(
    table: BoundaryTable,
    params: ScorerParams,
    spans: list[Span],
    train_mode: bool = False,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> Node:
    """(len(spans), n_tags) node of unnormalized label scores."""
    u = mlp_forward(table.vectors, params.tag_left_w, params.tag_left_b, dropout_rate, train_mode, rng)
    v = mlp_forward(table.vectors, params.tag_right_w, params.tag_right_b, dropout_rate, train_mode, rng)
    u1 = pad_ones(u)
    v1 = pad_ones(v)
    lefts = take_rows(u1, [s.l for s in spans])
    rights = take_rows(v1, [s.r for s in spans])
    return pairwise_bilinear(lefts, params.tag_biaffine, rights)


def _check_spans(spans: Iterable[Span], n: int) -> list[Span]:
    out = []
    for span in spans:
        if not (0 <= span.l < span.r <= n):
            raise ValueError(f"span {span} outside the valid range of a length-{n} sentence")
        out.append(span)
    return out


def score_all_seg(
    table: BoundaryTable, params: ScorerParams, max_span_len: int = DEFAULT_MAX_SPAN_LEN
) -> dict[Span, float]:
    """Segmentation probability for every valid span of the sentence."""
    probs = seg_prob_matrix(table, params).value
    return {span: float(probs[span.l, span.r]) for span in valid_spans(table.n, max_span_len)}


def score_all_tag(
    table: BoundaryTable, params: ScorerParams, spans: Iterable[Span]
) -> dict[Span, np.ndarray]:
    """Label score vector (length n_tags) for each requested span."""
    requested = _check_spans(spans, table.n)
    if not requested:
        return {}
    scores = tag_score_rows(table, params, requested).value
    return {span: scores[i].copy() for i, span in enumerate(requested)}
