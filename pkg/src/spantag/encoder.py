"""Sentence encoder: characters -> embeddings -> BiLSTM -> boundary table.

Boundary index l sits in the gap left of character l+1 (0-based: between
chars[l-1] and chars[l]); its representation is the concatenation of the
forward state f_l and backward state b_{l+1}, with zero sentinel states
f_0 and b_{n+1} at the sentence edges.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .autograd import (
    AutogradError,
    Node,
    ParamStore,
    concat,
    dropout,
    row,
    stack_rows,
    take_rows,
)
from .corpus import Vocab
from .layers import bilstm_forward, glorot_uniform, uniform_init, zeros_init


@dataclass
class EncoderParams:
    embedding: Node  # (vocab, emb_dim)
    fw_weight: Node
    fw_bias: Node
    bw_weight: Node
    bw_bias: Node
    emb_dim: int
    hidden: int

    @property
    def boundary_dim(self) -> int:
        return 2 * self.hidden


def init_encoder_params(
    store: ParamStore, vocab_size: int, emb_dim: int, hidden: int
) -> EncoderParams:
    gate_rows = 4 * hidden
    return EncoderParams(
        embedding=store.add("embedding", (vocab_size, emb_dim), uniform_init(0.1)),
        fw_weight=store.add("lstm_fw.weight", (gate_rows, emb_dim + hidden), glorot_uniform),
        fw_bias=store.add("lstm_fw.bias", (gate_rows,), zeros_init),
        bw_weight=store.add("lstm_bw.weight", (gate_rows, emb_dim + hidden), glorot_uniform),
        bw_bias=store.add("lstm_bw.bias", (gate_rows,), zeros_init),
        emb_dim=emb_dim,
        hidden=hidden,
    )


class BoundaryTable:
    """The n+1 boundary vectors of one sentence, stacked row-wise."""

    def __init__(self, vectors: Node, n: int, hidden: int):
        self.vectors = vectors  # (n+1, 2*hidden)
        self.n = n
        self.hidden = hidden

    def __len__(self) -> int:
        return self.n + 1

    def boundary(self, l: int) -> np.ndarray:
        if not 0 <= l <= self.n:
            raise IndexError(f"boundary index {l} out of range [0, {self.n}]")
        return self.vectors.value[l]


def encode_sentence(
    chars: str,
    vocab: Vocab,
    params: EncoderParams,
    train_mode: bool = False,
    dropout_rate: float = 0.0,
    rng: np.random.Generator | None = None,
) -> BoundaryTable:
    """Embed characters (UNK for unseen), run the BiLSTM, and assemble the
    boundary table. Embedding dropout applies in train mode only."""
    n = len(chars)
    if n == 0:
        raise AutogradError("cannot encode an empty sentence")
    ids = vocab.encode(chars)
    emb = take_rows(params.embedding, ids)
    if train_mode and dropout_rate > 0.0:
        if rng is None:
            raise AutogradError("train-mode dropout requires an RNG")
        emb = dropout(emb, dropout_rate, rng)
    per_char = [row(emb, t) for t in range(n)]
    f_states, b_states = bilstm_forward(
        per_char, params.fw_weight, params.fw_bias, params.bw_weight, params.bw_bias, params.hidden
    )
    zero = Node(np.zeros(params.hidden, dtype=params.embedding.value.dtype), op="const")
    rows = []
    for l in range(n + 1):
        f_part = f_states[l - 1] if l >= 1 else zero
        b_part = b_states[l] if l <= n - 1 else zero
        rows.append(concat([f_part, b_part]))
    return BoundaryTable(stack_rows(rows), n=n, hidden=params.hidden)
