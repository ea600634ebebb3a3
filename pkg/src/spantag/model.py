"""The joint segmenter-tagger: parameters plus the prediction path."""

from __future__ import annotations

from typing import Iterable

import numpy as np

from .autograd import ParamStore
from .config import TrainConfig
from .corpus import Sentence, Span, TaggedSpan, TagSet, Vocab
from .decoder import assign_tags, post_process, threshold_candidates
from .encoder import BoundaryTable, EncoderParams, encode_sentence, init_encoder_params
from .scorer import ScorerParams, init_scorer_params, score_all_seg, score_all_tag


class SegTagModel:
    """Character BiLSTM encoder with biaffine segmentation and tag heads.

    The tag set is copied at construction so later additions to a shared
    TagSet cannot shift the non-word id.
    """

    def __init__(self, vocab: Vocab, tagset: TagSet, config: TrainConfig, dtype=np.float32):
        self.vocab = vocab
        self.tagset = TagSet(tagset.pos_tags)
        self.config = config
        self.store = ParamStore(seed=config.seed, dtype=dtype)
        self.encoder: EncoderParams = init_encoder_params(
            self.store, vocab.size, config.embedding_dim, config.hidden_size
        )
        self.scorer: ScorerParams = init_scorer_params(
            self.store, self.encoder.boundary_dim, config.mlp_size, self.tagset.n_total
        )

    @property
    def n_params(self) -> int:
        return self.store.n_params

    def encode(
        self,
        chars: str,
        train_mode: bool = False,
        rng: np.random.Generator | None = None,
    ) -> BoundaryTable:
        return encode_sentence(
            chars, self.vocab, self.encoder, train_mode, self.config.dropout, rng
        )

    def segment(self, chars: str) -> list[Span]:
        """Stage one only: decode a segmentation for a raw character string."""
        table = self.encode(chars)
        scores = score_all_seg(table, self.scorer, self.config.max_span_len)
        return post_process(threshold_candidates(scores), len(chars))

    def predict_sentence(self, chars: str) -> list[TaggedSpan]:
        """Full two-stage decode of a raw character string."""
        table = self.encode(chars)
        scores = score_all_seg(table, self.scorer, self.config.max_span_len)
        segmentation = post_process(threshold_candidates(scores), len(chars))
        tag_scores = score_all_tag(table, self.scorer, segmentation)
        return assign_tags(segmentation, tag_scores, self.tagset.non_word_id)

    def predict_corpus(self, sentences: Iterable[Sentence]) -> list[list[TaggedSpan]]:
        return [self.predict_sentence(s.chars) for s in sentences]
