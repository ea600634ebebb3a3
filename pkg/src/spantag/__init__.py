"""spantag: joint word segmentation and POS tagging via span labeling.

A biaffine scorer over BiLSTM boundary representations decides which
character n-grams are words, a greedy post-processor turns the surviving
spans into a partition of the sentence, and a second biaffine scorer
assigns each segment a POS tag.
"""

from .config import TrainConfig
from .corpus import (
    Corpus,
    CorpusError,
    Sentence,
    Span,
    TaggedSpan,
    TagSet,
    Vocab,
    build_vocab,
    corpus_stats,
    parse_corpus,
    serialize_corpus,
    spans_to_words,
    words_to_spans,
)
from .decoder import assign_tags, post_process, threshold_candidates
from .metrics import (
    MetricsReport,
    PRF,
    cas_accuracy,
    joint_prf,
    paired_t_test,
    recall_by_vocab,
    seg_prf,
)
from .model import SegTagModel
from .model_io import ModelArtifact, load_model, save_model
from .training import TrainResult, compute_loss, loss_seg, loss_tag, make_tag_targets, train

__version__ = "0.1.0"

__all__ = [
    "Corpus",
    "CorpusError",
    "MetricsReport",
    "ModelArtifact",
    "PRF",
    "SegTagModel",
    "Sentence",
    "Span",
    "TagSet",
    "TaggedSpan",
    "TrainConfig",
    "TrainResult",
    "Vocab",
    "assign_tags",
    "build_vocab",
    "cas_accuracy",
    "compute_loss",
    "corpus_stats",
    "joint_prf",
    "load_model",
    "loss_seg",
    "loss_tag",
    "make_tag_targets",
    "paired_t_test",
    "parse_corpus",
    "post_process",
    "recall_by_vocab",
    "save_model",
    "seg_prf",
    "serialize_corpus",
    "spans_to_words",
    "threshold_candidates",
    "train",
    "words_to_spans",
]
