"""Combined training objective and the training loop.

Per sentence the loss has two parts: binary cross-entropy over every
scored span against the gold segmentation (averaged over the number of
scored spans), and softmax cross-entropy over the spans of the decoded
segmentation, where a decoded span matching a gold word takes that word's
tag and any other span takes the non-word label. The decode itself is
discrete: no gradient flows through span selection, only through the
scores of the selected spans.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

import numpy as np

from .autograd import (
    Node,
    backward,
    clip,
    const,
    gather_rc,
    log,
    logsumexp_rows,
    mul,
    sub,
    sum_all,
)
from .config import TrainConfig
from .corpus import Corpus, Sentence, Span, TaggedSpan, build_vocab, words_to_spans
from .decoder import post_process, threshold_candidates
from .metrics import joint_prf, seg_prf
from .model import SegTagModel
from .optim import AdamW
from .scorer import seg_prob_matrix, tag_score_rows, valid_spans

PROB_CLAMP_EPS = 1e-7


class TrainingDivergedError(RuntimeError):
    """The loss or a gradient became non-finite."""


@dataclass
class LossBreakdown:
    j_seg: float
    j_tag: float
    j_total: float

    @classmethod
    def of(cls, j_seg: float, j_tag: float) -> "LossBreakdown":
        return cls(j_seg=j_seg, j_tag=j_tag, j_total=j_seg + j_tag)


def loss_seg(
    scores: Mapping[Span, float],
    gold: set[Span],
    n: int,
    max_span_len: int = 7,
) -> float:
    """Mean binary cross-entropy over all scored spans of one sentence.

    Probabilities are clamped to [eps, 1-eps] before the log. Gold spans
    longer than max_span_len are never scored, hence never positives.
    """
    spans = valid_spans(n, max_span_len)
    total = 0.0
    for span in spans:
        p = min(max(scores[span], PROB_CLAMP_EPS), 1.0 - PROB_CLAMP_EPS)
        total += -math.log(p) if span in gold else -math.log(1.0 - p)
    return total / len(spans)


def loss_tag(
    tag_scores: Mapping[Span, np.ndarray],
    spans: Sequence[Span],
    targets: Sequence[int],
) -> float:
    """Mean softmax cross-entropy over the decoded spans of one sentence."""
    if len(spans) != len(targets):
        raise ValueError("one target per span required")
    if not spans:
        return 0.0
    total = 0.0
    for span, target in zip(spans, targets):
        vec = np.asarray(tag_scores[span], dtype=np.float64)
        shift = vec.max()
        lse = shift + math.log(np.exp(vec - shift).sum())
        total += lse - float(vec[target])
    return total / len(spans)


def make_tag_targets(
    segmentation: Sequence[Span],
    gold: Sequence[TaggedSpan],
    non_word_id: int,
) -> list[int]:
    """Target tag per decoded span: the gold tag on an exact (l, r) match,
    the non-word label otherwise."""
    gold_map = {tagged.span: tagged.tag for tagged in gold}
    return [gold_map.get(span, non_word_id) for span in segmentation]


def sentence_loss_nodes(
    model: SegTagModel,
    sentence: Sentence,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
    fixed_segmentation: Sequence[Span] | None = None,
) -> tuple[Node, Node, list[Span]]:
    """Differentiable (j_seg, j_tag) for one sentence, plus the decoded
    segmentation the tag loss was computed on.

    ``fixed_segmentation`` bypasses the decode; the gradient checker uses
    it to keep the discrete part constant while parameters are perturbed.
    """
    config = model.config
    n = sentence.n
    gold_tagged = words_to_spans(sentence)
    gold_spans = {tagged.span for tagged in gold_tagged}

    table = model.encode(sentence.chars, train_mode=train_mode, rng=rng)
    probs = seg_prob_matrix(table, model.scorer, train_mode, config.dropout, rng)

    spans = valid_spans(n, config.max_span_len)
    dtype = model.store.dtype
    mask = np.zeros((n + 1, n + 1), dtype=dtype)
    target = np.zeros((n + 1, n + 1), dtype=dtype)
    for span in spans:
        mask[span.l, span.r] = 1.0
        if span in gold_spans:
            target[span.l, span.r] = 1.0

    p = clip(probs, PROB_CLAMP_EPS, 1.0 - PROB_CLAMP_EPS)
    log_likelihood = log(p) * target + log(1.0 - p) * (1.0 - target)
    j_seg = sum_all(mul(log_likelihood, const(mask))) * (-1.0 / len(spans))

    if fixed_segmentation is not None:
        segmentation = list(fixed_segmentation)
    else:
        prob_values = probs.value
        score_map = {span: float(prob_values[span.l, span.r]) for span in spans}
        segmentation = post_process(threshold_candidates(score_map), n)
    targets = make_tag_targets(segmentation, gold_tagged, model.tagset.non_word_id)

    scores = tag_score_rows(table, model.scorer, segmentation, train_mode, config.dropout, rng)
    lse = logsumexp_rows(scores)
    picked = gather_rc(scores, np.arange(len(segmentation)), targets)
    j_tag = sum_all(sub(lse, picked)) * (1.0 / len(segmentation))
    return j_seg, j_tag, segmentation


def compute_loss(
    model: SegTagModel,
    sentence: Sentence,
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
    fixed_segmentation: Sequence[Span] | None = None,
) -> LossBreakdown:
    j_seg, j_tag, _ = sentence_loss_nodes(model, sentence, train_mode, rng, fixed_segmentation)
    return LossBreakdown.of(float(j_seg.value), float(j_tag.value))


def batch_loss_nodes(
    model: SegTagModel,
    sentences: Sequence[Sentence],
    train_mode: bool = False,
    rng: np.random.Generator | None = None,
) -> tuple[Node, LossBreakdown]:
    """Batch objective: mean per-sentence j_seg plus mean per-sentence j_tag."""
    seg_nodes = []
    tag_nodes = []
    for sentence in sentences:
        j_seg, j_tag, _ = sentence_loss_nodes(model, sentence, train_mode, rng)
        seg_nodes.append(j_seg)
        tag_nodes.append(j_tag)
    scale = 1.0 / len(sentences)
    seg_total = seg_nodes[0]
    for node in seg_nodes[1:]:
        seg_total = seg_total + node
    tag_total = tag_nodes[0]
    for node in tag_nodes[1:]:
        tag_total = tag_total + node
    total = seg_total * scale + tag_total * scale
    breakdown = LossBreakdown.of(
        float(seg_total.value) * scale, float(tag_total.value) * scale
    )
    return total, breakdown


@dataclass
class EpochRecord:
    epoch: int
    j_seg: float
    j_tag: float
    dev_seg_f1: float
    dev_joint_f1: float


@dataclass
class TrainResult:
    model: SegTagModel  # holds the best checkpoint after training
    best_values: dict[str, np.ndarray]
    final_values: dict[str, np.ndarray]
    best_epoch: int
    best_dev_seg_f1: float
    best_dev_joint_f1: float
    history: list[EpochRecord]
    log_lines: list[str]
    stopped_early: bool


def evaluate_model(
    model: SegTagModel, sentences: Sequence[Sentence]
) -> tuple[float, float]:
    """(segmentation F1, joint F1) of full decodes against gold."""
    gold = [words_to_spans(s) for s in sentences]
    pred = model.predict_corpus(sentences)
    seg = seg_prf([[t.span for t in g] for g in gold], [[t.span for t in p] for p in pred])
    joint = joint_prf(gold, pred)
    return seg.f1, joint.f1


def train(
    train_corpus: Corpus,
    dev_corpus: Corpus,
    config: TrainConfig,
    dtype=np.float32,
    progress: Callable[[EpochRecord], None] | None = None,
) -> TrainResult:
    """Full training run with per-epoch dev evaluation, best-checkpoint
    selection on dev joint F1, and patience-based early stopping.

    Deterministic for a fixed (data, config, dtype): shuffling and dropout
    draw from generators seeded off config.seed, and the log is built from
    fixed-precision formatting only.
    """
    if not train_corpus.sentences:
        raise ValueError("training corpus is empty")
    if not dev_corpus.sentences:
        raise ValueError("dev corpus is empty")

    vocab = build_vocab(train_corpus)
    model = SegTagModel(vocab, train_corpus.tagset, config, dtype=dtype)
    optimizer = AdamW(model.store, lr=config.learning_rate)
    shuffle_rng = np.random.default_rng([config.seed, 1])
    dropout_rng = np.random.default_rng([config.seed, 2])

    log_lines = [
        f"param_count\t{model.n_params}",
        "epoch\tj_seg\tj_tag\tdev_seg_f1\tdev_joint_f1",
    ]
    sentences = train_corpus.sentences
    n_train = len(sentences)
    history: list[EpochRecord] = []
    best_values = model.store.values()
    best_epoch = 0
    best_joint = -1.0
    best_seg = 0.0
    since_improvement = 0
    stopped_early = False

    for epoch in range(1, config.max_epochs + 1):
        order = shuffle_rng.permutation(n_train)
        seg_sum = 0.0
        tag_sum = 0.0
        for start in range(0, n_train, config.batch_size):
            batch = [sentences[i] for i in order[start : start + config.batch_size]]
            model.store.zero_grad()
            total, breakdown = batch_loss_nodes(model, batch, train_mode=True, rng=dropout_rng)
            if not math.isfinite(breakdown.j_total):
                raise TrainingDivergedError(
                    f"non-finite loss at epoch {epoch}, batch starting at {start}: {breakdown}"
                )
            backward(total)
            optimizer.step()
            seg_sum += breakdown.j_seg * len(batch)
            tag_sum += breakdown.j_tag * len(batch)

        dev_seg_f1, dev_joint_f1 = evaluate_model(model, dev_corpus.sentences)
        record = EpochRecord(
            epoch=epoch,
            j_seg=seg_sum / n_train,
            j_tag=tag_sum / n_train,
            dev_seg_f1=dev_seg_f1,
            dev_joint_f1=dev_joint_f1,
        )
        history.append(record)
        log_lines.append(
            f"{record.epoch}\t{record.j_seg:.6f}\t{record.j_tag:.6f}"
            f"\t{record.dev_seg_f1:.6f}\t{record.dev_joint_f1:.6f}"
        )
        if progress is not None:
            progress(record)

        if dev_joint_f1 > best_joint:
            best_joint = dev_joint_f1
            best_seg = dev_seg_f1
            best_epoch = epoch
            best_values = model.store.values()
            since_improvement = 0
        else:
            since_improvement += 1
            if since_improvement > config.patience:
                stopped_early = True
                break

    final_values = model.store.values()
    model.store.load_values(best_values)
    log_lines.append(f"best_epoch\t{best_epoch}")
    log_lines.append(f"best_dev_joint_f1\t{best_joint:.6f}")
    return TrainResult(
        model=model,
        best_values=best_values,
        final_values=final_values,
        best_epoch=best_epoch,
        best_dev_seg_f1=best_seg,
        best_dev_joint_f1=best_joint,
        history=history,
        log_lines=log_lines,
        stopped_early=stopped_early,
    )
