"""Corpus-level evaluation: span F1, joint F1, vocabulary-split recall,
combination-ambiguity-string accuracy, and a paired t-test.

All precision/recall/F1 figures are micro-averaged over sentences. A
segmentation match requires identical (l, r); a joint match additionally
requires the tag, so joint scores can never exceed segmentation scores.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .corpus import Span, TaggedSpan


class MetricsError(ValueError):
    pass


@dataclass
class PRF:
    precision: float
    recall: float
    f1: float
    matched: int
    gold_count: int
    pred_count: int

    @classmethod
    def from_counts(cls, matched: int, gold_count: int, pred_count: int) -> "PRF":
        precision = matched / pred_count if pred_count else 0.0
        recall = matched / gold_count if gold_count else 0.0
        f1 = (
            2.0 * precision * recall / (precision + recall)
            if precision + recall > 0
            else 0.0
        )
        return cls(precision, recall, f1, matched, gold_count, pred_count)


def _span_end(spans: Sequence, default: int = 0) -> int:
    ends = [s.r if isinstance(s, Span) else s.span.r for s in spans]
    return max(ends, default=default)


def _check_parallel(gold: Sequence[Sequence], pred: Sequence[Sequence]) -> None:
    if len(gold) != len(pred):
        raise MetricsError(f"sentence count mismatch: {len(gold)} gold vs {len(pred)} predicted")
    for i, (g, p) in enumerate(zip(gold, pred)):
        if _span_end(g) != _span_end(p):
            raise MetricsError(
                f"sentence {i}: length mismatch ({_span_end(g)} gold vs {_span_end(p)} predicted)"
            )


def seg_prf(gold: Sequence[Sequence[Span]], pred: Sequence[Sequence[Span]]) -> PRF:
    """Micro-averaged word-boundary F1 over parallel span partitions."""
    _check_parallel(gold, pred)
    matched = gold_count = pred_count = 0
    for g, p in zip(gold, pred):
        gold_set = set(g)
        matched += sum(1 for span in p if span in gold_set)
        gold_count += len(g)
        pred_count += len(p)
    return PRF.from_counts(matched, gold_count, pred_count)


def joint_prf(gold: Sequence[Sequence[TaggedSpan]], pred: Sequence[Sequence[TaggedSpan]]) -> PRF:
    """Micro-averaged F1 where a match needs boundaries and the tag."""
    _check_parallel(gold, pred)
    matched = gold_count = pred_count = 0
    for g, p in zip(gold, pred):
        gold_set = set(g)
        matched += sum(1 for tagged in p if tagged in gold_set)
        gold_count += len(g)
        pred_count += len(p)
    return PRF.from_counts(matched, gold_count, pred_count)


def sentence_joint_f1s(
    gold: Sequence[Sequence[TaggedSpan]], pred: Sequence[Sequence[TaggedSpan]]
) -> list[float]:
    """Per-sentence joint F1 list, the pairing unit for significance tests."""
    _check_parallel(gold, pred)
    out = []
    for g, p in zip(gold, pred):
        gold_set = set(g)
        matched = sum(1 for tagged in p if tagged in gold_set)
        out.append(PRF.from_counts(matched, len(g), len(p)).f1)
    return out


def recall_by_vocab(
    gold: Sequence[Sequence[TaggedSpan]],
    pred: Sequence[Sequence[TaggedSpan]],
    chars_list: Sequence[str],
    train_types: set[str],
) -> tuple[float | None, float | None]:
    """(R_POS-OOV, R_POS-iV): tag-aware recall of gold words whose surface
    is unseen / seen among training word types. An empty part yields None
    (undefined, distinct from zero)."""
    _check_parallel(gold, pred)
    if len(chars_list) != len(gold):
        raise MetricsError("chars_list must parallel the gold corpus")
    counts = {True: [0, 0], False: [0, 0]}  # in_vocab -> [correct, total]
    for chars, g, p in zip(chars_list, gold, pred):
        pred_set = set(p)
        for tagged in g:
            surface = chars[tagged.span.l : tagged.span.r]
            bucket = counts[surface in train_types]
            bucket[1] += 1
            if tagged in pred_set:
                bucket[0] += 1
    oov_correct, oov_total = counts[False]
    iv_correct, iv_total = counts[True]
    r_oov = oov_correct / oov_total if oov_total else None
    r_iv = iv_correct / iv_total if iv_total else None
    return r_oov, r_iv


def _boundary_set(spans: Sequence[Span], n: int) -> set[int]:
    out = {n}
    for span in spans:
        out.add(span.l)
        out.add(span.r)
    return out


def cas_accuracy(
    chars_list: Sequence[str],
    gold: Sequence[Sequence[Span]],
    pred: Sequence[Sequence[Span]],
    cas_strings: Sequence[str],
) -> float | None:
    """Accuracy over occurrences of combination-ambiguity strings.

    Every (possibly overlapping) occurrence of a CAS string in a gold
    character sequence counts correct iff predicted and gold boundary sets
    agree on all boundary indices inside and at both ends of the
    occurrence. No occurrences at all yields None (undefined)."""
    _check_parallel(gold, pred)
    correct = 0
    total = 0
    for chars, g, p in zip(chars_list, gold, pred):
        n = len(chars)
        gold_bounds = _boundary_set(g, n)
        pred_bounds = _boundary_set(p, n)
        for cas in cas_strings:
            if not cas:
                continue
            start = chars.find(cas)
            while start != -1:
                window = set(range(start, start + len(cas) + 1))
                total += 1
                if gold_bounds & window == pred_bounds & window:
                    correct += 1
                start = chars.find(cas, start + 1)
    if total == 0:
        return None
    return correct / total


@dataclass
class SignificanceResult:
    t: float
    df: int
    p: float


def paired_t_test(scores_a: Sequence[float], scores_b: Sequence[float]) -> SignificanceResult:
    """Two-sided paired t-test on per-item score differences (sample sd)."""
    if len(scores_a) != len(scores_b):
        raise MetricsError("paired t-test requires equal-length score lists")
    n = len(scores_a)
    if n < 2:
        raise MetricsError("paired t-test requires at least 2 pairs")
    diffs = np.asarray(scores_a, dtype=np.float64) - np.asarray(scores_b, dtype=np.float64)
    mean = float(diffs.mean())
    sd = float(diffs.std(ddof=1))
    df = n - 1
    if sd == 0.0:
        if mean == 0.0:
            return SignificanceResult(t=0.0, df=df, p=1.0)
        return SignificanceResult(t=math.copysign(math.inf, mean), df=df, p=0.0)
    t_stat = mean / (sd / math.sqrt(n))
    from scipy.stats import t as t_dist

    p = 2.0 * float(t_dist.sf(abs(t_stat), df))
    return SignificanceResult(t=t_stat, df=df, p=p)


def _rate_str(value: float | None) -> str:
    return "undefined" if value is None else f"{value:.6f}"


@dataclass
class MetricsReport:
    """Everything cmd_evaluate can produce; optional parts stay None until
    their inputs (train types, CAS list, comparison file) are supplied."""

    seg: PRF
    joint: PRF
    r_pos_oov: float | None = None
    r_pos_iv: float | None = None
    has_vocab_recall: bool = False
    cas: float | None = None
    has_cas: bool = False
    significance: SignificanceResult | None = None

    def as_lines(self) -> list[str]:
        lines = [
            f"seg_precision\t{self.seg.precision:.6f}",
            f"seg_recall\t{self.seg.recall:.6f}",
            f"seg_f1\t{self.seg.f1:.6f}",
            f"joint_precision\t{self.joint.precision:.6f}",
            f"joint_recall\t{self.joint.recall:.6f}",
            f"joint_f1\t{self.joint.f1:.6f}",
        ]
        if self.has_vocab_recall:
            lines.append(f"r_pos_oov\t{_rate_str(self.r_pos_oov)}")
            lines.append(f"r_pos_iv\t{_rate_str(self.r_pos_iv)}")
        if self.has_cas:
            lines.append(f"cas_accuracy\t{_rate_str(self.cas)}")
        if self.significance is not None:
            lines.append(f"t_statistic\t{self.significance.t:.6f}")
            lines.append(f"t_df\t{self.significance.df}")
            lines.append(f"t_p_value\t{self.significance.p:.6f}")
        return lines

    def as_dict(self) -> dict:
        out: dict = {
            "seg": {
                "precision": self.seg.precision,
                "recall": self.seg.recall,
                "f1": self.seg.f1,
            },
            "joint": {
                "precision": self.joint.precision,
                "recall": self.joint.recall,
                "f1": self.joint.f1,
            },
        }
        if self.has_vocab_recall:
            out["r_pos_oov"] = self.r_pos_oov
            out["r_pos_iv"] = self.r_pos_iv
        if self.has_cas:
            out["cas_accuracy"] = self.cas
        if self.significance is not None:
            out["significance"] = {
                "t": self.significance.t,
                "df": self.significance.df,
                "p": self.significance.p,
            }
        return out
