"""Command-line interface: train, predict, evaluate, stats."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .config import ConfigError, TrainConfig
from .corpus import (
    Corpus,
    CorpusError,
    TagSet,
    corpus_stats,
    parse_corpus,
    train_word_types,
    words_to_spans,
)
from .metrics import (
    MetricsError,
    MetricsReport,
    cas_accuracy,
    joint_prf,
    paired_t_test,
    recall_by_vocab,
    seg_prf,
    sentence_joint_f1s,
)
from .model_io import (
    ModelArtifact,
    ModelFormatError,
    artifact_from_model,
    load_model,
    model_from_artifact,
    save_model,
)
from .training import TrainingDivergedError, train


def _read_text(path: str) -> str:
    return Path(path).read_text(encoding="utf-8")


def _load_corpus(path: str, tagset: TagSet, split: str) -> Corpus:
    return parse_corpus(_read_text(path), tagset=tagset, provenance=path, split=split)


def cmd_train(args: argparse.Namespace) -> int:
    config = TrainConfig.from_file(args.config) if args.config else TrainConfig()
    if args.seed is not None:
        config = TrainConfig(**{**config.to_dict(), "seed": args.seed})
    tagset = TagSet()
    train_corpus = _load_corpus(args.train, tagset, "train")
    dev_corpus = _load_corpus(args.dev, tagset, "dev")

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)

    def progress(record) -> None:
        print(
            f"epoch {record.epoch}: j_seg={record.j_seg:.4f} j_tag={record.j_tag:.4f} "
            f"dev_seg_f1={record.dev_seg_f1:.4f} dev_joint_f1={record.dev_joint_f1:.4f}",
            file=sys.stderr,
        )

    result = train(train_corpus, dev_corpus, config, progress=progress)

    best = artifact_from_model(result.model)
    save_model(str(out_dir / "best.model"), best)
    final = ModelArtifact(
        config=config, vocab=best.vocab, tagset=best.tagset, tensors=result.final_values
    )
    save_model(str(out_dir / "final.model"), final)
    (out_dir / "train.log").write_text("\n".join(result.log_lines) + "\n", encoding="utf-8")
    print(
        f"best epoch {result.best_epoch}: dev_seg_f1={result.best_dev_seg_f1:.4f} "
        f"dev_joint_f1={result.best_dev_joint_f1:.4f} ({result.model.n_params} parameters)"
    )
    return 0


def cmd_predict(args: argparse.Namespace) -> int:
    artifact = load_model(args.model)
    model = model_from_artifact(artifact)
    tagset = model.tagset
    lines_out = []
    for line_no, line in enumerate(_read_text(args.input).splitlines(), start=1):
        chars = line.strip()
        if any(ch.isspace() for ch in chars):
            raise CorpusError(f"line {line_no}: prediction input must not contain whitespace")
        if not chars:
            lines_out.append("")
            continue
        tagged = model.predict_sentence(chars)
        lines_out.append(
            " ".join(f"{chars[t.span.l:t.span.r]}_{tagset.name_of(t.tag)}" for t in tagged)
        )
    Path(args.out).write_text("".join(line + "\n" for line in lines_out), encoding="utf-8")
    return 0


def cmd_evaluate(args: argparse.Namespace) -> int:
    tagset = TagSet()
    gold = _load_corpus(args.gold, tagset, "gold")
    pred = _load_corpus(args.pred, tagset, "pred")
    if len(gold.sentences) != len(pred.sentences):
        raise MetricsError(
            f"sentence count mismatch: {len(gold.sentences)} gold vs {len(pred.sentences)} predicted"
        )
    for g, p in zip(gold.sentences, pred.sentences):
        if g.chars != p.chars:
            raise MetricsError(
                f"character mismatch between gold line {g.line_no} and prediction line {p.line_no}"
            )

    gold_tagged = [words_to_spans(s) for s in gold.sentences]
    pred_tagged = [words_to_spans(s) for s in pred.sentences]
    gold_spans = [[t.span for t in sent] for sent in gold_tagged]
    pred_spans = [[t.span for t in sent] for sent in pred_tagged]
    report = MetricsReport(
        seg=seg_prf(gold_spans, pred_spans), joint=joint_prf(gold_tagged, pred_tagged)
    )

    if args.train:
        train_corpus = _load_corpus(args.train, tagset, "train")
        chars_list = [s.chars for s in gold.sentences]
        r_oov, r_iv = recall_by_vocab(
            gold_tagged, pred_tagged, chars_list, train_word_types(train_corpus)
        )
        report.r_pos_oov = r_oov
        report.r_pos_iv = r_iv
        report.has_vocab_recall = True

    if args.cas:
        cas_strings = [line.strip() for line in _read_text(args.cas).splitlines() if line.strip()]
        chars_list = [s.chars for s in gold.sentences]
        report.cas = cas_accuracy(chars_list, gold_spans, pred_spans, cas_strings)
        report.has_cas = True

    if args.compare:
        compare = _load_corpus(args.compare, tagset, "compare")
        if len(compare.sentences) != len(gold.sentences):
            raise MetricsError("comparison file must parallel the gold corpus")
        for g, c in zip(gold.sentences, compare.sentences):
            if g.chars != c.chars:
                raise MetricsError(
                    f"character mismatch between gold line {g.line_no} and comparison line {c.line_no}"
                )
        compare_tagged = [words_to_spans(s) for s in compare.sentences]
        report.significance = paired_t_test(
            sentence_joint_f1s(gold_tagged, pred_tagged),
            sentence_joint_f1s(gold_tagged, compare_tagged),
        )

    for line in report.as_lines():
        print(line)
    if args.json:
        Path(args.json).write_text(
            json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    tagset = TagSet()
    train_corpus = _load_corpus(args.train, tagset, "train")
    eval_corpus = _load_corpus(args.eval, tagset, "eval")
    for line in corpus_stats(train_corpus, eval_corpus).as_lines():
        print(line)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="spantag",
        description="Joint word segmentation and POS tagging via biaffine span labeling.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a model and write checkpoints + log")
    p_train.add_argument("--train", required=True, help="training corpus (surface_TAG lines)")
    p_train.add_argument("--dev", required=True, help="development corpus for model selection")
    p_train.add_argument("--config", help="key=value config file")
    p_train.add_argument("--out", required=True, help="output directory")
    p_train.add_argument("--seed", type=int, help="override the config seed")
    p_train.set_defaults(func=cmd_train)

    p_predict = sub.add_parser("predict", help="segment and tag raw text")
    p_predict.add_argument("--model", required=True, help="model file from training")
    p_predict.add_argument("--input", required=True, help="one raw character sequence per line")
    p_predict.add_argument("--out", required=True, help="output file (surface_TAG lines)")
    p_predict.set_defaults(func=cmd_predict)

    p_eval = sub.add_parser("evaluate", help="score predictions against gold")
    p_eval.add_argument("--gold", required=True)
    p_eval.add_argument("--pred", required=True)
    p_eval.add_argument("--train", help="training corpus for OOV/in-vocabulary recall")
    p_eval.add_argument("--cas", help="file of combination-ambiguity strings, one per line")
    p_eval.add_argument("--compare", help="second prediction file for a paired t-test")
    p_eval.add_argument("--json", help="also write the report as JSON to this path")
    p_eval.set_defaults(func=cmd_evaluate)

    p_stats = sub.add_parser("stats", help="corpus statistics and OOV rate")
    p_stats.add_argument("--train", required=True)
    p_stats.add_argument("--eval", required=True)
    p_stats.set_defaults(func=cmd_stats)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (
        CorpusError,
        ConfigError,
        MetricsError,
        ModelFormatError,
        TrainingDivergedError,
        OSError,
    ) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
