"""Corpora of word-segmented, POS-tagged sentences.

On-disk format: UTF-8 text, one sentence per line, tokens separated by
whitespace, each token ``surface_TAG``. The *last* underscore of a token
separates surface from tag, so surfaces may themselves contain
underscores. Blank lines are skipped.

A word of length k starting at character x_i (1-based) is represented by
the half-open span (i-1, i-1+k) over boundary indices 0..n.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, NamedTuple, Sequence


class CorpusError(ValueError):
    """Malformed corpus text or inconsistent span annotation."""


class Span(NamedTuple):
    """Half-open boundary interval (l, r); characters l..r-1 form the word."""

    l: int
    r: int

    @property
    def length(self) -> int:
        return self.r - self.l


class TaggedSpan(NamedTuple):
    span: Span
    tag: int


class TagSet:
    """Ordered POS tag inventory plus one reserved non-word label.

    Ids are dense and assigned in first-occurrence order; the non-word
    label always sits at id ``len(pos_tags)`` and is not itself a POS tag.
    """

    def __init__(self, pos_tags: Iterable[str] = ()):
        self._tags: list[str] = []
        self._index: dict[str, int] = {}
        for name in pos_tags:
            self.ensure(name)

    def ensure(self, name: str) -> int:
        """Return the id of ``name``, registering it if unseen."""
        tag_id = self._index.get(name)
        if tag_id is None:
            tag_id = len(self._tags)
            self._tags.append(name)
            self._index[name] = tag_id
        return tag_id

    def id_of(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise CorpusError(f"unknown tag {name!r}") from None

    def name_of(self, tag_id: int) -> str:
        if tag_id == self.non_word_id:
            return "<non-word>"
        if not 0 <= tag_id < len(self._tags):
            raise CorpusError(f"tag id {tag_id} out of range")
        return self._tags[tag_id]

    @property
    def pos_tags(self) -> tuple[str, ...]:
        return tuple(self._tags)

    @property
    def non_word_id(self) -> int:
        return len(self._tags)

    @property
    def n_total(self) -> int:
        """Number of labels scored by the tagger: POS tags + non-word."""
        return len(self._tags) + 1

    def __eq__(self, other: object) -> bool:
        return isinstance(other, TagSet) and self._tags == other._tags

    def __repr__(self) -> str:
        return f"TagSet({self._tags!r})"


class Vocab:
    """Character-to-id map with reserved PAD (0) and UNK (1) ids."""

    PAD = 0
    UNK = 1

    def __init__(self, chars: Sequence[str]):
        self._chars = tuple(chars)
        self._index = {c: i + 2 for i, c in enumerate(self._chars)}
        if len(self._index) != len(self._chars):
            raise CorpusError("duplicate characters in vocabulary")

    @classmethod
    def build(cls, corpus: "Corpus") -> "Vocab":
        """First-occurrence character vocabulary over a training corpus."""
        if not corpus.sentences:
            raise CorpusError("cannot build a vocabulary from an empty corpus")
        seen: dict[str, None] = {}
        for sentence in corpus.sentences:
            for ch in sentence.chars:
                seen.setdefault(ch)
        return cls(tuple(seen))

    def id_of(self, ch: str) -> int:
        return self._index.get(ch, self.UNK)

    def encode(self, chars: str) -> list[int]:
        return [self._index.get(ch, self.UNK) for ch in chars]

    @property
    def chars(self) -> tuple[str, ...]:
        return self._chars

    @property
    def size(self) -> int:
        """Number of embedding rows: all characters plus PAD and UNK."""
        return len(self._chars) + 2

    def __eq__(self, other: object) -> bool:
        return isinstance(other, Vocab) and self._chars == other._chars


@dataclass(frozen=True)
class Sentence:
    """Character sequence plus its gold (surface, tag id) word sequence."""

    chars: str
    words: tuple[tuple[str, int], ...]
    line_no: int = 0

    @property
    def n(self) -> int:
        return len(self.chars)

    @property
    def m(self) -> int:
        return len(self.words)


@dataclass
class Corpus:
    sentences: list[Sentence]
    tagset: TagSet
    provenance: str = ""
    split: str = ""

    def __len__(self) -> int:
        return len(self.sentences)


def parse_corpus(
    text: str,
    tagset: TagSet | None = None,
    provenance: str = "",
    split: str = "",
) -> Corpus:
    """Parse ``surface_TAG`` lines into a Corpus, accumulating the tag set.

    Passing an existing ``tagset`` keeps tag ids shared across several
    corpora (train/dev/test must resolve in one tag set).
    """
    tagset = tagset if tagset is not None else TagSet()
    sentences = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        tokens = line.split()
        if not tokens:
            continue
        words = []
        for token in tokens:
            surface, sep, tag = token.rpartition("_")
            if not sep:
                raise CorpusError(f"line {line_no}: token {token!r} has no '_' separator")
            if not surface:
                raise CorpusError(f"line {line_no}: token {token!r} has an empty surface")
            if not tag:
                raise CorpusError(f"line {line_no}: token {token!r} has an empty tag")
            words.append((surface, tagset.ensure(tag)))
        chars = "".join(surface for surface, _ in words)
        sentences.append(Sentence(chars=chars, words=tuple(words), line_no=line_no))
    return Corpus(sentences=sentences, tagset=tagset, provenance=provenance, split=split)


def sentence_to_line(sentence: Sentence, tagset: TagSet) -> str:
    return " ".join(f"{surface}_{tagset.name_of(tag)}" for surface, tag in sentence.words)


def serialize_corpus(corpus: Corpus) -> str:
    """Inverse of parse_corpus up to whitespace normalization."""
    return "".join(sentence_to_line(s, corpus.tagset) + "\n" for s in corpus.sentences)


def words_to_spans(sentence: Sentence) -> list[TaggedSpan]:
    """Gold words as tagged spans; the j-th word of length k starting at
    character x_i maps to (i-1, i-1+k). The result partitions [0, n)."""
    spans = []
    left = 0
    for surface, tag in sentence.words:
        right = left + len(surface)
        spans.append(TaggedSpan(Span(left, right), tag))
        left = right
    return spans


def spans_to_words(spans: Sequence[TaggedSpan], chars: str) -> list[tuple[str, int]]:
    """Inverse of words_to_spans. The spans must partition [0, len(chars))."""
    words = []
    position = 0
    for tagged in spans:
        span = tagged.span
        if span.l != position:
            kind = "overlap" if span.l < position else "gap"
            raise CorpusError(f"spans do not partition the sentence: {kind} at boundary {position}")
        if span.r <= span.l:
            raise CorpusError(f"empty span {span}")
        words.append((chars[span.l : span.r], tagged.tag))
        position = span.r
    if position != len(chars):
        raise CorpusError(f"spans do not partition the sentence: gap at boundary {position}")
    return words


def build_vocab(train: Corpus) -> Vocab:
    return Vocab.build(train)


@dataclass
class CorpusStats:
    train_sentences: int
    train_chars: int
    train_words: int
    eval_sentences: int
    eval_chars: int
    eval_words: int
    oov_rate: float  # percent of eval word tokens unseen as train word types

    def as_lines(self) -> list[str]:
        return [
            f"train_sentences\t{self.train_sentences}",
            f"train_chars\t{self.train_chars}",
            f"train_words\t{self.train_words}",
            f"eval_sentences\t{self.eval_sentences}",
            f"eval_chars\t{self.eval_chars}",
            f"eval_words\t{self.eval_words}",
            f"oov_rate\t{self.oov_rate:.6f}",
        ]


def train_word_types(train: Corpus) -> set[str]:
    return {surface for sentence in train.sentences for surface, _ in sentence.words}


def corpus_stats(train: Corpus, eval_corpus: Corpus) -> CorpusStats:
    """Sentence/char/word counts plus the token-level OOV rate of eval
    words against train word types."""
    eval_tokens = sum(s.m for s in eval_corpus.sentences)
    if eval_tokens == 0:
        raise CorpusError("OOV rate undefined: eval corpus has no words")
    types = train_word_types(train)
    unseen = sum(
        1 for sentence in eval_corpus.sentences for surface, _ in sentence.words if surface not in types
    )
    return CorpusStats(
        train_sentences=len(train.sentences),
        train_chars=sum(s.n for s in train.sentences),
        train_words=sum(s.m for s in train.sentences),
        eval_sentences=len(eval_corpus.sentences),
        eval_chars=sum(s.n for s in eval_corpus.sentences),
        eval_words=eval_tokens,
        oov_rate=100.0 * unseen / eval_tokens,
    )
