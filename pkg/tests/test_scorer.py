import math

import numpy as np
import pytest

from spantag import autograd as ag
from spantag.autograd import ParamStore
from spantag.corpus import Span, Vocab
from spantag.encoder import encode_sentence, init_encoder_params
from spantag.gradcheck import finite_diff_check
from spantag.scorer import (
    init_scorer_params,
    score_all_seg,
    score_all_tag,
    seg_prob_matrix,
    tag_score_rows,
    valid_spans,
)

D = 1
N_TAGS = 3
HIDDEN = 4


def _setup(seed=0, d=D, n_tags=N_TAGS):
    vocab = Vocab(tuple("abcdef"))
    store = ParamStore(seed=seed, dtype=np.float64)
    enc = init_encoder_params(store, vocab.size, 3, HIDDEN)
    sc = init_scorer_params(store, 2 * HIDDEN, d, n_tags)
    return vocab, store, enc, sc


def _zero_mlps(store):
    for name, node in store.items():
        if name.startswith("mlp_"):
            node.value[...] = 0.0


class TestValidSpans:
    def test_count_below_cap(self):
        assert len(valid_spans(5, 7)) == 15  # n(n+1)/2

    def test_count_with_cap(self):
        n, cap = 10, 3
        expected = sum(min(cap, n - l) for l in range(n))
        assert len(valid_spans(n, cap)) == expected

    def test_no_span_exceeds_cap(self):
        assert all(s.length <= 4 for s in valid_spans(12, 4))


class TestSegScorer:
    def test_zero_biaffine_scores_half(self):
        vocab, store, enc, sc = _setup()
        sc.seg_biaffine.value[...] = 0.0
        table = encode_sentence("abc", vocab, enc)
        scores = score_all_seg(table, sc)
        assert set(scores) == set(valid_spans(3, 7))
        for p in scores.values():
            assert p == 0.5

    def test_hand_computed_biaffine(self):
        # force u = [2], v = [1] through zero-weight MLPs with fixed biases,
        # W = [[1], [0.5]]: sigmoid([2,1] W [1]) = sigmoid(2.5)
        vocab, store, enc, sc = _setup()
        _zero_mlps(store)
        sc.seg_left_b.value[...] = 2.0
        sc.seg_right_b.value[...] = 1.0
        sc.seg_biaffine.value[...] = np.array([[1.0], [0.5]])
        table = encode_sentence("ab", vocab, enc)
        scores = score_all_seg(table, sc)
        for p in scores.values():
            assert math.isclose(p, 0.924142, abs_tol=1e-6)

    def test_left_only_augmentation(self):
        # with zero MLPs the right side is the zero vector, so any biaffine
        # tensor yields exactly sigmoid(0): no constant term exists on the
        # right side (the augmentation is left-only)
        vocab, store, enc, sc = _setup(seed=4)
        _zero_mlps(store)
        sc.seg_biaffine.value[...] = np.random.default_rng(0).normal(size=sc.seg_biaffine.value.shape)
        table = encode_sentence("abcd", vocab, enc)
        for p in score_all_seg(table, sc).values():
            assert p == 0.5

    def test_probabilities_strictly_inside_unit_interval(self):
        vocab, store, enc, sc = _setup(seed=11)
        table = encode_sentence("fbade", vocab, enc)
        for p in score_all_seg(table, sc).values():
            assert 0.0 < p < 1.0

    def test_matrix_entry_matches_score_map(self):
        vocab, store, enc, sc = _setup(seed=2)
        table = encode_sentence("abc", vocab, enc)
        matrix = seg_prob_matrix(table, sc).value
        scores = score_all_seg(table, sc)
        for span, p in scores.items():
            assert p == matrix[span.l, span.r]


class TestTagScorer:
    def test_zero_biaffine_scores_zero(self):
        vocab, store, enc, sc = _setup()
        sc.tag_biaffine.value[...] = 0.0
        table = encode_sentence("abc", vocab, enc)
        scores = score_all_tag(table, sc, [Span(0, 1), Span(0, 3)])
        for vec in scores.values():
            np.testing.assert_array_equal(vec, np.zeros(N_TAGS))

    def test_hand_computed_identity_biaffine(self):
        # u aug [2, 1], v aug [1, 1], W_t = I: score = 2*1 + 1*1 = 3
        vocab, store, enc, sc = _setup()
        _zero_mlps(store)
        sc.tag_left_b.value[...] = 2.0
        sc.tag_right_b.value[...] = 1.0
        sc.tag_biaffine.value[...] = np.eye(D + 1)
        table = encode_sentence("ab", vocab, enc)
        scores = score_all_tag(table, sc, [Span(0, 2)])
        np.testing.assert_allclose(scores[Span(0, 2)], np.full(N_TAGS, 3.0), rtol=1e-12)

    def test_both_sides_augmented(self):
        # zero MLPs leave only the corner constant W_t[d, d]
        vocab, store, enc, sc = _setup(seed=6)
        _zero_mlps(store)
        rng = np.random.default_rng(1)
        sc.tag_biaffine.value[...] = rng.normal(size=sc.tag_biaffine.value.shape)
        table = encode_sentence("abc", vocab, enc)
        scores = score_all_tag(table, sc, [Span(1, 2)])
        np.testing.assert_allclose(
            scores[Span(1, 2)], sc.tag_biaffine.value[:, D, D], rtol=1e-12
        )

    def test_score_vector_length_is_tag_count(self):
        vocab, store, enc, sc = _setup(n_tags=5)
        table = encode_sentence("ab", vocab, enc)
        scores = score_all_tag(table, sc, [Span(0, 1)])
        assert scores[Span(0, 1)].shape == (5,)

    def test_request_set_invariance(self):
        vocab, store, enc, sc = _setup(seed=13)
        table = encode_sentence("abcd", vocab, enc)
        alone = score_all_tag(table, sc, [Span(1, 3)])[Span(1, 3)]
        crowded = score_all_tag(table, sc, [Span(0, 1), Span(1, 3), Span(3, 4)])[Span(1, 3)]
        np.testing.assert_array_equal(alone, crowded)

    def test_span_out_of_range(self):
        vocab, store, enc, sc = _setup()
        table = encode_sentence("ab", vocab, enc)
        with pytest.raises(ValueError, match="outside"):
            score_all_tag(table, sc, [Span(0, 3)])
        with pytest.raises(ValueError, match="outside"):
            score_all_tag(table, sc, [Span(1, 1)])

    def test_empty_request(self):
        vocab, store, enc, sc = _setup()
        table = encode_sentence("ab", vocab, enc)
        assert score_all_tag(table, sc, []) == {}


def test_scorer_gradients_pass_finite_differences():
    vocab, store, enc, sc = _setup(seed=21, d=2)
    spans = [Span(0, 1), Span(0, 2), Span(1, 2)]

    def closure():
        table = encode_sentence("ab", vocab, enc)
        seg = ag.sum_all(seg_prob_matrix(table, sc))
        tag = ag.sum_all(ag.tanh(tag_score_rows(table, sc, spans)))
        return seg + tag

    report = finite_diff_check(closure, store, samples_per_param=4)
    assert report.passed, report.max_rel_err
