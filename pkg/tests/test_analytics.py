"""Tests for tokenization, TF-IDF, truncated SVD, topics, and polarity."""

from __future__ import annotations

import math
import random

import numpy as np
import pytest

from planmatch.analytics import (
    LsaModel,
    PolarityScore,
    TokenizedCorpus,
    build_tfidf,
    doc_topic_scores,
    load_stopwords,
    low_rank_svd,
    polarity,
    representative_sentences,
    split_sentences,
    term_frequencies,
    tokenize,
    tokenize_corpus,
    topic_top_terms,
    truncated_svd,
)
from planmatch.errors import ConfigError, ConvergenceError, ProviderError
from planmatch.providers import LexiconSentimentClassifier

from .oracles import full_svd_oracle

LN_3_2 = math.log(3 / 2)


def corpus_abc() -> TokenizedCorpus:
    """The 3-document fixture: D1=\"a b a\", D2=\"a c\", D3=\"b c c\"."""
    return TokenizedCorpus(
        doc_ids=("D1", "D2", "D3"),
        tokens=(("a", "b", "a"), ("a", "c"), ("b", "c", "c")),
        vocabulary={"a": 0, "b": 1, "c": 2},
    )


class TestTokenize:
    def test_case_and_punctuation_folding(self):
        assert tokenize("The plan, the PLAN!", {"the"}) == ["plan", "plan"]

    def test_empty(self):
        assert tokenize("", {"the"}) == []

    def test_urls_digits_and_short_tokens_stripped(self):
        assert tokenize("visit https://x.y p. 12", set()) == ["visit"]

    def test_markdown_markers_removed(self):
        assert tokenize("## Heading *bold* - item", set()) == ["heading", "bold", "item"]

    def test_shipped_stopwords_include_paper_examples(self):
        stops = load_stopwords()
        assert {"and", "or", "for", "the", "by", "of", "with"} <= stops


class TestTermFrequencies:
    def test_direct_count(self):
        corpus = tokenize_corpus([("d", "climate plan climate")], set())
        assert term_frequencies(corpus) == {"climate": 2, "plan": 1}

    def test_empty_corpus(self):
        corpus = TokenizedCorpus(doc_ids=(), tokens=(), vocabulary={})
        assert term_frequencies(corpus) == {}

    def test_summed_over_documents(self):
        corpus = tokenize_corpus(
            [("d1", "transit transit"), ("d2", "transit energy")], set()
        )
        assert term_frequencies(corpus) == {"transit": 3, "energy": 1}


class TestBuildTfidf:
    def test_hand_values_unnormalized(self):
        m = build_tfidf(corpus_abc(), row_normalize=False)
        assert m.idf == pytest.approx([LN_3_2, LN_3_2, LN_3_2], abs=1e-12)
        assert m.values[0, 0] == pytest.approx(2 * LN_3_2, abs=1e-12)
        assert m.values[1, 2] == pytest.approx(LN_3_2, abs=1e-12)
        assert m.values[0, 2] == 0.0

    def test_ubiquitous_term_column_zero(self):
        corpus = TokenizedCorpus(
            doc_ids=("D1", "D2"),
            tokens=(("x", "y"), ("x",)),
            vocabulary={"x": 0, "y": 1},
        )
        m = build_tfidf(corpus, row_normalize=False)
        assert (m.values[:, 0] == 0.0).all()  # df = N annihilates the column
        assert m.values[0, 1] > 0

    def test_single_document_degenerate(self):
        corpus = tokenize_corpus([("only", "climate plan text")], set())
        m = build_tfidf(corpus, row_normalize=False)
        assert (m.values == 0.0).all()

    def test_row_normalization(self):
        m = build_tfidf(corpus_abc(), row_normalize=True)
        for row in m.values:
            norm = np.linalg.norm(row)
            if norm > 0:
                assert norm == pytest.approx(1.0, abs=1e-9)

    def test_cells_nonnegative_and_zero_iff_absent_or_ubiquitous(self):
        m = build_tfidf(corpus_abc(), row_normalize=False)
        assert (m.values >= 0).all()
        corpus = corpus_abc()
        for i, tokens in enumerate(corpus.tokens):
            for term, j in corpus.vocabulary.items():
                if term not in tokens:
                    assert m.values[i, j] == 0.0
                else:
                    assert m.values[i, j] > 0.0  # all fixture terms have df < N


class TestLowRankSvd:
    def test_identity(self):
        _, s, _ = low_rank_svd(np.eye(2), 2)
        assert s == pytest.approx([1.0, 1.0], abs=1e-9)

    def test_diagonal(self):
        _, s, _ = low_rank_svd(np.diag([3.0, 1.0]), 2)
        assert s == pytest.approx([3.0, 1.0], abs=1e-9)

    def test_rank_one_outer_product(self):
        a = np.outer([1.0, 2.0], [1.0, 1.0])
        _, s, _ = low_rank_svd(a, 1)
        assert s[0] == pytest.approx(math.sqrt(10), abs=1e-9)

    def test_rank_out_of_range(self):
        with pytest.raises(ConfigError):
            low_rank_svd(np.eye(3), 4)
        with pytest.raises(ConfigError):
            low_rank_svd(np.eye(3), 0)

    def test_nonconvergence_reports_residual(self):
        with pytest.raises(ConvergenceError) as exc:
            low_rank_svd(np.eye(3), 2, max_iter=1)
        assert exc.value.residual == float("inf")

    def test_matches_full_decomposition_oracle(self):
        rng = random.Random(4242)
        for _ in range(40):
            n = rng.randint(2, 8)
            m = rng.randint(2, 8)
            a = np.array(
                [[rng.gauss(0, 1) for _ in range(m)] for _ in range(n)]
            )
            r = rng.randint(1, min(n, m))
            u, s, v = low_rank_svd(a, r)
            _, s_full, _ = full_svd_oracle(a)
            assert np.allclose(s, s_full[:r], atol=1e-6)
            # orthonormal loadings, non-increasing spectrum
            gram = v.T @ v
            assert np.allclose(gram, np.eye(r), atol=1e-6)
            assert all(s[i] >= s[i + 1] - 1e-9 for i in range(r - 1))
            # reconstruction matches U diag(s) V^T
            recon = (u * s) @ v.T
            best = full_svd_oracle(a)
            u_full, s_f, vt_full = best
            expected = (u_full[:, :r] * s_f[:r]) @ vt_full[:r]
            assert np.allclose(
                np.linalg.norm(a - recon), np.linalg.norm(a - expected), atol=1e-6
            )

    def test_sign_convention(self):
        rng = np.random.default_rng(7)
        a = rng.standard_normal((6, 5))
        _, _, v = low_rank_svd(a, 3)
        for j in range(3):
            pivot = np.argmax(np.abs(v[:, j]))
            assert v[pivot, j] > 0

    def test_optimality_against_arbitrary_directions(self):
        rng = np.random.default_rng(11)
        for _ in range(10):
            a = rng.standard_normal((6, 6))
            r = 2
            u, s, v = low_rank_svd(a, r)
            best_err = np.linalg.norm(a - (u * s) @ v.T)
            for _ in range(20):
                w, _ = np.linalg.qr(rng.standard_normal((6, r)))
                err = np.linalg.norm(a - a @ w @ w.T)
                assert best_err <= err + 1e-6

    def test_document_permutation_invariance(self):
        rng = np.random.default_rng(3)
        a = rng.standard_normal((6, 5))
        perm = np.array([3, 0, 5, 1, 4, 2])
        model = truncated_svd(a, 3)
        permuted = truncated_svd(a[perm], 3)
        assert np.allclose(
            model.singular_values, permuted.singular_values, atol=1e-9
        )
        assert np.allclose(model.doc_scores[perm], permuted.doc_scores, atol=1e-9)


class TestModelViews:
    def test_doc_scores_are_u_times_sigma(self):
        a = np.outer([1.0, 2.0], [1.0, 1.0])
        model = truncated_svd(a, 1)
        scores = doc_topic_scores(model)
        assert scores.shape == (2, 1)
        # rank-1 structure: scores proportional to the left singular vector
        assert scores[1, 0] == pytest.approx(2 * scores[0, 0], abs=1e-9)

    def test_orthogonal_docs_load_single_topics(self):
        model = truncated_svd(np.diag([3.0, 1.0]), 2)
        scores = doc_topic_scores(model)
        for row in scores:
            assert np.sum(np.abs(row) > 1e-9) == 1

    def test_zero_row_scores_zero(self):
        a = np.array([[1.0, 0.0], [0.0, 0.0], [0.0, 2.0]])
        model = truncated_svd(a, 2)
        assert np.allclose(doc_topic_scores(model)[1], 0.0, atol=1e-9)

    def test_top_terms_ordering_and_ties(self):
        model = LsaModel(
            rank=1,
            singular_values=np.array([1.0]),
            term_loadings=np.array([[0.5], [-0.9], [0.5], [0.1]]),
            doc_scores=np.zeros((1, 1)),
            terms=("alpha", "beta", "gamma", "delta"),
        )
        (summary,) = topic_top_terms(model, n=3)
        assert summary.top_terms == (
            ("beta", -0.9),
            ("alpha", 0.5),  # ties break by term id
            ("gamma", 0.5),
        )

    def test_top_terms_exhaust_small_vocabulary(self):
        model = truncated_svd(np.eye(3), 2)
        summaries = topic_top_terms(model, n=15)
        assert all(len(s.top_terms) == 3 for s in summaries)

    def test_default_n_is_fifteen(self):
        rng = np.random.default_rng(5)
        model = truncated_svd(rng.standard_normal((4, 30)), 2)
        summaries = topic_top_terms(model)
        assert all(len(s.top_terms) == 15 for s in summaries)


class TestRepresentativeSentences:
    @staticmethod
    def toy_model() -> tuple[LsaModel, dict[str, int]]:
        vocabulary = {"bus": 0, "solar": 1}
        model = LsaModel(
            rank=2,
            singular_values=np.array([1.0, 1.0]),
            term_loadings=np.eye(2),
            doc_scores=np.zeros((1, 2)),
            terms=("bus", "solar"),
        )
        return model, vocabulary

    def test_disjoint_sentences_pick_their_topics(self):
        model, vocab = self.toy_model()
        sentences = ["The bus is here.", "Solar panels shine."]
        picks = representative_sentences(sentences, model, vocab, {"the", "is"})
        assert picks[0][0] == "The bus is here."
        assert picks[1][0] == "Solar panels shine."
        assert picks[0][1] == pytest.approx(1.0)

    def test_single_sentence_represents_every_topic(self):
        model, vocab = self.toy_model()
        picks = representative_sentences(["bus solar."], model, vocab, set())
        assert [p[0] for p in picks] == ["bus solar.", "bus solar."]

    def test_oov_sentence_scores_zero(self):
        model, vocab = self.toy_model()
        picks = representative_sentences(
            ["entirely unrelated words."], model, vocab, set()
        )
        assert all(score == 0.0 for _, score in picks)

    def test_requires_sentences(self):
        model, vocab = self.toy_model()
        with pytest.raises(ConfigError):
            representative_sentences([], model, vocab, set())

    def test_split_sentences(self):
        parts = split_sentences("One here. Two there! Three? Done")
        assert parts == ["One here.", "Two there!", "Three?", "Done"]


class TestPolarity:
    def test_positive_sign_rule(self):
        class Fixed:
            def classify(self, text):
                return "positive", 0.9

        score = polarity("anything", Fixed())
        assert score.signed == pytest.approx(0.9)
        assert score.label == "positive"

    def test_negative_sign_rule(self):
        class Fixed:
            def classify(self, text):
                return "negative", 0.8

        score = polarity("anything", Fixed())
        assert score.signed == pytest.approx(-0.8)

    def test_lexicon_reference_examples(self):
        clf = LexiconSentimentClassifier()
        positive = polarity("supports and promotes access", clf)
        negative = polarity("lacks and limits funding", clf)
        assert positive.label == "positive"
        assert positive.signed > 0
        assert negative.label == "negative"
        assert negative.signed < 0

    def test_lexicon_no_hits_is_half_confidence_positive(self):
        clf = LexiconSentimentClassifier()
        score = polarity("neutral municipal verbiage", clf)
        assert (score.label, score.confidence) == ("positive", 0.5)

    def test_contract_on_randomized_outputs(self):
        rng = random.Random(31)

        class Scripted:
            def classify(self, text):
                label = rng.choice(["positive", "negative"])
                return label, round(rng.uniform(0, 1), 6)

        clf = Scripted()
        for _ in range(500):
            score = polarity("x", clf)
            assert abs(score.signed) == score.confidence
            assert (score.signed >= 0) == (score.label == "positive")

    def test_classifier_failure_wrapped(self):
        class Broken:
            def classify(self, text):
                raise RuntimeError("no model")

        with pytest.raises(ProviderError):
            polarity("x", Broken())

    def test_invalid_score_rejected(self):
        with pytest.raises(ConfigError):
            PolarityScore(label="positive", confidence=1.5, signed=1.5)
        with pytest.raises(ConfigError):
            PolarityScore(label="negative", confidence=0.5, signed=0.5)
