"""Corpus text analytics: TF-IDF, truncated-SVD topics, and signed polarity.

TF-IDF uses raw counts and idf = ln(N/df) with no smoothing; rows are
L2-normalized by default. The truncated SVD is a randomized subspace
iteration with a fixed internal seed, so topic loadings are reproducible
run to run; the sign convention makes the largest-magnitude entry of every
term-loading column positive.
"""

from __future__ import annotations

import math
import re
from collections import Counter
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .errors import ConfigError, ConvergenceError, ProviderError
from .providers import SentimentClassifier

_URL = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_ALPHA_RUN = re.compile(r"[a-z]+")
_SENTENCE_SPLIT = re.compile(r"(?<=[.!?])\s+")


def load_stopwords(path: str | Path | None = None) -> frozenset[str]:
    """The shipped stopword list, or one word per line from a file."""
    if path is None:
        text = (
            resources.files("planmatch")
            .joinpath("data/stopwords.txt")
            .read_text(encoding="utf-8")
        )
    else:
        text = Path(path).read_text(encoding="utf-8")
    return frozenset(
        line.strip().lower()
        for line in text.splitlines()
        if line.strip() and not line.startswith("#")
    )


def tokenize(text: str, stopwords: frozenset[str] | set[str]) -> list[str]:
    """Lowercase, drop URLs/digits/punctuation/markdown, keep alphabetic
    tokens of length >= 2 that are not stopwords."""
    if not text:
        return []
    cleaned = _URL.sub(" ", text.lower())
    return [
        tok
        for tok in _ALPHA_RUN.findall(cleaned)
        if len(tok) >= 2 and tok not in stopwords
    ]


@dataclass(frozen=True)
class TokenizedCorpus:
    doc_ids: tuple[str, ...]
    tokens: tuple[tuple[str, ...], ...]
    vocabulary: dict[str, int]  # term -> dense id, sorted terms

    @property
    def terms(self) -> tuple[str, ...]:
        return tuple(sorted(self.vocabulary, key=self.vocabulary.get))


def tokenize_corpus(
    docs: Sequence[tuple[str, str]], stopwords: frozenset[str] | set[str]
) -> TokenizedCorpus:
    """Tokenize (doc_id, text) pairs and build the sorted vocabulary."""
    doc_ids = tuple(d for d, _ in docs)
    if len(set(doc_ids)) != len(doc_ids):
        raise ConfigError("duplicate doc_ids in corpus")
    token_lists = tuple(tuple(tokenize(text, stopwords)) for _, text in docs)
    vocab = {term: i for i, term in enumerate(sorted({t for toks in token_lists for t in toks}))}
    return TokenizedCorpus(doc_ids=doc_ids, tokens=token_lists, vocabulary=vocab)


def term_frequencies(corpus: TokenizedCorpus) -> dict[str, int]:
    """Global term counts summed over documents."""
    counts: Counter[str] = Counter()
    for tokens in corpus.tokens:
        counts.update(tokens)
    return dict(counts)


@dataclass(frozen=True)
class TfidfMatrix:
    doc_ids: tuple[str, ...]
    terms: tuple[str, ...]
    values: np.ndarray  # (N, V) float64, zero where term absent
    idf: np.ndarray  # (V,)
    row_normalized: bool

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape  # type: ignore[return-value]


def build_tfidf(corpus: TokenizedCorpus, row_normalize: bool = True) -> TfidfMatrix:
    """tf = raw in-document count, idf = ln(N / df), cell = tf * idf."""
    n_docs = len(corpus.doc_ids)
    n_terms = len(corpus.vocabulary)
    if n_docs < 1 or n_terms < 1:
        raise ConfigError("corpus must have at least one document and one term")
    values = np.zeros((n_docs, n_terms), dtype=np.float64)
    df = np.zeros(n_terms, dtype=np.float64)
    for row, tokens in enumerate(corpus.tokens):
        counts = Counter(tokens)
        for term, count in counts.items():
            values[row, corpus.vocabulary[term]] = float(count)
        for term in counts:
            df[corpus.vocabulary[term]] += 1.0
    idf = np.log(n_docs / df)
    values *= idf
    if row_normalize:
        norms = np.linalg.norm(values, axis=1)
        nonzero = norms > 0
        values[nonzero] /= norms[nonzero, None]
    return TfidfMatrix(
        doc_ids=corpus.doc_ids,
        terms=corpus.terms,
        values=values,
        idf=idf,
        row_normalized=row_normalize,
    )


@dataclass(frozen=True)
class LsaModel:
    rank: int
    singular_values: np.ndarray  # (r,), non-increasing
    term_loadings: np.ndarray  # (V, r), orthonormal columns
    doc_scores: np.ndarray  # (N, r), left singular vectors scaled by sigma
    doc_ids: tuple[str, ...] = ()
    terms: tuple[str, ...] = ()


def low_rank_svd(
    matrix: np.ndarray,
    rank: int,
    *,
    oversample: int = 10,
    max_iter: int = 300,
    tol: float = 1e-10,
    seed: int = 0x5EED,
) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Top-``rank`` singular triplets via randomized subspace iteration.

    Draws a seeded Gaussian test matrix, alternates A/A^T projections with
    QR re-orthonormalization until the leading singular values stabilize,
    then solves the small projected problem exactly. With oversampling
    covering min(N, V) (always true for small matrices) the result is the
    exact truncated decomposition. Returns (U, s, V) with A ~= U @ diag(s)
    @ V.T and the largest-magnitude entry of each V column positive.
    """
    a = np.asarray(matrix, dtype=np.float64)
    if a.ndim != 2:
        raise ConfigError("matrix must be 2-dimensional")
    n, m = a.shape
    if not 1 <= rank <= min(n, m):
        raise ConfigError(f"rank must be in [1, {min(n, m)}], got {rank}")
    if max_iter < 1:
        raise ConfigError("max_iter must be >= 1")
    p = min(rank + oversample, min(n, m))
    rng = np.random.default_rng(seed)
    q, _ = np.linalg.qr(a @ rng.standard_normal((m, p)))
    prev = None
    residual = float("inf")
    converged = False
    for _ in range(max_iter):
        w, _ = np.linalg.qr(a.T @ q)
        q, _ = np.linalg.qr(a @ w)
        b = q.T @ a  # (p, m)
        ub, s, vt = np.linalg.svd(b, full_matrices=False)
        lead = s[:rank]
        if prev is not None:
            residual = float(np.max(np.abs(lead - prev)))
            if residual <= tol * max(1.0, float(lead[0]) if lead.size else 1.0):
                converged = True
                break
        prev = lead.copy()
    if not converged:
        raise ConvergenceError(
            f"subspace iteration did not converge in {max_iter} iterations",
            residual=residual,
        )
    u = q @ ub[:, :rank]
    s = s[:rank]
    v = vt[:rank].T
    # sign convention: largest-magnitude entry of each term column positive
    for j in range(rank):
        pivot = int(np.argmax(np.abs(v[:, j])))
        if v[pivot, j] < 0:
            v[:, j] = -v[:, j]
            u[:, j] = -u[:, j]
    return u, s, v


def truncated_svd(matrix: TfidfMatrix | np.ndarray, rank: int) -> LsaModel:
    """Best rank-``rank`` factorization of a TF-IDF (or raw) matrix."""
    if isinstance(matrix, TfidfMatrix):
        values, doc_ids, terms = matrix.values, matrix.doc_ids, matrix.terms
    else:
        values = np.asarray(matrix, dtype=np.float64)
        doc_ids, terms = (), ()
    u, s, v = low_rank_svd(values, rank)
    return LsaModel(
        rank=rank,
        singular_values=s,
        term_loadings=v,
        doc_scores=u * s,
        doc_ids=doc_ids,
        terms=terms,
    )


def doc_topic_scores(model: LsaModel) -> np.ndarray:
    """Document-by-topic score matrix (left singular vectors times sigma)."""
    return model.doc_scores


@dataclass(frozen=True)
class TopicSummary:
    topic_index: int
    top_terms: tuple[tuple[str, float], ...]


def topic_top_terms(model: LsaModel, n: int = 15) -> list[TopicSummary]:
    """Per topic, the n terms with the largest absolute loadings."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    n_terms = model.term_loadings.shape[0]
    terms = model.terms or tuple(f"t{i}" for i in range(n_terms))
    out = []
    for topic in range(model.rank):
        col = model.term_loadings[:, topic]
        order = sorted(range(n_terms), key=lambda i: (-abs(col[i]), i))[:n]
        out.append(
            TopicSummary(
                topic_index=topic,
                top_terms=tuple((terms[i], float(col[i])) for i in order),
            )
        )
    return out


def split_sentences(text: str) -> list[str]:
    """Naive sentence split on . ! ? followed by whitespace."""
    return [s for s in _SENTENCE_SPLIT.split(text) if s.strip()]


def representative_sentences(
    sentences: Sequence[str],
    model: LsaModel,
    vocabulary: Mapping[str, int],
    stopwords: frozenset[str] | set[str],
) -> list[tuple[str, float]]:
    """Highest-scoring sentence per topic.

    A sentence's topic score is the loading sum of its in-vocabulary
    tokens, L2-normalized by the token-count vector; sentences with no
    in-vocabulary tokens score 0 everywhere. Ties pick the earliest
    sentence.
    """
    if not sentences:
        raise ConfigError("sentences must be non-empty")
    scores = np.zeros((len(sentences), model.rank), dtype=np.float64)
    for row, sentence in enumerate(sentences):
        counts = Counter(
            tok for tok in tokenize(sentence, stopwords) if tok in vocabulary
        )
        if not counts:
            continue
        vec_norm = math.sqrt(sum(c * c for c in counts.values()))
        for term, count in counts.items():
            scores[row] += count * model.term_loadings[vocabulary[term]]
        scores[row] /= vec_norm
    out = []
    for topic in range(model.rank):
        best = int(np.argmax(scores[:, topic]))  # argmax keeps earliest on ties
        out.append((sentences[best], float(scores[best, topic])))
    return out


@dataclass(frozen=True)
class PolarityScore:
    label: str  # "positive" | "negative"
    confidence: float
    signed: float

    def __post_init__(self):
        if self.label not in ("positive", "negative"):
            raise ConfigError(f"label must be positive|negative, got {self.label!r}")
        if not 0.0 <= self.confidence <= 1.0:
            raise ConfigError(f"confidence must be in [0, 1], got {self.confidence}")
        expected = self.confidence if self.label == "positive" else -self.confidence
        if self.signed != expected:
            raise ConfigError("signed value inconsistent with label and confidence")


def polarity(text: str, classifier: SentimentClassifier) -> PolarityScore:
    """Signed polarity: +confidence for positive, -confidence for negative."""
    try:
        label, confidence = classifier.classify(text)
    except ProviderError:
        raise
    except Exception as exc:
        raise ProviderError(f"sentiment classifier failed: {exc}") from exc
    confidence = float(confidence)
    signed = confidence if label == "positive" else -confidence
    return PolarityScore(label=label, confidence=confidence, signed=signed)
