"""Exact cosine vector index with MMR retrieval and seeded diversification.

The index is a flat float32 matrix scanned exhaustively: at the corpus
scales this package targets (10^4-10^5 chunks) an exact scan is fast and
removes approximate-structure nondeterminism. Retrieval is only permitted
once an index is frozen; a frozen index is immutable and safe for
concurrent readers.
"""

from __future__ import annotations

import datetime as _dt
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .errors import ConfigError, DimensionError, IndexStateError, ProviderError
from .providers import EmbeddingProvider


@dataclass(frozen=True)
class ScoredChunk:
    chunk_id: str
    score: float


@dataclass(frozen=True)
class RetrievalConfig:
    """MMR retrieval parameters; defaults mirror the shipped profile."""

    k: int = 5
    fetch_k: int = 20
    lambda_: float = 0.7
    extra_samples: int = 0
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError(f"k must be >= 1, got {self.k}")
        if self.fetch_k < self.k:
            raise ConfigError(f"fetch_k must be >= k, got {self.fetch_k} < {self.k}")
        if not 0.0 <= self.lambda_ <= 1.0:
            raise ConfigError(f"lambda must be in [0, 1], got {self.lambda_}")
        if self.extra_samples < 0:
            raise ConfigError("extra_samples must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise ConfigError("seed must be a 64-bit unsigned integer")


def cosine_similarity(a: np.ndarray | Sequence[float], b: np.ndarray | Sequence[float]) -> float:
    """dot(a, b) / (|a| * |b|), 0.0 when either vector has zero norm.

    Result clamped to [-1, 1] so accumulated rounding can't leak outside
    the cosine range. This single kernel is shared by retrieval and the
    city recommender.
    """
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    if va.shape != vb.shape:
        raise DimensionError(f"dimension mismatch: {va.shape} vs {vb.shape}")
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    if np.array_equal(va, vb):
        return 1.0  # self-similarity is exactly 1 despite rounding
    return max(-1.0, min(1.0, float(np.dot(va, vb)) / (na * nb)))


class VectorIndex:
    """Append-then-freeze store of (chunk_id, vector) pairs."""

    def __init__(self, dim: int):
        if dim <= 0:
            raise ConfigError(f"dim must be positive, got {dim}")
        self.dim = dim
        self._ids: list[str] = []
        self._rows: list[np.ndarray] = []
        self._by_id: dict[str, int] = {}
        self._matrix: np.ndarray | None = None
        self.frozen = False

    def __len__(self) -> int:
        return len(self._ids)

    @property
    def chunk_ids(self) -> tuple[str, ...]:
        return tuple(self._ids)

    def add(self, chunk_id: str, vector: np.ndarray | Sequence[float]) -> None:
        if self.frozen:
            raise IndexStateError("cannot add to a frozen index")
        if chunk_id in self._by_id:
            raise ConfigError(f"duplicate chunk_id {chunk_id!r}")
        row = np.asarray(vector, dtype=np.float32)
        if row.shape != (self.dim,):
            raise DimensionError(
                f"vector for {chunk_id!r} has shape {row.shape}, expected ({self.dim},)"
            )
        if not np.all(np.isfinite(row)):
            raise ConfigError(f"vector for {chunk_id!r} has non-finite entries")
        self._by_id[chunk_id] = len(self._ids)
        self._ids.append(chunk_id)
        self._rows.append(row)

    def freeze(self) -> "VectorIndex":
        if not self.frozen:
            self._matrix = (
                np.vstack(self._rows)
                if self._rows
                else np.zeros((0, self.dim), dtype=np.float32)
            )
            self.frozen = True
        return self

    def vector(self, chunk_id: str) -> np.ndarray:
        return self._rows[self._by_id[chunk_id]]

    @property
    def matrix(self) -> np.ndarray:
        if not self.frozen:
            raise IndexStateError("index must be frozen before retrieval")
        return self._matrix  # type: ignore[return-value]

    # -- persistence: manifest + little-endian float32 vectors in chunk_id
    #    order + sidecar id list. Round-trip is exact because vectors are
    #    stored float32 in memory as well.

    def save(self, directory: str | Path, stem: str, provider_id: str) -> None:
        if not self.frozen:
            raise IndexStateError("freeze the index before saving")
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        order = sorted(range(len(self._ids)), key=lambda i: self._ids[i])
        ids = [self._ids[i] for i in order]
        matrix = self.matrix[order].astype("<f4")
        (directory / f"{stem}.ids").write_text(
            "".join(f"{cid}\n" for cid in ids), encoding="utf-8"
        )
        (directory / f"{stem}.vec").write_bytes(matrix.tobytes(order="C"))
        manifest = {
            "dim": self.dim,
            "count": len(ids),
            "provider_id": provider_id,
            "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        }
        (directory / f"{stem}.manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, directory: str | Path, stem: str) -> tuple["VectorIndex", dict]:
        directory = Path(directory)
        manifest = json.loads(
            (directory / f"{stem}.manifest.json").read_text(encoding="utf-8")
        )
        ids = (directory / f"{stem}.ids").read_text(encoding="utf-8").splitlines()
        raw = (directory / f"{stem}.vec").read_bytes()
        matrix = np.frombuffer(raw, dtype="<f4").reshape(manifest["count"], manifest["dim"])
        index = cls(manifest["dim"])
        for cid, row in zip(ids, matrix):
            index.add(cid, row)
        index.freeze()
        return index, manifest


def embed_batch(
    texts: Sequence[str], provider: EmbeddingProvider, batch_size: int = 128
) -> list[np.ndarray]:
    """Embed texts in order through the provider, batching transparently.

    Raises DimensionError on dimensionality drift within the result and
    re-raises provider failures carrying the failed input indices.
    """
    out: list[np.ndarray] = []
    for start in range(0, len(texts), batch_size):
        batch = list(texts[start : start + batch_size])
        try:
            vectors = provider.embed(batch)
        except ProviderError:
            raise
        except Exception as exc:  # provider bug or transport failure
            raise ProviderError(
                f"embedding provider failed: {exc}",
                failed_indices=list(range(start, start + len(batch))),
            ) from exc
        if len(vectors) != len(batch):
            raise ProviderError(
                f"provider returned {len(vectors)} vectors for {len(batch)} texts",
                failed_indices=list(range(start, start + len(batch))),
            )
        out.extend(np.asarray(v, dtype=np.float32) for v in vectors)
    dims = {v.shape for v in out}
    if len(dims) > 1:
        raise DimensionError(f"dimension drift across batch: {sorted(dims)}")
    return out


def top_by_similarity(index: VectorIndex, query: np.ndarray, n: int) -> list[ScoredChunk]:
    """Exhaustive cosine scan; ties broken by ascending chunk_id."""
    if n < 1:
        raise ConfigError(f"n must be >= 1, got {n}")
    matrix = index.matrix
    if len(index) == 0:
        return []
    q = np.asarray(query, dtype=np.float64)
    if q.shape != (index.dim,):
        raise DimensionError(f"query has shape {q.shape}, expected ({index.dim},)")
    m = matrix.astype(np.float64)
    norms = np.linalg.norm(m, axis=1)
    qnorm = float(np.linalg.norm(q))
    scores = np.zeros(len(index), dtype=np.float64)
    if qnorm > 0.0:
        nonzero = norms > 0.0
        scores[nonzero] = (m[nonzero] @ q) / (norms[nonzero] * qnorm)
        np.clip(scores, -1.0, 1.0, out=scores)
        scores[np.all(m == q, axis=1)] = 1.0  # exact matches score exactly 1
    ids = index.chunk_ids
    order = sorted(range(len(ids)), key=lambda i: (-scores[i], ids[i]))
    return [ScoredChunk(ids[i], float(scores[i])) for i in order[:n]]


def mmr_select(
    candidates: Sequence[tuple[str, np.ndarray, float]],
    k: int,
    lambda_: float,
) -> list[ScoredChunk]:
    """Greedy maximal-marginal-relevance selection.

    The first pick is the relevance argmax; each later pick maximizes
    lambda * relevance(d) - (1 - lambda) * max_{s selected} cos(d, s).
    The first pick's reported objective uses an empty-set diversity of 0.
    Ties break by ascending chunk_id.
    """
    if not 0.0 <= lambda_ <= 1.0:
        raise ConfigError(f"lambda must be in [0, 1], got {lambda_}")
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    if not candidates:
        return []
    ids = [c[0] for c in candidates]
    vectors = [np.asarray(c[1], dtype=np.float64) for c in candidates]
    relevance = [float(c[2]) for c in candidates]
    n = len(candidates)

    remaining = set(range(n))
    selected: list[ScoredChunk] = []
    # max cosine to any already selected candidate; cosines can be negative,
    # so the running maximum must start below the cosine range
    max_sim = [-np.inf] * n

    while remaining and len(selected) < k:
        best_i = -1
        best_key = -np.inf
        for i in sorted(remaining, key=lambda j: ids[j]):
            if selected:
                key = lambda_ * relevance[i] - (1.0 - lambda_) * max_sim[i]
            else:
                # first pick is the relevance argmax regardless of lambda
                key = relevance[i]
            if key > best_key:
                best_key = key
                best_i = i
        remaining.discard(best_i)
        obj = best_key if selected else lambda_ * relevance[best_i]
        selected.append(ScoredChunk(ids[best_i], float(obj)))
        for i in remaining:
            sim = cosine_similarity(vectors[i], vectors[best_i])
            if sim > max_sim[i]:
                max_sim[i] = sim
    return selected


def diversify_sample(
    selected: Sequence[ScoredChunk],
    remaining: Sequence[ScoredChunk],
    extra_samples: int,
    seed: int,
) -> list[ScoredChunk]:
    """Append a seeded uniform sample (without replacement) from remaining."""
    overlap = {s.chunk_id for s in selected} & {r.chunk_id for r in remaining}
    if overlap:
        raise ConfigError(f"selected and remaining overlap: {sorted(overlap)}")
    count = min(extra_samples, len(remaining))
    if count <= 0:
        return list(selected)
    rng = random.Random(seed)
    return list(selected) + rng.sample(list(remaining), count)


def retrieve(
    index: VectorIndex,
    query_text: str,
    provider: EmbeddingProvider,
    cfg: RetrievalConfig,
) -> list[ScoredChunk]:
    """Embed the query, pool fetch_k candidates, MMR-select k, then add the
    optional seeded diversification sample from the unselected pool."""
    query = embed_batch([query_text], provider)[0]
    pool = top_by_similarity(index, np.asarray(query, dtype=np.float64), cfg.fetch_k)
    candidates = [(sc.chunk_id, index.vector(sc.chunk_id), sc.score) for sc in pool]
    selected = mmr_select(candidates, cfg.k, cfg.lambda_)
    chosen = {sc.chunk_id for sc in selected}
    rest = [sc for sc in pool if sc.chunk_id not in chosen]
    return diversify_sample(selected, rest, cfg.extra_samples, cfg.seed)
