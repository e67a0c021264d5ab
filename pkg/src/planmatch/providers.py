"""Pluggable embedding, chat, and sentiment providers.

Each provider family has a deterministic local reference used as the test
oracle for the whole pipeline, plus a remote HTTP implementation for
production runs. Remote providers batch requests, retry with exponential
backoff, and read their API key from the PROVIDER_API_KEY environment
variable.
"""

from __future__ import annotations

import hashlib
import os
import re
import threading
import time
from dataclasses import dataclass
from importlib import resources
from typing import Iterable, Protocol, Sequence

import httpx
import numpy as np

from . import prompts as prompt_conventions
from .errors import ProviderError

DEFAULT_EMBEDDING_MODEL = "text-embedding-3-small"
DEFAULT_CHAT_MODEL = "gpt-4o-mini"
API_KEY_ENV = "PROVIDER_API_KEY"

IDK_ANSWER = "I don't know"

#: Words ignored when the mock matches a theme label against chunk text.
_LABEL_STOPWORDS = frozenset("a an and in of or the to for with".split())

#: Marker that makes the mock decline to confirm an otherwise matching chunk.
UNCERTAINTY_MARKER = "[ILLEGIBLE]"

_TOKEN = re.compile(r"[a-z0-9]+")


def _hash_bucket(gram: str, dim: int) -> int:
    digest = hashlib.blake2b(gram.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big") % dim


class EmbeddingProvider(Protocol):
    provider_id: str
    dim: int

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


class ChatProvider(Protocol):
    provider_id: str

    def complete(
        self, prompt: str, *, temperature: float = 0.0, max_output_tokens: int = 1024
    ) -> str: ...


class SentimentClassifier(Protocol):
    def classify(self, text: str) -> tuple[str, float]: ...


class HashedNgramEmbedder:
    """Deterministic reference embedder.

    Lowercases, tokenizes on alphanumeric runs, forms word 3-grams, hashes
    each gram into one of ``dim`` buckets with a fixed 64-bit hash, counts,
    and L2-normalizes. Texts with fewer than three tokens use a single gram
    of all their tokens so short queries still embed to something nonzero.
    """

    def __init__(self, dim: int = 256):
        self.dim = dim
        self.provider_id = f"hashed-3gram-{dim}"

    def _grams(self, text: str) -> list[str]:
        tokens = _TOKEN.findall(text.lower())
        if len(tokens) < 3:
            return [" ".join(tokens)] if tokens else []
        return [" ".join(tokens[i : i + 3]) for i in range(len(tokens) - 2)]

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        out = []
        for text in texts:
            vec = np.zeros(self.dim, dtype=np.float64)
            for gram in self._grams(text):
                vec[_hash_bucket(gram, self.dim)] += 1.0
            norm = np.linalg.norm(vec)
            if norm > 0:
                vec /= norm
            out.append(vec.astype(np.float32))
        return out


class MockChatProvider:
    """Rule-based chat provider, the deterministic oracle for pipeline tests.

    It interprets prompts rendered by :mod:`planmatch.prompts` and answers:

    * empty retrieved context -> ``I don't know``;
    * taxonomy prompts (contain "exactly 20") -> a numbered list of 20
      theme names derived from the listed statements;
    * extraction prompts (contain "dedicated section listing") -> the
      context sentences that start with the tier's marker (``POLICY:``,
      ``STRATEGY:`` or ``ACTION:``), each quoted with its chunk's first
      page; no marked sentences -> ``I don't know``;
    * binary prompts (a double-quoted theme label plus a yes/no
      instruction) -> ``Yes, ... on page <n>.`` iff some retrieved chunk
      contains every content word of the label (case-insensitive, no
      stemming), citing that chunk's first page, else ``No.``. A matching
      chunk carrying ``[ILLEGIBLE]`` yields ``I don't know`` instead, so
      fixtures can exercise the mandated uncertainty fallback;
    * anything else -> ``I don't know``.
    """

    provider_id = "mock-chat"

    MARKERS = {"policies": "POLICY:", "strategies": "STRATEGY:", "actions": "ACTION:"}

    def complete(
        self, prompt: str, *, temperature: float = 0.0, max_output_tokens: int = 1024
    ) -> str:
        question = prompt_conventions.parse_question(prompt)
        if "exactly 20" in prompt:
            return self._taxonomy_answer(prompt)
        blocks = prompt_conventions.parse_context_blocks(prompt)
        if not blocks:
            return IDK_ANSWER
        if "dedicated section listing" in question:
            return self._extraction_answer(question, blocks)
        label_match = re.search(r'"([^"]+)"', question)
        if label_match and re.search(r"answer yes or no", question, re.IGNORECASE):
            return self._binary_answer(label_match.group(1), blocks)
        return IDK_ANSWER

    def _binary_answer(self, label: str, blocks: list[tuple[int, str]]) -> str:
        words = [
            w
            for w in _TOKEN.findall(label.lower())
            if w not in _LABEL_STOPWORDS
        ]
        for page, text in blocks:
            tokens = set(_TOKEN.findall(text.lower()))
            if words and all(w in tokens for w in words):
                if UNCERTAINTY_MARKER in text:
                    return IDK_ANSWER
                return f'Yes, the plan addresses "{label}" on page {page}.'
        return "No."

    def _extraction_answer(self, question: str, blocks: list[tuple[int, str]]) -> str:
        marker = None
        plural = None
        for word, mark in self.MARKERS.items():
            if word in question.lower():
                marker, plural = mark, word
                break
        if marker is None:
            return IDK_ANSWER
        found: list[tuple[str, int]] = []
        seen: set[str] = set()
        for page, text in blocks:
            for line in text.splitlines():
                stripped = line.strip()
                if stripped.startswith(marker):
                    statement = stripped[len(marker):].strip()
                    if statement and statement not in seen:
                        seen.add(statement)
                        found.append((statement, page))
        if not found:
            return IDK_ANSWER
        quoted = [f'"{s}" (page {p})' for s, p in found]
        if len(quoted) == 1:
            listing = quoted[0]
        else:
            listing = ", ".join(quoted[:-1]) + " and " + quoted[-1]
        return (
            f"Yes, the document includes a dedicated section listing {plural}. "
            f"The relevant sentences are: {listing}."
        )

    def _taxonomy_answer(self, prompt: str) -> str:
        statements = [
            line[2:].strip()
            for line in prompt.splitlines()
            if line.startswith("- ") and line[2:].strip()
        ]
        names: list[str] = []
        seen: set[str] = set()
        for statement in statements:
            words = statement.split()[:4]
            name = " ".join(w.capitalize() for w in words).rstrip(".,;")
            if name and name not in seen:
                seen.add(name)
                names.append(name)
            if len(names) == 20:
                break
        i = 1
        while len(names) < 20:
            filler = f"Additional Theme {i:02d}"
            if filler not in seen:
                names.append(filler)
                seen.add(filler)
            i += 1
        return "\n".join(f"{i}. {name}" for i, name in enumerate(names, start=1))


class LexiconSentimentClassifier:
    """Deterministic sentiment reference: signed token counting.

    Confidence is |pos - neg| / (pos + neg); a text with no lexicon hits is
    (positive, 0.5). Ties (pos == neg > 0) are positive with confidence 0.
    """

    def __init__(
        self,
        positive: Iterable[str] | None = None,
        negative: Iterable[str] | None = None,
    ):
        if positive is None or negative is None:
            root = resources.files("planmatch").joinpath("data/lexicons")
            positive = positive or _read_word_list(root.joinpath("positive.txt"))
            negative = negative or _read_word_list(root.joinpath("negative.txt"))
        self.positive = frozenset(w.lower() for w in positive)
        self.negative = frozenset(w.lower() for w in negative)

    def classify(self, text: str) -> tuple[str, float]:
        tokens = _TOKEN.findall(text.lower())
        pos = sum(1 for t in tokens if t in self.positive)
        neg = sum(1 for t in tokens if t in self.negative)
        if pos + neg == 0:
            return "positive", 0.5
        label = "positive" if pos >= neg else "negative"
        return label, abs(pos - neg) / (pos + neg)


def _read_word_list(resource) -> list[str]:
    lines = resource.read_text(encoding="utf-8").splitlines()
    return [ln.strip() for ln in lines if ln.strip() and not ln.startswith("#")]


class RateLimiter:
    """Bounds provider concurrency and request rate.

    ``max_in_flight`` is enforced with a semaphore; ``requests_per_minute``
    by spacing acquisitions at least 60/rpm seconds apart.
    """

    def __init__(self, max_in_flight: int = 4, requests_per_minute: int | None = None):
        self._sem = threading.Semaphore(max_in_flight)
        self._interval = 60.0 / requests_per_minute if requests_per_minute else 0.0
        self._lock = threading.Lock()
        self._next_at = 0.0

    def __enter__(self):
        self._sem.acquire()
        if self._interval:
            with self._lock:
                now = time.monotonic()
                wait = self._next_at - now
                self._next_at = max(now, self._next_at) + self._interval
            if wait > 0:
                time.sleep(wait)
        return self

    def __exit__(self, *exc):
        self._sem.release()
        return False


@dataclass
class RemoteSettings:
    """Connection settings shared by the remote providers."""

    base_url: str = "https://api.openai.com/v1"
    timeout: float = 60.0
    max_retries: int = 3
    backoff_base: float = 0.5
    max_batch: int = 128
    max_in_flight: int = 4
    requests_per_minute: int | None = None

    def api_key(self) -> str:
        key = os.environ.get(API_KEY_ENV, "")
        if not key:
            raise ProviderError(f"{API_KEY_ENV} is not set")
        return key


class _RemoteBase:
    def __init__(
        self,
        settings: RemoteSettings,
        transport: httpx.BaseTransport | None = None,
    ):
        self.settings = settings
        self._limiter = RateLimiter(
            settings.max_in_flight, settings.requests_per_minute
        )
        self._client = httpx.Client(
            base_url=settings.base_url,
            timeout=settings.timeout,
            transport=transport,
        )

    def _post(self, path: str, payload: dict) -> dict:
        headers = {"Authorization": f"Bearer {self.settings.api_key()}"}
        last_error: Exception | None = None
        for attempt in range(self.settings.max_retries):
            try:
                with self._limiter:
                    response = self._client.post(path, json=payload, headers=headers)
                response.raise_for_status()
                return response.json()
            except (httpx.HTTPError, ValueError) as exc:
                last_error = exc
                if attempt + 1 < self.settings.max_retries:
                    time.sleep(self.settings.backoff_base * (2**attempt))
        raise ProviderError(f"provider request failed after retries: {last_error}")


class RemoteEmbeddingProvider(_RemoteBase):
    """OpenAI-compatible /embeddings client with transparent batching."""

    def __init__(
        self,
        model_id: str = DEFAULT_EMBEDDING_MODEL,
        settings: RemoteSettings | None = None,
        transport: httpx.BaseTransport | None = None,
    ):
        super().__init__(settings or RemoteSettings(), transport)
        self.model_id = model_id
        self.provider_id = f"remote-embedding-{model_id}"
        self.dim = 0  # provider-defined; learned from the first response

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        out: list[np.ndarray] = []
        for start in range(0, len(texts), self.settings.max_batch):
            batch = list(texts[start : start + self.settings.max_batch])
            try:
                data = self._post(
                    "/embeddings", {"model": self.model_id, "input": batch}
                )
                rows = sorted(data["data"], key=lambda item: item["index"])
                vectors = [
                    np.asarray(row["embedding"], dtype=np.float32) for row in rows
                ]
            except (ProviderError, KeyError, TypeError) as exc:
                raise ProviderError(
                    f"embedding batch failed: {exc}",
                    failed_indices=list(range(start, start + len(batch))),
                ) from exc
            if vectors and self.dim == 0:
                self.dim = int(vectors[0].shape[0])
            out.extend(vectors)
        return out


class RemoteChatProvider(_RemoteBase):
    """OpenAI-compatible /chat/completions client."""

    def __init__(
        self,
        model_id: str = DEFAULT_CHAT_MODEL,
        settings: RemoteSettings | None = None,
        transport: httpx.BaseTransport | None = None,
    ):
        super().__init__(settings or RemoteSettings(), transport)
        self.model_id = model_id
        self.provider_id = f"remote-chat-{model_id}"

    def complete(
        self, prompt: str, *, temperature: float = 0.0, max_output_tokens: int = 1024
    ) -> str:
        data = self._post(
            "/chat/completions",
            {
                "model": self.model_id,
                "temperature": temperature,
                "max_tokens": max_output_tokens,
                "messages": [{"role": "user", "content": prompt}],
            },
        )
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProviderError(f"malformed chat response: {exc}") from exc
