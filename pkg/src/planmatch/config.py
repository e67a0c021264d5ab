"""Application configuration: defaults, JSON loading, and CLI overrides.

The shipped defaults encode the reference parameter profile: chunk_size
1000 / overlap 200, retrieval k=5 / fetch_k=20 / lambda=0.7, temperature 0,
LSA rank 5 with 15 top terms, and recommendation thresholds 0.8 / 0.6.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path

from .corpus import ChunkingConfig
from .errors import ConfigError
from .extraction import GenerationConfig
from .vecindex import RetrievalConfig


@dataclass(frozen=True)
class ProviderConfig:
    kind: str = "mock"  # "mock" | "remote"
    embedding_model: str = "text-embedding-3-small"
    chat_model: str = "gpt-4o-mini"
    embedding_dim: int = 256  # mock provider dimensionality
    base_url: str = "https://api.openai.com/v1"
    timeout: float = 60.0
    max_retries: int = 3
    max_batch: int = 128
    max_in_flight: int = 4
    requests_per_minute: int | None = None

    def __post_init__(self):
        if self.kind not in ("mock", "remote"):
            raise ConfigError(f"provider kind must be mock|remote, got {self.kind!r}")


@dataclass(frozen=True)
class AnalyticsConfig:
    lsa_rank: int = 5
    top_terms: int = 15
    row_normalize: bool = True

    def __post_init__(self):
        if self.lsa_rank < 1 or self.top_terms < 1:
            raise ConfigError("lsa_rank and top_terms must be >= 1")


@dataclass(frozen=True)
class RecommenderConfig:
    k: int = 5
    common_threshold: float = 0.8
    gap_threshold: float = 0.6

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        for name, t in (
            ("common_threshold", self.common_threshold),
            ("gap_threshold", self.gap_threshold),
        ):
            if not 0.0 < t <= 1.0:
                raise ConfigError(f"{name} must be in (0, 1], got {t}")


@dataclass(frozen=True)
class AppConfig:
    corpus_manifest: str | None = None
    data_dir: str = "data"
    chunking: ChunkingConfig = field(default_factory=ChunkingConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    generation: GenerationConfig = field(default_factory=GenerationConfig)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    analytics: AnalyticsConfig = field(default_factory=AnalyticsConfig)
    recommender: RecommenderConfig = field(default_factory=RecommenderConfig)
    taxonomy_dir: str | None = None  # None -> packaged Tables 1-2 files
    prompt_profile_dir: str | None = None
    screening_gate: bool = True
    seed: int = 0
    bind: str = "127.0.0.1:8765"

    def to_dict(self) -> dict:
        return asdict(self)


_SECTION_TYPES = {
    "chunking": ChunkingConfig,
    "retrieval": RetrievalConfig,
    "generation": GenerationConfig,
    "provider": ProviderConfig,
    "analytics": AnalyticsConfig,
    "recommender": RecommenderConfig,
}

#: JSON keys that map onto differently named dataclass fields.
_FIELD_ALIASES = {"retrieval": {"lambda": "lambda_"}}


def _build_section(name: str, data: dict):
    cls = _SECTION_TYPES[name]
    aliases = _FIELD_ALIASES.get(name, {})
    kwargs = {}
    valid = set(cls.__dataclass_fields__)  # type: ignore[attr-defined]
    for key, value in data.items():
        key = aliases.get(key, key)
        if key not in valid:
            raise ConfigError(f"unknown {name} option {key!r}")
        if name == "chunking" and key == "separators":
            value = tuple(value)
        kwargs[key] = value
    return cls(**kwargs)


def load_config(path: str | Path | None = None, **overrides) -> AppConfig:
    """Build an AppConfig from an optional JSON file plus keyword overrides.

    Overrides use section objects (e.g. ``retrieval=RetrievalConfig(...)``)
    or top-level scalar fields. Referenced files are checked at load time.
    """
    cfg = AppConfig()
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        try:
            data = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config file is not valid JSON: {exc}") from exc
        sections = {}
        scalars = {}
        for key, value in data.items():
            if key in _SECTION_TYPES:
                sections[key] = _build_section(key, value)
            elif key in AppConfig.__dataclass_fields__:
                scalars[key] = value
            else:
                raise ConfigError(f"unknown config key {key!r}")
        cfg = replace(cfg, **sections, **scalars)
    if overrides:
        cfg = replace(cfg, **overrides)
    for file_field in ("corpus_manifest",):
        value = getattr(cfg, file_field)
        if value is not None and not Path(value).is_file():
            raise ConfigError(f"{file_field} does not exist: {value}")
    for dir_field in ("taxonomy_dir", "prompt_profile_dir"):
        value = getattr(cfg, dir_field)
        if value is not None and not Path(value).is_dir():
            raise ConfigError(f"{dir_field} does not exist: {value}")
    return cfg


def build_providers(cfg: AppConfig):
    """Instantiate (embedding, chat, sentiment) providers for the config."""
    from .providers import (
        HashedNgramEmbedder,
        LexiconSentimentClassifier,
        MockChatProvider,
        RemoteChatProvider,
        RemoteEmbeddingProvider,
        RemoteSettings,
    )

    if cfg.provider.kind == "mock":
        return (
            HashedNgramEmbedder(dim=cfg.provider.embedding_dim),
            MockChatProvider(),
            LexiconSentimentClassifier(),
        )
    settings = RemoteSettings(
        base_url=cfg.provider.base_url,
        timeout=cfg.provider.timeout,
        max_retries=cfg.provider.max_retries,
        max_batch=cfg.provider.max_batch,
        max_in_flight=cfg.provider.max_in_flight,
        requests_per_minute=cfg.provider.requests_per_minute,
    )
    return (
        RemoteEmbeddingProvider(cfg.provider.embedding_model, settings),
        RemoteChatProvider(cfg.provider.chat_model, settings),
        LexiconSentimentClassifier(),
    )
