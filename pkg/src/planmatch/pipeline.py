"""Stage orchestration: ingest -> index -> screen -> extract -> evaluate,
plus corpus analytics and one-shot recommendation queries.

Stages read and write plain files under the configured data directory, so
each one can be rerun independently; evaluate (and analyze, once evaluate
has run) finishes by publishing a content-addressed snapshot.
"""

from __future__ import annotations

import json
import logging
from pathlib import Path

from . import store
from .analytics import (
    build_tfidf,
    doc_topic_scores,
    load_stopwords,
    polarity,
    representative_sentences,
    split_sentences,
    term_frequencies,
    tokenize_corpus,
    topic_top_terms,
    truncated_svd,
)
from .config import AppConfig, build_providers
from .corpus import parse_form_feed, parse_page_delimited, split_recursive, Document, DocumentMeta
from .errors import ConfigError, SnapshotError, UnknownCityError
from .extraction import (
    DocumentIndex,
    Tier,
    evaluate_document,
    extract_items,
    screen_document,
    shipped_taxonomies,
)
from .figures import (
    save_doc_topic_heatmap,
    save_term_frequency_bar,
    save_topic_terms_chart,
)
from .prompts import PromptLibrary
from .recommender import build_matrix, recommend
from .vecindex import VectorIndex, embed_batch

logger = logging.getLogger(__name__)


def _data_dir(cfg: AppConfig) -> Path:
    path = Path(cfg.data_dir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _prompts(cfg: AppConfig) -> PromptLibrary:
    return PromptLibrary(cfg.prompt_profile_dir)


def _taxonomies(cfg: AppConfig):
    return shipped_taxonomies(cfg.taxonomy_dir)


def run_ingest(cfg: AppConfig) -> int:
    """Parse the manifest's documents into the document store."""
    if cfg.corpus_manifest is None:
        raise ConfigError("ingest requires corpus_manifest in the config")
    manifest_path = Path(cfg.corpus_manifest)
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    base = manifest_path.parent
    documents = []
    for city_id in sorted(manifest):
        entry = manifest[city_id]
        meta = DocumentMeta(
            city_id=city_id,
            city_name=entry["city_name"],
            state=entry["state"],
            publication_year=entry.get("publication_year"),
            plan_title=entry["plan_title"],
            source_path=entry["file"],
        )
        raw = (base / entry["file"]).read_text(encoding="utf-8")
        if "\f" in raw and "=== PAGE" not in raw:
            documents.append(parse_form_feed(raw, meta))
        else:
            documents.append(parse_page_delimited(raw, meta))
    data_dir = _data_dir(cfg)
    store.write_jsonl(
        data_dir / store.DOCUMENTS_FILE,
        (store.document_to_record(d) for d in documents),
    )
    logger.info("ingested %d documents", len(documents))
    return len(documents)


def _load_documents(data_dir: Path) -> list[Document]:
    return [
        store.document_from_record(r)
        for r in store.read_jsonl(data_dir / store.DOCUMENTS_FILE)
    ]


def run_index(cfg: AppConfig) -> int:
    """Chunk every document, embed the chunks, and freeze per-document indexes."""
    data_dir = _data_dir(cfg)
    embedder, _, _ = build_providers(cfg)
    documents = _load_documents(data_dir)
    all_chunks = []
    index_dir = data_dir / store.INDEX_DIR
    for doc in documents:
        chunks = split_recursive(doc, cfg.chunking)
        all_chunks.extend(chunks)
        vectors = embed_batch(
            [c.text for c in chunks], embedder, cfg.provider.max_batch
        )
        dim = embedder.dim or (len(vectors[0]) if vectors else 1)
        index = VectorIndex(dim)
        for chunk, vec in zip(chunks, vectors):
            index.add(chunk.chunk_id, vec)
        index.freeze()
        index.save(index_dir, doc.meta.city_id, embedder.provider_id)
    store.write_jsonl(
        data_dir / store.CHUNKS_FILE, (store.chunk_to_record(c) for c in all_chunks)
    )
    logger.info("indexed %d chunks over %d documents", len(all_chunks), len(documents))
    return len(all_chunks)


def _load_doc_indexes(cfg: AppConfig, data_dir: Path) -> list[DocumentIndex]:
    chunks_by_doc: dict[str, dict] = {}
    for record in store.read_jsonl(data_dir / store.CHUNKS_FILE):
        chunk = store.chunk_from_record(record)
        chunks_by_doc.setdefault(chunk.document_id, {})[chunk.chunk_id] = chunk
    out = []
    for doc in _load_documents(data_dir):
        city_id = doc.meta.city_id
        index, _ = VectorIndex.load(data_dir / store.INDEX_DIR, city_id)
        out.append(
            DocumentIndex(
                document_id=city_id,
                index=index,
                chunks=chunks_by_doc.get(city_id, {}),
            )
        )
    return out


def run_screen(cfg: AppConfig) -> int:
    """Run the equity-acknowledgment screening question over every document."""
    data_dir = _data_dir(cfg)
    embedder, chat, _ = build_providers(cfg)
    prompts = _prompts(cfg)
    results = []
    for doc_index in _load_doc_indexes(cfg, data_dir):
        results.append(
            screen_document(
                doc_index, chat, embedder, cfg.generation, cfg.retrieval, prompts
            )
        )
    store.write_jsonl(
        data_dir / store.SCREENING_FILE,
        (store.screening_to_record(r) for r in results),
    )
    acknowledged = sum(1 for r in results if r.acknowledged)
    logger.info("screened %d documents; %d acknowledged", len(results), acknowledged)
    return acknowledged


def _screened_in(cfg: AppConfig, data_dir: Path) -> set[str]:
    screening_path = data_dir / store.SCREENING_FILE
    if not screening_path.is_file():
        raise ConfigError("run the screen stage first")
    acknowledged = {
        r["document_id"]
        for r in store.read_jsonl(screening_path)
        if r["acknowledged"]
    }
    return acknowledged


def run_extract(cfg: AppConfig) -> int:
    """Extract policy/strategy/action items from screened-in documents."""
    data_dir = _data_dir(cfg)
    embedder, chat, _ = build_providers(cfg)
    prompts = _prompts(cfg)
    gate = _screened_in(cfg, data_dir) if cfg.screening_gate else None
    results = []
    for doc_index in _load_doc_indexes(cfg, data_dir):
        if gate is not None and doc_index.document_id not in gate:
            logger.info("skipping %s (failed screening)", doc_index.document_id)
            continue
        for tier in Tier:
            results.append(
                extract_items(
                    doc_index, chat, embedder, cfg.generation, cfg.retrieval,
                    tier, prompts,
                )
            )
    store.write_jsonl(
        data_dir / store.ITEMS_FILE, (store.extraction_to_record(r) for r in results)
    )
    return sum(len(r.items) for r in results)


def run_evaluate(cfg: AppConfig) -> str:
    """Binary-evaluate screened-in documents against every taxonomy, build
    the per-scope matrices, and publish the snapshot."""
    data_dir = _data_dir(cfg)
    embedder, chat, _ = build_providers(cfg)
    prompts = _prompts(cfg)
    taxonomies = _taxonomies(cfg)
    gate = _screened_in(cfg, data_dir) if cfg.screening_gate else None
    evaluations = []
    doc_indexes = _load_doc_indexes(cfg, data_dir)
    for doc_index in doc_indexes:
        if gate is not None and doc_index.document_id not in gate:
            logger.info("skipping %s (failed screening)", doc_index.document_id)
            continue
        evaluations.extend(
            evaluate_document(
                doc_index, chat, embedder, cfg.generation, cfg.retrieval,
                taxonomies, prompts,
            )
        )
    store.write_jsonl(
        data_dir / store.EVALUATIONS_FILE,
        (store.evaluation_to_record(e) for e in evaluations),
    )
    all_cities = [d.document_id for d in doc_indexes]
    scopes = sorted({(t.domain.value, t.tier.value) for t in taxonomies})
    for domain, tier in scopes:
        matrix = build_matrix(evaluations, (domain, tier), city_ids=all_cities)
        store.save_matrix(
            matrix, data_dir / store.MATRICES_DIR, store.matrix_scope_stem(domain, tier)
        )
    return store.publish_snapshot(data_dir, scopes)


def run_analyze(
    cfg: AppConfig,
    corpus_name: str = "plans",
    input_dir: str | Path | None = None,
    render_figures: bool = True,
) -> Path:
    """Tokenize a text corpus, export frequency/TF-IDF/topic reports, and
    render the companion figures.

    The corpus is either a directory of .txt files (one document per file)
    or, by default, the canonical texts of the ingested documents.
    """
    data_dir = _data_dir(cfg)
    stopwords = load_stopwords()
    if input_dir is not None:
        paths = sorted(Path(input_dir).glob("*.txt"))
        if not paths:
            raise ConfigError(f"no .txt files in {input_dir}")
        docs = [(p.stem, p.read_text(encoding="utf-8")) for p in paths]
    else:
        docs = [
            (d.meta.city_id, d.canonical_text) for d in _load_documents(data_dir)
        ]
    corpus = tokenize_corpus(docs, stopwords)
    frequencies = term_frequencies(corpus)
    tfidf = build_tfidf(corpus, row_normalize=cfg.analytics.row_normalize)
    rank = min(cfg.analytics.lsa_rank, min(tfidf.shape))
    model = truncated_svd(tfidf, rank)
    summaries = topic_top_terms(model, cfg.analytics.top_terms)
    scores = doc_topic_scores(model)

    sentences = [s for _, text in docs for s in split_sentences(text)]
    reps = (
        representative_sentences(sentences, model, corpus.vocabulary, stopwords)
        if sentences
        else []
    )
    _, _, classifier = build_providers(cfg)
    signed = {
        doc_id: polarity(text, classifier).signed for doc_id, text in docs
    }

    out_dir = data_dir / store.ANALYTICS_DIR / corpus_name
    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "frequencies.json").write_text(
        json.dumps(
            dict(sorted(frequencies.items(), key=lambda t: (-t[1], t[0]))), indent=2
        )
        + "\n",
        encoding="utf-8",
    )
    (out_dir / "polarity.json").write_text(
        json.dumps(signed, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    with (out_dir / "tfidf.csv").open("w", encoding="utf-8") as fh:
        fh.write(",".join(["doc_id", *tfidf.terms]) + "\n")
        for doc_id, row in zip(tfidf.doc_ids, tfidf.values):
            fh.write(",".join([doc_id, *(f"{v:.10g}" for v in row)]) + "\n")
    with (out_dir / "doc_topics.csv").open("w", encoding="utf-8") as fh:
        fh.write(
            ",".join(["doc_id", *(f"topic_{i + 1}" for i in range(rank))]) + "\n"
        )
        for doc_id, row in zip(tfidf.doc_ids, scores):
            fh.write(",".join([doc_id, *(f"{v:.10g}" for v in row)]) + "\n")
    (out_dir / "topic_summaries.json").write_text(
        json.dumps(
            {
                "rank": rank,
                "singular_values": [float(s) for s in model.singular_values],
                "topics": [
                    {
                        "topic": s.topic_index + 1,
                        "top_terms": [
                            {"term": t, "loading": v} for t, v in s.top_terms
                        ],
                        "representative_sentence": reps[s.topic_index][0] if reps else None,
                    }
                    for s in summaries
                ],
            },
            indent=2,
        )
        + "\n",
        encoding="utf-8",
    )
    if render_figures:
        figures_dir = out_dir / "figures"
        figures_dir.mkdir(exist_ok=True)
        save_term_frequency_bar(frequencies, figures_dir / "frequencies.png")
        save_doc_topic_heatmap(tfidf.doc_ids, scores, figures_dir / "doc_topics.png")
        save_topic_terms_chart(summaries, figures_dir / "topic_terms.png")
    # refresh the snapshot so the new exports are served and hashed
    try:
        snapshot_path = data_dir / store.SNAPSHOT_FILE
        if snapshot_path.is_file():
            manifest = json.loads(snapshot_path.read_text(encoding="utf-8"))
            store.publish_snapshot(data_dir, [tuple(s) for s in manifest["scopes"]])
    except SnapshotError as exc:
        logger.warning("snapshot not refreshed: %s", exc)
    return out_dir


def run_recommend(
    cfg: AppConfig,
    city: str,
    domain: str,
    tier: str,
    k: int | None = None,
    common_t: float | None = None,
    gap_t: float | None = None,
) -> str:
    """One-shot recommendation against the published snapshot; returns the
    canonical JSON body (identical to the HTTP API's)."""
    snapshot = store.load_snapshot(Path(cfg.data_dir))
    k = k if k is not None else cfg.recommender.k
    common_t = common_t if common_t is not None else cfg.recommender.common_threshold
    gap_t = gap_t if gap_t is not None else cfg.recommender.gap_threshold
    matrix = snapshot.matrix(domain, tier)
    if city not in snapshot.documents:
        raise UnknownCityError(city)
    report = recommend(matrix, city, k=k, common_t=common_t, gap_t=gap_t)
    payload = store.render_peer_report(snapshot, report, domain, tier, k)
    return store.canonical_json(payload)
