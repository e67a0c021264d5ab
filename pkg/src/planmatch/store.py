"""File persistence and content-addressed snapshots.

Everything lives as plain JSON/JSONL/CSV plus raw float32 vectors under a
single data directory, so every LLM answer and derived matrix stays
auditable. A snapshot is the published, immutable view of that directory:
its id is a content hash over the data-bearing artifacts (index manifests
and rendered figures are excluded as they carry timestamps or encoder
noise), and queries are always answered from exactly one loaded snapshot.
"""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Iterator

import numpy as np

from .corpus import Chunk, Document, DocumentMeta
from .errors import SnapshotError, UnknownCityError
from .extraction import (
    Domain,
    ExtractionResult,
    ExtractedItem,
    ScreeningResult,
    ThemeEvaluation,
    Tier,
    Verdict,
)
from .recommender import EvaluationMatrix, PeerReport

DOCUMENTS_FILE = "documents.jsonl"
CHUNKS_FILE = "chunks.jsonl"
SCREENING_FILE = "screening.jsonl"
ITEMS_FILE = "items.jsonl"
EVALUATIONS_FILE = "evaluations.jsonl"
SNAPSHOT_FILE = "snapshot.json"
INDEX_DIR = "index"
MATRICES_DIR = "matrices"
ANALYTICS_DIR = "analytics"

#: Only these artifact suffixes participate in the snapshot content hash.
_HASHED_SUFFIXES = (".jsonl", ".json", ".csv", ".ids", ".vec")


def canonical_json(obj) -> str:
    """The one JSON rendering shared by the CLI and the HTTP API."""
    return json.dumps(obj, ensure_ascii=False, allow_nan=False, separators=(",", ":"))


def write_jsonl(path: Path, records: Iterable[dict]) -> int:
    count = 0
    with path.open("w", encoding="utf-8") as fh:
        for record in records:
            fh.write(canonical_json(record) + "\n")
            count += 1
    return count


def read_jsonl(path: Path) -> Iterator[dict]:
    with path.open("r", encoding="utf-8") as fh:
        for line in fh:
            if line.strip():
                yield json.loads(line)


# --- record converters --------------------------------------------------------

def document_to_record(doc: Document) -> dict:
    meta = doc.meta
    return {
        "city_id": meta.city_id,
        "city_name": meta.city_name,
        "state": meta.state,
        "publication_year": meta.publication_year,
        "plan_title": meta.plan_title,
        "source_path": meta.source_path,
        "pages": [[n, t] for n, t in doc.pages],
    }


def document_from_record(record: dict) -> Document:
    meta = DocumentMeta(
        city_id=record["city_id"],
        city_name=record["city_name"],
        state=record["state"],
        publication_year=record["publication_year"],
        plan_title=record["plan_title"],
        source_path=record.get("source_path", ""),
    )
    return Document(meta=meta, pages=tuple((n, t) for n, t in record["pages"]))


def chunk_to_record(chunk: Chunk) -> dict:
    return {
        "chunk_id": chunk.chunk_id,
        "document_id": chunk.document_id,
        "text": chunk.text,
        "char_span": list(chunk.char_span),
        "page_range": list(chunk.page_range),
    }


def chunk_from_record(record: dict) -> Chunk:
    return Chunk(
        chunk_id=record["chunk_id"],
        document_id=record["document_id"],
        text=record["text"],
        char_span=tuple(record["char_span"]),
        page_range=tuple(record["page_range"]),
    )


def screening_to_record(result: ScreeningResult) -> dict:
    return {
        "document_id": result.document_id,
        "acknowledged": result.acknowledged,
        "evidence": [[quote, list(pages)] for quote, pages in result.evidence],
        "raw_answer": result.raw_answer,
        "flags": list(result.flags),
    }


def screening_from_record(record: dict) -> ScreeningResult:
    return ScreeningResult(
        document_id=record["document_id"],
        acknowledged=record["acknowledged"],
        evidence=tuple((q, tuple(p)) for q, p in record["evidence"]),
        raw_answer=record["raw_answer"],
        flags=tuple(record["flags"]),
    )


def extraction_to_record(result: ExtractionResult) -> dict:
    return {
        "document_id": result.document_id,
        "tier": result.tier.value,
        "items": [
            {"statement": i.statement, "page_citations": list(i.page_citations)}
            for i in result.items
        ],
        "dropped": result.dropped,
        "raw_answer": result.raw_answer,
        "flags": list(result.flags),
    }


def extraction_from_record(record: dict) -> ExtractionResult:
    tier = Tier(record["tier"])
    return ExtractionResult(
        document_id=record["document_id"],
        tier=tier,
        items=tuple(
            ExtractedItem(
                tier=tier,
                statement=i["statement"],
                page_citations=tuple(i["page_citations"]),
                source_document_id=record["document_id"],
            )
            for i in record["items"]
        ),
        dropped=record["dropped"],
        raw_answer=record["raw_answer"],
        flags=tuple(record["flags"]),
    )


def evaluation_to_record(ev: ThemeEvaluation) -> dict:
    return {
        "document_id": ev.document_id,
        "domain": ev.domain.value,
        "tier": ev.tier.value,
        "score": ev.score,
        "verdicts": {label: v.value for label, v in ev.verdicts.items()},
        "citations": {label: list(p) for label, p in ev.citations.items()},
        "raw_answers": dict(ev.raw_answers),
        "flags": {label: list(f) for label, f in ev.flags.items()},
    }


def evaluation_from_record(record: dict) -> ThemeEvaluation:
    return ThemeEvaluation(
        document_id=record["document_id"],
        domain=Domain(record["domain"]),
        tier=Tier(record["tier"]),
        verdicts={l: Verdict(v) for l, v in record["verdicts"].items()},
        citations={l: tuple(p) for l, p in record["citations"].items()},
        raw_answers=dict(record["raw_answers"]),
        flags={l: tuple(f) for l, f in record["flags"].items()},
    )


# --- matrices -----------------------------------------------------------------

def matrix_scope_stem(domain: Domain | str, tier: Tier | str) -> str:
    domain = domain.value if isinstance(domain, Domain) else domain
    tier = tier.value if isinstance(tier, Tier) else tier
    return f"{domain}.{tier}"


def matrix_to_csv(matrix: EvaluationMatrix, mask: bool = False) -> str:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["city_id", *matrix.item_ids])
    grid = matrix.unknown_mask.astype(int) if mask else matrix.cells
    for city_id, row in zip(matrix.city_ids, grid):
        writer.writerow([city_id, *(int(v) for v in row)])
    return buffer.getvalue()


def save_matrix(matrix: EvaluationMatrix, directory: Path, stem: str) -> None:
    directory.mkdir(parents=True, exist_ok=True)
    (directory / f"{stem}.csv").write_text(matrix_to_csv(matrix), encoding="utf-8")
    (directory / f"{stem}.unknown.csv").write_text(
        matrix_to_csv(matrix, mask=True), encoding="utf-8"
    )


def load_matrix(directory: Path, stem: str) -> EvaluationMatrix:
    def read_grid(path: Path) -> tuple[list[str], list[str], np.ndarray]:
        with path.open("r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        cities = [r[0] for r in body]
        grid = np.array([[int(v) for v in r[1:]] for r in body], dtype=np.int8)
        return header[1:], cities, grid

    items, cities, cells = read_grid(directory / f"{stem}.csv")
    _, _, unknown = read_grid(directory / f"{stem}.unknown.csv")
    return EvaluationMatrix(
        city_ids=tuple(cities),
        item_ids=tuple(items),
        cells=cells,
        unknown_mask=unknown.astype(bool),
    )


# --- snapshots ------------------------------------------------------------------

def _hashable_files(data_dir: Path) -> list[Path]:
    files = []
    for path in sorted(data_dir.rglob("*")):
        if not path.is_file():
            continue
        if path.name == SNAPSHOT_FILE or path.name.endswith(".manifest.json"):
            continue
        if path.suffix in _HASHED_SUFFIXES:
            files.append(path)
    return files


def compute_snapshot_id(data_dir: Path) -> str:
    digest = hashlib.sha256()
    for path in _hashable_files(data_dir):
        rel = path.relative_to(data_dir).as_posix()
        digest.update(rel.encode("utf-8"))
        digest.update(b"\0")
        digest.update(hashlib.sha256(path.read_bytes()).digest())
    return digest.hexdigest()


def required_artifacts(data_dir: Path, scopes: list[tuple[str, str]]) -> list[str]:
    """Relative paths that must exist before a snapshot may be published."""
    required = [DOCUMENTS_FILE, CHUNKS_FILE, EVALUATIONS_FILE]
    try:
        city_ids = [r["city_id"] for r in read_jsonl(data_dir / DOCUMENTS_FILE)]
    except FileNotFoundError:
        city_ids = []
    for city_id in city_ids:
        required.append(f"{INDEX_DIR}/{city_id}.vec")
        required.append(f"{INDEX_DIR}/{city_id}.ids")
    for domain, tier in scopes:
        stem = matrix_scope_stem(domain, tier)
        required.append(f"{MATRICES_DIR}/{stem}.csv")
        required.append(f"{MATRICES_DIR}/{stem}.unknown.csv")
    return required


def publish_snapshot(data_dir: str | Path, scopes: list[tuple[str, str]]) -> str:
    """Atomically publish the data directory as a content-addressed snapshot.

    Refuses (naming every missing artifact) when a pipeline stage has not
    completed for the configured scopes.
    """
    data_dir = Path(data_dir)
    missing = [
        rel
        for rel in required_artifacts(data_dir, scopes)
        if not (data_dir / rel).is_file()
    ]
    if missing:
        raise SnapshotError(
            "snapshot refused; missing artifacts: " + ", ".join(sorted(missing))
        )
    snapshot_id = compute_snapshot_id(data_dir)
    manifest = {
        "snapshot_id": snapshot_id,
        "created_at": _dt.datetime.now(_dt.timezone.utc).isoformat(),
        "scopes": [list(s) for s in scopes],
        "files": [
            str(p.relative_to(data_dir).as_posix()) for p in _hashable_files(data_dir)
        ],
    }
    tmp = data_dir / (SNAPSHOT_FILE + ".tmp")
    tmp.write_text(json.dumps(manifest, indent=2) + "\n", encoding="utf-8")
    os.replace(tmp, data_dir / SNAPSHOT_FILE)
    return snapshot_id


@dataclass(frozen=True)
class CorpusSnapshot:
    """Immutable, fully loaded view of one published data directory."""

    snapshot_id: str
    created_at: str
    scopes: tuple[tuple[str, str], ...]
    documents: dict[str, Document]
    evaluations: tuple[ThemeEvaluation, ...]
    matrices: dict[tuple[str, str], EvaluationMatrix]
    analytics: dict[str, dict[str, str]]  # corpus name -> export name -> text

    def document(self, city_id: str) -> Document:
        try:
            return self.documents[city_id]
        except KeyError:
            raise UnknownCityError(city_id) from None

    def matrix(self, domain: str, tier: str) -> EvaluationMatrix:
        try:
            return self.matrices[(domain, tier)]
        except KeyError:
            raise SnapshotError(f"no matrix for scope {domain}/{tier}") from None


def load_snapshot(data_dir: str | Path) -> CorpusSnapshot:
    data_dir = Path(data_dir)
    manifest_path = data_dir / SNAPSHOT_FILE
    if not manifest_path.is_file():
        raise SnapshotError(f"no published snapshot in {data_dir}")
    manifest = json.loads(manifest_path.read_text(encoding="utf-8"))
    recomputed = compute_snapshot_id(data_dir)
    if recomputed != manifest["snapshot_id"]:
        raise SnapshotError(
            "snapshot hash mismatch; data directory was modified after publish"
        )
    documents = {
        r["city_id"]: document_from_record(r)
        for r in read_jsonl(data_dir / DOCUMENTS_FILE)
    }
    evaluations = tuple(
        evaluation_from_record(r) for r in read_jsonl(data_dir / EVALUATIONS_FILE)
    )
    matrices = {}
    for domain, tier in manifest["scopes"]:
        matrices[(domain, tier)] = load_matrix(
            data_dir / MATRICES_DIR, matrix_scope_stem(domain, tier)
        )
    analytics: dict[str, dict[str, str]] = {}
    analytics_root = data_dir / ANALYTICS_DIR
    if analytics_root.is_dir():
        for corpus_dir in sorted(analytics_root.iterdir()):
            if corpus_dir.is_dir():
                exports = {}
                for path in sorted(corpus_dir.glob("*")):
                    if path.suffix in (".json", ".csv"):
                        exports[path.name] = path.read_text(encoding="utf-8")
                analytics[corpus_dir.name] = exports
    return CorpusSnapshot(
        snapshot_id=manifest["snapshot_id"],
        created_at=manifest["created_at"],
        scopes=tuple((d, t) for d, t in manifest["scopes"]),
        documents=documents,
        evaluations=evaluations,
        matrices=matrices,
        analytics=analytics,
    )


class SnapshotStore:
    """Holds the currently published snapshot; swap is atomic.

    Readers grab ``current`` once per request and derive the whole response
    from that object, so a concurrent swap can never mix two snapshots in
    one response.
    """

    def __init__(self, snapshot: CorpusSnapshot):
        self._snapshot = snapshot
        self._lock = threading.Lock()

    @property
    def current(self) -> CorpusSnapshot:
        return self._snapshot

    def swap(self, snapshot: CorpusSnapshot) -> None:
        with self._lock:
            self._snapshot = snapshot


def render_peer_report(
    snapshot: CorpusSnapshot,
    report: PeerReport,
    domain: str,
    tier: str,
    k: int,
) -> dict:
    """The PeerReport wire shape shared verbatim by the CLI and the API."""

    def city_name(city_id: str) -> str:
        doc = snapshot.documents.get(city_id)
        return doc.meta.city_name if doc else city_id

    target = report.peer_set.target_city_id
    return {
        "snapshot": snapshot.snapshot_id,
        "target": {"city_id": target, "city_name": city_name(target)},
        "domain": domain,
        "tier": tier,
        "k": k,
        "thresholds": {
            "common": report.thresholds[0],
            "gap": report.thresholds[1],
        },
        "peers": [
            {"city_id": cid, "city_name": city_name(cid), "similarity": sim}
            for cid, sim in report.peer_set.peers
        ],
        "common_items": [
            {"item_id": iid, "rate": rate} for iid, rate in report.common_items
        ],
        "gap_items": [
            {"item_id": iid, "rate": rate} for iid, rate in report.gap_items
        ],
        "data_quality": {"unknown_counts": report.unknown_counts},
    }
