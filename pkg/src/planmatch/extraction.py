"""Screening, item extraction, and binary theme evaluation over retrieval.

The workflow mirrors the screen -> extract -> evaluate pipeline: a document
is first screened for an explicit acknowledgment of climate-equity
challenges; screened-in documents have policy/strategy/action items
extracted and are then re-assessed against fixed 20-label theme taxonomies
with one binary question per label. Answers must ground themselves in the
retrieved context, cite pages, and fall back to the literal "I don't know",
which is preserved as an Unknown verdict rather than coerced.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from enum import Enum
from importlib import resources
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import Chunk
from .errors import ConfigError, ProviderError, TaxonomyShapeError
from .prompts import PromptLibrary
from .providers import ChatProvider, EmbeddingProvider
from .vecindex import RetrievalConfig, VectorIndex, retrieve


class Tier(str, Enum):
    POLICY = "policy"
    STRATEGY = "strategy"
    ACTION = "action"


class Domain(str, Enum):
    TRANSPORTATION = "transportation"
    ENERGY = "energy"


class Verdict(str, Enum):
    PRESENT = "Present"
    ABSENT = "Absent"
    UNKNOWN = "Unknown"


@dataclass(frozen=True)
class GenerationConfig:
    """Generation parameters; the default profile is deterministic."""

    model_id: str = "gpt-4o-mini"
    temperature: float = 0.0
    max_output_tokens: int = 1024
    prompt_profile: str = "default"

    def __post_init__(self):
        if self.temperature < 0:
            raise ConfigError(f"temperature must be >= 0, got {self.temperature}")


@dataclass(frozen=True)
class ParsedAnswer:
    polarity: str  # "yes" | "no" | "idk"
    quotes: tuple[str, ...]
    pages: tuple[int, ...]
    ambiguous: bool = False


@dataclass(frozen=True)
class ScreeningResult:
    document_id: str
    acknowledged: bool
    evidence: tuple[tuple[str, tuple[int, ...]], ...]
    raw_answer: str
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ExtractedItem:
    tier: Tier
    statement: str
    page_citations: tuple[int, ...]
    source_document_id: str

    def __post_init__(self):
        if not self.statement:
            raise ConfigError("statement must be non-empty")
        cleaned = tuple(sorted(set(self.page_citations)))
        object.__setattr__(self, "page_citations", cleaned)


@dataclass(frozen=True)
class ExtractionResult:
    document_id: str
    tier: Tier
    items: tuple[ExtractedItem, ...]
    dropped: int
    raw_answer: str
    flags: tuple[str, ...] = ()


@dataclass(frozen=True)
class ThemeTaxonomy:
    domain: Domain
    tier: Tier
    labels: tuple[str, ...]

    def __post_init__(self):
        if len(self.labels) != 20:
            raise TaxonomyShapeError(
                f"taxonomy must have exactly 20 labels, got {len(self.labels)}"
            )
        if len(set(self.labels)) != 20:
            raise TaxonomyShapeError("taxonomy labels must be unique")


@dataclass(frozen=True)
class ThemeEvaluation:
    document_id: str
    domain: Domain
    tier: Tier
    verdicts: dict[str, Verdict]
    citations: dict[str, tuple[int, ...]]
    raw_answers: dict[str, str]
    flags: dict[str, tuple[str, ...]] = field(default_factory=dict)

    @property
    def score(self) -> int:
        """Count of Present verdicts, the document's 0-20 theme score."""
        return sum(1 for v in self.verdicts.values() if v is Verdict.PRESENT)


# --- answer parsing ---------------------------------------------------------

_IDK = re.compile(r"\bi\s+don['’]t\s+know\b", re.IGNORECASE)
_FIRST_SENTENCE_END = re.compile(r"[.!?]")
_WORD_YES = re.compile(r"\byes\b", re.IGNORECASE)
_WORD_NO = re.compile(r"\bno\b", re.IGNORECASE)
_PAGE_RANGE = re.compile(r"\bpp\.?\s*(\d+)\s*[-–]\s*(\d+)", re.IGNORECASE)
_PAGE_SINGLE = re.compile(r"\bp(?:age|\.)\s*(\d+)", re.IGNORECASE)
_QUOTE_STRAIGHT = re.compile(r'"([^"]*)"')
_QUOTE_CURLY = re.compile(r"“([^”]*)”")

#: Page ranges longer than this expand to their endpoints only, so a
#: malformed "pp. 1-10^9" cannot blow up memory.
_MAX_RANGE_SPAN = 1000


def parse_answer(raw: str) -> ParsedAnswer:
    """Parse a free-text answer into polarity, quotes, and page citations.

    Total: never raises. Polarity comes from yes/no cues in the first
    sentence; with both cues or neither (and no "I don't know" phrase) the
    answer is idk with the ambiguity flag set.
    """
    text = raw or ""
    first_end = _FIRST_SENTENCE_END.search(text)
    first_sentence = text[: first_end.end()] if first_end else text
    has_yes = bool(_WORD_YES.search(first_sentence))
    has_no = bool(_WORD_NO.search(first_sentence))
    has_idk = bool(_IDK.search(text))

    if has_yes and not has_no:
        polarity, ambiguous = "yes", False
    elif has_no and not has_yes:
        polarity, ambiguous = "no", False
    elif has_idk:
        polarity, ambiguous = "idk", False
    else:
        polarity, ambiguous = "idk", True

    pages: list[int] = []
    for match in _PAGE_RANGE.finditer(text):
        a, b = int(match.group(1)), int(match.group(2))
        if a > b:
            a, b = b, a
        if b - a > _MAX_RANGE_SPAN:
            pages.extend((a, b))
        else:
            pages.extend(range(a, b + 1))
    masked = _PAGE_RANGE.sub(" ", text)
    pages.extend(int(m.group(1)) for m in _PAGE_SINGLE.finditer(masked))
    page_tuple = tuple(sorted({p for p in pages if p > 0}))

    quotes = [
        (m.start(), m.group(1))
        for pattern in (_QUOTE_STRAIGHT, _QUOTE_CURLY)
        for m in pattern.finditer(text)
        if m.group(1).strip()
    ]
    quotes.sort(key=lambda t: t[0])
    return ParsedAnswer(
        polarity=polarity,
        quotes=tuple(q for _, q in quotes),
        pages=page_tuple,
        ambiguous=ambiguous,
    )


def render_answer(polarity: str, pages: Sequence[int] = ()) -> str:
    """Canonical rendering whose round trip through parse_answer is stable."""
    cited = " See " + ", ".join(f"page {p}" for p in pages) + "." if pages else ""
    if polarity == "yes":
        return "Yes." + cited
    if polarity == "no":
        return "No." + cited
    return "I don't know." + cited if pages else "I don't know"


# --- taxonomy data ----------------------------------------------------------

def load_taxonomy(path: str | Path) -> ThemeTaxonomy:
    data = json.loads(Path(path).read_text(encoding="utf-8"))
    return ThemeTaxonomy(
        domain=Domain(data["domain"]),
        tier=Tier(data["tier"]),
        labels=tuple(data["labels"]),
    )


def shipped_taxonomies(directory: str | Path | None = None) -> list[ThemeTaxonomy]:
    """The six packaged (domain, tier) taxonomies, or those in a directory."""
    out = []
    if directory is None:
        root = resources.files("planmatch").joinpath("data/taxonomies")
        names = sorted(
            entry.name for entry in root.iterdir() if entry.name.endswith(".json")
        )
        for name in names:
            data = json.loads(root.joinpath(name).read_text(encoding="utf-8"))
            out.append(
                ThemeTaxonomy(
                    domain=Domain(data["domain"]),
                    tier=Tier(data["tier"]),
                    labels=tuple(data["labels"]),
                )
            )
    else:
        for path in sorted(Path(directory).glob("*.json")):
            out.append(load_taxonomy(path))
    if not out:
        raise ConfigError(f"no taxonomy files found in {directory}")
    return out


# --- retrieval-backed workflow ----------------------------------------------

@dataclass(frozen=True)
class DocumentIndex:
    """A document's frozen vector index paired with its chunk store."""

    document_id: str
    index: VectorIndex
    chunks: Mapping[str, Chunk]

    def context_blocks(self, chunk_ids: Sequence[str]) -> list[tuple[int, str]]:
        blocks = []
        for cid in chunk_ids:
            chunk = self.chunks[cid]
            blocks.append((chunk.page_range[0], chunk.text))
        return blocks


def _ask(
    doc_index: DocumentIndex,
    chat: ChatProvider,
    embedder: EmbeddingProvider,
    gen: GenerationConfig,
    ret: RetrievalConfig,
    prompts: PromptLibrary,
    query: str,
    question: str,
) -> tuple[str, list[tuple[int, str]]]:
    scored = retrieve(doc_index.index, query, embedder, ret)
    blocks = doc_index.context_blocks([s.chunk_id for s in scored])
    prompt = prompts.render(blocks=blocks, question=question)
    raw = chat.complete(
        prompt, temperature=gen.temperature, max_output_tokens=gen.max_output_tokens
    )
    return raw, blocks


def screen_document(
    doc_index: DocumentIndex,
    chat: ChatProvider,
    embedder: EmbeddingProvider,
    gen: GenerationConfig,
    ret: RetrievalConfig,
    prompts: PromptLibrary | None = None,
) -> ScreeningResult:
    """Ask whether the plan explicitly acknowledges climate-equity challenges."""
    prompts = prompts or PromptLibrary()
    question = prompts.screening_question()
    raw, _ = _ask(doc_index, chat, embedder, gen, ret, prompts, question, question)
    parsed = parse_answer(raw)
    flags = []
    if parsed.polarity == "idk":
        flags.append("unknown-answer")
    if parsed.ambiguous:
        flags.append("ambiguous-answer")
    evidence = tuple((quote, parsed.pages) for quote in parsed.quotes)
    return ScreeningResult(
        document_id=doc_index.document_id,
        acknowledged=parsed.polarity == "yes",
        evidence=evidence,
        raw_answer=raw,
        flags=tuple(flags),
    )


_ITEM_WITH_PAGE = re.compile(r'"([^"]+)"\s*\((?:page|p\.)\s*(\d+)\)', re.IGNORECASE)


def extract_items(
    doc_index: DocumentIndex,
    chat: ChatProvider,
    embedder: EmbeddingProvider,
    gen: GenerationConfig,
    ret: RetrievalConfig,
    tier: Tier,
    prompts: PromptLibrary | None = None,
) -> ExtractionResult:
    """One provider round trip extracting the tier's quoted items with pages."""
    prompts = prompts or PromptLibrary()
    question = prompts.extraction_question(tier.value)
    raw, _ = _ask(doc_index, chat, embedder, gen, ret, prompts, question, question)
    parsed = parse_answer(raw)
    flags: list[str] = []
    if parsed.polarity == "idk":
        flags.append("unknown-answer")
        return ExtractionResult(
            document_id=doc_index.document_id,
            tier=tier,
            items=(),
            dropped=0,
            raw_answer=raw,
            flags=tuple(flags),
        )

    by_statement: dict[str, set[int]] = {}
    for match in _ITEM_WITH_PAGE.finditer(raw):
        statement = match.group(1).strip()
        if statement:
            by_statement.setdefault(statement, set()).add(int(match.group(2)))
    paired = set(by_statement)
    dropped = 0
    for quote in parsed.quotes:
        cleaned = quote.strip()
        if not cleaned:
            dropped += 1
        elif cleaned not in paired:
            # quote without an adjacent page citation: keep, flag data quality
            by_statement.setdefault(cleaned, set())
    items = tuple(
        ExtractedItem(
            tier=tier,
            statement=statement,
            page_citations=tuple(sorted(pages)),
            source_document_id=doc_index.document_id,
        )
        for statement, pages in by_statement.items()
    )
    if any(not item.page_citations for item in items):
        flags.append("missing-citation")
    return ExtractionResult(
        document_id=doc_index.document_id,
        tier=tier,
        items=items,
        dropped=dropped,
        raw_answer=raw,
        flags=tuple(flags),
    )


def evaluate_theme(
    doc_index: DocumentIndex,
    chat: ChatProvider,
    embedder: EmbeddingProvider,
    gen: GenerationConfig,
    ret: RetrievalConfig,
    taxonomy: ThemeTaxonomy,
    label: str,
    prompts: PromptLibrary | None = None,
) -> tuple[Verdict, tuple[int, ...], str]:
    """One binary question for one taxonomy label."""
    if label not in taxonomy.labels:
        raise ConfigError(f"label {label!r} not in {taxonomy.domain}/{taxonomy.tier}")
    prompts = prompts or PromptLibrary()
    question = prompts.binary_question(label)
    raw, _ = _ask(doc_index, chat, embedder, gen, ret, prompts, label, question)
    parsed = parse_answer(raw)
    verdict = {
        "yes": Verdict.PRESENT,
        "no": Verdict.ABSENT,
        "idk": Verdict.UNKNOWN,
    }[parsed.polarity]
    return verdict, parsed.pages, raw


def evaluate_document(
    doc_index: DocumentIndex,
    chat: ChatProvider,
    embedder: EmbeddingProvider,
    gen: GenerationConfig,
    ret: RetrievalConfig,
    taxonomies: Sequence[ThemeTaxonomy],
    prompts: PromptLibrary | None = None,
) -> list[ThemeEvaluation]:
    """Evaluate all 20 labels of every taxonomy; provider failures for a
    label degrade to Unknown with a provider-error flag rather than
    aborting the batch."""
    prompts = prompts or PromptLibrary()
    out = []
    for taxonomy in taxonomies:
        verdicts: dict[str, Verdict] = {}
        citations: dict[str, tuple[int, ...]] = {}
        raw_answers: dict[str, str] = {}
        flags: dict[str, tuple[str, ...]] = {}
        for label in taxonomy.labels:
            try:
                verdict, pages, raw = evaluate_theme(
                    doc_index, chat, embedder, gen, ret, taxonomy, label, prompts
                )
                label_flags = []
                if verdict is Verdict.UNKNOWN:
                    label_flags.append("unknown-answer")
                if verdict is Verdict.PRESENT and not pages:
                    label_flags.append("missing-citation")
            except ProviderError as exc:
                verdict, pages, raw = Verdict.UNKNOWN, (), f"<provider error: {exc}>"
                label_flags = ["provider-error"]
            verdicts[label] = verdict
            citations[label] = pages
            raw_answers[label] = raw
            if label_flags:
                flags[label] = tuple(label_flags)
        out.append(
            ThemeEvaluation(
                document_id=doc_index.document_id,
                domain=taxonomy.domain,
                tier=taxonomy.tier,
                verdicts=verdicts,
                citations=citations,
                raw_answers=raw_answers,
                flags=flags,
            )
        )
    return out


_NUMBERED_LINE = re.compile(r"^\s*\d+[.)]\s+(.*\S)\s*$")


def build_taxonomy(
    items: Sequence[ExtractedItem],
    chat: ChatProvider,
    gen: GenerationConfig,
    *,
    domain: Domain,
    tier: Tier,
    prompts: PromptLibrary | None = None,
) -> ThemeTaxonomy:
    """Ask the provider to cluster item statements into exactly 20 themes.

    Optional path; the shipped default taxonomies are fixed data files.
    Retries once on a malformed response, then raises TaxonomyShapeError.
    """
    if not items:
        raise ConfigError("build_taxonomy requires at least one item")
    prompts = prompts or PromptLibrary()
    prompt = prompts.taxonomy_prompt(tier.value, [i.statement for i in items])
    last_error: Exception | None = None
    for _ in range(2):
        raw = chat.complete(
            prompt,
            temperature=gen.temperature,
            max_output_tokens=gen.max_output_tokens,
        )
        labels = []
        for line in raw.splitlines():
            match = _NUMBERED_LINE.match(line)
            if match:
                labels.append(match.group(1))
        try:
            return ThemeTaxonomy(domain=domain, tier=tier, labels=tuple(labels))
        except TaxonomyShapeError as exc:
            last_error = exc
    raise TaxonomyShapeError(f"provider produced a malformed taxonomy: {last_error}")
