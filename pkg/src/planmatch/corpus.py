"""Page-delimited plan documents and recursive, overlap-preserving chunking.

A document is an ordered list of (page_number, text) pairs. Its canonical
text is the page texts joined by single newlines, which gives every
character offset an unambiguous page. Chunks carry their char span in the
canonical text so citations can always be mapped back to pages.
"""

from __future__ import annotations

import re
from bisect import bisect_right
from dataclasses import dataclass
from functools import cached_property

from .errors import ConfigError, EmptyDocumentError, ParseError, SpanRangeError

PAGE_DELIMITER = re.compile(r"^=== PAGE ([1-9][0-9]*) ===$")

#: Conventional recursion order: paragraph, line, sentence, word, fallback.
DEFAULT_SEPARATORS: tuple[str, ...] = ("\n\n", "\n", ". ", " ", "")

_WORD = re.compile(r"\S+")


@dataclass(frozen=True)
class DocumentMeta:
    """Identity and provenance of one plan document."""

    city_id: str
    city_name: str
    state: str
    publication_year: int | None
    plan_title: str
    source_path: str = ""

    def __post_init__(self):
        if not self.city_id:
            raise ConfigError("city_id must be non-empty")
        if len(self.state) != 2 or not self.state.isalpha():
            raise ConfigError(f"state must be a 2-letter code, got {self.state!r}")
        if self.publication_year is not None and not (
            1900 <= self.publication_year <= 2100
        ):
            raise ConfigError(
                f"publication_year out of range [1900, 2100]: {self.publication_year}"
            )


@dataclass(frozen=True)
class Document:
    """A parsed plan: metadata plus ordered (page_number, text) pairs."""

    meta: DocumentMeta
    pages: tuple[tuple[int, str], ...]

    def __post_init__(self):
        if not self.pages:
            raise EmptyDocumentError(f"{self.meta.city_id}: document has no pages")
        numbers = [n for n, _ in self.pages]
        if any(n <= 0 for n in numbers):
            raise ParseError("page numbers must be positive")
        if any(b <= a for a, b in zip(numbers, numbers[1:])):
            raise ParseError("page numbers must be strictly increasing")

    @cached_property
    def canonical_text(self) -> str:
        """Page texts joined by single-newline page breaks."""
        return "\n".join(text for _, text in self.pages)

    @cached_property
    def page_starts(self) -> tuple[int, ...]:
        """Offset of each page's first character in the canonical text.

        The newline inserted after page i belongs to page i, so page i's
        region is [start_i, start_{i+1}).
        """
        starts = []
        offset = 0
        for _, text in self.pages:
            starts.append(offset)
            offset += len(text) + 1
        return tuple(starts)


def parse_page_delimited(raw: str, meta: DocumentMeta) -> Document:
    """Parse text whose pages are introduced by ``=== PAGE <n> ===`` lines."""
    pages: list[tuple[int, str]] = []
    number: int | None = None
    current: list[str] | None = None
    for lineno, line in enumerate(raw.splitlines(), start=1):
        match = PAGE_DELIMITER.match(line)
        if match:
            if current is not None:
                pages.append((number, "\n".join(current)))  # type: ignore[arg-type]
            number = int(match.group(1))
            current = []
        elif line.startswith("=== PAGE"):
            raise ParseError(f"malformed page delimiter {line!r}", line=lineno)
        elif current is None:
            if line.strip():
                raise ParseError("content before first page delimiter", line=lineno)
            # tolerate leading blank lines
        else:
            current.append(line)
    if current is not None:
        pages.append((number, "\n".join(current)))  # type: ignore[arg-type]
    if not pages:
        raise EmptyDocumentError(f"{meta.city_id}: no pages found")
    return Document(meta=meta, pages=tuple(pages))


def parse_form_feed(raw: str, meta: DocumentMeta) -> Document:
    """Parse text whose pages are each terminated by a form feed (U+000C).

    Pages are numbered sequentially from 1. A missing trailing form feed is
    tolerated; the remainder becomes the final page.
    """
    if not raw:
        raise EmptyDocumentError(f"{meta.city_id}: no pages found")
    parts = raw.split("\f")
    if parts and parts[-1] == "":
        parts.pop()
    if not parts:
        raise EmptyDocumentError(f"{meta.city_id}: no pages found")
    return Document(
        meta=meta, pages=tuple((i, text) for i, text in enumerate(parts, start=1))
    )


def map_span_to_pages(doc: Document, span: tuple[int, int]) -> tuple[int, int]:
    """Page numbers of the first and last characters of a canonical-text span."""
    start, end = span
    length = len(doc.canonical_text)
    if not (0 <= start < end <= length):
        raise SpanRangeError(
            f"span [{start}, {end}) outside canonical text of length {length}"
        )
    starts = doc.page_starts
    first = doc.pages[bisect_right(starts, start) - 1][0]
    last = doc.pages[bisect_right(starts, end - 1) - 1][0]
    return first, last


@dataclass(frozen=True)
class ChunkingConfig:
    """Recursive splitting parameters.

    ``chunk_size`` and ``overlap`` are measured in ``unit`` (characters or
    whitespace-separated words). Separators are tried in order; the final
    entry must be the empty-string fallback, which windows the text at
    stride ``chunk_size - overlap``.
    """

    chunk_size: int = 1000
    overlap: int = 200
    unit: str = "characters"
    separators: tuple[str, ...] = DEFAULT_SEPARATORS

    def __post_init__(self):
        if self.chunk_size <= 0:
            raise ConfigError(f"chunk_size must be positive, got {self.chunk_size}")
        if not 0 <= self.overlap < self.chunk_size:
            raise ConfigError(
                f"overlap must satisfy 0 <= overlap < chunk_size, got {self.overlap}"
            )
        if self.unit not in ("characters", "words"):
            raise ConfigError(f"unit must be 'characters' or 'words', got {self.unit!r}")
        seps = tuple(self.separators)
        if not seps or seps[-1] != "":
            raise ConfigError("separators must end with the empty-string fallback")
        if "" in seps[:-1]:
            raise ConfigError("empty-string fallback may appear only last")
        object.__setattr__(self, "separators", seps)


@dataclass(frozen=True)
class Chunk:
    """One retrieval segment with provenance back to the source pages."""

    chunk_id: str
    document_id: str
    text: str
    char_span: tuple[int, int]
    page_range: tuple[int, int]


def _measure(text: str, start: int, end: int, unit: str) -> int:
    if unit == "characters":
        return end - start
    return len(text[start:end].split())


def _split_on(text: str, start: int, end: int, sep: str) -> list[tuple[int, int]]:
    """Spans of the region split on ``sep``, separator attached to the left
    piece so consecutive spans tile the region exactly."""
    spans: list[tuple[int, int]] = []
    pos = start
    while pos < end:
        found = text.find(sep, pos, end)
        if found == -1:
            spans.append((pos, end))
            break
        nxt = found + len(sep)
        spans.append((pos, nxt))
        pos = nxt
    return spans


def _window_spans(
    text: str, start: int, end: int, cfg: ChunkingConfig
) -> list[tuple[int, int]]:
    """Fixed windows at stride chunk_size - overlap (empty-string fallback)."""
    stride = cfg.chunk_size - cfg.overlap
    if cfg.unit == "characters":
        spans = []
        pos = start
        while pos < end:
            stop = min(pos + cfg.chunk_size, end)
            spans.append((pos, stop))
            if stop == end:
                break
            pos += stride
        return spans
    words = [(m.start() + start, m.end() + start) for m in _WORD.finditer(text[start:end])]
    if not words:
        return [(start, end)]
    spans = []
    i = 0
    while i < len(words):
        span_start = start if i == 0 else words[i][0]
        j = i + cfg.chunk_size
        if j >= len(words):
            spans.append((span_start, end))
            break
        # With zero overlap the window extends to the next window's first
        # word so whitespace between windows stays covered.
        span_end = words[j][0] if cfg.overlap == 0 else words[j - 1][1]
        spans.append((span_start, span_end))
        i += stride
    return spans


def _merge_spans(
    text: str, pieces: list[tuple[int, int]], cfg: ChunkingConfig
) -> list[tuple[int, int]]:
    """Greedily merge tiling piece spans up to chunk_size, retaining an
    overlap-sized suffix of pieces when starting the next chunk."""
    out: list[tuple[int, int]] = []
    cur: list[tuple[int, int]] = []
    for piece in pieces:
        if cur and _measure(text, cur[0][0], piece[1], cfg.unit) > cfg.chunk_size:
            out.append((cur[0][0], cur[-1][1]))
            tail_from = len(cur)
            while tail_from > 0 and (
                _measure(text, cur[tail_from - 1][0], cur[-1][1], cfg.unit)
                <= cfg.overlap
            ):
                tail_from -= 1
            tail = cur[tail_from:]
            while tail and _measure(text, tail[0][0], piece[1], cfg.unit) > cfg.chunk_size:
                tail.pop(0)
            cur = tail
        cur.append(piece)
    if cur:
        out.append((cur[0][0], cur[-1][1]))
    return out


def _recursive_spans(
    text: str, start: int, end: int, separators: tuple[str, ...], cfg: ChunkingConfig
) -> list[tuple[int, int]]:
    if _measure(text, start, end, cfg.unit) <= cfg.chunk_size:
        return [(start, end)]
    sep = separators[0]
    rest = separators[1:]
    if sep == "":
        return _window_spans(text, start, end, cfg)
    pieces = _split_on(text, start, end, sep)
    if len(pieces) == 1:
        return _recursive_spans(text, start, end, rest, cfg)
    out: list[tuple[int, int]] = []
    buffer: list[tuple[int, int]] = []
    for piece in pieces:
        if _measure(text, piece[0], piece[1], cfg.unit) <= cfg.chunk_size:
            buffer.append(piece)
        else:
            out.extend(_merge_spans(text, buffer, cfg))
            buffer = []
            out.extend(_recursive_spans(text, piece[0], piece[1], rest, cfg))
    out.extend(_merge_spans(text, buffer, cfg))
    return out


def split_recursive(doc: Document, cfg: ChunkingConfig) -> list[Chunk]:
    """Split a document into overlapping chunks.

    Splits on the first separator that yields pieces within chunk_size,
    recurses into oversized pieces with the remaining separators, merges
    small adjacent pieces back up to chunk_size, and keeps roughly
    ``overlap`` units of shared text between consecutive chunks where the
    separator structure allows. Chunk spans tile the canonical text with no
    gaps; the result is a pure function of (doc, cfg).
    """
    text = doc.canonical_text
    if not text:
        return []
    spans = _recursive_spans(text, 0, len(text), cfg.separators, cfg)
    return [
        Chunk(
            chunk_id=f"{doc.meta.city_id}:{i}",
            document_id=doc.meta.city_id,
            text=text[s:e],
            char_span=(s, e),
            page_range=map_span_to_pages(doc, (s, e)),
        )
        for i, (s, e) in enumerate(spans)
    ]
