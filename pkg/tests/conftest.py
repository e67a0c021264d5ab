"""Shared fixtures: the five-city fixture corpus and provider test doubles."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from planmatch.corpus import ChunkingConfig, DocumentMeta, parse_page_delimited, split_recursive
from planmatch.extraction import DocumentIndex
from planmatch.providers import HashedNgramEmbedder
from planmatch.vecindex import VectorIndex


class ScriptedChatProvider:
    """Replays canned answers; repeats the last one when exhausted."""

    provider_id = "scripted"

    def __init__(self, *answers: str):
        self.answers = list(answers)
        self.prompts: list[str] = []

    def complete(self, prompt, *, temperature=0.0, max_output_tokens=1024):
        self.prompts.append(prompt)
        if len(self.answers) > 1:
            return self.answers.pop(0)
        return self.answers[0]


# Five-city fixture corpus. Markers drive the rule-based mock provider:
# POLICY:/STRATEGY:/ACTION: lines feed extraction; theme keywords placed in
# page text drive binary verdicts; [ILLEGIBLE] inside berkeley's audit
# sentence forces the uncertainty fallback; springfield has no equity
# language at all so screening rejects it.
FIXTURE_DOCS: dict[str, str] = {
    "las-vegas": """=== PAGE 1 ===
Climate Equity Challenges

This plan names climate equity as a central challenge for the region.
Extreme heat burdens low income neighborhoods first.

POLICY: Support local legislation that prioritizes transit oriented development.

POLICY: Adopt a complete streets policy for every corridor rebuild.
=== PAGE 2 ===
Mobility programs

The city will install electric vehicle chargers at libraries and transit hubs.
We will promote shared mobility options in every district.

STRATEGY: Build out electric vehicle charging infrastructure on city property.
=== PAGE 3 ===
Implementation

ACTION: Install electric vehicle chargers at ten public sites.

ACTION: Promote shared mobility options through a pilot voucher.
Staff will facilitate community workshops each quarter.
""",
    "chico": """=== PAGE 1 ===
Introduction

The council acknowledges climate equity challenges across the city.
Wildfire smoke and heat fall hardest on unhoused residents.

POLICY: Support local legislation that prioritizes transit oriented development.
=== PAGE 2 ===
Programs

The city will install electric vehicle chargers at the fairgrounds.
We will promote shared mobility options along the creek corridors.

ACTION: Promote shared mobility options with shared bikes.
Staff will facilitate community workshops twice a year.
""",
    "ann-arbor": """=== PAGE 1 ===
Equity framing

Climate equity is called out as a guiding challenge of this plan.
Flooding risk concentrates in older rental housing.

STRATEGY: Expand the bicycle network with protected lanes.
=== PAGE 2 ===
Energy and mobility

The city will install electric vehicle chargers in public garages.
Crews will develop bicycle lanes on four corridors.

ACTION: Install electric vehicle chargers in every garage.
Staff will facilitate community workshops for renters.
""",
    "berkeley": """=== PAGE 1 ===
Climate equity commitments

The plan treats climate equity as an explicit challenge and a standing commitment.
Shoreline flooding threatens west side blocks, and heat waves strain elders living alone.
Neighborhood liaisons gather testimony each season so the burden data stays current.

POLICY: Adopt a complete streets policy citywide.
=== PAGE 2 ===
Buildings

Building performance reviews will conduct [ILLEGIBLE] energy audits of municipal facilities.
The city will promote shared mobility options near campus.
Retrofit crews prioritize the oldest rental stock first.
=== PAGE 3 ===
Mobility actions

ACTION: Promote shared mobility options with curb space rules.
Staff will facilitate community workshops about parking reform.
""",
    "springfield": """=== PAGE 1 ===
Capital program

This capital plan lists roadway resurfacing projects for five years.
Bridge decks and culverts are scheduled by corridor.
=== PAGE 2 ===
Schedules

Resurfacing follows the pavement condition index ranking.
Maintenance scheduling is the only scope of this document.
""",
}

FIXTURE_META = {
    "las-vegas": {"city_name": "Las Vegas", "state": "NV", "publication_year": 2021,
                  "plan_title": "Las Vegas Climate Equity Plan"},
    "chico": {"city_name": "Chico", "state": "CA", "publication_year": 2022,
              "plan_title": "Chico Climate Action Plan"},
    "ann-arbor": {"city_name": "Ann Arbor", "state": "MI", "publication_year": 2020,
                  "plan_title": "Ann Arbor Carbon Neutrality Plan"},
    "berkeley": {"city_name": "Berkeley", "state": "CA", "publication_year": 2023,
                 "plan_title": "Berkeley Climate Equity Playbook"},
    "springfield": {"city_name": "Springfield", "state": "IL", "publication_year": 2019,
                    "plan_title": "Springfield Capital Improvement Plan"},
}


def write_fixture_corpus(directory: Path) -> Path:
    """Write the fixture documents plus manifest; returns the manifest path."""
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {}
    for city_id, text in FIXTURE_DOCS.items():
        filename = f"{city_id}.txt"
        (directory / filename).write_text(text, encoding="utf-8")
        manifest[city_id] = {**FIXTURE_META[city_id], "file": filename}
    manifest_path = directory / "manifest.json"
    manifest_path.write_text(json.dumps(manifest, indent=2), encoding="utf-8")
    return manifest_path


@pytest.fixture(scope="session")
def fixture_corpus(tmp_path_factory) -> Path:
    directory = tmp_path_factory.mktemp("corpus")
    return write_fixture_corpus(directory)


FIXTURE_CHUNKING = ChunkingConfig(chunk_size=400, overlap=80)


def make_doc_index(
    city_id: str,
    raw: str | None = None,
    embedder: HashedNgramEmbedder | None = None,
    chunking: ChunkingConfig = FIXTURE_CHUNKING,
) -> DocumentIndex:
    """Parse, chunk, embed, and freeze one fixture document."""
    raw = raw if raw is not None else FIXTURE_DOCS[city_id]
    meta_fields = FIXTURE_META.get(
        city_id,
        {"city_name": city_id, "state": "XX", "publication_year": 2020, "plan_title": city_id},
    )
    meta = DocumentMeta(city_id=city_id, source_path=f"{city_id}.txt", **meta_fields)
    doc = parse_page_delimited(raw, meta)
    chunks = split_recursive(doc, chunking)
    embedder = embedder or HashedNgramEmbedder()
    index = VectorIndex(embedder.dim)
    vectors = embedder.embed([c.text for c in chunks])
    for chunk, vec in zip(chunks, vectors):
        index.add(chunk.chunk_id, vec)
    index.freeze()
    return DocumentIndex(
        document_id=city_id, index=index, chunks={c.chunk_id: c for c in chunks}
    )
