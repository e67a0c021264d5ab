"""Versioned prompt templates and their rendering conventions.

Prompt texts live as data files so they can be audited and swapped per
profile without code changes. Context chunks are rendered one block per
chunk, each introduced by a ``[p. <n>]`` marker carrying the chunk's first
page; the deterministic mock provider relies on these markers to ground
its rule-based answers.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path

from .errors import ConfigError

CONTEXT_HEADER = "Context:"
QUESTION_PREFIX = "Question:"
ANSWER_PREFIX = "Answer:"

CONTEXT_BLOCK = re.compile(r"^\[p\. ([0-9]+)\] ", re.MULTILINE)

TIER_PLURALS = {"policy": "policies", "strategy": "strategies", "action": "actions"}


def format_context_block(page: int, text: str) -> str:
    return f"[p. {page}] {text}"


def render_context(blocks: list[tuple[int, str]]) -> str:
    """Render (first_page, text) pairs into the template's context slot."""
    if not blocks:
        return "(no context retrieved)"
    return "\n".join(format_context_block(page, text) for page, text in blocks)


def parse_context_blocks(prompt: str) -> list[tuple[int, str]]:
    """Recover (page, text) blocks from a rendered prompt.

    Used by the mock provider. Returns an empty list when the prompt has no
    context section or the placeholder for empty retrieval was rendered.
    """
    try:
        start = prompt.index(CONTEXT_HEADER) + len(CONTEXT_HEADER)
    except ValueError:
        return []
    end = prompt.find(f"\n{QUESTION_PREFIX}", start)
    section = prompt[start:end] if end != -1 else prompt[start:]
    matches = list(CONTEXT_BLOCK.finditer(section))
    blocks = []
    for i, m in enumerate(matches):
        stop = matches[i + 1].start() if i + 1 < len(matches) else len(section)
        blocks.append((int(m.group(1)), section[m.end():stop].strip("\n")))
    return blocks


def parse_question(prompt: str) -> str:
    try:
        start = prompt.index(QUESTION_PREFIX) + len(QUESTION_PREFIX)
    except ValueError:
        return prompt
    end = prompt.find(f"\n{ANSWER_PREFIX}", start)
    return (prompt[start:end] if end != -1 else prompt[start:]).strip()


@dataclass(frozen=True)
class PromptTemplate:
    """A named template whose body takes {context} and {question} slots."""

    name: str
    body: str

    def __post_init__(self):
        for slot in ("{context}", "{question}"):
            if slot not in self.body:
                raise ConfigError(f"template {self.name!r} missing {slot} placeholder")

    def render(self, *, context: str, question: str) -> str:
        return self.body.replace("{context}", context).replace("{question}", question)


class PromptLibrary:
    """Loads the prompt profile's template and question files.

    The default profile ships with the package; a directory path selects a
    custom profile with the same file names.
    """

    FILES = (
        "rag_template.txt",
        "screening_question.txt",
        "binary_question.txt",
        "extraction_question.txt",
        "taxonomy_instruction.txt",
    )

    def __init__(self, profile_dir: str | Path | None = None):
        self._texts: dict[str, str] = {}
        if profile_dir is None:
            root = resources.files("planmatch").joinpath("data/prompts")
            for name in self.FILES:
                self._texts[name] = root.joinpath(name).read_text(encoding="utf-8")
        else:
            root = Path(profile_dir)
            for name in self.FILES:
                path = root / name
                if not path.is_file():
                    raise ConfigError(f"prompt profile missing {name}: {path}")
                self._texts[name] = path.read_text(encoding="utf-8")
        self.template = PromptTemplate("rag_template", self._texts["rag_template.txt"])

    def screening_question(self) -> str:
        return self._texts["screening_question.txt"].strip()

    def binary_question(self, label: str) -> str:
        return self._texts["binary_question.txt"].strip().replace("{label}", label)

    def extraction_question(self, tier: str) -> str:
        plural = TIER_PLURALS[tier]
        return self._texts["extraction_question.txt"].strip().replace(
            "{tier_plural}", plural
        )

    def taxonomy_prompt(self, tier: str, statements: list[str]) -> str:
        listing = "\n".join(f"- {s}" for s in statements)
        return (
            self._texts["taxonomy_instruction.txt"]
            .strip()
            .replace("{tier}", tier)
            .replace("{statements}", listing)
        )

    def render(self, *, blocks: list[tuple[int, str]], question: str) -> str:
        return self.template.render(context=render_context(blocks), question=question)
