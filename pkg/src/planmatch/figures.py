"""Matplotlib renderings written next to the delimited analytics exports."""

from __future__ import annotations

from pathlib import Path
from typing import Mapping, Sequence

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np


def save_term_frequency_bar(
    frequencies: Mapping[str, int], path: str | Path, top_n: int = 30
) -> Path:
    """Horizontal bar chart of the most frequent corpus terms."""
    path = Path(path)
    ranked = sorted(frequencies.items(), key=lambda t: (-t[1], t[0]))[:top_n]
    terms = [t for t, _ in ranked][::-1]
    counts = [c for _, c in ranked][::-1]
    fig, ax = plt.subplots(figsize=(7, max(3, 0.28 * len(terms))))
    ax.barh(terms, counts, color="#3b6ea5")
    ax.set_xlabel("occurrences")
    ax.set_title(f"Top {len(terms)} terms")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_doc_topic_heatmap(
    doc_ids: Sequence[str], scores: np.ndarray, path: str | Path
) -> Path:
    """Documents-by-topics heatmap of LSA scores."""
    path = Path(path)
    scores = np.asarray(scores, dtype=np.float64)
    n_docs, n_topics = scores.shape
    fig, ax = plt.subplots(figsize=(1.2 * n_topics + 3, max(3, 0.3 * n_docs)))
    image = ax.imshow(scores, aspect="auto", cmap="viridis")
    ax.set_xticks(range(n_topics), [f"Topic {i + 1}" for i in range(n_topics)])
    ax.set_yticks(range(n_docs), list(doc_ids))
    ax.set_xlabel("topic")
    fig.colorbar(image, ax=ax, label="score")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_topic_terms_chart(summaries, path: str | Path) -> Path:
    """Small-multiple bars of each topic's top terms by |loading|."""
    path = Path(path)
    n = len(summaries)
    fig, axes = plt.subplots(1, n, figsize=(3.2 * n, 4.5), squeeze=False)
    for ax, summary in zip(axes[0], summaries):
        terms = [t for t, _ in summary.top_terms][::-1]
        loadings = [v for _, v in summary.top_terms][::-1]
        ax.barh(terms, loadings, color="#7a5195")
        ax.set_title(f"Topic {summary.topic_index + 1}")
        ax.tick_params(labelsize=7)
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path


def save_similarity_bars(
    peers: Sequence[tuple[str, float]], target: str, path: str | Path
) -> Path:
    """Peer similarity bar chart for one recommendation query."""
    path = Path(path)
    names = [c for c, _ in peers][::-1]
    sims = [s for _, s in peers][::-1]
    fig, ax = plt.subplots(figsize=(6, max(2.5, 0.4 * len(names))))
    ax.barh(names, sims, color="#ef5675")
    ax.set_xlim(0, 1)
    ax.set_xlabel("cosine similarity")
    ax.set_title(f"Peers of {target}")
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
    return path
