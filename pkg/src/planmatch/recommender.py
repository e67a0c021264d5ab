"""Content-based peer-city recommendations over binary evaluation matrices.

Rows are cities, columns are "domain.tier.theme" items, cells are 1 when
the theme was evaluated Present. Unknown verdicts coerce to 0 in the cells
but stay visible through the unknown mask so reports can disclose data
quality. All orderings tie-break by ascending city_id / item_id so output
is reproducible across platforms.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .errors import (
    ConfigError,
    DuplicateEvaluationError,
    EmptyPeersError,
    UnknownCityError,
)
from .extraction import Domain, ThemeEvaluation, Tier, Verdict
from .vecindex import cosine_similarity

logger = logging.getLogger(__name__)


def item_id(domain: Domain | str, tier: Tier | str, label: str) -> str:
    domain = domain.value if isinstance(domain, Domain) else domain
    tier = tier.value if isinstance(tier, Tier) else tier
    return f"{domain}.{tier}.{label}"


@dataclass(frozen=True)
class EvaluationMatrix:
    city_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    cells: np.ndarray  # (N, M) int8 in {0, 1}
    unknown_mask: np.ndarray  # (N, M) bool; True implies cell == 0

    def __post_init__(self):
        if len(set(self.city_ids)) != len(self.city_ids):
            raise ConfigError("city_ids must be unique")
        if len(set(self.item_ids)) != len(self.item_ids):
            raise ConfigError("item_ids must be unique")
        if self.cells.shape != (len(self.city_ids), len(self.item_ids)):
            raise ConfigError("cells shape does not match ids")
        if self.unknown_mask.shape != self.cells.shape:
            raise ConfigError("unknown_mask shape does not match cells")
        if not np.isin(self.cells, (0, 1)).all():
            raise ConfigError("cells must be binary")
        if (self.cells[self.unknown_mask] != 0).any():
            raise ConfigError("unknown cells must be 0")

    def row(self, city_id: str) -> np.ndarray:
        return self.cells[self.row_index(city_id)]

    def row_index(self, city_id: str) -> int:
        try:
            return self.city_ids.index(city_id)
        except ValueError:
            raise UnknownCityError(city_id) from None

    def unknown_count(self, city_id: str) -> int:
        return int(self.unknown_mask[self.row_index(city_id)].sum())


@dataclass(frozen=True)
class PeerSet:
    target_city_id: str
    peers: tuple[tuple[str, float], ...]

    def __post_init__(self):
        if any(cid == self.target_city_id for cid, _ in self.peers):
            raise ConfigError("target must not appear in its own peer set")
        sims = [s for _, s in self.peers]
        if any(b > a for a, b in zip(sims, sims[1:])):
            raise ConfigError("peer similarities must be non-increasing")

    @property
    def peer_ids(self) -> tuple[str, ...]:
        return tuple(cid for cid, _ in self.peers)


@dataclass(frozen=True)
class PeerReport:
    peer_set: PeerSet
    rates: dict[str, float]
    common_items: tuple[tuple[str, float], ...]
    gap_items: tuple[tuple[str, float], ...]
    thresholds: tuple[float, float]  # (common_t, gap_t)
    unknown_counts: dict[str, int]


def build_matrix(
    evaluations: Sequence[ThemeEvaluation],
    scope: tuple[Domain | str, Tier | str],
    *,
    city_ids: Sequence[str] | None = None,
) -> EvaluationMatrix:
    """Assemble the binary matrix for one (domain, tier) scope.

    Rows are sorted by city_id; columns follow the taxonomy label order of
    the scope's evaluations. Cities listed in ``city_ids`` but missing an
    evaluation get an all-unknown zero row (with a logged warning).
    """
    domain = Domain(scope[0]) if not isinstance(scope[0], Domain) else scope[0]
    tier = Tier(scope[1]) if not isinstance(scope[1], Tier) else scope[1]
    scoped = [e for e in evaluations if e.domain == domain and e.tier == tier]
    by_city: dict[str, ThemeEvaluation] = {}
    for ev in scoped:
        if ev.document_id in by_city:
            raise DuplicateEvaluationError(
                f"duplicate evaluation for {ev.document_id} in {domain.value}/{tier.value}"
            )
        by_city[ev.document_id] = ev
    roster = sorted(set(city_ids) if city_ids is not None else by_city)
    if not roster:
        raise ConfigError("matrix requires at least one city")
    labels: tuple[str, ...] | None = None
    for ev in scoped:
        keys = tuple(ev.verdicts.keys())
        if labels is None:
            labels = keys
        elif set(keys) != set(labels):
            raise ConfigError("evaluations disagree on taxonomy labels")
    if labels is None:
        raise ConfigError(f"no evaluations found for scope {domain.value}/{tier.value}")

    cells = np.zeros((len(roster), len(labels)), dtype=np.int8)
    unknown = np.zeros((len(roster), len(labels)), dtype=bool)
    for row, city in enumerate(roster):
        ev = by_city.get(city)
        if ev is None:
            logger.warning(
                "city %s has no %s/%s evaluation; emitting unknown row",
                city,
                domain.value,
                tier.value,
            )
            unknown[row, :] = True
            continue
        for col, label in enumerate(labels):
            verdict = ev.verdicts[label]
            if verdict is Verdict.PRESENT:
                cells[row, col] = 1
            elif verdict is Verdict.UNKNOWN:
                unknown[row, col] = True
    return EvaluationMatrix(
        city_ids=tuple(roster),
        item_ids=tuple(item_id(domain, tier, label) for label in labels),
        cells=cells,
        unknown_mask=unknown,
    )


def city_similarity(m: EvaluationMatrix, a: str, b: str) -> float:
    """Cosine of the two cities' binary rows; all-zero rows score 0."""
    return cosine_similarity(
        m.row(a).astype(np.float64), m.row(b).astype(np.float64)
    )


def top_peers(m: EvaluationMatrix, target: str, k: int = 5) -> PeerSet:
    """The k most similar cities, excluding the target, ties by city_id."""
    if k < 1:
        raise ConfigError(f"k must be >= 1, got {k}")
    m.row_index(target)  # raises UnknownCityError for unknown targets
    scored = [
        (cid, city_similarity(m, target, cid))
        for cid in m.city_ids
        if cid != target
    ]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return PeerSet(target_city_id=target, peers=tuple(scored[:k]))


def adoption_rates(m: EvaluationMatrix, peers: PeerSet) -> dict[str, float]:
    """Per item, the mean of the peer cities' binary cells."""
    if not peers.peers:
        raise EmptyPeersError(f"{peers.target_city_id}: empty peer set")
    rows = np.stack([m.row(cid) for cid in peers.peer_ids]).astype(np.float64)
    means = rows.mean(axis=0)
    return {iid: float(means[i]) for i, iid in enumerate(m.item_ids)}


def classify_items(
    m: EvaluationMatrix,
    target: str,
    rates: Mapping[str, float],
    common_t: float = 0.8,
    gap_t: float = 0.6,
) -> tuple[tuple[tuple[str, float], ...], tuple[tuple[str, float], ...]]:
    """Split items into commonly-shared and gap lists against thresholds.

    common: target adopted and rate >= common_t; gap: target missing and
    rate >= gap_t. Both sorted by rate descending then item_id.
    """
    for name, t in (("common_t", common_t), ("gap_t", gap_t)):
        if not 0.0 < t <= 1.0:
            raise ConfigError(f"{name} must be in (0, 1], got {t}")
    row = m.row(target)
    common = []
    gaps = []
    for i, iid in enumerate(m.item_ids):
        rate = rates[iid]
        if row[i] == 1 and rate >= common_t:
            common.append((iid, rate))
        elif row[i] == 0 and rate >= gap_t:
            gaps.append((iid, rate))
    key = lambda t: (-t[1], t[0])
    return tuple(sorted(common, key=key)), tuple(sorted(gaps, key=key))


def recommend(
    m: EvaluationMatrix,
    target: str,
    k: int = 5,
    common_t: float = 0.8,
    gap_t: float = 0.6,
) -> PeerReport:
    """top_peers -> adoption_rates -> classify_items, with data quality."""
    peers = top_peers(m, target, k)
    rates = adoption_rates(m, peers)
    common, gaps = classify_items(m, target, rates, common_t, gap_t)
    unknown_counts = {target: m.unknown_count(target)}
    for cid in peers.peer_ids:
        unknown_counts[cid] = m.unknown_count(cid)
    return PeerReport(
        peer_set=peers,
        rates=rates,
        common_items=common,
        gap_items=gaps,
        thresholds=(common_t, gap_t),
        unknown_counts=unknown_counts,
    )
