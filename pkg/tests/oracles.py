"""Independent brute-force oracles used by the test suite.

These stay deliberately naive (explicit loops, exhaustive scans) so they
check the production implementations from a different route.
"""

from __future__ import annotations

import math

import numpy as np


def cosine(a, b) -> float:
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    if np.array_equal(va, vb):
        return 1.0
    return max(-1.0, min(1.0, float(np.dot(va, vb)) / (na * nb)))


def mmr_greedy(candidates, k, lam):
    """Exhaustive greedy MMR: at each step score every unselected candidate.

    First pick is the relevance argmax; its reported objective is
    lam * relevance. Ties break by ascending chunk_id.
    """
    pool = {cid: (np.asarray(vec, dtype=np.float64), float(rel)) for cid, vec, rel in candidates}
    picked: list[tuple[str, float]] = []
    chosen_vecs: list[np.ndarray] = []
    while pool and len(picked) < k:
        best_id = None
        best_key = -math.inf
        for cid in sorted(pool):
            vec, rel = pool[cid]
            if chosen_vecs:
                key = lam * rel - (1 - lam) * max(cosine(vec, s) for s in chosen_vecs)
            else:
                key = rel
            if key > best_key:
                best_key = key
                best_id = cid
        vec, rel = pool.pop(best_id)
        obj = best_key if chosen_vecs else lam * rel
        chosen_vecs.append(vec)
        picked.append((best_id, obj))
    return picked


def top_n_scan(entries, query, n):
    """Score every entry with the cosine kernel, sort, take n."""
    scored = [(cid, cosine(vec, query)) for cid, vec in entries]
    scored.sort(key=lambda t: (-t[1], t[0]))
    return scored[:n]


def top_peers_scan(city_ids, rows, target, k):
    """Exhaustive peer ranking over binary rows, excluding the target."""
    target_row = rows[city_ids.index(target)]
    sims = []
    for cid, row in zip(city_ids, rows):
        if cid == target:
            continue
        dot = sum(int(x) * int(y) for x, y in zip(target_row, row))
        na = math.sqrt(sum(int(x) * int(x) for x in target_row))
        nb = math.sqrt(sum(int(y) * int(y) for y in row))
        if na == 0 or nb == 0:
            sim = 0.0
        elif list(row) == list(target_row):
            sim = 1.0  # identical nonzero rows are exactly 1 by contract
        else:
            sim = max(-1.0, min(1.0, dot / (na * nb)))
        sims.append((cid, sim))
    sims.sort(key=lambda t: (-t[1], t[0]))
    return sims[:k]


def adoption_rate_scan(city_ids, rows, item_index, peer_ids):
    total = 0
    for cid in peer_ids:
        total += int(rows[city_ids.index(cid)][item_index])
    return total / len(peer_ids)


def full_svd_oracle(a):
    """Full decomposition via LAPACK, the reference for the truncated path."""
    return np.linalg.svd(np.asarray(a, dtype=np.float64), full_matrices=False)
