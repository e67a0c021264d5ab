"""Read-only HTTP JSON API over a published snapshot.

Every handler reads the store's current snapshot exactly once and derives
its whole response from it, so responses stay internally consistent across
concurrent snapshot swaps. Query parameters are validated by hand so
malformed values produce 400 with a field-level message rather than
framework-shaped errors.
"""

from __future__ import annotations

from pathlib import Path

from fastapi import FastAPI, Request, Response
from fastapi.responses import FileResponse, JSONResponse
from fastapi.staticfiles import StaticFiles

from .errors import EmptyPeersError, UnknownCityError
from .recommender import recommend
from .store import (
    CorpusSnapshot,
    SnapshotStore,
    canonical_json,
    matrix_to_csv,
    render_peer_report,
)

_DOMAINS = ("transportation", "energy")
_TIERS = ("policy", "strategy", "action")


def _error(status: int, field: str, message: str) -> JSONResponse:
    return JSONResponse(
        status_code=status, content={"error": {"field": field, "message": message}}
    )


def _parse_int(params, name: str, default: int, minimum: int):
    raw = params.get(name)
    if raw is None:
        return default, None
    try:
        value = int(raw)
    except ValueError:
        return None, _error(400, name, f"{name} must be an integer")
    if value < minimum:
        return None, _error(400, name, f"{name} must be >= {minimum}")
    return value, None


def _parse_threshold(params, name: str, default: float):
    raw = params.get(name)
    if raw is None:
        return default, None
    try:
        value = float(raw)
    except ValueError:
        return None, _error(400, name, f"{name} must be a number")
    if not 0.0 < value <= 1.0:
        return None, _error(400, name, f"{name} must be in (0, 1]")
    return value, None


def _parse_scope(params):
    domain = params.get("domain", "transportation")
    tier = params.get("tier", "action")
    if domain not in _DOMAINS:
        return None, None, _error(400, "domain", f"domain must be one of {_DOMAINS}")
    if tier not in _TIERS:
        return None, None, _error(400, "tier", f"tier must be one of {_TIERS}")
    return domain, tier, None


def _scores_record(snapshot: CorpusSnapshot, city_id: str) -> list[dict]:
    scores = []
    for (domain, tier), matrix in sorted(snapshot.matrices.items()):
        try:
            row_index = matrix.row_index(city_id)
        except UnknownCityError:
            continue
        present = int(matrix.cells[row_index].sum())
        unknown = int(matrix.unknown_mask[row_index].sum())
        total = len(matrix.item_ids)
        scores.append(
            {
                "domain": domain,
                "tier": tier,
                "score": present,
                "present": present,
                "absent": total - present - unknown,
                "unknown": unknown,
            }
        )
    return scores


def create_app(
    store: SnapshotStore,
    static_dir: str | Path | None = None,
    default_k: int = 5,
    default_common_t: float = 0.8,
    default_gap_t: float = 0.6,
) -> FastAPI:
    app = FastAPI(title="planmatch", docs_url=None, redoc_url=None)

    @app.get("/api/health")
    def health():
        snapshot = store.current
        return JSONResponse({"status": "ok", "snapshot": snapshot.snapshot_id})

    @app.get("/api/cities")
    def cities():
        snapshot = store.current
        listing = []
        for city_id in sorted(snapshot.documents):
            meta = snapshot.documents[city_id].meta
            listing.append(
                {
                    "city_id": city_id,
                    "city_name": meta.city_name,
                    "state": meta.state,
                    "publication_year": meta.publication_year,
                    "plan_title": meta.plan_title,
                }
            )
        return JSONResponse({"snapshot": snapshot.snapshot_id, "cities": listing})

    @app.get("/api/cities/{city_id}")
    def city_detail(city_id: str):
        snapshot = store.current
        if city_id not in snapshot.documents:
            return _error(404, "city_id", f"unknown city {city_id!r}")
        meta = snapshot.documents[city_id].meta
        return JSONResponse(
            {
                "snapshot": snapshot.snapshot_id,
                "city_id": city_id,
                "city_name": meta.city_name,
                "state": meta.state,
                "publication_year": meta.publication_year,
                "plan_title": meta.plan_title,
                "scores": _scores_record(snapshot, city_id),
            }
        )

    @app.get("/api/recommend")
    def recommend_endpoint(request: Request):
        snapshot = store.current
        params = request.query_params
        city = params.get("city")
        if not city:
            return _error(400, "city", "city is required")
        domain, tier, err = _parse_scope(params)
        if err:
            return err
        k, err = _parse_int(params, "k", default_k, 1)
        if err:
            return err
        common_t, err = _parse_threshold(params, "common_t", default_common_t)
        if err:
            return err
        gap_t, err = _parse_threshold(params, "gap_t", default_gap_t)
        if err:
            return err
        if city not in snapshot.documents:
            return _error(404, "city", f"unknown city {city!r}")
        matrix = snapshot.matrix(domain, tier)
        try:
            report = recommend(matrix, city, k=k, common_t=common_t, gap_t=gap_t)
        except EmptyPeersError:
            return _error(400, "city", "matrix has no peers for this city")
        payload = render_peer_report(snapshot, report, domain, tier, k)
        return Response(
            content=canonical_json(payload), media_type="application/json"
        )

    @app.get("/api/matrix")
    def matrix_endpoint(request: Request):
        snapshot = store.current
        domain, tier, err = _parse_scope(request.query_params)
        if err:
            return err
        matrix = snapshot.matrix(domain, tier)
        return Response(content=matrix_to_csv(matrix), media_type="text/csv")

    @app.get("/api/analytics/topics")
    def topics(request: Request):
        snapshot = store.current
        corpus = request.query_params.get("corpus", "plans")
        exports = snapshot.analytics.get(corpus)
        if not exports or "topic_summaries.json" not in exports:
            return _error(404, "corpus", f"no topic analytics for corpus {corpus!r}")
        return Response(
            content=exports["topic_summaries.json"], media_type="application/json"
        )

    @app.get("/api/analytics/frequencies")
    def frequencies(request: Request):
        snapshot = store.current
        corpus = request.query_params.get("corpus", "plans")
        exports = snapshot.analytics.get(corpus)
        if not exports or "frequencies.json" not in exports:
            return _error(404, "corpus", f"no frequency analytics for corpus {corpus!r}")
        return Response(
            content=exports["frequencies.json"], media_type="application/json"
        )

    if static_dir is not None and Path(static_dir).is_dir():
        static_dir = Path(static_dir)
        index_file = static_dir / "index.html"

        @app.get("/")
        def index():
            return FileResponse(index_file)

        app.mount("/ui", StaticFiles(directory=static_dir), name="ui")

    return app
