"""Command-line interface: pipeline stages, analytics, queries, and serving."""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .config import AppConfig, load_config
from .errors import PlanmatchError, UnknownCityError


def build_parser() -> argparse.ArgumentParser:
    # Shared flags are accepted both before and after the subcommand;
    # SUPPRESS keeps the subparser from clobbering values parsed up front.
    common = argparse.ArgumentParser(add_help=False, argument_default=argparse.SUPPRESS)
    common.add_argument("--config", help="JSON config file")
    common.add_argument("--data-dir", help="artifact directory (default: data)")
    common.add_argument("--provider", choices=["mock", "remote"])
    common.add_argument("--model", help="chat model id for the remote provider")
    common.add_argument("--temperature", type=float)
    common.add_argument("--chunk-size", type=int)
    common.add_argument("--overlap", type=int)
    common.add_argument("--unit", choices=["characters", "words"])
    common.add_argument("--k", type=int, help="retrieval k / peer count")
    common.add_argument("--fetch-k", type=int)
    common.add_argument("--lambda", dest="lambda_", type=float)
    common.add_argument("--extra-samples", type=int)
    common.add_argument("--seed", type=int)
    common.add_argument("--taxonomy-dir")
    common.add_argument("--common-threshold", type=float)
    common.add_argument("--gap-threshold", type=float)
    common.add_argument("--no-screening-gate", action="store_true",
                        help="evaluate documents even when screening fails")
    common.add_argument("--bind", help="host:port (default 127.0.0.1:8765)")

    parser = argparse.ArgumentParser(
        prog="planmatch",
        description="Climate-plan mining: RAG theme evaluation and peer-city recommendations",
        parents=[common],
    )
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("ingest", parents=[common],
                   help="parse the corpus manifest into the document store")
    sub.add_parser("index", parents=[common],
                   help="chunk, embed, and freeze per-document indexes")
    sub.add_parser("screen", parents=[common],
                   help="run the equity screening question")
    sub.add_parser("extract", parents=[common],
                   help="extract policy/strategy/action items")
    sub.add_parser("evaluate", parents=[common],
                   help="binary theme evaluation; publishes a snapshot")

    analyze = sub.add_parser("analyze", parents=[common],
                             help="corpus analytics exports and figures")
    analyze.add_argument("--corpus", default="plans", help="analytics corpus name")
    analyze.add_argument("--input", default=None,
                         help="directory of .txt files (default: ingested docs)")
    analyze.add_argument("--no-figures", action="store_true", default=False)

    rec = sub.add_parser("recommend", parents=[common],
                         help="one-shot peer recommendation to stdout")
    rec.add_argument("--city", required=True)
    rec.add_argument("--domain", default="transportation",
                     choices=["transportation", "energy"])
    rec.add_argument("--tier", default="action",
                     choices=["policy", "strategy", "action"])

    serve = sub.add_parser("serve", parents=[common],
                           help="serve the HTTP API and web UI")
    serve.add_argument("--static-dir", default=None,
                       help="built web UI assets to serve")
    return parser


def config_from_args(args: argparse.Namespace) -> AppConfig:
    def flag(name):
        return getattr(args, name, None)

    cfg = load_config(flag("config"))
    chunking = {}
    if flag("chunk_size") is not None:
        chunking["chunk_size"] = args.chunk_size
    if flag("overlap") is not None:
        chunking["overlap"] = args.overlap
    if flag("unit") is not None:
        chunking["unit"] = args.unit
    retrieval = {}
    if flag("k") is not None:
        retrieval["k"] = args.k
        retrieval["fetch_k"] = max(cfg.retrieval.fetch_k, args.k)
    if flag("fetch_k") is not None:
        retrieval["fetch_k"] = args.fetch_k
    if flag("lambda_") is not None:
        retrieval["lambda_"] = args.lambda_
    if flag("extra_samples") is not None:
        retrieval["extra_samples"] = args.extra_samples
    if flag("seed") is not None:
        retrieval["seed"] = args.seed
    generation = {}
    if flag("model") is not None:
        generation["model_id"] = args.model
    if flag("temperature") is not None:
        generation["temperature"] = args.temperature
    overrides = {}
    if chunking:
        overrides["chunking"] = dataclasses.replace(cfg.chunking, **chunking)
    if retrieval:
        overrides["retrieval"] = dataclasses.replace(cfg.retrieval, **retrieval)
    if generation:
        overrides["generation"] = dataclasses.replace(cfg.generation, **generation)
    if flag("provider") is not None:
        overrides["provider"] = dataclasses.replace(cfg.provider, kind=args.provider)
    recommender = {}
    if flag("k") is not None:
        recommender["k"] = args.k
    if flag("common_threshold") is not None:
        recommender["common_threshold"] = args.common_threshold
    if flag("gap_threshold") is not None:
        recommender["gap_threshold"] = args.gap_threshold
    if recommender:
        overrides["recommender"] = dataclasses.replace(cfg.recommender, **recommender)
    if flag("data_dir") is not None:
        overrides["data_dir"] = args.data_dir
    if flag("taxonomy_dir") is not None:
        overrides["taxonomy_dir"] = args.taxonomy_dir
    if flag("seed") is not None:
        overrides["seed"] = args.seed
    if flag("no_screening_gate"):
        overrides["screening_gate"] = False
    if flag("bind"):
        overrides["bind"] = args.bind
    return dataclasses.replace(cfg, **overrides)


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(level=logging.INFO, format="%(levelname)s %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    from . import pipeline  # deferred: keeps --help fast

    try:
        cfg = config_from_args(args)
        if args.command == "ingest":
            count = pipeline.run_ingest(cfg)
            print(f"ingested {count} documents")
        elif args.command == "index":
            count = pipeline.run_index(cfg)
            print(f"indexed {count} chunks")
        elif args.command == "screen":
            count = pipeline.run_screen(cfg)
            print(f"{count} documents acknowledged climate-equity challenges")
        elif args.command == "extract":
            count = pipeline.run_extract(cfg)
            print(f"extracted {count} items")
        elif args.command == "evaluate":
            snapshot_id = pipeline.run_evaluate(cfg)
            print(f"published snapshot {snapshot_id}")
        elif args.command == "analyze":
            out_dir = pipeline.run_analyze(
                cfg,
                corpus_name=args.corpus,
                input_dir=args.input,
                render_figures=not args.no_figures,
            )
            print(f"analytics written to {out_dir}")
        elif args.command == "recommend":
            print(
                pipeline.run_recommend(
                    cfg,
                    city=args.city,
                    domain=args.domain,
                    tier=args.tier,
                    k=getattr(args, "k", None),
                    common_t=getattr(args, "common_threshold", None),
                    gap_t=getattr(args, "gap_threshold", None),
                )
            )
        elif args.command == "serve":
            import uvicorn

            from .api import create_app
            from .store import SnapshotStore, load_snapshot

            snapshot = load_snapshot(cfg.data_dir)
            snap_store = SnapshotStore(snapshot)
            host, _, port = cfg.bind.partition(":")
            app = create_app(
                snap_store,
                static_dir=getattr(args, "static_dir", None),
                default_k=cfg.recommender.k,
                default_common_t=cfg.recommender.common_threshold,
                default_gap_t=cfg.recommender.gap_threshold,
            )
            uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8765))
        return 0
    except UnknownCityError as exc:
        print(f"unknown city: {exc}", file=sys.stderr)
        return 1
    except PlanmatchError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
