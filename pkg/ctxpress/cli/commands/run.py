import argparse
import asyncio

from ctxpress.cli.options import add_pipeline_flags, build_config
from ctxpress.services.pipeline_service import run_corpus


def register(subparsers) -> None:
    parser = subparsers.add_parser("run", help="Compress every document of a JSONL corpus")
    parser.add_argument("corpus", help="JSONL file of {doc_id, text, query?, reference?}")
    parser.add_argument("--out", default="results", help="Output directory")
    parser.add_argument("--dump-graph", action="store_true", help="Also write <doc_id>.graph.json")
    add_pipeline_flags(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    """Exit 0 only when every line was a valid document and every document compressed"""
    config = build_config(args)
    summary = asyncio.run(
        run_corpus(
            args.corpus,
            config,
            args.out,
            jobs=args.jobs,
            cache_dir=args.cache_dir,
            dump_graph=args.dump_graph,
        )
    )
    print(summary.summary_csv)
    return 0 if summary.ok else 1
