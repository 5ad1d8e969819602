import argparse
import asyncio
import logging
import sys
from pathlib import Path

from ctxpress.cli.options import add_pipeline_flags, build_config
from ctxpress.core.lifecycle import provider_session
from ctxpress.schemas.documents import RawDocument
from ctxpress.schemas.results import DocumentReport
from ctxpress.services.pipeline_service import compress_document

logger = logging.getLogger(__name__)


def register(subparsers) -> None:
    parser = subparsers.add_parser("compress", help="Compress a single document from a file or stdin")
    parser.add_argument("input", nargs="?", default="-", help="Text file, or - for stdin")
    parser.add_argument("--doc-id", help="Identifier echoed in the result (default: file stem)")
    parser.add_argument("--reference", help="Reference text file for ROUGE")
    parser.add_argument("--out", help="Write the JSON report here instead of stdout")
    add_pipeline_flags(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    """Compress one document and emit its JSON report"""
    config = build_config(args)
    if args.input == "-":
        text, doc_id = sys.stdin.read(), args.doc_id or "stdin"
    else:
        text, doc_id = Path(args.input).read_text(encoding="utf-8"), args.doc_id or Path(args.input).stem
    reference = Path(args.reference).read_text(encoding="utf-8") if args.reference else None
    doc = RawDocument(doc_id=doc_id, text=text, reference=reference)

    async def _run():
        async with provider_session(config.provider, cache_dir=args.cache_dir) as embedder:
            return await compress_document(doc, config, embedder)

    result, report = asyncio.run(_run())
    payload = DocumentReport(result=result, evaluation=report).model_dump_json(indent=2)
    if args.out:
        Path(args.out).write_text(payload, encoding="utf-8")
        print(args.out)
    else:
        print(payload)
    return 0
