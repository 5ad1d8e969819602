import argparse
from pathlib import Path

from ctxpress.cli.options import add_pipeline_flags, analyse_corpus_file, build_config
from ctxpress.services.harness_service import sensitivity_grids, write_sensitivity


def register(subparsers) -> None:
    parser = subparsers.add_parser("sensitivity", help="Scans over k, tau, delta, beta and the scoring weights")
    parser.add_argument("corpus")
    parser.add_argument("--out", default="results", help="Output directory")
    add_pipeline_flags(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = build_config(args)
    analyses, failed = analyse_corpus_file(args.corpus, config, args)
    for path in write_sensitivity(Path(args.out), sensitivity_grids(analyses, config)):
        print(path)
    return 0 if failed == 0 else 1
