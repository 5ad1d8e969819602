import argparse
from pathlib import Path

from ctxpress.cli.options import add_pipeline_flags, analyse_corpus_file, build_config, parse_methods, parse_ratios
from ctxpress.services.harness_service import DEFAULT_RATIOS, budget_sweep, write_sweep
from ctxpress.services.pipeline_service import METHODS


def register(subparsers) -> None:
    parser = subparsers.add_parser("sweep", help="Quality-budget curves for ours and the baselines")
    parser.add_argument("corpus")
    parser.add_argument("--out", default="results", help="Output directory")
    parser.add_argument("--ratios", default=",".join(str(r) for r in DEFAULT_RATIOS))
    parser.add_argument("--methods", default=",".join(METHODS))
    add_pipeline_flags(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = build_config(args)
    ratios = parse_ratios(args.ratios)
    methods = parse_methods(args.methods)
    analyses, failed = analyse_corpus_file(args.corpus, config, args)
    path = write_sweep(Path(args.out) / "budget_sweep.csv", budget_sweep(analyses, ratios, methods))
    print(path)
    return 0 if failed == 0 else 1
