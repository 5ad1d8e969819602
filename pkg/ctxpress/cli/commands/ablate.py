import argparse
from pathlib import Path

from ctxpress.cli.options import add_pipeline_flags, analyse_corpus_file, build_config
from ctxpress.services.harness_service import ablation_grid, write_ablation


def register(subparsers) -> None:
    parser = subparsers.add_parser("ablate", help="Full model against each single-component ablation")
    parser.add_argument("corpus")
    parser.add_argument("--out", default="results", help="Output directory")
    add_pipeline_flags(parser)
    parser.set_defaults(handler=handle)


def handle(args: argparse.Namespace) -> int:
    config = build_config(args)
    analyses, failed = analyse_corpus_file(args.corpus, config, args)
    path = write_ablation(Path(args.out) / "ablation.csv", ablation_grid(analyses, config))
    print(path)
    return 0 if failed == 0 else 1
