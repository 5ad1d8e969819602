import argparse
import asyncio
import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from typing import Any, Dict, List, Tuple

from pydantic import ValidationError

from ctxpress.core.config import settings
from ctxpress.core.errors import ConfigError
from ctxpress.core.lifecycle import provider_session
from ctxpress.schemas.config import BudgetSpec, PipelineConfig
from ctxpress.services.pipeline_service import METHODS, DocumentAnalysis, analyse_corpus, load_corpus

logger = logging.getLogger(__name__)


def add_pipeline_flags(parser: argparse.ArgumentParser) -> None:
    """Flags shared by every subcommand that runs the pipeline"""
    parser.add_argument("--config", help="TOML file with sections mirroring the pipeline configuration")
    budget = parser.add_mutually_exclusive_group()
    budget.add_argument("--budget-ratio", type=float, help="Compression ratio rho in (0, 1]")
    budget.add_argument("--budget-tokens", type=int, help="Absolute token budget B")
    parser.add_argument("--k", type=int, help="Neighbors per sentence for the mutual k-NN graph")
    parser.add_argument("--delta", type=int, help="Sequential window")
    parser.add_argument("--alpha", type=float, help="Semantic fusion weight (beta defaults to 1 - alpha)")
    parser.add_argument("--beta", type=float, help="Sequential fusion weight (alpha defaults to 1 - beta)")
    parser.add_argument("--tau", type=float, help="NMS cosine threshold")
    parser.add_argument("--weights", help="task,rep,bridge,cycle")
    parser.add_argument("--ablate", help="Comma list of no_seq,no_rep,no_bridge,no_cycle,no_nms")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--provider", choices=["local-hash", "remote-http", "openai"])
    parser.add_argument("--query", help="Query used when a document has none")
    parser.add_argument("--tokenizer", choices=["whitespace-punct", "vocab-file"])
    parser.add_argument("--vocab", help="Vocabulary file for the vocab-file tokenizer")
    parser.add_argument("--cache-dir", default=settings.cache_dir, help="Embedding cache directory")
    parser.add_argument("--jobs", type=int, default=settings.jobs, help="Documents processed concurrently")


def _section(data: Dict[str, Any], name: str) -> Dict[str, Any]:
    return data.setdefault(name, {})


def _parse_weights(text: str) -> Dict[str, float]:
    try:
        values = [float(part) for part in text.split(",")]
    except ValueError as e:
        raise ConfigError(f"--weights must be four numbers: {e}") from e
    if len(values) != 4:
        raise ConfigError(f"--weights needs task,rep,bridge,cycle (got {len(values)} values)")
    return dict(zip(("lambda_task", "lambda_rep", "lambda_bridge", "lambda_cycle"), values))


def parse_ratios(text: str) -> List[float]:
    """Comma list of compression ratios, each in (0, 1]"""
    try:
        ratios = [float(part) for part in text.split(",") if part.strip()]
    except ValueError as e:
        raise ConfigError(f"--ratios must be numbers: {e}") from e
    if not ratios:
        raise ConfigError("--ratios needs at least one value")
    for ratio in ratios:
        try:
            BudgetSpec(mode="ratio", ratio=ratio)
        except ValidationError as e:
            raise ConfigError(f"--ratios value {ratio} is outside (0, 1]") from e
    return ratios


def parse_methods(text: str) -> List[str]:
    methods = [part.strip() for part in text.split(",") if part.strip()]
    unknown = [method for method in methods if method not in METHODS]
    if not methods or unknown:
        raise ConfigError(f"--methods must be a comma list of {','.join(METHODS)} (got {text!r})")
    return methods


def build_config(args: argparse.Namespace) -> PipelineConfig:
    """
    Layer model defaults, the TOML file and command-line flags

    Raises:
        ConfigError: Unreadable file or invalid values
    """
    data: Dict[str, Any] = {}
    if args.config:
        try:
            with open(args.config, "rb") as handle:
                data = tomllib.load(handle)
        except (OSError, tomllib.TOMLDecodeError) as e:
            raise ConfigError(f"Cannot read config {args.config}: {e}") from e

    if args.budget_ratio is not None:
        data["budget"] = {"mode": "ratio", "ratio": args.budget_ratio}
    if args.budget_tokens is not None:
        data["budget"] = {"mode": "absolute", "tokens": args.budget_tokens}

    graph = _section(data, "graph")
    if args.k is not None:
        graph["k"] = args.k
    if args.delta is not None:
        graph["delta"] = args.delta
    if args.alpha is not None:
        graph["alpha"] = args.alpha
        graph["beta"] = args.beta if args.beta is not None else 1.0 - args.alpha
    elif args.beta is not None:
        graph["beta"] = args.beta
        graph["alpha"] = 1.0 - args.beta

    if args.tau is not None:
        _section(data, "selection")["tau"] = args.tau
    if args.weights:
        data["weights"] = _parse_weights(args.weights)
    if args.ablate is not None:
        data["ablations"] = args.ablate
    if args.seed is not None:
        data["seed"] = args.seed
    if args.provider:
        _section(data, "provider")["kind"] = args.provider
    if args.query:
        data["query"] = args.query
    if args.tokenizer:
        _section(data, "tokenizer")["kind"] = args.tokenizer
    if args.vocab:
        tokenizer = _section(data, "tokenizer")
        tokenizer["vocab_path"] = args.vocab
        tokenizer.setdefault("kind", "vocab-file")

    try:
        return PipelineConfig.model_validate(data)
    except ValidationError as e:
        raise ConfigError(str(e)) from e


def analyse_corpus_file(corpus: str, config: PipelineConfig, args: argparse.Namespace) -> Tuple[List[DocumentAnalysis], int]:
    """Analysed documents of a corpus and the number that could not be used"""

    async def _run():
        documents, malformed = load_corpus(corpus)
        async with provider_session(config.provider, cache_dir=args.cache_dir) as embedder:
            pairs = await analyse_corpus(documents, config, embedder, args.jobs)
        analyses = [analysis for _, analysis in pairs if analysis is not None]
        return analyses, malformed + len(pairs) - len(analyses)

    return asyncio.run(_run())
