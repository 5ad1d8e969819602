import asyncio
import csv
import hashlib
import json
import logging
import re
from contextlib import contextmanager
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple

import httpx
import numpy as np
from pydantic import ValidationError

from ctxpress.core.errors import CorpusFormatError, PipelineStageError
from ctxpress.core.lifecycle import provider_session
from ctxpress.models.graph import HybridGraph
from ctxpress.models.scores import ScoreCard
from ctxpress.models.topics import TopicModel
from ctxpress.schemas.config import BudgetSpec, PipelineConfig
from ctxpress.schemas.documents import RawDocument, Sentence
from ctxpress.schemas.results import CompressionResult, DocumentReport, EvalReport, RunSummary
from ctxpress.services.baseline_service import baseline_lead3, baseline_textrank
from ctxpress.services.embedding_service import EmbeddingService
from ctxpress.services.evaluation_service import evaluate
from ctxpress.services.graph_service import build_graph
from ctxpress.services.scoring_service import build_score_card, reweight
from ctxpress.services.segmenter_service import Tokenizer, segment
from ctxpress.services.selector_service import greedy_select, rank
from ctxpress.services.topic_service import choose_k, fit_minibatch_kmeans

logger = logging.getLogger(__name__)

METHODS = ("ours", "lead3", "textrank")

SUMMARY_COLUMNS = [
    "doc_id", "n_sentences", "total_tokens", "budget", "tokens_used", "cr",
    "topic_coverage", "bridge_retention", "cycle_retention", "rouge1", "rouge2", "rougeL",
]


@dataclass(frozen=True)
class DocumentAnalysis:
    """Everything computed once per document, before any selection"""
    doc: RawDocument
    config: PipelineConfig
    sentences: List[Sentence]
    embeddings: np.ndarray
    query_embedding: Optional[np.ndarray]
    graph: HybridGraph
    topics: TopicModel
    card: ScoreCard

    @property
    def total_tokens(self) -> int:
        return sum(sentence.token_count for sentence in self.sentences)


@contextmanager
def stage(name: str) -> Iterator[None]:
    """Label any failure inside the block with the pipeline stage"""
    try:
        yield
    except PipelineStageError:
        raise
    except Exception as e:
        raise PipelineStageError(name, f"{type(e).__name__}: {e}") from e


def _structure(embeddings, query_embedding, topics: TopicModel, config: PipelineConfig, doc_id: str):
    graph = build_graph(embeddings, config.graph, config.seed)
    card = build_score_card(
        embeddings, graph, topics, config.weights,
        query_embedding=query_embedding, seed=config.seed, doc_id=doc_id, max_cycles=config.max_cycles,
    )
    return graph, card


async def analyse(doc: RawDocument, config: PipelineConfig, embedder: EmbeddingService) -> DocumentAnalysis:
    """
    Segment, embed, build the graph, cluster and score one document

    Args:
        doc (RawDocument): Input document; its query overrides ``config.query``
        config (PipelineConfig): Run configuration, ablations applied here
        embedder (EmbeddingService): Open embedding service

    Returns:
        DocumentAnalysis: Reusable for any number of selections

    Raises:
        PipelineStageError: With ``stage`` set to the failing step
    """
    config = config.resolved()

    with stage("segment"):
        sentences = segment(doc, config.min_fragment_tokens, Tokenizer(config.tokenizer))

    with stage("embed"):
        embeddings = await embedder.embed_batch([sentence.text for sentence in sentences])
        query = doc.query or config.query
        query_embedding = await embedder.embed_query(query) if query else None

    with stage("cluster"):
        topics = await asyncio.to_thread(
            fit_minibatch_kmeans, embeddings, choose_k(len(sentences)), config.seed
        )

    with stage("graph"):
        graph = await asyncio.to_thread(build_graph, embeddings, config.graph, config.seed)

    with stage("score"):
        card = await asyncio.to_thread(
            build_score_card, embeddings, graph, topics, config.weights,
            query_embedding, config.seed, doc.doc_id, config.max_cycles,
        )

    return DocumentAnalysis(
        doc=doc,
        config=config,
        sentences=sentences,
        embeddings=embeddings,
        query_embedding=query_embedding,
        graph=graph,
        topics=topics,
        card=card,
    )


def reconfigure(analysis: DocumentAnalysis, config: PipelineConfig) -> DocumentAnalysis:
    """Reuse sentences, embeddings and topics under another configuration"""
    config = config.resolved()
    if config.graph != analysis.config.graph or config.max_cycles != analysis.config.max_cycles:
        with stage("graph"):
            graph, card = _structure(
                analysis.embeddings, analysis.query_embedding, analysis.topics, config, analysis.doc.doc_id
            )
        return replace(analysis, config=config, graph=graph, card=card)
    if config.weights != analysis.card.weights:
        return replace(analysis, config=config, card=reweight(analysis.card, config.weights))
    return replace(analysis, config=config)


def select(
    analysis: DocumentAnalysis,
    method: str = "ours",
    budget: Optional[BudgetSpec] = None,
) -> Tuple[CompressionResult, EvalReport]:
    """Run one compressor on an analysed document and evaluate it"""
    budget = budget or analysis.config.budget
    doc_id = analysis.doc.doc_id
    with stage("select"):
        if method == "ours":
            result = greedy_select(
                analysis.sentences,
                analysis.embeddings,
                rank(analysis.card.composite),
                budget,
                analysis.config.selection,
                doc_id=doc_id,
                card=analysis.card,
                topics=analysis.topics,
            )
        elif method == "lead3":
            result = baseline_lead3(analysis.sentences, budget, doc_id=doc_id, topics=analysis.topics)
        elif method == "textrank":
            result = baseline_textrank(
                analysis.sentences, analysis.embeddings, budget, doc_id=doc_id, topics=analysis.topics
            )
        else:
            raise ValueError(f"Unknown method {method!r}")
    for diagnostic in analysis.topics.diagnostics:
        result.audit.notes.append(diagnostic)
    with stage("evaluate"):
        report = evaluate(result, analysis.card, analysis.topics, analysis.doc.reference)
    return result, report


async def compress_document(
    doc: RawDocument,
    config: PipelineConfig,
    embedder: Optional[EmbeddingService] = None,
) -> Tuple[CompressionResult, EvalReport]:
    """
    Compress one document end to end

    Args:
        doc (RawDocument): Document to compress
        config (PipelineConfig): Run configuration
        embedder (EmbeddingService): Open service; a provider session is opened when omitted

    Returns:
        Tuple[CompressionResult, EvalReport]: Selection with audit trail and its metrics
    """
    if embedder is None:
        async with provider_session(config.provider) as session:
            return await compress_document(doc, config, session)

    analysis = await analyse(doc, config, embedder)
    result, report = select(analysis)
    logger.info(
        "[OK] %s compressed: %d/%d sentences, CR=%.2f",
        doc.doc_id, len(result.selected_indices), len(analysis.sentences), report.cr,
    )
    return result, report


def load_corpus(path: str) -> Tuple[List[RawDocument], int]:
    """
    Read a JSONL corpus of {"doc_id", "text", "query"?, "reference"?} records

    Returns:
        Tuple[List[RawDocument], int]: Valid documents in file order and the malformed line count
    """
    documents: List[RawDocument] = []
    seen = set()
    malformed = 0
    with open(path, encoding="utf-8") as handle:
        for number, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                try:
                    record = RawDocument.model_validate(json.loads(line))
                except (json.JSONDecodeError, ValidationError) as e:
                    raise CorpusFormatError(f"line {number}: {e}") from e
                if record.doc_id in seen:
                    raise CorpusFormatError(f"line {number}: duplicate doc_id {record.doc_id!r}")
            except CorpusFormatError as e:
                malformed += 1
                logger.error("[ERROR] Skipping malformed corpus %s", e)
                continue
            seen.add(record.doc_id)
            documents.append(record)
    logger.info("[OK] Loaded %d documents from %s (%d malformed)", len(documents), path, malformed)
    return documents, malformed


def safe_name(doc_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", doc_id) or "_"


def _hashed_name(doc_id: str, size: int) -> str:
    digest = hashlib.blake2b(doc_id.encode("utf-8"), digest_size=size).hexdigest()
    return f"{safe_name(doc_id)}-{digest}"


def result_names(doc_ids: Iterable[str]) -> Dict[str, str]:
    """
    Injective file stems for a set of doc_ids

    Ids that are already safe keep their name. Any other id, and any id whose
    cleaned name is taken, gets a blake2b digest of the raw id appended.
    """
    doc_ids = list(doc_ids)
    names: Dict[str, str] = {}
    taken = set()
    for doc_id in doc_ids:
        if safe_name(doc_id) == doc_id:
            names[doc_id] = doc_id
            taken.add(doc_id)
    for doc_id in doc_ids:
        if doc_id in names:
            continue
        size = 4
        name = _hashed_name(doc_id, size)
        while name in taken:
            size *= 2
            name = _hashed_name(doc_id, size)
        names[doc_id] = name
        taken.add(name)
    return names


def summary_row(analysis: DocumentAnalysis, result: CompressionResult, report: EvalReport) -> dict:
    return {
        "doc_id": analysis.doc.doc_id,
        "n_sentences": len(analysis.sentences),
        "total_tokens": result.total_tokens,
        "budget": result.effective_budget,
        "tokens_used": result.tokens_used,
        "cr": report.cr,
        "topic_coverage": report.topic_coverage,
        "bridge_retention": report.bridge_retention,
        "cycle_retention": report.cycle_retention,
        "rouge1": report.rouge1,
        "rouge2": report.rouge2,
        "rougeL": report.rougeL,
    }


def write_csv(path: Path, columns: List[str], rows: List[dict]) -> None:
    """CSV with a fixed column order; None cells are left empty"""
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as handle:
        writer = csv.DictWriter(handle, fieldnames=columns, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow({column: "" if row.get(column) is None else row[column] for column in columns})


async def analyse_corpus(
    documents: List[RawDocument],
    config: PipelineConfig,
    embedder: EmbeddingService,
    jobs: int = 1,
) -> List[Tuple[RawDocument, Optional[DocumentAnalysis]]]:
    """Analyse documents concurrently; a failed document pairs with None"""
    semaphore = asyncio.Semaphore(max(jobs, 1))

    async def run_one(doc: RawDocument):
        async with semaphore:
            try:
                return doc, await analyse(doc, config, embedder)
            except PipelineStageError as e:
                logger.error("[ERROR] %s failed: %s", doc.doc_id, e)
                return doc, None

    return list(await asyncio.gather(*(run_one(doc) for doc in documents)))


def write_document(
    out: Path,
    name: str,
    analysis: DocumentAnalysis,
    result: CompressionResult,
    report: EvalReport,
    dump_graph: bool = False,
) -> Path:
    """Write ``<name>.json`` (and ``<name>.graph.json``) for one document"""
    target = out / f"{name}.json"
    target.write_text(DocumentReport(result=result, evaluation=report).model_dump_json(indent=2), encoding="utf-8")
    if dump_graph:
        graph_path = out / f"{name}.graph.json"
        graph_path.write_text(json.dumps(analysis.graph.dump(), indent=2), encoding="utf-8")
    return target


async def run_corpus(
    corpus_path: str,
    config: PipelineConfig,
    out_dir: str,
    jobs: int = 1,
    cache_dir: Optional[str] = None,
    dump_graph: bool = False,
    transport: Optional[httpx.AsyncBaseTransport] = None,
) -> RunSummary:
    """
    Compress every document of a JSONL corpus

    Each document is analysed, selected and written as ``<name>.json`` (and
    ``<name>.graph.json`` with ``dump_graph``) before its analysis is dropped.
    Names come from ``result_names``. ``summary.csv`` is written last in
    doc_id order. Failures are logged and counted; the rest of the corpus
    still runs.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    documents, malformed = load_corpus(corpus_path)
    names = result_names(doc.doc_id for doc in documents)
    semaphore = asyncio.Semaphore(max(jobs, 1))

    async def run_one(doc: RawDocument, embedder: EmbeddingService) -> Optional[Tuple[dict, Path]]:
        async with semaphore:
            try:
                analysis = await analyse(doc, config, embedder)
                result, report = select(analysis)
            except PipelineStageError as e:
                logger.error("[ERROR] %s failed: %s", doc.doc_id, e)
                return None
            target = write_document(out, names[doc.doc_id], analysis, result, report, dump_graph)
            logger.info("[OK] %s compressed: CR=%.2f", doc.doc_id, report.cr)
            return summary_row(analysis, result, report), target

    async with provider_session(config.provider, cache_dir=cache_dir, transport=transport) as embedder:
        outcomes = await asyncio.gather(*(run_one(doc, embedder) for doc in documents))

    summary = RunSummary(malformed=malformed)
    rows = []
    for outcome in outcomes:
        if outcome is None:
            summary.failed += 1
            continue
        row, target = outcome
        rows.append(row)
        summary.result_files.append(str(target))
        summary.processed += 1

    summary_path = out / "summary.csv"
    write_csv(summary_path, SUMMARY_COLUMNS, sorted(rows, key=lambda row: row["doc_id"]))
    summary.summary_csv = str(summary_path)
    logger.info(
        "[OK] Run finished: %d processed, %d failed, %d malformed",
        summary.processed, summary.failed, summary.malformed,
    )
    return summary
