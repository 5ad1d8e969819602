import logging
import warnings
from typing import Dict, List, Optional, Sequence

import numpy as np

from ctxpress.core.errors import BudgetTooSmall
from ctxpress.models.scores import ScoreCard
from ctxpress.models.topics import TopicModel
from ctxpress.schemas.config import BudgetSpec, SelectionConfig
from ctxpress.schemas.documents import Sentence
from ctxpress.schemas.results import CompressionAudit, CompressionResult, SentenceAudit

logger = logging.getLogger(__name__)


def rank(scores) -> List[int]:
    """Indices by descending score, ties by ascending index"""
    values = [float(score) for score in scores]
    return sorted(range(len(values)), key=lambda i: (-values[i], i))


def reassemble(sentences: Sequence[Sentence], selected_indices: Sequence[int]) -> str:
    return " ".join(sentences[i].text for i in selected_indices)


def _audit(
    n: int,
    verdicts: Dict[int, str],
    card: Optional[ScoreCard],
    topics: Optional[TopicModel],
    notes: List[str],
) -> CompressionAudit:
    rows = []
    for i in range(n):
        row = {"index": i, "verdict": verdicts.get(i, "not-reached")}
        if topics is not None:
            row["label"] = int(topics.assignment[i])
        if card is not None:
            row.update(
                s_task=float(card.s_task[i]),
                s_rep=float(card.s_rep[i]),
                s_bridge=float(card.s_bridge[i]),
                s_cycle=float(card.s_cycle[i]),
                score=float(card.composite[i]),
            )
        rows.append(SentenceAudit(**row))
    return CompressionAudit(
        sentences=rows,
        n_clusters=topics.K if topics is not None else None,
        weights=card.weights.model_dump() if card is not None else None,
        notes=notes,
    )


def greedy_select(
    sentences: Sequence[Sentence],
    embeddings,
    order: Sequence[int],
    budget: BudgetSpec,
    config: SelectionConfig,
    doc_id: str = "",
    method: str = "ours",
    card: Optional[ScoreCard] = None,
    topics: Optional[TopicModel] = None,
) -> CompressionResult:
    """
    Walk candidates in order, keeping each one that fits the budget and is
    not redundant with an already selected sentence

    Args:
        sentences (Sequence[Sentence]): Segmented document
        embeddings: Unit-norm rows aligned with ``sentences``; only read when NMS is on
        order (Sequence[int]): Candidate order, usually from ``rank``
        budget (BudgetSpec): Token budget or compression ratio
        config (SelectionConfig): NMS threshold and switch
        doc_id (str): Document identifier echoed in the result
        method (str): Compressor name echoed in the result
        card (ScoreCard): Optional scores for the audit
        topics (TopicModel): Optional labels for the audit

    Returns:
        CompressionResult: Selection in original order with a verdict per sentence
    """
    total_tokens = sum(sentence.token_count for sentence in sentences)
    limit = budget.resolve(total_tokens)
    matrix = np.asarray(embeddings, dtype=np.float64) if config.nms_enabled else None

    selected: List[int] = []
    verdicts: Dict[int, str] = {}
    used = 0
    for i in order:
        if used == limit:
            # nothing fits any more; every sentence has at least one token
            break
        cost = sentences[i].token_count
        if used + cost > limit:
            verdicts[i] = "budget-skipped"
            continue
        if matrix is not None and selected and np.any(matrix[selected] @ matrix[i] >= config.tau):
            verdicts[i] = "nms-suppressed"
            continue
        selected.append(i)
        verdicts[i] = "selected"
        used += cost

    notes: List[str] = []
    if not selected and sentences:
        message = f"No sentence of {doc_id or 'document'} fits a budget of {limit} tokens"
        warnings.warn(message, BudgetTooSmall, stacklevel=2)
        logger.warning("[INFO] %s", message)
        notes.append("budget_too_small")

    selected.sort()
    return CompressionResult(
        doc_id=doc_id,
        method=method,
        selected_indices=selected,
        compressed_text=reassemble(sentences, selected),
        tokens_used=used,
        total_tokens=total_tokens,
        effective_budget=limit,
        budget=budget,
        audit=_audit(len(sentences), verdicts, card, topics, notes),
    )
