import logging
import warnings
from typing import Optional, Sequence, Tuple

import numpy as np

from ctxpress.core.errors import NonConvergence
from ctxpress.models.topics import TopicModel
from ctxpress.schemas.config import BudgetSpec, SelectionConfig
from ctxpress.schemas.documents import Sentence
from ctxpress.schemas.results import CompressionResult
from ctxpress.services.graph_service import cosine_matrix
from ctxpress.services.selector_service import greedy_select, rank

logger = logging.getLogger(__name__)

NO_NMS = SelectionConfig(nms_enabled=False)


def baseline_lead3(
    sentences: Sequence[Sentence],
    budget: BudgetSpec,
    doc_id: str = "",
    topics: Optional[TopicModel] = None,
) -> CompressionResult:
    """First three sentences, skipping any that overflow the budget"""
    order = list(range(min(3, len(sentences))))
    return greedy_select(sentences, None, order, budget, NO_NMS, doc_id=doc_id, method="lead3", topics=topics)


def _power_iteration(embeddings, damping: float, tol: float, max_iters: int) -> Tuple[np.ndarray, int, bool]:
    weights = np.clip(cosine_matrix(embeddings), 0.0, None)
    np.fill_diagonal(weights, 0.0)
    n = weights.shape[0]

    row_sums = weights.sum(axis=1, keepdims=True)
    # dangling sentences spread their mass uniformly
    transition = np.where(row_sums > 0, weights / np.where(row_sums > 0, row_sums, 1.0), 1.0 / n)

    scores = np.full(n, 1.0 / n)
    for iteration in range(1, max_iters + 1):
        updated = (1.0 - damping) / n + damping * (transition.T @ scores)
        delta = float(np.abs(updated - scores).sum())
        scores = updated
        if delta < tol:
            return scores, iteration, True
    return scores, max_iters, False


def textrank_scores(embeddings, damping: float = 0.85, tol: float = 1e-6, max_iters: int = 100) -> np.ndarray:
    """
    PageRank over the dense cosine graph (negatives clamped, no self loops)

    Args:
        embeddings: Unit-norm sentence embeddings
        damping (float): Teleport complement
        tol (float): L1 change that counts as converged
        max_iters (int): Iteration cap; reaching it warns with NonConvergence

    Returns:
        np.ndarray: Non-negative scores summing to 1
    """
    scores, iterations, converged = _power_iteration(embeddings, damping, tol, max_iters)
    if not converged:
        message = f"TextRank did not converge within {iterations} iterations"
        warnings.warn(message, NonConvergence, stacklevel=2)
        logger.warning("[INFO] %s", message)
    return scores


def baseline_textrank(
    sentences: Sequence[Sentence],
    embeddings,
    budget: BudgetSpec,
    doc_id: str = "",
    topics: Optional[TopicModel] = None,
    damping: float = 0.85,
    tol: float = 1e-6,
    max_iters: int = 100,
) -> CompressionResult:
    """Greedy budgeted selection in TextRank order, NMS off"""
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always", NonConvergence)
        scores = textrank_scores(embeddings, damping, tol, max_iters)
    result = greedy_select(
        sentences, None, rank(scores), budget, NO_NMS, doc_id=doc_id, method="textrank", topics=topics
    )
    if any(issubclass(w.category, NonConvergence) for w in caught):
        warnings.warn(f"TextRank did not converge for {doc_id or 'document'}", NonConvergence, stacklevel=2)
        result.audit.notes.append("non_convergence")
    return result
