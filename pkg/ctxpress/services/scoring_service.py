import logging
import math
import random
from typing import List, Optional

import networkx as nx
import numpy as np

from ctxpress.core.errors import ZeroVector
from ctxpress.models.graph import HybridGraph
from ctxpress.models.scores import ScoreCard
from ctxpress.models.topics import TopicModel
from ctxpress.schemas.config import DEFAULT_SEED, ScoringWeights
from ctxpress.services.embedding_service import basis_vector, document_centroid
from ctxpress.services.topic_service import representativeness_scores
from ctxpress.utils.seeding import derive_rng

logger = logging.getLogger(__name__)

DEFAULT_MAX_CYCLES = 200


def task_relevance(embeddings, query_embedding=None, centroid=None) -> np.ndarray:
    """
    Cosine of each sentence to the query, or to the document centroid
    when there is no query; clamped to [0, 1]
    """
    matrix = np.asarray(embeddings, dtype=np.float64)
    if query_embedding is not None:
        anchor = np.asarray(query_embedding, dtype=np.float64)
    elif centroid is not None:
        anchor = np.asarray(centroid, dtype=np.float64)
    else:
        try:
            anchor = document_centroid(matrix)
        except ZeroVector:
            anchor = basis_vector(0, matrix.shape[1])
    return np.clip(matrix @ anchor, 0.0, 1.0)


def default_samples(n: int) -> int:
    """ceil(sqrt(N)) sources, clamped to [1, N]"""
    return min(max(math.ceil(math.sqrt(n)), 1), max(n, 1))


def sampled_betweenness(
    graph: nx.Graph,
    n_samples: Optional[int] = None,
    rng: Optional[random.Random] = None,
    weight: Optional[str] = "distance",
) -> np.ndarray:
    """
    Source-sampled Brandes betweenness, scaled by N / n_samples

    Args:
        graph (nx.Graph): Undirected graph on nodes 0..N-1
        n_samples (int): Number of sources; N gives exact betweenness
        rng (random.Random): Source sampling stream
        weight (str): Edge attribute holding the path length

    Returns:
        np.ndarray: Raw betweenness per node, undirected pairs counted once
    """
    n = graph.number_of_nodes()
    if n == 0:
        return np.zeros(0, dtype=np.float64)
    n_samples = default_samples(n) if n_samples is None else min(max(n_samples, 1), n)
    nodes = sorted(graph.nodes())
    if n_samples < n:
        rng = rng or random.Random(DEFAULT_SEED)
        sources = sorted(rng.sample(nodes, n_samples))
    else:
        sources = nodes

    raw = nx.betweenness_centrality_subset(
        graph, sources=sources, targets=nodes, normalized=False, weight=weight
    )
    scale = n / n_samples
    return np.asarray([raw[node] * scale for node in range(n)], dtype=np.float64)


def min_max(values: np.ndarray) -> np.ndarray:
    """Affine map onto [0, 1]; a constant vector maps to zeros"""
    values = np.asarray(values, dtype=np.float64)
    if values.size == 0:
        return values
    low, high = float(values.min()), float(values.max())
    if high - low <= 1e-12:
        return np.zeros_like(values)
    return (values - low) / (high - low)


def bridge_centrality(
    graph: HybridGraph,
    n_samples: Optional[int] = None,
    seed: int = DEFAULT_SEED,
    doc_id: str = "",
) -> np.ndarray:
    """Sampled betweenness on distance 1/(lambda+eps), min-max normalized"""
    raw = sampled_betweenness(graph.to_networkx(), n_samples, rng=derive_rng(seed, doc_id))
    return min_max(raw)


def ordered_cycles(graph: HybridGraph) -> List[List[int]]:
    """Basis cycles of every component, shortest first, then by smallest member"""
    cycles = nx.cycle_basis(graph.to_networkx())
    return sorted(cycles, key=lambda cycle: (len(cycle), min(cycle), sorted(cycle)))


def cycle_coverage(graph: HybridGraph, max_cycles: int = DEFAULT_MAX_CYCLES) -> np.ndarray:
    """1 for nodes on one of the first ``max_cycles`` basis cycles, else 0"""
    marks = np.zeros(graph.n, dtype=np.float64)
    for cycle in ordered_cycles(graph)[:max_cycles]:
        marks[cycle] = 1.0
    return marks


def composite(components, weights: ScoringWeights) -> np.ndarray:
    """Weighted sum of the (N, 4) component matrix [task, rep, bridge, cycle]"""
    return np.asarray(components, dtype=np.float64) @ np.asarray(weights.as_tuple(), dtype=np.float64)


def build_score_card(
    embeddings,
    graph: HybridGraph,
    topics: TopicModel,
    weights: ScoringWeights,
    query_embedding=None,
    seed: int = DEFAULT_SEED,
    doc_id: str = "",
    max_cycles: int = DEFAULT_MAX_CYCLES,
) -> ScoreCard:
    """
    Score every sentence for relevance, representativeness and structure

    Returns:
        ScoreCard: Components and their composite under ``weights``
    """
    s_task = task_relevance(embeddings, query_embedding)
    s_rep = representativeness_scores(embeddings, topics)
    s_bridge = bridge_centrality(graph, seed=seed, doc_id=doc_id)
    s_cycle = cycle_coverage(graph, max_cycles)
    components = np.column_stack([s_task, s_rep, s_bridge, s_cycle])
    logger.debug(
        "Scored %d sentences: %d bridge-positive, %d on cycles",
        graph.n, int((s_bridge > 0).sum()), int(s_cycle.sum()),
    )
    return ScoreCard(
        s_task=s_task,
        s_rep=s_rep,
        s_bridge=s_bridge,
        s_cycle=s_cycle,
        composite=composite(components, weights),
        weights=weights,
    )


def reweight(card: ScoreCard, weights: ScoringWeights) -> ScoreCard:
    """Same components under new weights"""
    return ScoreCard(
        s_task=card.s_task,
        s_rep=card.s_rep,
        s_bridge=card.s_bridge,
        s_cycle=card.s_cycle,
        composite=composite(card.components(), weights),
        weights=weights,
    )
