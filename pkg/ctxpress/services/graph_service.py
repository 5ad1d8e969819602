import logging
import math
from typing import Dict, Optional

import numpy as np
from pynndescent import NNDescent

from ctxpress.core.errors import IndexBuildFailure
from ctxpress.models.graph import Edge, HybridGraph, Pair
from ctxpress.schemas.config import DEFAULT_SEED, GraphConfig

logger = logging.getLogger(__name__)


def cosine_matrix(embeddings) -> np.ndarray:
    """Symmetric all-pairs cosine of unit-norm rows"""
    matrix = np.asarray(embeddings, dtype=np.float64)
    sims = matrix @ matrix.T
    return np.clip((sims + sims.T) / 2.0, -1.0, 1.0)


def _rank_candidates(embeddings: np.ndarray, node: int, candidates: np.ndarray, k: int) -> np.ndarray:
    """Top-k of ``candidates`` by exact cosine, ties by ascending index"""
    candidates = np.unique(candidates[(candidates >= 0) & (candidates != node)])
    sims = embeddings[candidates] @ embeddings[node]
    order = np.lexsort((candidates, -sims))
    return candidates[order[:k]]


def knn_exact(embeddings, k: int) -> np.ndarray:
    """
    Exact top-k neighbor lists by cosine

    Args:
        embeddings: Unit-norm rows, N >= 2
        k (int): Requested neighbor count; k' = min(k, N-1) is used

    Returns:
        np.ndarray: Shape (N, k'); rows sorted by descending cosine, ties by ascending index
    """
    matrix = np.asarray(embeddings, dtype=np.float64)
    n = matrix.shape[0]
    if n < 2:
        raise ValueError("k-NN needs at least two nodes")
    k_eff = min(k, n - 1)

    sims = cosine_matrix(matrix)
    np.fill_diagonal(sims, -np.inf)
    # stable sort keeps ascending index among equal cosines
    order = np.argsort(-sims, axis=1, kind="stable")
    return order[:, :k_eff]


def knn_approx(embeddings, k: int, fanout: int = 32, beam: int = 128, seed: int = DEFAULT_SEED) -> np.ndarray:
    """
    Approximate top-k neighbor lists from a nearest-neighbor-descent graph index

    Args:
        embeddings: Unit-norm rows
        k (int): Neighbor count
        fanout (int): Index out-degree during construction
        beam (int): Candidate pool kept per node during construction
        seed (int): Index construction seed

    Returns:
        np.ndarray: Shape (N, k'), same ordering contract as knn_exact
    """
    matrix = np.asarray(embeddings, dtype=np.float64)
    n = matrix.shape[0]
    k_eff = min(k, n - 1)
    try:
        index = NNDescent(
            matrix.astype(np.float32),
            metric="cosine",
            n_neighbors=min(max(fanout, k_eff + 1), n),
            max_candidates=beam,
            random_state=seed,
            low_memory=False,
            compressed=False,
            n_jobs=1,
        )
        candidate_lists, _ = index.neighbor_graph
    except Exception as e:
        raise IndexBuildFailure(f"Approximate index over {n} nodes failed: {e}") from e

    neighbors = np.empty((n, k_eff), dtype=np.int64)
    for node in range(n):
        ranked = _rank_candidates(matrix, node, candidate_lists[node], k_eff)
        if ranked.shape[0] < k_eff:
            raise IndexBuildFailure(f"Node {node} has only {ranked.shape[0]} neighbors")
        neighbors[node] = ranked
    return neighbors


def neighbor_lists(embeddings, config: GraphConfig, seed: int = DEFAULT_SEED) -> np.ndarray:
    """Exact search up to ``ann_threshold`` nodes, approximate beyond it"""
    n = np.asarray(embeddings).shape[0]
    if n > config.ann_threshold:
        logger.info("Using approximate k-NN for %d nodes", n)
        return knn_approx(embeddings, config.k, config.ann_fanout, config.ann_beam, seed)
    return knn_exact(embeddings, config.k)


def mutual_filter(neighbors: np.ndarray, embeddings) -> Dict[Pair, float]:
    """
    Keep (i, j) only when each node lists the other

    Returns:
        Dict[Pair, float]: (i, j) with i < j -> w_sem = cos(e_i, e_j)
    """
    matrix = np.asarray(embeddings, dtype=np.float64)
    listed = [set(map(int, row)) for row in neighbors]
    edges: Dict[Pair, float] = {}
    for i, row in enumerate(listed):
        for j in row:
            if j > i and i in listed[j]:
                edges[(i, j)] = float(np.clip(matrix[i] @ matrix[j], -1.0, 1.0))
    return edges


def sequential_edges(n: int, delta: int) -> Dict[Pair, float]:
    """All pairs with 1 <= |i-j| <= delta, weighted exp(-|i-j|)"""
    return {
        (i, i + distance): math.exp(-distance)
        for distance in range(1, delta + 1)
        for i in range(n - distance)
    }


def fuse(
    semantic: Dict[Pair, float],
    sequential: Dict[Pair, float],
    config: GraphConfig,
    n: Optional[int] = None,
) -> HybridGraph:
    """
    Union the edge families with lambda = alpha * w_sem + beta * w_seq

    Negative cosines are clamped to 0. A family whose fusion weight is 0
    contributes no edges.
    """
    if n is None:
        n = 1 + max((j for _, j in list(semantic) + list(sequential)), default=-1)
    semantic = semantic if config.alpha > 0 else {}
    sequential = sequential if config.beta > 0 else {}

    edges: Dict[Pair, Edge] = {}
    for pair in sorted(set(semantic) | set(sequential)):
        i, j = pair
        w_sem = max(0.0, semantic.get(pair, 0.0))
        w_seq = sequential.get(pair, 0.0)
        edges[pair] = Edge(
            i=i,
            j=j,
            w_sem=w_sem,
            w_seq=w_seq,
            weight=config.alpha * w_sem + config.beta * w_seq,
            semantic=pair in semantic,
            sequential=pair in sequential,
        )
    return HybridGraph(n=n, edges=edges, alpha=config.alpha, beta=config.beta, epsilon=config.distance_epsilon)


def build_graph(embeddings, config: GraphConfig, seed: int = DEFAULT_SEED) -> HybridGraph:
    """Mutual k-NN semantic edges + windowed sequential edges, fused"""
    matrix = np.asarray(embeddings, dtype=np.float64)
    n = matrix.shape[0]
    semantic = mutual_filter(neighbor_lists(matrix, config, seed), matrix) if n >= 2 else {}
    graph = fuse(semantic, sequential_edges(n, config.delta), config, n=n)
    logger.debug(
        "Hybrid graph: %d nodes, %d semantic, %d sequential edges",
        n, len(graph.semantic_pairs()), len(graph.sequential_pairs()),
    )
    return graph
