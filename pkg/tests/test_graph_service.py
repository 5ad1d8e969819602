"""
Tests for the hybrid sentence graph
"""
import math

import numpy as np
import pytest

from ctxpress.schemas.config import GraphConfig
from ctxpress.services.graph_service import (
    build_graph,
    fuse,
    knn_approx,
    knn_exact,
    mutual_filter,
    neighbor_lists,
    sequential_edges,
)
from tests.helpers import unit_rows


def mutual_oracle(matrix: np.ndarray, k: int) -> set:
    """O(N^2) brute force: sort each row in Python, keep reciprocal pairs"""
    n = matrix.shape[0]
    sims = matrix @ matrix.T
    sims = (sims + sims.T) / 2.0
    k_eff = min(k, n - 1)
    top = []
    for i in range(n):
        others = sorted((j for j in range(n) if j != i), key=lambda j: (-sims[i, j], j))
        top.append(set(others[:k_eff]))
    return {(i, j) for i in range(n) for j in top[i] if i < j and i in top[j]}


def test_mutual_knn_matches_oracle():
    rng = np.random.default_rng(7)
    for _ in range(100):
        n = int(rng.integers(2, 501))
        k = int(rng.integers(1, 12))
        matrix = unit_rows(rng, n, 24)
        edges = mutual_filter(knn_exact(matrix, k), matrix)
        assert set(edges) == mutual_oracle(matrix, k)


def test_knn_ties_go_to_lower_index():
    matrix = np.array([[1.0, 0.0], [0.0, 1.0], [0.0, 1.0], [0.0, 1.0]])
    neighbors = knn_exact(matrix, 1)
    assert neighbors[1][0] == 2
    assert neighbors[0][0] == 1


def test_sequential_window():
    edges = sequential_edges(5, 2)
    assert len(edges) == 7
    assert edges[(0, 1)] == pytest.approx(math.exp(-1))
    assert edges[(1, 3)] == pytest.approx(math.exp(-2))
    assert sequential_edges(5, 0) == {}


def test_fused_weight():
    semantic = {(0, 1): 0.8, (0, 2): -0.3}
    graph = fuse(semantic, sequential_edges(3, 1), GraphConfig(), n=3)

    assert graph.weight(0, 1) == pytest.approx(0.25 * 0.8 + 0.75 * math.exp(-1))
    # negative cosine is clamped, edge still semantic
    assert graph.edges[(0, 2)].w_sem == 0.0
    assert graph.edges[(0, 2)].weight == 0.0
    assert graph.edges[(0, 2)].semantic
    assert graph.to_networkx()[0][2]["distance"] == pytest.approx(1e6)


def test_single_node_graph_has_no_edges():
    graph = build_graph(np.array([[1.0, 0.0]]), GraphConfig())
    assert graph.n == 1
    assert graph.edges == {}


def test_large_k_gives_complete_semantic_graph():
    matrix = unit_rows(np.random.default_rng(3), 5, 8)
    graph = build_graph(matrix, GraphConfig(k=50, delta=0))
    assert graph.semantic_pairs() == {(i, j) for i in range(5) for j in range(i + 1, 5)}


def test_no_seq_graph_is_the_semantic_family():
    matrix = unit_rows(np.random.default_rng(11), 40, 16)
    full = build_graph(matrix, GraphConfig())
    no_seq = build_graph(matrix, GraphConfig(alpha=1.0, beta=0.0))

    assert full.edge_set() == full.semantic_pairs() | full.sequential_pairs()
    assert no_seq.edge_set() == full.semantic_pairs()
    assert no_seq.sequential_pairs() == set()
    assert full.edge_set() - no_seq.edge_set() == full.sequential_pairs() - full.semantic_pairs()


def test_graph_dump_shape():
    matrix = unit_rows(np.random.default_rng(5), 6, 8)
    dump = build_graph(matrix, GraphConfig()).dump()
    assert dump["nodes"] == list(range(6))
    assert {"i", "j", "w_sem", "w_seq", "lambda"} <= set(dump["edges"][0])
    assert dump["config"]["alpha"] == 0.25


def test_approximate_route_above_threshold():
    rng = np.random.default_rng(2)
    matrix = unit_rows(rng, 300, 16)
    neighbors = neighbor_lists(matrix, GraphConfig(ann_threshold=100), seed=2026)

    assert neighbors.shape == (300, 8)
    assert all(i not in set(row) for i, row in enumerate(neighbors))
    assert all(len(set(row)) == 8 for row in neighbors)


@pytest.mark.slow
def test_approximate_recall_on_clustered_vectors():
    rng = np.random.default_rng(2026)
    centers = unit_rows(rng, 50, 32)
    points = centers[rng.integers(0, 50, size=5000)] + 0.15 * rng.normal(size=(5000, 32))
    matrix = points / np.linalg.norm(points, axis=1, keepdims=True)

    exact = knn_exact(matrix, 8)
    approx = knn_approx(matrix, 8, fanout=32, beam=128, seed=2026)
    hits = sum(len(set(a) & set(e)) for a, e in zip(approx, exact))
    assert hits / exact.size >= 0.95
