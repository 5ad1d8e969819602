"""
Tests for relevance, bridge, cycle and composite scores
"""
import math
import random

import networkx as nx
import numpy as np
import pytest
from scipy.stats import spearmanr

from ctxpress.models.topics import TopicModel
from ctxpress.schemas.config import GraphConfig, ScoringWeights
from ctxpress.services.graph_service import build_graph
from ctxpress.services.scoring_service import (
    bridge_centrality,
    build_score_card,
    composite,
    cycle_coverage,
    default_samples,
    reweight,
    sampled_betweenness,
    task_relevance,
)
from tests.helpers import make_graph, unit_rows


def _random_connected(rng: random.Random, n: int) -> nx.Graph:
    graph = nx.Graph()
    graph.add_nodes_from(range(n))
    for node in range(1, n):
        graph.add_edge(node, rng.randrange(node))
    for _ in range(n // 3):
        a, b = rng.sample(range(n), 2)
        graph.add_edge(a, b)
    nx.set_edge_attributes(graph, 1.0, "distance")
    return graph


def _brute_force_betweenness(graph: nx.Graph) -> np.ndarray:
    values = np.zeros(graph.number_of_nodes())
    nodes = sorted(graph.nodes())
    for a, s in enumerate(nodes):
        for t in nodes[a + 1:]:
            paths = list(nx.all_shortest_paths(graph, s, t, weight="distance"))
            for path in paths:
                for v in path[1:-1]:
                    values[v] += 1.0 / len(paths)
    return values


def test_query_equal_to_sentence_scores_one():
    matrix = unit_rows(np.random.default_rng(0), 4, 8)
    scores = task_relevance(matrix, query_embedding=matrix[2])
    assert scores[2] == pytest.approx(1.0)
    assert np.all((scores >= 0) & (scores <= 1))


def test_single_sentence_relevance_without_query():
    matrix = unit_rows(np.random.default_rng(0), 1, 8)
    assert task_relevance(matrix)[0] == pytest.approx(1.0)


def test_relevance_matches_centroid_oracle():
    matrix = unit_rows(np.random.default_rng(3), 5, 8)
    mean = matrix.mean(axis=0)
    expected = np.clip(matrix @ (mean / np.linalg.norm(mean)), 0, 1)
    assert np.allclose(task_relevance(matrix), expected)


def test_path_graph_bridge():
    graph = make_graph(3, [(0, 1), (1, 2)])
    assert bridge_centrality(graph, n_samples=3).tolist() == [0.0, 1.0, 0.0]


def test_star_graph_bridge():
    graph = make_graph(5, [(0, leaf) for leaf in range(1, 5)])
    assert bridge_centrality(graph, n_samples=5).tolist() == [1.0, 0.0, 0.0, 0.0, 0.0]


def test_complete_graph_bridge_is_constant_zero():
    graph = make_graph(5, [(i, j) for i in range(5) for j in range(i + 1, 5)])
    assert bridge_centrality(graph, n_samples=5).tolist() == [0.0] * 5


def test_exact_sampling_matches_brute_force():
    rng = random.Random(2026)
    for _ in range(50):
        graph = _random_connected(rng, rng.randint(3, 40))
        exact = sampled_betweenness(graph, graph.number_of_nodes())
        assert np.allclose(exact, _brute_force_betweenness(graph), atol=1e-9, rtol=0)


def test_sampled_ranking_tracks_exact():
    correlations = []
    for seed in range(20):
        n = 150
        graph = nx.barabasi_albert_graph(n, 1, seed=seed)
        rng = random.Random(seed)
        for _ in range(n // 20):
            a, b = rng.sample(range(n), 2)
            graph.add_edge(a, b)
        nx.set_edge_attributes(graph, 1.0, "distance")

        exact = sampled_betweenness(graph, n)
        approx = sampled_betweenness(graph, default_samples(n), rng=random.Random(seed))
        correlations.append(spearmanr(exact, approx).correlation)
    assert np.mean(correlations) >= 0.8


def test_default_samples():
    assert default_samples(100) == 10
    assert default_samples(10) == 4
    assert default_samples(1) == 1


def test_bridge_sampling_is_seeded_per_document():
    matrix = unit_rows(np.random.default_rng(8), 60, 12)
    graph = build_graph(matrix, GraphConfig())
    first = bridge_centrality(graph, seed=2026, doc_id="a")
    assert np.array_equal(first, bridge_centrality(graph, seed=2026, doc_id="a"))
    assert first.min() >= 0.0 and first.max() <= 1.0


def test_tree_has_no_cycles():
    graph = make_graph(5, [(0, 1), (1, 2), (1, 3), (3, 4)])
    assert cycle_coverage(graph).tolist() == [0.0] * 5


def test_triangle_is_covered():
    graph = make_graph(3, [(0, 1), (1, 2), (0, 2)])
    assert cycle_coverage(graph).tolist() == [1.0, 1.0, 1.0]


def test_cycle_cap_keeps_smallest_member_cycle():
    square = [(0, 1), (1, 2), (2, 3), (3, 0)]
    graph = make_graph(8, square + [(a + 4, b + 4) for a, b in square])

    capped = cycle_coverage(graph, max_cycles=1)
    assert capped.tolist() == [1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]
    # raising the cap never unmarks a node
    assert np.all(cycle_coverage(graph, max_cycles=2) >= capped)


def test_composite_arithmetic():
    weights = ScoringWeights()
    assert composite([[1, 1, 1, 1]], weights)[0] == pytest.approx(1.0)
    assert composite([[0, 0, 0, 0]], weights)[0] == 0.0
    assert composite([[0.8, 0.5, 0.2, 1.0]], weights)[0] == pytest.approx(0.60)


def _card(seed=4):
    matrix = unit_rows(np.random.default_rng(seed), 20, 10)
    topics = TopicModel(
        K=1,
        assignment=np.zeros(20, dtype=np.int64),
        centroids=(matrix.mean(axis=0) / np.linalg.norm(matrix.mean(axis=0)))[None, :],
        inertia=0.0,
    )
    graph = build_graph(matrix, GraphConfig())
    return build_score_card(matrix, graph, topics, ScoringWeights(), doc_id="card")


def test_score_card_recomputes_exactly():
    card = _card()
    assert np.allclose(card.composite, card.recompute(), atol=1e-12, rtol=0)
    for values in (card.s_task, card.s_rep, card.s_bridge, card.s_cycle):
        assert np.all((values >= 0) & (values <= 1))
    assert set(np.unique(card.s_cycle)) <= {0.0, 1.0}


@pytest.mark.parametrize("field,column", [("lambda_rep", 1), ("lambda_bridge", 2), ("lambda_cycle", 3)])
def test_zeroed_weight_drops_exactly_one_term(field, column):
    card = _card()
    ablated = reweight(card, card.weights.model_copy(update={field: 0.0}))
    removed = card.weights.as_tuple()[column] * card.components()[:, column]
    assert np.allclose(ablated.composite, card.composite - removed, atol=1e-12)
    assert np.array_equal(ablated.s_bridge, card.s_bridge)


def test_composite_is_monotone():
    weights = ScoringWeights()
    base = np.array([[0.2, 0.4, 0.6, 0.0]])
    for column in range(4):
        raised = base.copy()
        raised[0, column] += 0.3
        assert composite(raised, weights)[0] >= composite(base, weights)[0]


def test_sqrt_rule_sampling():
    assert default_samples(17) == math.ceil(math.sqrt(17))
