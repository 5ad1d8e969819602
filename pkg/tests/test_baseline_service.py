"""
Tests for the LEAD-3 and TextRank baselines
"""
import numpy as np
import pytest

from ctxpress.core.errors import BudgetTooSmall, NonConvergence
from ctxpress.schemas.config import BudgetSpec
from ctxpress.services.baseline_service import baseline_lead3, baseline_textrank, textrank_scores
from tests.helpers import make_sentences, unit_rows

AMPLE = BudgetSpec(mode="ratio", ratio=1.0)


def _dense_pagerank(matrix, damping=0.85, iterations=1000):
    weights = np.clip(matrix @ matrix.T, 0.0, None)
    np.fill_diagonal(weights, 0.0)
    n = weights.shape[0]
    transition = np.zeros_like(weights)
    for i in range(n):
        total = weights[i].sum()
        transition[i] = weights[i] / total if total > 0 else 1.0 / n
    google = damping * transition.T + (1.0 - damping) / n
    scores = np.full(n, 1.0 / n)
    for _ in range(iterations):
        scores = google @ scores
    return scores


def test_lead3_takes_first_three():
    result = baseline_lead3(make_sentences([3] * 5), AMPLE)
    assert result.selected_indices == [0, 1, 2]
    assert result.method == "lead3"


def test_lead3_short_document():
    assert baseline_lead3(make_sentences([3, 3]), AMPLE).selected_indices == [0, 1]


def test_lead3_budget_too_small():
    with pytest.warns(BudgetTooSmall):
        result = baseline_lead3(make_sentences([9, 9, 9, 1]), BudgetSpec(mode="absolute", tokens=5))
    assert result.selected_indices == []
    assert "budget_too_small" in result.audit.notes


def test_textrank_single_sentence():
    matrix = unit_rows(np.random.default_rng(0), 1, 4)
    assert textrank_scores(matrix).tolist() == pytest.approx([1.0])
    assert baseline_textrank(make_sentences([5]), matrix, AMPLE).selected_indices == [0]


def test_textrank_symmetric_graph_is_uniform():
    matrix = np.tile([[1.0, 0.0, 0.0]], (4, 1))
    scores = textrank_scores(matrix)
    assert np.allclose(scores, 0.25)

    result = baseline_textrank(make_sentences([3] * 4), matrix, BudgetSpec(mode="absolute", tokens=7))
    assert result.selected_indices == [0, 1]


def test_textrank_matches_dense_oracle():
    matrix = unit_rows(np.random.default_rng(10), 10, 6)
    scores = textrank_scores(matrix)

    assert np.allclose(scores, _dense_pagerank(matrix), atol=1e-5)
    assert np.all(scores >= 0)
    assert scores.sum() == pytest.approx(1.0, abs=1e-6)


def test_textrank_iteration_cap_warns():
    matrix = unit_rows(np.random.default_rng(10), 10, 6)
    with pytest.warns(NonConvergence):
        textrank_scores(matrix, max_iters=1)
    with pytest.warns(NonConvergence):
        result = baseline_textrank(make_sentences([2] * 10), matrix, AMPLE, max_iters=1)
    assert "non_convergence" in result.audit.notes
