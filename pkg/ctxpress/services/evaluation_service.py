import logging
from collections import Counter
from typing import List, Optional, Sequence, Set, Tuple

import numpy as np

from ctxpress.models.scores import ScoreCard
from ctxpress.models.topics import TopicModel
from ctxpress.schemas.results import CompressionResult, EvalReport
from ctxpress.services.segmenter_service import TOKEN_PATTERN

logger = logging.getLogger(__name__)

ROUGE_VARIANTS = ("1", "2", "L")


def compression_ratio(tokens_selected: int, tokens_total: int) -> float:
    if tokens_total < 1:
        raise ValueError("Document has no tokens")
    return tokens_selected / tokens_total


def topic_coverage(labels, selected_indices: Sequence[int], k: int) -> float:
    """Fraction of the K clusters with at least one selected sentence"""
    if k < 1:
        return 0.0
    return len({int(labels[i]) for i in selected_indices}) / k


def bridge_nodes(s_bridge) -> Set[int]:
    """Nodes strictly above the median of the nonzero bridge scores"""
    values = np.asarray(s_bridge, dtype=np.float64)
    nonzero = values[values > 0]
    if nonzero.size == 0:
        return set()
    threshold = float(np.median(nonzero))
    return {int(i) for i in np.flatnonzero(values > threshold)}


def structure_retention(
    card: ScoreCard,
    selected_indices: Sequence[int],
    bridge_threshold: Optional[float] = None,
) -> Tuple[float, float]:
    """
    Share of the selection made of bridge nodes and of cycle-covered nodes

    Args:
        card (ScoreCard): Scores of the same document
        selected_indices (Sequence[int]): The selection
        bridge_threshold (float): Explicit s_bridge cut-off; the nonzero median when omitted

    Returns:
        Tuple[float, float]: (bridge_retention, cycle_retention); (0, 0) for an empty selection
    """
    if not selected_indices:
        return 0.0, 0.0
    if bridge_threshold is None:
        bridges = bridge_nodes(card.s_bridge)
    else:
        bridges = {int(i) for i in np.flatnonzero(card.s_bridge > bridge_threshold)}
    size = len(selected_indices)
    bridge_hits = sum(1 for i in selected_indices if i in bridges)
    cycle_hits = sum(1 for i in selected_indices if card.s_cycle[i] > 0)
    return bridge_hits / size, cycle_hits / size


def rouge_tokens(text: str) -> List[str]:
    return TOKEN_PATTERN.findall(text.lower())


def _ngrams(tokens: List[str], n: int) -> Counter:
    return Counter(tuple(tokens[i: i + n]) for i in range(len(tokens) - n + 1))


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Longest common subsequence length, two-row dynamic programme"""
    if len(a) < len(b):
        a, b = b, a
    previous = [0] * (len(b) + 1)
    for token in a:
        current = [0]
        for j, other in enumerate(b, start=1):
            current.append(previous[j - 1] + 1 if token == other else max(previous[j], current[j - 1]))
        previous = current
    return previous[-1]


def _f1(overlap: int, candidate_size: int, reference_size: int) -> float:
    # 2PR/(P+R) with P = o/c and R = o/r
    if overlap == 0:
        return 0.0
    return 2.0 * overlap / (candidate_size + reference_size)


def rouge(candidate: str, reference: str, variant: str = "1") -> float:
    """
    ROUGE F1 of a candidate against one reference

    Args:
        candidate (str): System text
        reference (str): Reference text
        variant (str): "1" or "2" for clipped n-gram overlap, "L" for LCS

    Returns:
        float: F1 in [0, 1]
    """
    cand, ref = rouge_tokens(candidate), rouge_tokens(reference)
    variant = str(variant).upper()
    if variant == "L":
        return _f1(lcs_length(cand, ref), len(cand), len(ref))
    if variant not in ("1", "2"):
        raise ValueError(f"Unknown ROUGE variant {variant!r}")
    n = int(variant)
    cand_grams, ref_grams = _ngrams(cand, n), _ngrams(ref, n)
    if not cand_grams and not ref_grams:
        # both shorter than n tokens
        return 1.0 if cand == ref else 0.0
    overlap = sum((cand_grams & ref_grams).values())
    return _f1(overlap, sum(cand_grams.values()), sum(ref_grams.values()))


def evaluate(
    result: CompressionResult,
    card: ScoreCard,
    topics: TopicModel,
    reference: Optional[str] = None,
) -> EvalReport:
    """Budget, structure and (with a reference) ROUGE metrics of one result"""
    bridge, cycle = structure_retention(card, result.selected_indices)
    scores = {}
    if reference is not None:
        scores = {
            "rouge1": rouge(result.compressed_text, reference, "1"),
            "rouge2": rouge(result.compressed_text, reference, "2"),
            "rougeL": rouge(result.compressed_text, reference, "L"),
        }
    return EvalReport(
        cr=compression_ratio(result.tokens_used, result.total_tokens),
        budget_ok=result.tokens_used <= result.effective_budget,
        topic_coverage=topic_coverage(topics.assignment, result.selected_indices, topics.K),
        bridge_retention=bridge,
        cycle_retention=cycle,
        **scores,
    )
