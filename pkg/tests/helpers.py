"""
Shared builders for the test suite
"""
from typing import Iterable, List, Sequence, Tuple

import numpy as np

from ctxpress.models.graph import Edge, HybridGraph
from ctxpress.schemas.documents import RawDocument, Sentence

# five groups of six identical sentences over three disjoint vocabularies
TOPIC_VARIANTS = (
    "Rocket thruster capsule astronaut orbit launch.",
    "Telescope nebula galaxy comet asteroid orbit.",
    "Garlic onion butter saucepan simmer basil.",
    "Dough yeast flour oven knead bake.",
    "Bond equity dividend portfolio inflation yield.",
)

TOY_SENTENCES = (
    "Glaciers carve deep valleys into ancient mountain ranges.",
    "Meltwater rivers carry sediment toward distant coastal plains.",
    "Farmers rotate wheat and barley across fertile fields.",
    "Irrigation canals deliver water during long summer droughts.",
    "Compilers translate source programs into efficient machine code.",
    "Garbage collectors reclaim memory that programs no longer reference.",
    "Orchestras rehearse symphonies for weeks before opening night.",
    "Violinists tune strings carefully before every concert performance.",
    "Volcanic eruptions release ash clouds high into the stratosphere.",
    "Seismographs record tremors long before magma reaches the surface.",
)


def topic_document(doc_id: str = "topics") -> RawDocument:
    text = " ".join(TOPIC_VARIANTS[i % len(TOPIC_VARIANTS)] for i in range(30))
    return RawDocument(doc_id=doc_id, text=text)


def toy_document(doc_id: str, offset: int = 0, size: int = 8, reference: bool = False) -> RawDocument:
    picked = [TOY_SENTENCES[(offset + i) % len(TOY_SENTENCES)] for i in range(size)]
    text = " ".join(picked)
    return RawDocument(doc_id=doc_id, text=text, reference=text if reference else None)


def make_sentences(token_counts: Sequence[int]) -> List[Sentence]:
    return [
        Sentence(index=i, text=f"S{i}.", token_count=count)
        for i, count in enumerate(token_counts)
    ]


def unit_rows(rng: np.random.Generator, n: int, d: int) -> np.ndarray:
    matrix = rng.normal(size=(n, d))
    return matrix / np.linalg.norm(matrix, axis=1, keepdims=True)


def make_graph(n: int, pairs: Iterable[Tuple[int, int]], weight: float = 1.0) -> HybridGraph:
    """Semantic-only graph with equal edge weights"""
    edges = {}
    for i, j in pairs:
        i, j = min(i, j), max(i, j)
        edges[(i, j)] = Edge(i=i, j=j, w_sem=weight, w_seq=0.0, weight=weight, semantic=True, sequential=False)
    return HybridGraph(n=n, edges=edges, alpha=1.0, beta=0.0)
