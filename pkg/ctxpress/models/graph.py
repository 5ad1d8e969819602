from dataclasses import dataclass, field
from typing import Dict, List, Tuple

import networkx as nx

Pair = Tuple[int, int]


@dataclass(frozen=True)
class Edge:
    """
    Undirected hybrid edge (i < j).

    ``semantic`` / ``sequential`` record set membership; a clamped semantic
    edge keeps ``semantic=True`` with ``w_sem == 0``.
    """
    i: int
    j: int
    w_sem: float
    w_seq: float
    weight: float
    semantic: bool
    sequential: bool


@dataclass(frozen=True)
class HybridGraph:
    """Sparse sentence graph over nodes 0..n-1 with fused edge weights"""
    n: int
    edges: Dict[Pair, Edge]
    alpha: float
    beta: float
    epsilon: float = 1e-6
    adjacency: Dict[int, List[int]] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        adjacency: Dict[int, List[int]] = {node: [] for node in range(self.n)}
        for i, j in sorted(self.edges):
            adjacency[i].append(j)
            adjacency[j].append(i)
        for neighbors in adjacency.values():
            neighbors.sort()
        object.__setattr__(self, "adjacency", adjacency)

    def edge_set(self) -> set:
        return set(self.edges)

    def semantic_pairs(self) -> set:
        return {pair for pair, edge in self.edges.items() if edge.semantic}

    def sequential_pairs(self) -> set:
        return {pair for pair, edge in self.edges.items() if edge.sequential}

    def weight(self, i: int, j: int) -> float:
        edge = self.edges.get((min(i, j), max(i, j)))
        return edge.weight if edge else 0.0

    def to_networkx(self) -> nx.Graph:
        """Graph with ``weight`` = lambda and ``distance`` = 1/(lambda + eps)"""
        graph = nx.Graph()
        graph.add_nodes_from(range(self.n))
        for (i, j), edge in sorted(self.edges.items()):
            graph.add_edge(i, j, weight=edge.weight, distance=1.0 / (edge.weight + self.epsilon))
        return graph

    def dump(self) -> dict:
        """JSON-ready audit dump"""
        return {
            "nodes": list(range(self.n)),
            "edges": [
                {"i": e.i, "j": e.j, "w_sem": e.w_sem, "w_seq": e.w_seq, "lambda": e.weight}
                for _, e in sorted(self.edges.items())
            ],
            "config": {"alpha": self.alpha, "beta": self.beta, "epsilon": self.epsilon},
        }
