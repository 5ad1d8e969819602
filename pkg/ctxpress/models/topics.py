from dataclasses import dataclass, field
from typing import List

import numpy as np


@dataclass(frozen=True)
class TopicModel:
    """
    Topic skeleton of one document.

    Attributes:
        K: number of clusters
        assignment: cluster label c(i) per sentence, shape (N,)
        centroids: unit-norm centroids, shape (K, d)
        inertia: sum of squared distances to the (unnormalized) member means
        diagnostics: notes such as "degenerate_input" or "reseeded:<k>"
    """
    K: int
    assignment: np.ndarray
    centroids: np.ndarray
    inertia: float
    diagnostics: List[str] = field(default_factory=list)

    def clusters_of(self, indices) -> set:
        return {int(self.assignment[i]) for i in indices}

    def sizes(self) -> np.ndarray:
        return np.bincount(self.assignment, minlength=self.K)
