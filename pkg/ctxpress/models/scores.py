from dataclasses import dataclass

import numpy as np

from ctxpress.schemas.config import ScoringWeights


@dataclass(frozen=True)
class ScoreCard:
    """Per-sentence score components and the composite they produce"""
    s_task: np.ndarray
    s_rep: np.ndarray
    s_bridge: np.ndarray
    s_cycle: np.ndarray
    composite: np.ndarray
    weights: ScoringWeights

    @property
    def n(self) -> int:
        return int(self.composite.shape[0])

    def components(self) -> np.ndarray:
        """Stacked components, shape (N, 4), in weight order"""
        return np.column_stack([self.s_task, self.s_rep, self.s_bridge, self.s_cycle])

    def recompute(self) -> np.ndarray:
        return self.components() @ np.asarray(self.weights.as_tuple(), dtype=np.float64)
