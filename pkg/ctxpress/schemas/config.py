import logging
import math
from fractions import Fraction
from typing import FrozenSet, Literal, Optional

from pydantic import BaseModel, ConfigDict, Field, field_serializer, field_validator, model_validator

logger = logging.getLogger(__name__)

ABLATIONS = ("no_seq", "no_rep", "no_bridge", "no_cycle", "no_nms")
Ablation = Literal["no_seq", "no_rep", "no_bridge", "no_cycle", "no_nms"]

DEFAULT_SEED = 2026


class TokenizerSpec(BaseModel):
    """Schema for the token counter Tok(.)"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["whitespace-punct", "vocab-file"] = "whitespace-punct"
    vocab_path: Optional[str] = None

    @model_validator(mode="after")
    def _vocab_needs_path(self):
        if self.kind == "vocab-file" and not self.vocab_path:
            raise ValueError("vocab-file tokenizer requires vocab_path")
        return self


class EmbeddingProviderSpec(BaseModel):
    """Schema for the sentence embedding provider"""
    model_config = ConfigDict(frozen=True)

    kind: Literal["local-hash", "remote-http", "openai"] = "local-hash"
    dimension: int = Field(default=256, ge=1)
    max_input_tokens: int = Field(default=512, ge=1)
    batch_size: int = Field(default=64, ge=1)
    parallelism: int = Field(default=4, ge=1)
    endpoint: Optional[str] = None
    model: Optional[str] = None
    ngram_max: int = Field(default=2, ge=1, le=3)
    max_retries: int = Field(default=3, ge=0)


class GraphConfig(BaseModel):
    """Schema for hybrid graph construction"""
    model_config = ConfigDict(frozen=True)

    k: int = Field(default=8, ge=1)
    delta: int = Field(default=1, ge=0)
    alpha: float = Field(default=0.25, ge=0.0)
    beta: float = Field(default=0.75, ge=0.0)
    ann_threshold: int = Field(default=2000, ge=1)
    ann_fanout: int = Field(default=32, ge=2)
    ann_beam: int = Field(default=128, ge=2)
    distance_epsilon: float = Field(default=1e-6, gt=0.0)

    @model_validator(mode="after")
    def _weights_sum_to_one(self):
        if abs(self.alpha + self.beta - 1.0) > 1e-9:
            raise ValueError(f"alpha + beta must equal 1 (got {self.alpha} + {self.beta})")
        return self


class ScoringWeights(BaseModel):
    """Schema for the composite score weights"""
    model_config = ConfigDict(frozen=True)

    lambda_task: float = Field(default=0.45, ge=0.0)
    lambda_rep: float = Field(default=0.30, ge=0.0)
    lambda_bridge: float = Field(default=0.20, ge=0.0)
    lambda_cycle: float = Field(default=0.05, ge=0.0)

    @model_validator(mode="after")
    def _warn_on_sum(self):
        total = self.lambda_task + self.lambda_rep + self.lambda_bridge + self.lambda_cycle
        if abs(total - 1.0) > 1e-9:
            logger.warning("Scoring weights sum to %.4f, not 1", total)
        return self

    def as_tuple(self):
        return (self.lambda_task, self.lambda_rep, self.lambda_bridge, self.lambda_cycle)


class BudgetSpec(BaseModel):
    """Schema for the token budget B (absolute) or compression ratio rho"""
    model_config = ConfigDict(frozen=True)

    mode: Literal["absolute", "ratio"] = "ratio"
    tokens: Optional[int] = Field(default=None, ge=0)
    ratio: float = Field(default=0.30, gt=0.0, le=1.0)

    @model_validator(mode="after")
    def _absolute_needs_tokens(self):
        if self.mode == "absolute" and self.tokens is None:
            raise ValueError("absolute budget requires tokens")
        return self

    def resolve(self, total_tokens: int) -> int:
        """Effective B for a document of ``total_tokens`` tokens"""
        if self.mode == "absolute":
            return int(self.tokens)
        # decimal semantics: 0.29 * 100 is 29, not 28
        return math.floor(Fraction(str(self.ratio)) * total_tokens)


class SelectionConfig(BaseModel):
    """Schema for redundancy suppression"""
    model_config = ConfigDict(frozen=True)

    tau: float = Field(default=0.92, gt=0.0, le=1.0)
    nms_enabled: bool = True


class PipelineConfig(BaseModel):
    """Schema for one end-to-end compression run"""
    model_config = ConfigDict(frozen=True)

    tokenizer: TokenizerSpec = TokenizerSpec()
    provider: EmbeddingProviderSpec = EmbeddingProviderSpec()
    graph: GraphConfig = GraphConfig()
    weights: ScoringWeights = ScoringWeights()
    budget: BudgetSpec = BudgetSpec()
    selection: SelectionConfig = SelectionConfig()
    seed: int = DEFAULT_SEED
    min_fragment_tokens: int = Field(default=3, ge=1)
    max_cycles: int = Field(default=200, ge=0)
    query: Optional[str] = None
    ablations: FrozenSet[Ablation] = frozenset()

    @field_validator("ablations", mode="before")
    @classmethod
    def _split_ablations(cls, value):
        if isinstance(value, str):
            value = [part.strip() for part in value.split(",") if part.strip()]
        return value

    @field_serializer("ablations")
    def _sorted_ablations(self, value):
        return sorted(value)

    def resolved(self) -> "PipelineConfig":
        """Apply the ablation flags; each flag touches only its own parameter"""
        graph, weights, selection = self.graph, self.weights, self.selection
        if "no_seq" in self.ablations:
            graph = graph.model_copy(update={"alpha": 1.0, "beta": 0.0})
        if "no_rep" in self.ablations:
            weights = weights.model_copy(update={"lambda_rep": 0.0})
        if "no_bridge" in self.ablations:
            weights = weights.model_copy(update={"lambda_bridge": 0.0})
        if "no_cycle" in self.ablations:
            weights = weights.model_copy(update={"lambda_cycle": 0.0})
        if "no_nms" in self.ablations:
            selection = selection.model_copy(update={"nms_enabled": False})
        return self.model_copy(update={"graph": graph, "weights": weights, "selection": selection})
