from typing import Dict, List, Literal, Optional

from pydantic import BaseModel, Field

from ctxpress.schemas.config import BudgetSpec

Verdict = Literal["selected", "budget-skipped", "nms-suppressed", "not-reached"]


class SentenceAudit(BaseModel):
    """Schema for the per-sentence audit trail"""
    index: int
    verdict: Verdict
    label: Optional[int] = None
    s_task: Optional[float] = None
    s_rep: Optional[float] = None
    s_bridge: Optional[float] = None
    s_cycle: Optional[float] = None
    score: Optional[float] = None


class CompressionAudit(BaseModel):
    """Schema for the audit block of a compression result"""
    sentences: List[SentenceAudit]
    n_clusters: Optional[int] = None
    weights: Optional[Dict[str, float]] = None
    notes: List[str] = Field(default_factory=list)


class CompressionResult(BaseModel):
    """Schema for the output of one compressor on one document"""
    doc_id: str
    method: str = "ours"
    selected_indices: List[int]
    compressed_text: str
    tokens_used: int
    total_tokens: int
    effective_budget: int
    budget: BudgetSpec
    audit: CompressionAudit


class EvalReport(BaseModel):
    """Schema for budget, structure and lexical quality metrics"""
    cr: float
    budget_ok: bool
    topic_coverage: float
    bridge_retention: float
    cycle_retention: float
    rouge1: Optional[float] = None
    rouge2: Optional[float] = None
    rougeL: Optional[float] = None


class DocumentReport(BaseModel):
    """Schema for a per-document result file"""
    result: CompressionResult
    evaluation: EvalReport


class RunSummary(BaseModel):
    """Schema for a corpus run outcome"""
    processed: int = 0
    failed: int = 0
    malformed: int = 0
    result_files: List[str] = Field(default_factory=list)
    summary_csv: Optional[str] = None

    @property
    def ok(self) -> bool:
        return self.failed == 0 and self.malformed == 0
