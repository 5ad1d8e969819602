import logging
from pathlib import Path
from typing import Dict, Iterable, List, Optional, Sequence, Tuple

import numpy as np

from ctxpress.core.errors import PipelineStageError
from ctxpress.schemas.config import ABLATIONS, BudgetSpec, PipelineConfig, ScoringWeights
from ctxpress.schemas.results import CompressionResult, EvalReport
from ctxpress.services.pipeline_service import METHODS, DocumentAnalysis, reconfigure, select, write_csv

logger = logging.getLogger(__name__)

DEFAULT_RATIOS = (0.10, 0.20, 0.30, 0.40, 0.50)

METRIC_COLUMNS = [
    "cr_mean", "topic_coverage_mean", "bridge_retention_mean", "cycle_retention_mean",
    "rouge1", "rouge2", "rougeL", "n_docs",
]
SWEEP_COLUMNS = ["method", "rho"] + METRIC_COLUMNS
ABLATION_COLUMNS = ["setting", "budget_mode", "rho", "budget_tokens"] + METRIC_COLUMNS

K_GRID = (4, 6, 8, 12)
TAU_GRID = (0.88, 0.90, 0.92, 0.95)
DELTA_GRID = (0, 1, 2, 3)
BETA_GRID = (0.0, 0.25, 0.50, 0.75, 1.0)

# (lambda_task, setting, lambda_rep, lambda_bridge, lambda_cycle)
WEIGHT_GRID: Tuple[Tuple[float, str, float, float, float], ...] = (
    (0.35, "Rep-heavy", 0.39, 0.20, 0.06),
    (0.35, "Balanced", 0.33, 0.26, 0.06),
    (0.35, "Bridge-heavy", 0.26, 0.33, 0.06),
    (0.45, "Balanced (Full)", 0.28, 0.23, 0.05),
    (0.45, "Rep-heavy", 0.33, 0.17, 0.05),
    (0.45, "Bridge-heavy", 0.22, 0.28, 0.05),
    (0.45, "Balanced (w/o Cycle)", 0.31, 0.24, 0.00),
    (0.55, "Rep-heavy", 0.27, 0.14, 0.04),
    (0.55, "Balanced", 0.23, 0.18, 0.04),
    (0.55, "Bridge-heavy", 0.18, 0.23, 0.04),
    (0.65, "Rep-heavy", 0.21, 0.11, 0.03),
    (0.65, "Balanced", 0.18, 0.14, 0.03),
    (0.65, "Bridge-heavy", 0.14, 0.18, 0.03),
)

SENSITIVITY_COLUMNS: Dict[str, List[str]] = {
    "k": ["k"] + METRIC_COLUMNS,
    "tau": ["tau"] + METRIC_COLUMNS,
    "delta": ["delta"] + METRIC_COLUMNS,
    "beta": ["alpha", "beta"] + METRIC_COLUMNS,
    "weights": ["lambda_task", "setting", "lambda_rep", "lambda_bridge", "lambda_cycle"] + METRIC_COLUMNS,
}


def aggregate(outcomes: Sequence[Tuple[CompressionResult, EvalReport]]) -> dict:
    """Corpus means of one cell; ROUGE only over documents with a reference"""
    reports = [report for _, report in outcomes]
    row = {column: None for column in METRIC_COLUMNS}
    row["n_docs"] = len(reports)
    if not reports:
        return row
    row["cr_mean"] = float(np.mean([r.cr for r in reports]))
    row["topic_coverage_mean"] = float(np.mean([r.topic_coverage for r in reports]))
    row["bridge_retention_mean"] = float(np.mean([r.bridge_retention for r in reports]))
    row["cycle_retention_mean"] = float(np.mean([r.cycle_retention for r in reports]))
    for name in ("rouge1", "rouge2", "rougeL"):
        values = [getattr(r, name) for r in reports if getattr(r, name) is not None]
        row[name] = float(np.mean(values)) if values else None
    return row


def _run_cell(
    analyses: Iterable[DocumentAnalysis],
    config: Optional[PipelineConfig] = None,
    method: str = "ours",
    budget: Optional[BudgetSpec] = None,
) -> dict:
    outcomes = []
    for analysis in analyses:
        try:
            variant = reconfigure(analysis, config) if config is not None else analysis
            outcomes.append(select(variant, method, budget))
        except PipelineStageError as e:
            logger.error("[ERROR] %s skipped: %s", analysis.doc.doc_id, e)
    return aggregate(outcomes)


def _ordered(analyses: Iterable[DocumentAnalysis]) -> List[DocumentAnalysis]:
    return sorted(analyses, key=lambda analysis: analysis.doc.doc_id)


def budget_sweep(
    analyses: Iterable[DocumentAnalysis],
    ratios: Sequence[float] = DEFAULT_RATIOS,
    methods: Sequence[str] = METHODS,
) -> List[dict]:
    """
    Quality-budget table: one row per (method, rho), averaged over the corpus

    Args:
        analyses (Iterable[DocumentAnalysis]): Analysed corpus
        ratios (Sequence[float]): Compression ratios to sweep
        methods (Sequence[str]): Any of "ours", "lead3", "textrank"

    Returns:
        List[dict]: Rows keyed by SWEEP_COLUMNS, methods in the given order
    """
    analyses = _ordered(analyses)
    rows = []
    for method in methods:
        if method not in METHODS:
            raise ValueError(f"Unknown method {method!r}")
        for rho in ratios:
            budget = BudgetSpec(mode="ratio", ratio=rho)
            rows.append({"method": method, "rho": rho, **_run_cell(analyses, method=method, budget=budget)})
            logger.info("[OK] sweep %s rho=%.2f done", method, rho)
    return rows


def ablation_grid(analyses: Iterable[DocumentAnalysis], config: PipelineConfig) -> List[dict]:
    """Full model and each single-component ablation on the same corpus and budget"""
    analyses = _ordered(analyses)
    base = config.model_copy(update={"ablations": frozenset()})
    budget = {
        "budget_mode": base.budget.mode,
        "rho": base.budget.ratio if base.budget.mode == "ratio" else None,
        "budget_tokens": base.budget.tokens if base.budget.mode == "absolute" else None,
    }
    rows = []
    for setting in ("full",) + ABLATIONS:
        variant = base if setting == "full" else base.model_copy(update={"ablations": frozenset({setting})})
        rows.append({"setting": setting, **budget, **_run_cell(analyses, variant)})
    return rows


def _graph_variant(config: PipelineConfig, **updates) -> PipelineConfig:
    return config.model_copy(update={"graph": config.graph.model_copy(update=updates)})


def sensitivity_grids(analyses: Iterable[DocumentAnalysis], config: PipelineConfig) -> Dict[str, List[dict]]:
    """
    One-factor scans around ``config``

    Returns:
        Dict[str, List[dict]]: Rows per grid name ("k", "tau", "delta", "beta", "weights")
    """
    analyses = _ordered(analyses)
    grids: Dict[str, List[dict]] = {name: [] for name in SENSITIVITY_COLUMNS}

    for k in K_GRID:
        grids["k"].append({"k": k, **_run_cell(analyses, _graph_variant(config, k=k))})
    for tau in TAU_GRID:
        variant = config.model_copy(update={"selection": config.selection.model_copy(update={"tau": tau})})
        grids["tau"].append({"tau": tau, **_run_cell(analyses, variant)})
    for delta in DELTA_GRID:
        grids["delta"].append({"delta": delta, **_run_cell(analyses, _graph_variant(config, delta=delta))})
    for beta in BETA_GRID:
        alpha = round(1.0 - beta, 10)
        variant = _graph_variant(config, alpha=alpha, beta=beta)
        grids["beta"].append({"alpha": alpha, "beta": beta, **_run_cell(analyses, variant)})
    for task, setting, rep, bridge, cycle in WEIGHT_GRID:
        weights = ScoringWeights(lambda_task=task, lambda_rep=rep, lambda_bridge=bridge, lambda_cycle=cycle)
        grids["weights"].append({
            "lambda_task": task, "setting": setting, "lambda_rep": rep,
            "lambda_bridge": bridge, "lambda_cycle": cycle,
            **_run_cell(analyses, config.model_copy(update={"weights": weights})),
        })
    return grids


def write_sweep(path: Path, rows: List[dict]) -> Path:
    write_csv(path, SWEEP_COLUMNS, rows)
    return path


def write_ablation(path: Path, rows: List[dict]) -> Path:
    write_csv(path, ABLATION_COLUMNS, rows)
    return path


def write_sensitivity(out_dir: Path, grids: Dict[str, List[dict]]) -> List[Path]:
    """``sensitivity_<grid>.csv`` per grid"""
    paths = []
    for name, rows in grids.items():
        path = Path(out_dir) / f"sensitivity_{name}.csv"
        write_csv(path, SENSITIVITY_COLUMNS[name], rows)
        paths.append(path)
    return paths
