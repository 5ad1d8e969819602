"""
Tests for the budget sweep, ablation grid and sensitivity scans
"""
import asyncio
import csv
import warnings

import pytest

from ctxpress.core.errors import BudgetTooSmall
from ctxpress.schemas.config import BudgetSpec, EmbeddingProviderSpec, PipelineConfig
from ctxpress.services.embedding_service import EmbeddingService
from ctxpress.services.harness_service import (
    ABLATION_COLUMNS,
    SENSITIVITY_COLUMNS,
    SWEEP_COLUMNS,
    ablation_grid,
    budget_sweep,
    sensitivity_grids,
    write_ablation,
    write_sensitivity,
    write_sweep,
)
from ctxpress.services.pipeline_service import analyse_corpus
from tests.helpers import toy_document


@pytest.fixture(scope="module")
def analyses():
    documents = [toy_document(f"doc-{i}", offset=2 * i, size=8, reference=True) for i in range(3)]
    embedder = EmbeddingService(EmbeddingProviderSpec())
    pairs = asyncio.run(analyse_corpus(documents, PipelineConfig(), embedder, jobs=2))
    return [analysis for _, analysis in pairs]


@pytest.fixture(autouse=True)
def quiet_budget_warnings():
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", BudgetTooSmall)
        yield


def _read(path):
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.reader(handle)
        return next(reader), list(reader)


def test_sweep_shape(analyses, tmp_path):
    rows = budget_sweep(analyses, [0.1, 0.3, 0.5])
    assert [(row["method"], row["rho"]) for row in rows] == [
        (method, rho) for method in ("ours", "lead3", "textrank") for rho in (0.1, 0.3, 0.5)
    ]
    assert all(row["n_docs"] == 3 for row in rows)
    assert all(row["cr_mean"] <= row["rho"] for row in rows)

    header, body = _read(write_sweep(tmp_path / "sweep.csv", rows))
    assert header == SWEEP_COLUMNS
    assert len(body) == 9


def test_identity_sweep_reproduces_reference(analyses):
    row = budget_sweep(analyses, [1.0], ["ours"])[0]
    assert row["cr_mean"] <= 1.0
    assert row["rouge1"] == pytest.approx(1.0)
    assert row["rougeL"] == pytest.approx(1.0)


def test_rouge_cells_empty_without_references(tmp_path):
    documents = [toy_document("plain", size=6)]
    pairs = asyncio.run(analyse_corpus(documents, PipelineConfig(), EmbeddingService(EmbeddingProviderSpec())))
    rows = budget_sweep([pairs[0][1]], [0.5], ["ours"])
    assert rows[0]["rouge1"] is None

    _, body = _read(write_sweep(tmp_path / "sweep.csv", rows))
    assert body[0][SWEEP_COLUMNS.index("rouge1")] == ""


def test_unknown_method(analyses):
    with pytest.raises(ValueError):
        budget_sweep(analyses, [0.3], ["oracle"])


def test_ablation_grid_rows(analyses, tmp_path):
    rows = ablation_grid(analyses, PipelineConfig())
    assert [row["setting"] for row in rows] == ["full", "no_seq", "no_rep", "no_bridge", "no_cycle", "no_nms"]
    assert all(row["rho"] == 0.30 and row["budget_mode"] == "ratio" for row in rows)
    assert all(row["budget_tokens"] is None for row in rows)

    header, body = _read(write_ablation(tmp_path / "ablation.csv", rows))
    assert header == ABLATION_COLUMNS
    assert len(body) == 6


def test_ablation_grid_reports_absolute_budget(analyses, tmp_path):
    config = PipelineConfig(budget=BudgetSpec(mode="absolute", tokens=40))
    rows = ablation_grid(analyses, config)

    assert all(row["budget_mode"] == "absolute" for row in rows)
    assert all(row["budget_tokens"] == 40 and row["rho"] is None for row in rows)

    header, body = _read(write_ablation(tmp_path / "ablation.csv", rows))
    first = dict(zip(header, body[0]))
    assert first["rho"] == ""
    assert first["budget_tokens"] == "40"


def test_sensitivity_grid_shapes(analyses, tmp_path):
    grids = sensitivity_grids(analyses, PipelineConfig())
    expected = {"k": 4, "tau": 4, "delta": 4, "beta": 5, "weights": 13}
    assert {name: len(rows) for name, rows in grids.items()} == expected

    paths = write_sensitivity(tmp_path, grids)
    assert len(paths) == 5
    for path in paths:
        name = path.stem.replace("sensitivity_", "")
        header, body = _read(path)
        assert header == SENSITIVITY_COLUMNS[name]
        assert len(body) == expected[name]
        assert all(len(row) == len(header) for row in body)


def test_weight_scan_carries_settings(analyses):
    rows = sensitivity_grids(analyses, PipelineConfig())["weights"]
    full = [row for row in rows if row["setting"] == "Balanced (Full)"]
    assert len(full) == 1
    assert (full[0]["lambda_task"], full[0]["lambda_rep"], full[0]["lambda_bridge"], full[0]["lambda_cycle"]) == (
        0.45, 0.28, 0.23, 0.05
    )
    for row in rows:
        total = row["lambda_task"] + row["lambda_rep"] + row["lambda_bridge"] + row["lambda_cycle"]
        assert total == pytest.approx(1.0)
