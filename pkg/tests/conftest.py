"""Shared fixture builders: planted corpora with known structure."""

from __future__ import annotations

import csv
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from verse.tensor_io import EmbeddingMatrix, PatchGrid, SampleRecord

CATEGORICAL_FEATURE = "grades"
CATEGORICAL_LOW = "alphanumeric"
CATEGORICAL_REST = "numeric"
NUMERIC_FEATURE = "row_h/image_h"
NUMERIC_LOW = (0.010, 0.020)
NUMERIC_REST = (0.050, 0.100)
LOW_SCORE = 0.35
REST_SCORE = 0.80


@dataclass
class PlantedCorpus:
    matrix: EmbeddingMatrix
    labels: np.ndarray  # generation cluster per sample
    low_label: int  # the planted low-scoring cluster
    records: list[SampleRecord]
    catalog: list[SampleRecord]
    catalog_match_ids: list[str]  # catalog members carrying both planted features


def make_planted_corpus(
    n: int = 200,
    dim: int = 64,
    seed: int = 11,
    n_clusters: int = 4,
    sigma: float = 0.5,
    scores: bool = True,
) -> PlantedCorpus:
    """A corpus with planted plane clusters, scores, features, and a catalog.

    Cluster 0 is the low performer: score LOW_SCORE, categorical value
    CATEGORICAL_LOW, numeric feature drawn from NUMERIC_LOW; everything else
    scores REST_SCORE with the complementary feature values.
    """
    rng = np.random.default_rng(seed)
    corners = np.array([[0.0, 0.0], [8.0, 0.0], [0.0, 8.0], [8.0, 8.0]])
    centers = corners[:n_clusters]
    labels = np.repeat(np.arange(n_clusters), n // n_clusters)
    labels = np.concatenate([labels, np.zeros(n - labels.size, dtype=int)])
    rng.shuffle(labels)
    plane = centers[labels] + rng.normal(0.0, sigma, size=(n, 2))

    basis, _ = np.linalg.qr(rng.normal(size=(dim, 2)))
    data = plane @ basis.T + rng.normal(0.0, 0.05, size=(n, dim))
    ids = [f"s{i:03d}" for i in range(n)]
    matrix = EmbeddingMatrix(ids=tuple(ids), data=data.astype(np.float32))

    records = []
    for i, sample_id in enumerate(ids):
        low = labels[i] == 0
        features = {
            CATEGORICAL_FEATURE: CATEGORICAL_LOW if low else CATEGORICAL_REST,
            NUMERIC_FEATURE: float(rng.uniform(*(NUMERIC_LOW if low else NUMERIC_REST))),
            "source": "camera" if rng.random() < 0.5 else "scanner",
            "columns": float(rng.integers(1, 4)),
        }
        records.append(
            SampleRecord(
                sample_id=sample_id,
                features=features,
                score=(LOW_SCORE if low else REST_SCORE) if scores else None,
            )
        )

    # catalog: records clearly inside the planted value/interval pair and
    # records failing one or both predicates
    catalog = []
    match_ids = []
    for i in range(30):
        sample_id = f"t{i:03d}"
        if i < 12:
            features = {
                CATEGORICAL_FEATURE: CATEGORICAL_LOW,
                NUMERIC_FEATURE: float(rng.uniform(0.013, 0.017)),
            }
            match_ids.append(sample_id)
        elif i < 20:
            features = {
                CATEGORICAL_FEATURE: CATEGORICAL_REST,
                NUMERIC_FEATURE: float(rng.uniform(0.013, 0.017)),
            }
        elif i < 26:
            features = {
                CATEGORICAL_FEATURE: CATEGORICAL_LOW,
                NUMERIC_FEATURE: float(rng.uniform(*NUMERIC_REST)),
            }
        else:
            features = {CATEGORICAL_FEATURE: CATEGORICAL_REST}
        catalog.append(SampleRecord(sample_id=sample_id, features=features))

    return PlantedCorpus(
        matrix=matrix,
        labels=labels,
        low_label=0,
        records=records,
        catalog=catalog,
        catalog_match_ids=match_ids,
    )


def write_metadata_csv(records, path: Path) -> None:
    names = sorted({name for r in records for name in r.features})
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", *names])
        for r in records:
            writer.writerow([r.sample_id, *(r.features.get(n, "") for n in names)])


def write_scores_csv(records, path: Path) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["sample_id", "f1"])
        for r in records:
            if r.score is not None:
                writer.writerow([r.sample_id, repr(r.score)])


def grids_for_matrix(matrix: EmbeddingMatrix, rows: int = 2, cols: int = 2):
    """Patch grids whose every patch equals the embedding, so pooling is exact."""
    for sample_id, row in zip(matrix.ids, matrix.data):
        values = np.tile(row, (rows, cols, 1)).astype(np.float32)
        yield PatchGrid(sample_id=sample_id, values=values)


@pytest.fixture(scope="session")
def planted() -> PlantedCorpus:
    return make_planted_corpus()


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """One PASS/FAIL line per acceptance criterion at the end of the run."""
    lines = []
    for status, reports in terminalreporter.stats.items():
        if status not in ("passed", "failed"):
            continue
        for report in reports:
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py" in nodeid and getattr(report, "when", "") == "call":
                name = nodeid.split("::")[-1]
                lines.append((name, "PASS" if status == "passed" else "FAIL"))
    if lines:
        terminalreporter.section("acceptance criteria")
        for name, verdict in sorted(lines):
            terminalreporter.write_line(f"[{verdict}] {name}")
