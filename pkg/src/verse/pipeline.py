"""End-to-end analysis runs and the JSON documents they produce.

One RunConfig collects every tunable of the pipeline; precedence is
flags > config file > defaults, with VERSE_SEED supplying the default seed.
Documents are versioned, fully self-describing JSON: a space document from
the reduction step, an analysis document adding clustering, and a session
document adding records, profiles, and the final report.  Floats serialize
with shortest round-trip precision, so re-reading a document reproduces every
value bit-exactly.
"""

from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from . import clustering, explain, reduction
from .clustering import ClusterDiagnostics, ClusterModel, FeasibilityVerdict
from .errors import FormatError
from .explain import Attribution, BoosterSpec, Session, SweepReport
from .reduction import ReducedSpace, ReductionQuality
from .tensor_io import EmbeddingMatrix, SampleRecord

SCHEMA_VERSION = 1
SEED_ENV = "VERSE_SEED"


@dataclass(frozen=True)
class RunConfig:
    seed: int = 0
    d: int = reduction.DEFAULT_DIMENSION
    k_min: int | None = None  # None: widest valid sweep for the sample count
    k_max: int | None = None
    trust_k: int = reduction.DEFAULT_NEIGHBORS
    threshold: float = clustering.DEFAULT_THRESHOLD
    delta: float = explain.DEFAULT_MARGIN
    min_size: int = explain.DEFAULT_MIN_SIZE
    top_n: int = explain.DEFAULT_TOP_N

    def __post_init__(self):
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must fit in u64")
        if self.d < 1:
            raise ValueError("d must be ≥ 1")
        for name in ("k_min", "k_max"):
            value = getattr(self, name)
            if value is not None and not 2 <= value <= 10:
                raise ValueError(f"{name} must be in [2, 10]")
        if self.k_min is not None and self.k_max is not None and self.k_min > self.k_max:
            raise ValueError("k_min must not exceed k_max")
        if self.trust_k < 1:
            raise ValueError("trust_k must be ≥ 1")
        if not -1.0 < self.threshold < 1.0:
            raise ValueError("threshold must be in (-1, 1)")
        if self.delta < 0:
            raise ValueError("delta must be ≥ 0")
        if self.min_size < 1:
            raise ValueError("min_size must be ≥ 1")
        if self.top_n < 1:
            raise ValueError("top_n must be ≥ 1")

    def k_candidates(self, n: int) -> list[int]:
        upper = min(clustering.DEFAULT_K_RANGE[1], n - 1)
        lo = 2 if self.k_min is None else self.k_min
        hi = upper if self.k_max is None else self.k_max
        return list(range(lo, hi + 1))


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise ValueError(f"{SEED_ENV}={raw!r} is not an integer") from None


def load_config(
    config_path: str | Path | None = None,
    overrides: Mapping[str, Any] | None = None,
) -> RunConfig:
    """Resolve a RunConfig: explicit overrides > config file > defaults."""
    values: dict[str, Any] = {"seed": default_seed()}
    if config_path is not None:
        raw = json.loads(Path(config_path).read_text(encoding="utf-8"))
        if not isinstance(raw, dict):
            raise ValueError(f"{config_path}: config must be a flat JSON object")
        unknown = set(raw) - set(RunConfig.__dataclass_fields__)
        if unknown:
            raise ValueError(f"{config_path}: unknown config keys: {sorted(unknown)}")
        values.update(raw)
    if overrides:
        values.update({k: v for k, v in overrides.items() if v is not None})
    return RunConfig(**values)


@dataclass(frozen=True)
class AnalysisResult:
    ids: tuple[str, ...]
    space: ReducedSpace
    quality: ReductionQuality | None
    model: ClusterModel
    diagnostics: ClusterDiagnostics
    verdict: FeasibilityVerdict
    config: RunConfig

    @property
    def report(self) -> dict:
        return compose_report(self.quality, self.model, self.diagnostics, self.verdict)


def analyze_embeddings(matrix: EmbeddingMatrix, config: RunConfig) -> AnalysisResult:
    """Reduce, validate the reduction, cluster, and gate: the whole diagnosis."""
    space = reduction.pca_fit(matrix, config.d)
    quality = reduction.reduction_quality(matrix, space, config.trust_k)
    _, model = clustering.select_k(
        space.coords, config.k_candidates(space.n), config.seed
    )
    diagnostics = clustering.cluster_diagnostics(space.coords, model)
    verdict = clustering.feasibility_verdict(
        diagnostics.mean_silhouette, config.threshold
    )
    return AnalysisResult(
        ids=space.source_ids,
        space=space,
        quality=quality,
        model=model,
        diagnostics=diagnostics,
        verdict=verdict,
        config=config,
    )


def compose_report(
    quality: ReductionQuality | None,
    model: ClusterModel,
    diagnostics: ClusterDiagnostics,
    verdict: FeasibilityVerdict,
) -> dict:
    """The diagnosis summary: one row shaped like the feasibility table."""
    return {
        "trustworthiness": None if quality is None else quality.trustworthiness,
        "proximity": None if quality is None else quality.continuity,
        "k": model.k,
        "radius": {
            "mean": diagnostics.radius_mean,
            "min": diagnostics.radius_min,
            "max": diagnostics.radius_max,
        },
        "density": {
            "mean": diagnostics.density_mean,
            "min": diagnostics.density_min,
            "max": diagnostics.density_max,
        },
        "silhouette": diagnostics.mean_silhouette,
        "suitable": verdict.suitable,
    }


def render_report_row(report: Mapping[str, Any]) -> str:
    """Human-readable one-liner; numbers at two decimals, full JSON untouched."""

    def num(x):
        return "–" if x is None else f"{x:.2f}"

    radius = report["radius"]
    density = report["density"]
    return (
        f"trust={num(report['trustworthiness'])}  prox={num(report['proximity'])}  "
        f"k={report['k']}  "
        f"radius={num(radius['mean'])} [{num(radius['min'])}–{num(radius['max'])}]  "
        f"density={num(density['mean'])} [{num(density['min'])}–{num(density['max'])}]  "
        f"silh={num(report['silhouette'])}  "
        f"res={'✓' if report['suitable'] else '✗'}"
    )


# ---------------------------------------------------------------------------
# documents
# ---------------------------------------------------------------------------


def dump_json(doc: Any, path: str | Path) -> None:
    Path(path).write_text(
        json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8"
    )


def load_json(path: str | Path) -> Any:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def _expect_kind(doc: Mapping, kind: str, label: str):
    if not isinstance(doc, Mapping):
        raise FormatError(f"{label}: not a JSON object")
    if doc.get("schema_version") != SCHEMA_VERSION:
        raise FormatError(
            f"{label}: unsupported schema_version {doc.get('schema_version')!r}"
        )
    if doc.get("kind") != kind:
        raise FormatError(f"{label}: expected a {kind!r} document, got {doc.get('kind')!r}")


def space_doc(space: ReducedSpace, quality: ReductionQuality | None = None) -> dict:
    doc = {
        "schema_version": SCHEMA_VERSION,
        "kind": "space",
        "ids": list(space.source_ids),
        "dim": space.dim,
        "d": space.d,
        "mean": space.mean.tolist(),
        "components": space.components.tolist(),
        "explained_variance": space.explained_variance.tolist(),
        "explained_ratio": space.explained_ratio.tolist(),
        "coords": space.coords.tolist(),
    }
    if quality is not None:
        doc["quality"] = {
            "trustworthiness": quality.trustworthiness,
            "proximity": quality.continuity,
            "k": quality.k,
        }
    return doc


def space_from_doc(doc: Mapping, label: str = "space") -> tuple[ReducedSpace, ReductionQuality | None]:
    _expect_kind(doc, "space", label)
    space = ReducedSpace(
        mean=np.asarray(doc["mean"], dtype=np.float64),
        components=np.asarray(doc["components"], dtype=np.float64),
        explained_variance=np.asarray(doc["explained_variance"], dtype=np.float64),
        explained_ratio=np.asarray(doc["explained_ratio"], dtype=np.float64),
        coords=np.asarray(doc["coords"], dtype=np.float64),
        source_ids=tuple(doc["ids"]),
    )
    quality = None
    if "quality" in doc:
        q = doc["quality"]
        quality = ReductionQuality(
            trustworthiness=q["trustworthiness"],
            continuity=q["proximity"],
            k=q["k"],
        )
    return space, quality


def _model_doc(model: ClusterModel) -> dict:
    return {
        "k": model.k,
        "seed": model.seed,
        "assignments": model.assignments.tolist(),
        "centroids": model.centroids.tolist(),
        "objective": model.objective,
        "per_sample_silhouette": model.per_sample_silhouette.tolist(),
    }


def _model_from_doc(doc: Mapping) -> ClusterModel:
    return ClusterModel(
        k=doc["k"],
        assignments=np.asarray(doc["assignments"], dtype=np.int64),
        centroids=np.asarray(doc["centroids"], dtype=np.float64),
        objective=doc["objective"],
        per_sample_silhouette=np.asarray(doc["per_sample_silhouette"], dtype=np.float64),
        seed=doc["seed"],
    )


def _diagnostics_doc(diag: ClusterDiagnostics) -> dict:
    return {
        "radius": {
            "per_cluster": list(diag.radius),
            "mean": diag.radius_mean,
            "min": diag.radius_min,
            "max": diag.radius_max,
        },
        "density": {
            "per_cluster": list(diag.density),
            "mean": diag.density_mean,
            "min": diag.density_min,
            "max": diag.density_max,
        },
        "mean_silhouette": diag.mean_silhouette,
    }


def _diagnostics_from_doc(doc: Mapping) -> ClusterDiagnostics:
    return ClusterDiagnostics(
        radius=tuple(doc["radius"]["per_cluster"]),
        density=tuple(doc["density"]["per_cluster"]),
        radius_mean=doc["radius"]["mean"],
        radius_min=doc["radius"]["min"],
        radius_max=doc["radius"]["max"],
        density_mean=doc["density"]["mean"],
        density_min=doc["density"]["min"],
        density_max=doc["density"]["max"],
        mean_silhouette=doc["mean_silhouette"],
    )


def analysis_doc(result: AnalysisResult) -> dict:
    space = space_doc(result.space, result.quality)
    space.pop("kind")
    space.pop("schema_version")
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "analysis",
        "space": space,
        "clusters": _model_doc(result.model),
        "diagnostics": _diagnostics_doc(result.diagnostics),
        "verdict": {
            "mean_silhouette": result.verdict.mean_silhouette,
            "threshold": result.verdict.threshold,
            "suitable": result.verdict.suitable,
        },
        "report": result.report,
        "config": config_doc(result.config),
    }


def config_doc(config: RunConfig) -> dict:
    return asdict(config)


def analysis_from_doc(doc: Mapping, label: str = "analysis") -> AnalysisResult:
    _expect_kind(doc, "analysis", label)
    inner = dict(doc["space"])
    inner["schema_version"] = SCHEMA_VERSION
    inner["kind"] = "space"
    space, quality = space_from_doc(inner, label)
    model = _model_from_doc(doc["clusters"])
    diagnostics = _diagnostics_from_doc(doc["diagnostics"])
    verdict = FeasibilityVerdict(
        mean_silhouette=doc["verdict"]["mean_silhouette"],
        threshold=doc["verdict"]["threshold"],
        suitable=doc["verdict"]["suitable"],
    )
    return AnalysisResult(
        ids=space.source_ids,
        space=space,
        quality=quality,
        model=model,
        diagnostics=diagnostics,
        verdict=verdict,
        config=RunConfig(**doc["config"]),
    )


def _attribution_doc(attr: Attribution) -> dict:
    doc = {
        "feature": attr.feature,
        "kind": attr.kind,
        "score": attr.score,
        "coverage": attr.coverage,
    }
    if attr.kind == "categorical":
        doc["value"] = attr.value
    else:
        doc["interval"] = list(attr.interval)
    return doc


def _record_doc(record: SampleRecord) -> dict:
    return {
        "sample_id": record.sample_id,
        "features": dict(record.features),
        "score": record.score,
    }


def _record_from_doc(doc: Mapping) -> SampleRecord:
    features = {
        name: float(value) if isinstance(value, (int, float)) else str(value)
        for name, value in doc["features"].items()
    }
    return SampleRecord(
        sample_id=doc["sample_id"], features=features, score=doc.get("score")
    )


def session_doc(session: Session, result: AnalysisResult) -> dict:
    doc = analysis_doc(result)
    doc["kind"] = "session"
    doc["records"] = [_record_doc(r) for r in session.records]
    doc["profiles"] = [
        {
            "cluster_id": p.cluster_id,
            "size": p.size,
            "mean_score": p.mean_score,
            "min_score": p.min_score,
            "max_score": p.max_score,
            "flagged": p.flagged,
            "attributions": [_attribution_doc(a) for a in p.attributions],
        }
        for p in session.profiles
    ]
    doc["flagged"] = list(session.flagged)
    return doc


def session_from_doc(doc: Mapping, label: str = "session") -> tuple[Session, AnalysisResult]:
    _expect_kind(doc, "session", label)
    inner = dict(doc)
    inner["kind"] = "analysis"
    result = analysis_from_doc(inner, label)
    records = [_record_from_doc(r) for r in doc["records"]]
    session = explain.build_session(
        result.space,
        result.model,
        result.diagnostics,
        result.verdict,
        records,
        margin=result.config.delta,
        min_size=result.config.min_size,
    )
    return session, result


def build_session_from_analysis(
    result: AnalysisResult, records, config: RunConfig
) -> Session:
    return explain.build_session(
        result.space,
        result.model,
        result.diagnostics,
        result.verdict,
        records,
        margin=config.delta,
        min_size=config.min_size,
    )


def booster_doc(spec: BoosterSpec) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "booster",
        "target_cluster": spec.target_cluster,
        "predicates": [
            {
                "feature": p.feature,
                "kind": p.kind,
                **({"value": p.value} if p.kind == "categorical" else {"interval": list(p.interval)}),
            }
            for p in spec.predicates
        ],
        "matched_ids": list(spec.matched_ids),
    }


def sweep_doc(report: SweepReport) -> dict:
    return {
        "schema_version": SCHEMA_VERSION,
        "kind": "sweep",
        "labels": list(report.labels),
        "baseline": report.baseline,
        "regions": {name: list(ids) for name, ids in report.regions.items()},
        "matrix": {r: dict(row) for r, row in report.matrix.items()},
        "deltas": {r: dict(row) for r, row in report.deltas.items()},
        "rendered_deltas": {
            r: {label: explain.render_delta(v) for label, v in row.items()}
            for r, row in report.deltas.items()
        },
    }
