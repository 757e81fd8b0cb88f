"""verse: reduce, diagnose, and explain the visual embedding spaces of
document-understanding models, and turn error-prone clusters into
training-data booster specs."""

from .clustering import (
    ClusterDiagnostics,
    ClusterModel,
    FeasibilityVerdict,
    cluster_diagnostics,
    feasibility_verdict,
    kmeans_fit,
    select_k,
    silhouette,
)
from .errors import VerseError
from .explain import (
    Attribution,
    BoosterPredicate,
    BoosterSpec,
    ClusterProfile,
    Session,
    SweepReport,
    attribute_features,
    build_session,
    compose_booster,
    detect_low_clusters,
    match_booster,
    sweep_report,
)
from .pipeline import AnalysisResult, RunConfig, analyze_embeddings
from .reduction import (
    ReducedSpace,
    ReductionQuality,
    continuity,
    pca_fit,
    pca_transform,
    reduction_quality,
    trustworthiness,
)
from .tensor_io import (
    EmbeddingMatrix,
    PatchGrid,
    SampleRecord,
    pool_patch_grid,
    read_embeddings,
    read_patch_grids,
    read_records,
    read_scores,
    write_embeddings,
    write_patch_grids,
)

__version__ = "1.0.0"

__all__ = [
    "AnalysisResult",
    "Attribution",
    "BoosterPredicate",
    "BoosterSpec",
    "ClusterDiagnostics",
    "ClusterModel",
    "ClusterProfile",
    "EmbeddingMatrix",
    "FeasibilityVerdict",
    "PatchGrid",
    "ReducedSpace",
    "ReductionQuality",
    "RunConfig",
    "SampleRecord",
    "Session",
    "SweepReport",
    "VerseError",
    "analyze_embeddings",
    "attribute_features",
    "build_session",
    "cluster_diagnostics",
    "compose_booster",
    "continuity",
    "detect_low_clusters",
    "feasibility_verdict",
    "kmeans_fit",
    "match_booster",
    "pca_fit",
    "pca_transform",
    "pool_patch_grid",
    "read_embeddings",
    "read_patch_grids",
    "read_records",
    "read_scores",
    "reduction_quality",
    "select_k",
    "silhouette",
    "sweep_report",
    "trustworthiness",
    "write_embeddings",
    "write_patch_grids",
]
