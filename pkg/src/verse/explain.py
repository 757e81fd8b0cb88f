"""Score/feature overlays on the clustered space: slice discovery and boosting.

A Session joins per-sample scores and metadata onto the clustered reduced
space.  Clusters whose mean score trails the global mean by more than a
margin are flagged; the features that characterize a flagged cluster are
ranked, and the top attributions become a booster spec: a predicate set that
selects matching samples out of a training catalog.  Sweep reports compare
labeled score runs region by region against a baseline.

Attribution scoring:

* categorical feature, in-cluster modal value v*:
  coverage = P(v* | cluster), lift = coverage / P(v* | all samples),
  score = coverage · ln(lift), kept only if coverage ≥ 0.5 and lift > 1;
* numeric feature: standardized mean difference
  |mean_in − mean_out| / pooled std, with the in-cluster [p10, p90] interval
  as the matchable range; coverage is the in-cluster fraction inside it.

These are associations, not causal claims.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterable, Mapping, Sequence

import numpy as np

from .clustering import ClusterDiagnostics, ClusterModel, FeasibilityVerdict
from .errors import (
    EmptyClusterError,
    JoinMismatchError,
    MissingRunScoresError,
    NoAttributionsError,
    ScoreMissingError,
    ScoreOutOfRangeError,
    UnknownBaselineError,
    UnknownFeatureError,
)
from .reduction import ReducedSpace
from .tensor_io import SampleRecord

DEFAULT_MARGIN = 0.05
DEFAULT_MIN_SIZE = 5
DEFAULT_TOP_N = 3
COVERAGE_FLOOR = 0.5  # rare values must not dominate via extreme lift
VALIDATION_REGION = "validation"

# zero pooled spread with distinct means is a perfect separator; a finite
# ceiling keeps ranking and JSON serialization valid
_SMD_CEILING = 1e308


@dataclass(frozen=True)
class Attribution:
    feature: str
    kind: str  # "categorical" | "numeric"
    score: float
    coverage: float
    value: str | None = None  # dominant value (categorical)
    interval: tuple[float, float] | None = None  # cluster range (numeric)


@dataclass(frozen=True)
class ClusterProfile:
    cluster_id: int
    size: int
    mean_score: float | None
    min_score: float | None
    max_score: float | None
    flagged: bool
    attributions: tuple[Attribution, ...]


@dataclass(frozen=True)
class BoosterPredicate:
    feature: str
    kind: str
    value: str | None = None
    interval: tuple[float, float] | None = None

    def matches(self, record: SampleRecord) -> bool:
        present = record.features.get(self.feature)
        if present is None:
            return False
        if self.kind == "categorical":
            return isinstance(present, str) and present == self.value
        if not isinstance(present, float):
            return False
        lo, hi = self.interval
        return lo <= present <= hi


@dataclass(frozen=True)
class BoosterSpec:
    target_cluster: int
    predicates: tuple[BoosterPredicate, ...]
    matched_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class SweepReport:
    labels: tuple[str, ...]
    baseline: str
    regions: dict[str, tuple[str, ...]]  # region name → member ids
    matrix: dict[str, dict[str, float]]  # region → run label → mean score
    deltas: dict[str, dict[str, float]]  # region → run label → mean − baseline
    runs: dict[str, dict[str, float]]  # run label → per-sample scores


@dataclass(frozen=True)
class Session:
    """Immutable join of reduced space, clusters, diagnostics, and records."""

    reduced: ReducedSpace
    clusters: ClusterModel
    diagnostics: ClusterDiagnostics
    verdict: FeasibilityVerdict
    records: tuple[SampleRecord, ...]  # ordered like reduced.source_ids
    profiles: tuple[ClusterProfile, ...]
    margin: float
    min_size: int

    @property
    def ids(self) -> tuple[str, ...]:
        return self.reduced.source_ids

    @property
    def flagged(self) -> tuple[int, ...]:
        return tuple(p.cluster_id for p in self.profiles if p.flagged)

    def feature_names(self) -> tuple[str, ...]:
        names: set[str] = set()
        for record in self.records:
            names.update(record.features)
        return tuple(sorted(names))

    def feature_kind(self, name: str) -> str:
        values = [r.features[name] for r in self.records if name in r.features]
        if values and all(isinstance(v, float) for v in values):
            return "numeric"
        return "categorical"

    def scores(self) -> dict[str, float]:
        return {r.sample_id: r.score for r in self.records if r.score is not None}

    def cluster_ids_of(self, cluster_id: int) -> tuple[str, ...]:
        members = self.clusters.members(cluster_id)
        return tuple(self.ids[i] for i in members)


def build_session(
    reduced: ReducedSpace,
    clusters: ClusterModel,
    diagnostics: ClusterDiagnostics,
    verdict: FeasibilityVerdict,
    records: Sequence[SampleRecord],
    margin: float = DEFAULT_MARGIN,
    min_size: int = DEFAULT_MIN_SIZE,
) -> Session:
    """Join records onto the clustered space by exact sample id.

    Every clustered sample must have a record and vice versa; orphans on
    either side abort the join.  Score statistics cover only the samples that
    carry a score, and at least one must.
    """
    by_id = {r.sample_id: r for r in records}
    if len(by_id) != len(records):
        seen, dupes = set(), set()
        for r in records:
            (dupes if r.sample_id in seen else seen).add(r.sample_id)
        raise JoinMismatchError(sorted(dupes), [])
    id_set = set(reduced.source_ids)
    missing_records = sorted(id_set - set(by_id))
    missing_embeddings = sorted(set(by_id) - id_set)
    if missing_records or missing_embeddings:
        raise JoinMismatchError(missing_records, missing_embeddings)
    ordered = tuple(by_id[i] for i in reduced.source_ids)
    if all(r.score is None for r in ordered):
        raise ScoreMissingError("no record carries a score")

    session = Session(
        reduced=reduced,
        clusters=clusters,
        diagnostics=diagnostics,
        verdict=verdict,
        records=ordered,
        profiles=(),
        margin=margin,
        min_size=min_size,
    )
    flagged = set(detect_low_clusters(session, margin, min_size))
    profiles = []
    for c in range(clusters.k):
        members = clusters.members(c)
        scores = [ordered[i].score for i in members if ordered[i].score is not None]
        profiles.append(
            ClusterProfile(
                cluster_id=c,
                size=int(members.size),
                mean_score=float(np.mean(scores)) if scores else None,
                min_score=float(np.min(scores)) if scores else None,
                max_score=float(np.max(scores)) if scores else None,
                flagged=c in flagged,
                attributions=attribute_features(session, c),
            )
        )
    return replace(session, profiles=tuple(profiles))


def detect_low_clusters(
    session: Session,
    margin: float = DEFAULT_MARGIN,
    min_size: int = DEFAULT_MIN_SIZE,
) -> list[int]:
    """Clusters of at least `min_size` whose mean score trails the global mean
    by more than `margin`.  Depends on score differences only, so shifting all
    scores by a constant flags the same clusters."""
    if margin < 0:
        raise ValueError("margin must be ≥ 0")
    if min_size < 1:
        raise ValueError("min_size must be ≥ 1")
    scored = [r.score for r in session.records if r.score is not None]
    if not scored:
        raise ScoreMissingError("session has no scores")
    global_mean = float(np.mean(scored))
    flagged = []
    for c in range(session.clusters.k):
        members = session.clusters.members(c)
        if members.size < min_size:
            continue
        scores = [
            session.records[i].score
            for i in members
            if session.records[i].score is not None
        ]
        if scores and float(np.mean(scores)) < global_mean - margin:
            flagged.append(c)
    return flagged


def _categorical_attribution(
    feature: str, in_values: list[str], all_values: list[str], cluster_size: int
) -> Attribution | None:
    if not in_values:
        return None
    counts: dict[str, int] = {}
    for v in in_values:
        counts[v] = counts.get(v, 0) + 1
    # modal value; ties broken by lexicographic order for determinism
    modal = min(counts, key=lambda v: (-counts[v], v))
    coverage = counts[modal] / cluster_size
    overall = sum(1 for v in all_values if v == modal) / len(all_values)
    if overall == 0.0:
        return None
    lift = coverage / overall
    if coverage < COVERAGE_FLOOR or lift <= 1.0:
        return None
    return Attribution(
        feature=feature,
        kind="categorical",
        score=coverage * math.log(lift),
        coverage=coverage,
        value=modal,
    )


def _numeric_attribution(
    feature: str, inside: np.ndarray, outside: np.ndarray
) -> Attribution | None:
    n1, n2 = inside.size, outside.size
    if n1 < 1 or n2 < 1 or n1 + n2 < 3:
        return None
    var1 = float(inside.var(ddof=1)) if n1 > 1 else 0.0
    var2 = float(outside.var(ddof=1)) if n2 > 1 else 0.0
    pooled = math.sqrt(((n1 - 1) * var1 + (n2 - 1) * var2) / (n1 + n2 - 2))
    diff = abs(float(inside.mean()) - float(outside.mean()))
    if pooled == 0.0:
        score = 0.0 if diff == 0.0 else _SMD_CEILING
    else:
        score = min(diff / pooled, _SMD_CEILING)
    lo = float(np.percentile(inside, 10))
    hi = float(np.percentile(inside, 90))
    coverage = float(np.mean((inside >= lo) & (inside <= hi)))
    return Attribution(
        feature=feature,
        kind="numeric",
        score=score,
        coverage=coverage,
        interval=(lo, hi),
    )


def attribute_features(session: Session, cluster_id: int) -> tuple[Attribution, ...]:
    """Rank the features that characterize a cluster, strongest first.

    Categorical and numeric attributions merge into one list ordered by
    non-increasing score, ties broken by feature name.
    """
    if not 0 <= cluster_id < session.clusters.k:
        raise EmptyClusterError(f"no cluster {cluster_id}")
    member_idx = set(session.clusters.members(cluster_id).tolist())
    cluster_size = len(member_idx)
    if cluster_size == 0:
        raise EmptyClusterError(f"cluster {cluster_id} is empty")

    attributions: list[Attribution] = []
    for feature in session.feature_names():
        rows = [
            (i in member_idx, r.features[feature])
            for i, r in enumerate(session.records)
            if feature in r.features
        ]
        values = [v for _, v in rows]
        if values and all(isinstance(v, float) for v in values):
            inside = np.array([v for inc, v in rows if inc], dtype=np.float64)
            outside = np.array([v for inc, v in rows if not inc], dtype=np.float64)
            attr = _numeric_attribution(feature, inside, outside)
        else:
            in_values = [str(v) for inc, v in rows if inc]
            all_values = [str(v) for _, v in rows]
            attr = _categorical_attribution(feature, in_values, all_values, cluster_size)
        if attr is not None:
            attributions.append(attr)

    attributions.sort(key=lambda a: (-a.score, a.feature))
    return tuple(attributions)


def compose_booster(
    session: Session, cluster_id: int, top_n: int = DEFAULT_TOP_N
) -> BoosterSpec:
    """Turn the cluster's strongest attributions into a predicate set."""
    if top_n < 1:
        raise NoAttributionsError("refusing to compose an empty booster spec")
    attributions = attribute_features(session, cluster_id)
    if not attributions:
        raise NoAttributionsError(f"cluster {cluster_id} has no attributions")
    predicates = tuple(
        BoosterPredicate(
            feature=a.feature, kind=a.kind, value=a.value, interval=a.interval
        )
        for a in attributions[:top_n]
    )
    return BoosterSpec(target_cluster=cluster_id, predicates=predicates)


def match_booster(spec: BoosterSpec, catalog: Sequence[SampleRecord]) -> BoosterSpec:
    """Select the catalog samples satisfying every predicate, in input order.

    A record missing a predicate's feature fails that predicate; a predicate
    naming a feature no catalog record has at all is an error.
    """
    available: set[str] = set()
    for record in catalog:
        available.update(record.features)
    for predicate in spec.predicates:
        if predicate.feature not in available:
            raise UnknownFeatureError(
                f"catalog has no feature {predicate.feature!r}"
            )
    matched = tuple(
        r.sample_id
        for r in catalog
        if all(p.matches(r) for p in spec.predicates)
    )
    return replace(spec, matched_ids=matched)


def sweep_report(
    runs: Mapping[str, Mapping[str, float]] | Iterable[tuple[str, Mapping[str, float]]],
    session: Session,
    baseline_label: str,
) -> SweepReport:
    """Region × run matrix of mean scores with deltas against a baseline run.

    Regions are the whole validation set plus every flagged cluster.  Every
    run must score every session sample; stored means and deltas keep full
    precision, rounding happens only in rendering.
    """
    run_map: dict[str, dict[str, float]] = (
        {k: dict(v) for k, v in runs.items()}
        if isinstance(runs, Mapping)
        else {k: dict(v) for k, v in runs}
    )
    if baseline_label not in run_map:
        raise UnknownBaselineError(f"baseline run {baseline_label!r} not supplied")

    session_ids = list(session.ids)
    for label, scores in run_map.items():
        missing = [i for i in session_ids if i not in scores]
        if missing:
            raise MissingRunScoresError(
                f"run {label!r} lacks scores for: {', '.join(missing[:10])}"
                + ("…" if len(missing) > 10 else "")
            )
        bad = {i: s for i, s in scores.items() if not 0.0 <= s <= 1.0}
        if bad:
            sample_id, value = next(iter(bad.items()))
            raise ScoreOutOfRangeError(
                f"run {label!r}: score {value} for {sample_id!r} outside [0, 1]"
            )

    regions: dict[str, tuple[str, ...]] = {VALIDATION_REGION: tuple(session_ids)}
    for c in session.flagged:
        regions[f"cluster_{c}"] = session.cluster_ids_of(c)

    matrix: dict[str, dict[str, float]] = {}
    deltas: dict[str, dict[str, float]] = {}
    for region, ids in regions.items():
        matrix[region] = {
            label: float(np.mean([scores[i] for i in ids]))
            for label, scores in run_map.items()
        }
        base = matrix[region][baseline_label]
        deltas[region] = {
            label: matrix[region][label] - base for label in run_map
        }
    return SweepReport(
        labels=tuple(run_map),
        baseline=baseline_label,
        regions=regions,
        matrix=matrix,
        deltas=deltas,
        runs=run_map,
    )


def render_delta(delta: float) -> str:
    """Two-decimal signed rendering, applied only at display time."""
    return f"{delta:+.2f}"
