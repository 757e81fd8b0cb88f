"""K-means over the reduced space, cluster diagnostics, and the feasibility gate.

Cluster structure of the reduced embedding space is what separates models
worth fine-tuning from models to rule out: the mean silhouette over the
reduced space, compared against a threshold, issues the verdict.  The cluster
count is selected automatically by maximizing mean silhouette over a k sweep;
silhouette is the separability statistic the whole gate is built on, so it is
also the selection criterion.

Everything here is deterministic: k-means++ restarts draw from streams split
off a master seed, the winning restart is chosen by (objective, restart
index), and distance ties break by ascending sample index.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadKError,
    DegenerateInputError,
    NonFiniteError,
    SingleClusterError,
)

DEFAULT_THRESHOLD = 0.45
DEFAULT_K_RANGE = (2, 10)
N_RESTARTS = 10
MAX_ITER = 300
REL_TOL = 1e-6


@dataclass(frozen=True)
class ClusterModel:
    k: int
    assignments: np.ndarray  # (n,) ints in [0, k)
    centroids: np.ndarray  # (k, d)
    objective: float  # total within-cluster sum of squared distances
    per_sample_silhouette: np.ndarray  # (n,) in [-1, 1]
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "assignments", np.asarray(self.assignments, dtype=np.int64))
        object.__setattr__(self, "centroids", np.asarray(self.centroids, dtype=np.float64))
        object.__setattr__(
            self,
            "per_sample_silhouette",
            np.asarray(self.per_sample_silhouette, dtype=np.float64),
        )
        if self.assignments.min() < 0 or self.assignments.max() >= self.k:
            raise ValueError("assignments outside [0, k)")
        counts = np.bincount(self.assignments, minlength=self.k)
        if counts.min() < 1:
            raise ValueError("every cluster must be non-empty")

    def members(self, cluster_id: int) -> np.ndarray:
        return np.flatnonzero(self.assignments == cluster_id)

    def nearest_centroid_map(self, coords) -> np.ndarray:
        """Independent recomputation of the nearest-centroid assignment."""
        return _assign(self.centroids, np.asarray(coords, dtype=np.float64))


@dataclass(frozen=True)
class ClusterDiagnostics:
    radius: tuple[float, ...]  # per cluster, mean member-to-centroid distance
    density: tuple[float | None, ...]  # per cluster; None when radius is 0
    radius_mean: float
    radius_min: float
    radius_max: float
    density_mean: float | None
    density_min: float | None
    density_max: float | None
    mean_silhouette: float


@dataclass(frozen=True)
class FeasibilityVerdict:
    mean_silhouette: float
    threshold: float
    suitable: bool


def _assign(centroids: np.ndarray, coords: np.ndarray) -> np.ndarray:
    # argmin takes the first minimum, i.e. ties go to the lowest cluster index
    return squared_point_distances(coords, centroids).argmin(axis=1)


def squared_point_distances(points: np.ndarray, refs: np.ndarray) -> np.ndarray:
    """Squared Euclidean distances between two point sets, clipped at 0."""
    diff = points[:, None, :] - refs[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def _objective(coords, centroids, assignments) -> float:
    diff = coords - centroids[assignments]
    return float(np.einsum("ij,ij->", diff, diff))


def _kmeans_plus_plus(coords: np.ndarray, k: int, rng: np.random.Generator):
    n = coords.shape[0]
    centroids = np.empty((k, coords.shape[1]), dtype=np.float64)
    first = int(rng.integers(n))
    centroids[0] = coords[first]
    d2 = squared_point_distances(coords, centroids[:1])[:, 0]
    for c in range(1, k):
        total = d2.sum()
        if total <= 0.0:
            raise DegenerateInputError("fewer distinct points than clusters")
        nxt = int(rng.choice(n, p=d2 / total))
        centroids[c] = coords[nxt]
        d2 = np.minimum(d2, squared_point_distances(coords, centroids[c : c + 1])[:, 0])
    return centroids


def _fix_empty(coords, centroids, assignments):
    """Relocate centroids of empty clusters to the worst-fit point."""
    k = centroids.shape[0]
    while True:
        counts = np.bincount(assignments, minlength=k)
        empty = np.flatnonzero(counts == 0)
        if empty.size == 0:
            return assignments
        d2 = squared_point_distances(coords, centroids)
        current = d2[np.arange(len(assignments)), assignments]
        worst = int(np.argmax(current))  # ties: lowest index
        centroids[empty[0]] = coords[worst]
        assignments = _assign(centroids, coords)


def _lloyd(coords: np.ndarray, centroids: np.ndarray, trace: list | None):
    assignments = _assign(centroids, coords)
    assignments = _fix_empty(coords, centroids, assignments)
    obj = _objective(coords, centroids, assignments)
    for _ in range(MAX_ITER):
        if trace is not None:
            trace.append(obj)
        new_centroids = np.empty_like(centroids)
        for c in range(centroids.shape[0]):
            new_centroids[c] = coords[assignments == c].mean(axis=0)
        new_assignments = _assign(new_centroids, coords)
        new_assignments = _fix_empty(coords, new_centroids, new_assignments)
        new_obj = _objective(coords, new_centroids, new_assignments)
        centroids, assignments = new_centroids, new_assignments
        if obj <= 0.0 or (obj - new_obj) < REL_TOL * obj:
            obj = new_obj
            break
        obj = new_obj
    if trace is not None:
        trace.append(obj)
    return centroids, assignments, obj


def kmeans_fit(
    coords,
    k: int,
    seed: int,
    debug_trace: list | None = None,
) -> ClusterModel:
    """Lloyd's algorithm with k-means++ init, best of 10 seeded restarts.

    Converges when the relative objective change drops below 1e-6 (or at 300
    iterations); the returned assignments are the nearest-centroid map of the
    final centroids.  `debug_trace`, when given, receives one objective value
    per iteration of every restart; the trace within a restart never
    increases.
    """
    coords = np.asarray(coords, dtype=np.float64)
    if coords.ndim != 2 or coords.shape[0] < 1:
        raise ValueError("coords must be a non-empty 2-D array")
    if not np.all(np.isfinite(coords)):
        raise NonFiniteError("coordinates contain NaN/Inf")
    n = coords.shape[0]
    if not 2 <= k <= n:
        raise BadKError(f"k={k} outside [2, n={n}]")
    if np.unique(coords, axis=0).shape[0] < k:
        raise DegenerateInputError(f"fewer than {k} distinct points")

    streams = np.random.SeedSequence(seed).spawn(N_RESTARTS)
    best = None
    for restart, stream in enumerate(streams):
        rng = np.random.default_rng(stream)
        trace: list | None = [] if debug_trace is not None else None
        centroids = _kmeans_plus_plus(coords, k, rng)
        centroids, assignments, obj = _lloyd(coords, centroids, trace)
        if debug_trace is not None:
            debug_trace.append(trace)
        if best is None or obj < best[0]:
            best = (obj, restart, centroids, assignments)

    obj, _, centroids, assignments = best
    sil, _ = silhouette(coords, assignments)
    model = ClusterModel(
        k=k,
        assignments=assignments,
        centroids=centroids,
        objective=obj,
        per_sample_silhouette=sil,
        seed=seed,
    )
    return model


def select_k(coords, k_range=None, seed: int = 0) -> tuple[int, ClusterModel]:
    """Sweep k and keep the fit with maximal mean silhouette.

    Ties within 1e-9 go to the smallest k.  The sweep is bounded to
    [2, min(10, n-1)].
    """
    coords = np.asarray(coords, dtype=np.float64)
    n = coords.shape[0]
    upper = min(DEFAULT_K_RANGE[1], n - 1)
    if k_range is None:
        candidates = list(range(2, upper + 1))
    else:
        candidates = sorted(set(int(k) for k in k_range))
    if not candidates:
        raise BadKError("empty k range")
    if candidates[0] < 2 or candidates[-1] > upper:
        raise BadKError(
            f"k range {candidates[0]}..{candidates[-1]} outside [2, {upper}]"
        )

    best_k = None
    best_model = None
    best_score = -math.inf
    for k in candidates:
        model = kmeans_fit(coords, k, seed)
        score = float(model.per_sample_silhouette.mean())
        if score > best_score + 1e-9:
            best_k, best_model, best_score = k, model, score
    return best_k, best_model


def silhouette(coords, assignments) -> tuple[np.ndarray, float]:
    """Per-sample silhouette s(i) = (b - a) / max(a, b) and its mean.

    a is the mean intra-cluster distance (self excluded), b the minimum over
    other clusters of the mean distance to that cluster.  Members of singleton
    clusters score 0, as does the degenerate a = b = 0 case.
    """
    coords = np.asarray(coords, dtype=np.float64)
    assignments = np.asarray(assignments)
    labels = np.unique(assignments)
    if labels.size < 2:
        raise SingleClusterError("silhouette needs at least 2 non-empty clusters")

    from .reduction import squared_distances

    dist = np.sqrt(squared_distances(coords))
    n = coords.shape[0]
    sums = np.stack([dist[:, assignments == c].sum(axis=1) for c in labels], axis=1)
    counts = np.array([(assignments == c).sum() for c in labels])
    own = np.searchsorted(labels, assignments)

    s = np.zeros(n, dtype=np.float64)
    for i in range(n):
        size = counts[own[i]]
        if size == 1:
            continue
        a = sums[i, own[i]] / (size - 1)
        other = [sums[i, c] / counts[c] for c in range(labels.size) if c != own[i]]
        b = min(other)
        denom = max(a, b)
        s[i] = 0.0 if denom == 0.0 else (b - a) / denom
    return s, float(s.mean())


def _ball_volume(d: int, radius: float) -> float:
    return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * radius**d


def cluster_diagnostics(coords, model: ClusterModel) -> ClusterDiagnostics:
    """Per-cluster radius (mean member-to-centroid distance) and density.

    Density is the member count over the volume of the d-ball at the cluster
    radius (πr² in the plane); it is absent for singleton or zero-radius
    clusters, where the ball has no volume.
    """
    coords = np.asarray(coords, dtype=np.float64)
    d = coords.shape[1]
    radii: list[float] = []
    densities: list[float | None] = []
    for c in range(model.k):
        members = model.members(c)
        if members.size == 1:
            radii.append(0.0)
            densities.append(None)
            continue
        dist = np.sqrt(
            squared_point_distances(coords[members], model.centroids[c : c + 1])[:, 0]
        )
        radius = float(dist.mean())
        radii.append(radius)
        if radius == 0.0:
            densities.append(None)
        else:
            densities.append(members.size / _ball_volume(d, radius))

    defined = [x for x in densities if x is not None]
    return ClusterDiagnostics(
        radius=tuple(radii),
        density=tuple(densities),
        radius_mean=float(np.mean(radii)),
        radius_min=float(np.min(radii)),
        radius_max=float(np.max(radii)),
        density_mean=float(np.mean(defined)) if defined else None,
        density_min=float(np.min(defined)) if defined else None,
        density_max=float(np.max(defined)) if defined else None,
        mean_silhouette=float(model.per_sample_silhouette.mean()),
    )


def feasibility_verdict(
    mean_silhouette: float, threshold: float = DEFAULT_THRESHOLD
) -> FeasibilityVerdict:
    """Suitable iff mean silhouette reaches the threshold (boundary inclusive)."""
    if not -1.0 < threshold < 1.0:
        raise ValueError(f"threshold {threshold} outside (-1, 1)")
    return FeasibilityVerdict(
        mean_silhouette=float(mean_silhouette),
        threshold=float(threshold),
        suitable=bool(mean_silhouette >= threshold),
    )
