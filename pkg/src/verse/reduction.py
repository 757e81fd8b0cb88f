"""PCA reduction of embedding matrices and rank-based reduction quality.

The reduced embedding space (RES) is the projection onto the top principal
components of the validation embeddings; every downstream diagnostic and
overlay is computed there.  Quality of the reduction is quantified by
trustworthiness and continuity, rank-based scores in [0, 1] over k-nearest
neighborhoods:

    T(k) = 1 - 2 / (n·k·(2n - 3k - 1)) · Σ_i Σ_{j ∈ U_k(i)} (r(i, j) - k)

where U_k(i) holds the samples that are k-NN of i in the reduced space but
not in the original space, and r(i, j) is j's 1-based neighbor rank around i
in the original space (self excluded).  Continuity is the dual: it penalizes
original-space neighbors lost in the reduced space, ranked in the reduced
space.  Continuity is labeled "proximity" in reports.

Distance ties are broken by ascending sample index so duplicate embeddings
cannot make either metric nondeterministic.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import (
    BadKError,
    DegenerateInputError,
    DimensionMismatchError,
    DimensionTooLargeError,
)
from .tensor_io import EmbeddingMatrix

DEFAULT_DIMENSION = 2
DEFAULT_NEIGHBORS = 5


@dataclass(frozen=True)
class ReducedSpace:
    """A fitted PCA model plus the projected coordinates of the fitted data."""

    mean: np.ndarray  # (L,)
    components: np.ndarray  # (d, L), rows orthonormal
    explained_variance: np.ndarray  # (d,), non-increasing, ≥ 0
    explained_ratio: np.ndarray  # (d,), in [0, 1]
    coords: np.ndarray  # (n, d)
    source_ids: tuple[str, ...]

    @property
    def d(self) -> int:
        return self.components.shape[0]

    @property
    def dim(self) -> int:
        return self.components.shape[1]

    @property
    def n(self) -> int:
        return self.coords.shape[0]


@dataclass(frozen=True)
class ReductionQuality:
    trustworthiness: float
    continuity: float
    k: int


def pca_fit(matrix: EmbeddingMatrix, d: int = DEFAULT_DIMENSION) -> ReducedSpace:
    """Fit PCA via thin SVD of the centered matrix.

    SVD rather than a covariance eigendecomposition keeps the fit stable when
    the embedding dimension far exceeds the sample count.  Each component is
    sign-flipped so its largest-magnitude entry is positive (ties broken by
    lowest index), making the fit deterministic; principal axes are otherwise
    sign-arbitrary.
    """
    data = np.asarray(matrix.data, dtype=np.float64)
    n, dim = data.shape
    if n < 2:
        raise DegenerateInputError(f"PCA needs at least 2 samples, got {n}")
    if d < 1:
        raise ValueError(f"target dimension must be ≥ 1, got {d}")
    if d > min(n - 1, dim):
        raise DimensionTooLargeError(
            f"d={d} exceeds min(n-1, L) = {min(n - 1, dim)}"
        )

    mean = data.mean(axis=0)
    centered = data - mean
    _, singular, vt = np.linalg.svd(centered, full_matrices=False)
    scale = max(1.0, float(np.abs(data).max()))
    if singular[0] <= 1e-12 * scale:
        raise DegenerateInputError("all rows identical: centered matrix has rank 0")

    components = vt[:d].copy()
    for row in components:
        lead = int(np.argmax(np.abs(row)))
        if row[lead] < 0:
            row *= -1.0

    explained_variance = (singular[:d] ** 2) / (n - 1)
    total_variance = float((centered**2).sum()) / (n - 1)
    explained_ratio = explained_variance / total_variance
    coords = centered @ components.T

    # per-fit sanity: orthonormal axes, non-increasing variance
    gram = components @ components.T
    if np.max(np.abs(gram - np.eye(d))) > 1e-8:
        raise RuntimeError("PCA produced non-orthonormal components")
    if np.any(np.diff(explained_variance) > 1e-12) or np.any(explained_variance < 0):
        raise RuntimeError("PCA explained variance is not non-increasing")

    return ReducedSpace(
        mean=mean,
        components=components,
        explained_variance=explained_variance,
        explained_ratio=explained_ratio,
        coords=coords,
        source_ids=tuple(matrix.ids),
    )


def pca_transform(space: ReducedSpace, matrix: EmbeddingMatrix) -> np.ndarray:
    """Project rows of `matrix` into the fitted space; row order preserved."""
    if matrix.dim != space.dim:
        raise DimensionMismatchError(
            f"matrix dimension {matrix.dim} does not match fitted dimension {space.dim}"
        )
    data = np.asarray(matrix.data, dtype=np.float64)
    return (data - space.mean) @ space.components.T


def squared_distances(points: np.ndarray) -> np.ndarray:
    """All-pairs squared Euclidean distances, symmetric and non-negative.

    Gram-based so an n×L input never materializes an n×n×L intermediate.
    """
    pts = np.asarray(points, dtype=np.float64)
    sq = np.einsum("ij,ij->i", pts, pts)
    d2 = sq[:, None] + sq[None, :] - 2.0 * (pts @ pts.T)
    np.maximum(d2, 0.0, out=d2)
    d2 = np.maximum(d2, d2.T)
    np.fill_diagonal(d2, 0.0)
    return d2


def _neighbor_ranks(d2: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-row neighbor order and 1-based ranks, self excluded.

    Rows are ordered by (distance, sample index); the self entry is forced to
    the front and holds rank 0, so neighbor ranks start at 1.
    """
    n = d2.shape[0]
    keyed = d2.copy()
    np.fill_diagonal(keyed, -np.inf)
    tie = np.broadcast_to(np.arange(n), (n, n))
    order = np.lexsort((tie, keyed), axis=1)
    ranks = np.empty((n, n), dtype=np.int64)
    np.put_along_axis(ranks, order, np.broadcast_to(np.arange(n), (n, n)), axis=1)
    return order, ranks


def _check_pair(original: np.ndarray, reduced: np.ndarray, k: int) -> int:
    orig = np.asarray(original, dtype=np.float64)
    red = np.asarray(reduced, dtype=np.float64)
    if orig.ndim != 2 or red.ndim != 2:
        raise ValueError("original and reduced must be 2-D arrays")
    n = orig.shape[0]
    if red.shape[0] != n:
        raise DimensionMismatchError(
            f"row counts differ: original {n}, reduced {red.shape[0]}"
        )
    if not 1 <= k < n // 2:
        raise BadKError(f"k={k} outside [1, ⌊n/2⌋) for n={n}")
    return n


def _knn_mask(order: np.ndarray, k: int) -> np.ndarray:
    n = order.shape[0]
    mask = np.zeros((n, n), dtype=bool)
    np.put_along_axis(mask, order[:, 1 : k + 1], True, axis=1)
    return mask


def trustworthiness(original, reduced, k: int = DEFAULT_NEIGHBORS) -> float:
    """Penalty for reduced-space neighbors that were not original neighbors."""
    n = _check_pair(original, reduced, k)
    order_orig, ranks_orig = _neighbor_ranks(squared_distances(original))
    order_red, _ = _neighbor_ranks(squared_distances(reduced))
    intruders = _knn_mask(order_red, k) & ~_knn_mask(order_orig, k)
    penalty = int(((ranks_orig - k) * intruders).sum())
    return 1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * penalty


def continuity(original, reduced, k: int = DEFAULT_NEIGHBORS) -> float:
    """Dual of trustworthiness: original neighbors lost in the reduced space."""
    n = _check_pair(original, reduced, k)
    order_orig, _ = _neighbor_ranks(squared_distances(original))
    order_red, ranks_red = _neighbor_ranks(squared_distances(reduced))
    lost = _knn_mask(order_orig, k) & ~_knn_mask(order_red, k)
    penalty = int(((ranks_red - k) * lost).sum())
    return 1.0 - 2.0 / (n * k * (2 * n - 3 * k - 1)) * penalty


def reduction_quality(
    matrix: EmbeddingMatrix, space: ReducedSpace, k: int = DEFAULT_NEIGHBORS
) -> ReductionQuality:
    """Trustworthiness and continuity of a fitted reduction at neighborhood k."""
    return ReductionQuality(
        trustworthiness=trustworthiness(matrix.data, space.coords, k),
        continuity=continuity(matrix.data, space.coords, k),
        k=k,
    )
