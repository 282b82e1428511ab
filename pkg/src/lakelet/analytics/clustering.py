"""Patient clustering: the distance metric, Lloyd's algorithm, and the
per-cluster precision measure.

kmeans() is deterministic given (data, k, seed): seeded k-means++
initialization, Lloyd iterations until the largest centroid shift drops
below tol, empty clusters reseeded to the point currently farthest from
its own centroid. The within-cluster inertia is checked to be
non-increasing on every iteration.

Cluster precision for a cluster is the mean pairwise Euclidean distance
among its members divided by sqrt(dims) of the evaluation space, so
values stay comparable between feature spaces of different width. Lower
means tighter clusters. The report covers the four largest clusters.
"""

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ClusterTooSmall, DimensionMismatch, KTooLarge
from . import kernels
from .features import FeatureMatrix


def euclidean_distance(x, y) -> float:
    """Straight-line distance: sqrt of the summed squared coordinate gaps."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionMismatch(f"dims {x.shape} vs {y.shape}")
    diff = x - y
    return float(math.sqrt(np.dot(diff, diff)))


@dataclass(frozen=True)
class ClusterModel:
    k: int
    centroids: np.ndarray
    assignments: np.ndarray
    inertia: float
    seed: int
    iterations_run: int
    inertia_history: tuple = ()


@dataclass(frozen=True)
class ClusterPrecision:
    cluster_index: int
    member_count: int
    d_value: float


@dataclass(frozen=True)
class PrecisionReport:
    clusters: tuple
    eval_dims: int


def _as_array(data) -> np.ndarray:
    if isinstance(data, FeatureMatrix):
        data = data.rows
    return np.ascontiguousarray(data, dtype=np.float64)


def _kmeanspp(X: np.ndarray, k: int, rng) -> np.ndarray:
    n = X.shape[0]
    centers = np.empty((k, X.shape[1]), dtype=np.float64)
    centers[0] = X[rng.integers(n)]
    closest = ((X - centers[0]) ** 2).sum(axis=1)
    for i in range(1, k):
        total = closest.sum()
        if total > 0:
            idx = rng.choice(n, p=closest / total)
        else:
            idx = rng.integers(n)  # all remaining mass identical
        centers[i] = X[idx]
        closest = np.minimum(closest, ((X - centers[i]) ** 2).sum(axis=1))
    return centers


def kmeans(data, k: int, seed: int, tol: float = 1e-6, max_iter: int = 300) -> ClusterModel:
    X = _as_array(data)
    n = X.shape[0]
    if k < 1:
        raise ValueError("k must be at least 1")
    if k > n:
        raise KTooLarge(f"k={k} exceeds {n} points")
    if tol <= 0:
        raise ValueError("tol must be positive")
    rng = np.random.default_rng(seed)
    centers = _kmeanspp(X, k, rng)

    history = []
    iterations = 0
    for _ in range(max_iter):
        iterations += 1
        labels, sqd = kernels.assign_clusters(X, centers)
        inertia = float(sqd.sum())
        if history and inertia > history[-1] + 1e-9 * max(1.0, abs(history[-1])):
            raise RuntimeError("inertia increased during Lloyd iteration")
        history.append(inertia)

        counts = np.bincount(labels, minlength=k).astype(np.float64)
        sums = np.zeros_like(centers)
        np.add.at(sums, labels, X)
        new_centers = np.where(counts[:, None] > 0, sums / np.maximum(counts[:, None], 1.0), centers)
        # A cluster that lost all members grabs the point farthest from its
        # current centroid; repeated for several empties, without reuse.
        far_pool = sqd.copy()
        for c in np.flatnonzero(counts == 0):
            far_idx = int(np.argmax(far_pool))
            new_centers[c] = X[far_idx]
            far_pool[far_idx] = -1.0

        shift = float(np.sqrt(((new_centers - centers) ** 2).sum(axis=1)).max())
        centers = np.ascontiguousarray(new_centers)
        if shift < tol:
            break

    labels, sqd = kernels.assign_clusters(X, centers)
    inertia = float(sqd.sum())
    history.append(inertia)
    return ClusterModel(k, centers, labels, inertia, seed, iterations, tuple(history))


def cluster_sizes(model: ClusterModel) -> np.ndarray:
    return np.bincount(model.assignments, minlength=model.k)


def top_clusters(model: ClusterModel, top: int = 4) -> list:
    """Cluster indices by member count, largest first, ties to lower index."""
    counts = cluster_sizes(model)
    return sorted(range(model.k), key=lambda c: (-counts[c], c))[:top]


def cluster_precision(model: ClusterModel, eval_space, top: int = 4) -> PrecisionReport:
    """Normalized mean pairwise member distance for the largest clusters.

    eval_space rows must align with model.assignments; it may be wider
    than the space the model was fitted in, which is exactly how the
    information-loss comparison evaluates both architectures in one
    common space.
    """
    X = _as_array(eval_space)
    if X.shape[0] != model.assignments.shape[0]:
        raise DimensionMismatch(f"{X.shape[0]} eval rows vs {model.assignments.shape[0]} assignments")
    counts = cluster_sizes(model)
    scale = math.sqrt(X.shape[1])
    out = []
    for c in top_clusters(model, top):
        members = X[model.assignments == c]
        if members.shape[0] < 2:
            raise ClusterTooSmall(f"cluster {c} has {members.shape[0]} members")
        d_value = kernels.mean_pairwise_distance(members) / scale
        out.append(ClusterPrecision(c, int(counts[c]), d_value))
    return PrecisionReport(tuple(out), X.shape[1])
