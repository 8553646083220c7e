"""Clustering suite: k-means, diagonal GMM, agglomerative, PAM, CLARA, k-medoids, k-modes."""

from ..errors import DataError
from .centroid import GmmModel, gmm_fit, kmeans_fit, kmeans_plusplus
from .distance import euclidean, pairwise_euclidean
from .hierarchy import LINKAGES, Dendrogram, agg_fit, linkage_tree
from .kmodes import binarize, binarize_thresholds, kmodes_fit, majority_mode
from .mapping import map_clusters, mapped_accuracy
from .medoids import clara_fit, kmedoids_fit, pam_build, pam_fit, pam_swap
from .models import ClusterAssignment, ClusterResult

ALGORITHMS = ("kmeans", "gmm", "agg", "clara", "kmodes", "pam", "kmedoids")

__all__ = [
    "ALGORITHMS",
    "ClusterAssignment",
    "ClusterResult",
    "Dendrogram",
    "GmmModel",
    "LINKAGES",
    "agg_fit",
    "binarize",
    "binarize_thresholds",
    "clara_fit",
    "euclidean",
    "fit_clusterer",
    "gmm_fit",
    "kmeans_fit",
    "kmeans_plusplus",
    "kmedoids_fit",
    "kmodes_fit",
    "linkage_tree",
    "majority_mode",
    "map_clusters",
    "mapped_accuracy",
    "pairwise_euclidean",
    "pam_build",
    "pam_fit",
    "pam_swap",
]


def fit_clusterer(algorithm: str, X, k: int = 2, seed: int = 0, **params) -> ClusterResult:
    """Fit any suite algorithm by name.

    ``kmodes`` binarizes continuous input with per-coordinate medians of the
    training data and keeps those thresholds so ``predict`` can map new points.
    """
    if algorithm == "kmeans":
        return kmeans_fit(X, k, seed=seed, **params)
    if algorithm == "gmm":
        return gmm_fit(X, k, seed=seed, **params)
    if algorithm == "agg":
        _, result = agg_fit(X, k, **params)
        result.seed = seed
        return result
    if algorithm == "pam":
        return pam_fit(X, k, seed=seed, **params)
    if algorithm == "kmedoids":
        return kmedoids_fit(X, k, seed=seed, **params)
    if algorithm == "clara":
        return clara_fit(X, k, seed=seed, **params)
    if algorithm == "kmodes":
        thr = binarize_thresholds(X)
        result = kmodes_fit(binarize(getattr(X, "vectors", X), thr), k, seed=seed, **params)
        result.thresholds = thr
        return result
    raise DataError(f"unknown algorithm {algorithm!r}; choose from {', '.join(ALGORITHMS)}")
