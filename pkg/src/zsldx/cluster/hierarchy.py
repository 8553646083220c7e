"""Bottom-up (agglomerative) clustering with Lance-Williams distance updates."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import DataError
from . import kernels
from .distance import as_matrix, pairwise_euclidean
from .models import ClusterAssignment, ClusterResult, centroids_of

LINKAGES = {"single": 0, "complete": 1, "average": 2, "ward": 3}


@dataclass
class Dendrogram:
    """Merge list ``(cluster_a, cluster_b, distance, new_cluster_id)``, ``a < b``.

    Leaves are ``0..n-1``; the ``s``-th merge creates cluster ``n + s``.
    """

    merges: list
    n_leaves: int

    def distances(self) -> np.ndarray:
        return np.array([m[2] for m in self.merges])

    def cut(self, k: int) -> np.ndarray:
        """Flat labels after replaying the first ``n - k`` merges.

        Clusters are numbered by their smallest leaf, so point 0 is in cluster 0.
        """
        n = self.n_leaves
        if not 1 <= k <= n:
            raise DataError(f"cannot cut {n} leaves into {k} clusters")
        parent = list(range(2 * n - 1))

        def find(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        for a, b, _, new in self.merges[: n - k]:
            parent[find(a)] = new
            parent[find(b)] = new
        roots = {}
        labels = np.empty(n, dtype=np.intp)
        for i in range(n):
            labels[i] = roots.setdefault(find(i), len(roots))
        return labels


def linkage_tree(X, linkage: str = "ward", backend: str | None = None) -> Dendrogram:
    X = as_matrix(X)
    if linkage not in LINKAGES:
        raise DataError(f"unknown linkage {linkage!r}; choose from {sorted(LINKAGES)}")
    if X.shape[0] < 1:
        raise DataError("need at least one point")
    raw = kernels.linkage_merges(pairwise_euclidean(X), LINKAGES[linkage], backend=backend)
    merges = [(int(a), int(b), float(d), int(c)) for a, b, d, c in raw]
    return Dendrogram(merges, X.shape[0])


def agg_fit(X, k: int, linkage: str = "ward", backend: str | None = None):
    """Agglomerative clustering cut at ``k`` clusters.

    Returns ``(Dendrogram, ClusterResult)``; the result's centers are the
    member centroids of each flat cluster.
    """
    X = as_matrix(X)
    n = X.shape[0]
    if k < 1 or k > n:
        raise DataError(f"need 1 <= k <= n, got k={k}, n={n}")
    tree = linkage_tree(X, linkage, backend=backend)
    labels = tree.cut(k)
    centers = centroids_of(X, labels, k)
    height = tree.merges[n - k - 1][2] if n > k else 0.0
    result = ClusterResult(
        "agg",
        ClusterAssignment(labels, k),
        centers,
        height,
        params={"k": k, "linkage": linkage},
        extra={"dendrogram": tree},
    )
    return tree, result
