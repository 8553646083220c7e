from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import DataError
from .distance import pairwise_hamming, pairwise_sqeuclidean


@dataclass
class ClusterAssignment:
    labels: np.ndarray
    k: int

    def __post_init__(self):
        self.labels = np.asarray(self.labels, dtype=np.intp)
        if self.k < 1:
            raise DataError("k must be >= 1")
        if self.labels.size and (self.labels.min() < 0 or self.labels.max() >= self.k):
            raise DataError("cluster label out of range")

    def __len__(self):
        return self.labels.size

    def members(self, c) -> np.ndarray:
        return np.flatnonzero(self.labels == c)


@dataclass
class ClusterResult:
    """Fitted state of any clustering algorithm, plus the training assignment.

    ``centers`` are the per-cluster representatives used for out-of-sample
    assignment: centroids (kmeans, agg), component means (gmm), medoid
    vectors (pam, clara, kmedoids) or binary modes (kmodes).
    """

    algorithm: str
    assignment: ClusterAssignment
    centers: np.ndarray
    cost_or_loglik: float
    params: dict = field(default_factory=dict)
    seed: int | None = None
    medoid_indices: np.ndarray | None = None
    metric: str = "euclidean"
    thresholds: np.ndarray | None = None  # kmodes binarization of new points
    extra: dict = field(default_factory=dict)

    @property
    def labels(self) -> np.ndarray:
        return self.assignment.labels

    @property
    def k(self) -> int:
        return self.assignment.k

    def transform(self, X) -> np.ndarray:
        """Map raw points into the space the centers live in."""
        X = np.atleast_2d(np.asarray(X, dtype=np.float64))
        if X.shape[1] != self.centers.shape[1]:
            raise DataError(f"dimension mismatch: model {self.centers.shape[1]}, data {X.shape[1]}")
        if self.thresholds is not None:
            return (X > self.thresholds).astype(np.int8)
        return X

    def center_distances(self, X) -> np.ndarray:
        Z = self.transform(X)
        if self.metric == "hamming":
            return pairwise_hamming(Z, self.centers).astype(np.float64)
        return np.sqrt(pairwise_sqeuclidean(Z, self.centers))

    def predict(self, X) -> np.ndarray:
        """Nearest representative; ties go to the lowest cluster id."""
        return np.argmin(self.center_distances(X), axis=1)

    def to_dict(self) -> dict:
        if self.medoid_indices is not None:
            centers = [int(i) for i in self.medoid_indices]
        elif self.metric == "hamming":
            centers = [[int(v) for v in row] for row in self.centers]
        else:
            centers = [[float(v) for v in row] for row in self.centers]
        return {
            "algorithm": self.algorithm,
            "params": dict(self.params),
            "seed": self.seed,
            "assignment": [int(v) for v in self.labels],
            "cost_or_loglik": float(self.cost_or_loglik),
            "centers_or_medoids": centers,
        }


def centroids_of(X, labels, k) -> np.ndarray:
    C = np.zeros((k, X.shape[1]))
    for c in range(k):
        members = X[labels == c]
        if len(members):
            C[c] = members.mean(axis=0)
    return C
