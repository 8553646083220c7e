import math

import numpy as np
from scipy.spatial.distance import cdist

from ..errors import DataError


def euclidean(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DataError(f"dimension mismatch: {x.shape} vs {y.shape}")
    return math.sqrt(float(np.sum((x - y) ** 2)))


def pairwise_euclidean(A, B=None) -> np.ndarray:
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = A if B is None else np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise DataError(f"dimension mismatch: {A.shape[1]} vs {B.shape[1]}")
    return cdist(A, B, "euclidean")


def pairwise_sqeuclidean(A, B) -> np.ndarray:
    # explicit differences rather than the |a|^2 - 2ab + |b|^2 expansion,
    # which loses precision when points are close
    diff = A[:, None, :] - B[None, :, :]
    return np.einsum("ijk,ijk->ij", diff, diff)


def pairwise_hamming(A, B) -> np.ndarray:
    A = np.asarray(A)
    B = np.asarray(B)
    return (A[:, None, :] != B[None, :, :]).sum(axis=2)


def as_matrix(X) -> np.ndarray:
    """Accept an EmbeddingSet or anything array-like; return a 2-D float array."""
    vecs = getattr(X, "vectors", X)
    arr = np.asarray(vecs, dtype=np.float64)
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.ndim != 2:
        raise DataError("expected a 2-D array of samples")
    return arr
