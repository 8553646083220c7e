"""K-modes on binarized embeddings (Hamming dissimilarity, majority modes)."""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..errors import DataError
from ..ingest import EmbeddingSet
from .distance import as_matrix, pairwise_hamming
from .models import ClusterAssignment, ClusterResult


def binarize_thresholds(X) -> np.ndarray:
    """Per-coordinate cut points: the median, or 0.5 for columns already binary.

    Columns that hold both 0 and 1 and nothing else are left as they are,
    which makes binarization idempotent.
    """
    X = as_matrix(X)
    if X.shape[0] == 0:
        raise DataError("cannot binarize an empty set")
    thr = np.median(X, axis=0)
    is01 = np.all((X == 0) | (X == 1), axis=0) & np.any(X == 0, axis=0) & np.any(X == 1, axis=0)
    thr[is01] = 0.5
    return thr


def binarize(X, thresholds=None):
    """``x > threshold -> 1`` per coordinate.

    ``X`` may be an EmbeddingSet (returns an EmbeddingSet) or a 2-D array.
    """
    arr = as_matrix(X)
    if thresholds is None:
        thresholds = binarize_thresholds(arr)
    B = (arr > thresholds).astype(np.float64)
    if isinstance(X, EmbeddingSet):
        return EmbeddingSet(X.dimension, X.ids, X.labels, B)
    return B.astype(np.int8)


def majority_mode(rows) -> np.ndarray:
    rows = np.asarray(rows)
    # strict majority -> 1; a tie goes to 0
    return (2 * rows.sum(axis=0) > rows.shape[0]).astype(np.int8)


def _check_binary(B):
    if not np.all((B == 0) | (B == 1)):
        raise DataError("kmodes needs binary input; call binarize() first")


def _run(B, modes, max_iter):
    k = modes.shape[0]
    labels = np.argmin(pairwise_hamming(B, modes), axis=1)
    for _ in range(max_iter):
        new_modes = modes.copy()
        for c in range(k):
            members = B[labels == c]
            if len(members):
                new_modes[c] = majority_mode(members)
        dist = pairwise_hamming(B, new_modes)
        new_labels = np.argmin(dist, axis=1)
        converged = np.array_equal(new_labels, labels) and np.array_equal(new_modes, modes)
        modes, labels = new_modes, new_labels
        if converged:
            break
    cost = int(pairwise_hamming(B, modes)[np.arange(B.shape[0]), labels].sum())
    return modes, labels, cost


def _initial_modes(uniq, k, n_init, rng):
    """Up to ``n_init`` distinct k-subsets of the distinct rows.

    When there are no more than ``n_init`` subsets in total all of them are
    used, in lexicographic order, so no restart repeats another.
    """
    u = len(uniq)
    if u < k:
        pad = np.repeat(uniq[:1], k - u, axis=0)
        return [np.vstack([uniq, pad])]
    if math.comb(u, k) <= n_init:
        return [uniq[list(c)].copy() for c in itertools.combinations(range(u), k)]
    seen, out = set(), []
    while len(out) < n_init:
        pick = tuple(np.sort(rng.choice(u, size=k, replace=False)).tolist())
        if pick not in seen:
            seen.add(pick)
            out.append(uniq[list(pick)].copy())
    return out


def kmodes_fit(X_binary, k: int, seed: int = 0, max_iter: int = 100, n_init: int = 10) -> ClusterResult:
    """Alternating k-modes with ``n_init`` seeded restarts; the lowest cost wins
    (earliest restart on ties).  Initial modes are distinct data rows and no
    two restarts share an initialization.  When the data has fewer than
    ``k`` distinct rows the surplus modes repeat one and stay empty.
    """
    B = as_matrix(X_binary)
    n = B.shape[0]
    if k < 1 or k > n:
        raise DataError(f"need 1 <= k <= n, got k={k}, n={n}")
    if n_init < 1:
        raise DataError("n_init must be >= 1")
    _check_binary(B)
    B = B.astype(np.int8)
    uniq = np.unique(B, axis=0)
    rng = np.random.default_rng(seed)
    best = None
    for modes in _initial_modes(uniq, k, n_init, rng):
        run = _run(B, modes, max_iter)
        if best is None or run[2] < best[2]:
            best = run
    modes, labels, cost = best
    return ClusterResult(
        "kmodes",
        ClusterAssignment(labels, k),
        modes,
        float(cost),
        params={"k": k, "max_iter": max_iter, "n_init": n_init},
        seed=seed,
        metric="hamming",
    )
