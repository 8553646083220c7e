"""Medoid partitioning: PAM (BUILD + SWAP), alternating k-medoids, and CLARA."""

from __future__ import annotations

import numpy as np

from ..errors import DataError
from . import kernels
from .distance import as_matrix, pairwise_euclidean
from .models import ClusterAssignment, ClusterResult


def _check(n, k):
    if k < 1 or k > n:
        raise DataError(f"need 1 <= k <= n, got k={k}, n={n}")


def _assign_to_medoids(D_to_med, medoids=None):
    """Nearest-medoid labels (lowest position wins ties) and total cost."""
    labels = np.argmin(D_to_med, axis=1)
    if medoids is not None:
        # a medoid always belongs to its own cluster, even with duplicate points
        labels[medoids] = np.arange(len(medoids))
    cost = float(D_to_med[np.arange(D_to_med.shape[0]), labels].sum())
    return labels, cost


def _canonical(medoids, D):
    medoids = np.sort(np.asarray(medoids, dtype=np.intp))
    labels, cost = _assign_to_medoids(D[:, medoids], medoids)
    return medoids, labels, cost


def pam_build(D, k) -> np.ndarray:
    """Greedy BUILD: each new medoid is the point that lowers total cost the most."""
    n = D.shape[0]
    medoids = [int(np.argmin(D.sum(axis=1)))]
    dnear = D[:, medoids[0]].copy()
    for _ in range(1, k):
        totals = np.minimum(dnear[:, None], D).sum(axis=0)
        totals[medoids] = np.inf
        h = int(np.argmin(totals))
        medoids.append(h)
        dnear = np.minimum(dnear, D[:, h])
    return np.array(medoids, dtype=np.intp)


def pam_swap(D, medoids, max_iter=100, backend=None):
    """Best-improvement SWAP until no swap lowers the cost."""
    medoids = np.array(medoids, dtype=np.intp)
    n, k = D.shape[0], len(medoids)
    rows = np.arange(n)
    n_swaps = 0
    for _ in range(max_iter):
        Dm = D[:, medoids]
        order = np.argsort(Dm, axis=1, kind="stable")
        nearest = order[:, 0]
        dnear = Dm[rows, nearest]
        dsecond = Dm[rows, order[:, 1]] if k > 1 else np.full(n, np.inf)
        delta = kernels.pam_swap_deltas(D, medoids, nearest, dnear, dsecond, backend=backend)
        i, h = np.unravel_index(int(np.argmin(delta)), delta.shape)
        cost = float(dnear.sum())
        if not delta[i, h] < -1e-12 * (1.0 + cost):
            break
        medoids[i] = h
        n_swaps += 1
    return medoids, n_swaps


def _pam_matrix(D, k, max_iter, backend=None):
    built = pam_build(D, k)
    build_cost = float(D[:, built].min(axis=1).sum())
    swapped, n_swaps = pam_swap(D, built, max_iter, backend=backend)
    medoids, labels, cost = _canonical(swapped, D)
    return medoids, labels, cost, build_cost, n_swaps


def pam_fit(X, k: int, seed: int = 0, max_iter: int = 100, backend: str | None = None) -> ClusterResult:
    """Partitioning Around Medoids.  Deterministic; ``seed`` is recorded only."""
    X = as_matrix(X)
    _check(X.shape[0], k)
    D = pairwise_euclidean(X)
    medoids, labels, cost, build_cost, n_swaps = _pam_matrix(D, k, max_iter, backend)
    return ClusterResult(
        "pam",
        ClusterAssignment(labels, k),
        X[medoids].copy(),
        cost,
        params={"k": k, "max_iter": max_iter},
        seed=seed,
        medoid_indices=medoids,
        extra={"build_cost": build_cost, "n_swaps": n_swaps},
    )


def kmedoids_step(D, medoids):
    """One assign + medoid-update round; returns the new sorted medoids."""
    labels, _ = _assign_to_medoids(D[:, medoids], medoids)
    new = np.empty_like(medoids)
    for c in range(len(medoids)):
        members = np.flatnonzero(labels == c)
        within = D[np.ix_(members, members)].sum(axis=1)
        new[c] = members[int(np.argmin(within))]
    return np.sort(new)


def kmedoids_fit(X, k: int, seed: int = 0, max_iter: int = 300, init=None) -> ClusterResult:
    """Alternating k-medoids: assign to nearest medoid, re-pick each cluster's
    cost-minimizing member, repeat to a fixpoint.  Initial medoids are drawn
    at random (seeded) unless ``init`` gives their indices.
    """
    X = as_matrix(X)
    n = X.shape[0]
    _check(n, k)
    D = pairwise_euclidean(X)
    if init is None:
        medoids = np.sort(np.random.default_rng(seed).choice(n, size=k, replace=False))
    else:
        medoids = np.sort(np.asarray(init, dtype=np.intp))
        if len(np.unique(medoids)) != k:
            raise DataError("init must hold k distinct indices")
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new = kmedoids_step(D, medoids)
        if np.array_equal(new, medoids):
            break
        medoids = new
    medoids, labels, cost = _canonical(medoids, D)
    return ClusterResult(
        "kmedoids",
        ClusterAssignment(labels, k),
        X[medoids].copy(),
        cost,
        params={"k": k, "max_iter": max_iter},
        seed=seed,
        medoid_indices=medoids,
        extra={"n_iter": n_iter},
    )


def clara_fit(
    X,
    k: int,
    sample_size: int | None = None,
    n_samples: int = 5,
    seed: int = 0,
    max_iter: int = 100,
    backend: str | None = None,
) -> ClusterResult:
    """CLARA: PAM on seeded subsamples, keep the medoids best on the full data.

    Default ``sample_size`` is ``40 + 2k``.  Earlier samples win cost ties.
    """
    X = as_matrix(X)
    n = X.shape[0]
    _check(n, k)
    if sample_size is None:
        sample_size = 40 + 2 * k
    if sample_size < k or n_samples < 1:
        raise DataError("need sample_size >= k and n_samples >= 1")
    rng = np.random.default_rng(seed)
    m = min(sample_size, n)
    best = None
    for _ in range(n_samples):
        idx = np.arange(n) if m == n else np.sort(rng.choice(n, size=m, replace=False))
        Xs = X[idx]
        med_local, _, _, _, _ = _pam_matrix(pairwise_euclidean(Xs), k, max_iter, backend)
        med = np.sort(idx[med_local])
        D_to_med = pairwise_euclidean(X, X[med])
        labels, cost = _assign_to_medoids(D_to_med, med)
        if best is None or cost < best[2]:
            best = (med, labels, cost)
    med, labels, cost = best
    return ClusterResult(
        "clara",
        ClusterAssignment(labels, k),
        X[med].copy(),
        cost,
        params={"k": k, "sample_size": sample_size, "n_samples": n_samples, "max_iter": max_iter},
        seed=seed,
        medoid_indices=med,
    )
