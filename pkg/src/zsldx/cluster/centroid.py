"""Centroid-type models: k-means (k-means++ seeding, Lloyd updates) and diagonal GMM."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from ..errors import DataError
from .distance import as_matrix, pairwise_sqeuclidean
from .models import ClusterAssignment, ClusterResult

VAR_FLOOR = 1e-6


def _check_k(n, k):
    if k < 1 or k > n:
        raise DataError(f"need 1 <= k <= n, got k={k}, n={n}")


def kmeans_plusplus(X, k, rng) -> np.ndarray:
    """D^2-weighted seeding; returns the chosen row indices."""
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = pairwise_sqeuclidean(X, X[chosen])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(np.searchsorted(np.cumsum(d2), rng.random() * total, side="right"))
            nxt = min(nxt, n - 1)
        else:
            # all remaining mass is on already-chosen duplicates
            rest = np.setdiff1d(np.arange(n), chosen)
            nxt = int(rest[rng.integers(len(rest))])
        chosen.append(nxt)
        d2 = np.minimum(d2, pairwise_sqeuclidean(X, X[[nxt]])[:, 0])
    return np.array(chosen, dtype=np.intp)


def _assign(X, C):
    d2 = pairwise_sqeuclidean(X, C)
    labels = np.argmin(d2, axis=1)
    return labels, float(d2[np.arange(X.shape[0]), labels].sum())


def kmeans_fit(X, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-8):
    """Lloyd's algorithm from k-means++ seeds.

    Stops at an assignment fixpoint, when no centroid moves more than ``tol``,
    or after ``max_iter`` updates.  ``extra["objective_trace"]`` holds the
    within-cluster sum of squares after every assignment step; it never
    increases.  A cluster that loses all its points keeps its old centroid.
    """
    X = as_matrix(X)
    n = X.shape[0]
    _check_k(n, k)
    rng = np.random.default_rng(seed)
    C = X[kmeans_plusplus(X, k, rng)].copy()
    labels, obj = _assign(X, C)
    trace = [obj]
    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        newC = C.copy()
        for c in range(k):
            members = X[labels == c]
            if len(members):
                newC[c] = members.mean(axis=0)
        shift = float(np.sqrt(np.max(np.sum((newC - C) ** 2, axis=1))))
        C = newC
        new_labels, obj = _assign(X, C)
        trace.append(obj)
        done = np.array_equal(new_labels, labels) or shift < tol
        labels = new_labels
        if done:
            break
    return ClusterResult(
        "kmeans",
        ClusterAssignment(labels, k),
        C,
        trace[-1],
        params={"k": k, "max_iter": max_iter, "tol": tol},
        seed=seed,
        extra={"objective_trace": trace, "n_iter": n_iter},
    )


@dataclass
class GmmModel:
    weights: np.ndarray
    means: np.ndarray
    variances: np.ndarray
    log_likelihood_trace: list = field(default_factory=list)

    def log_resp(self, X):
        """Per-sample log responsibilities and per-sample log-likelihood."""
        lp = _log_joint(X, self.weights, self.means, self.variances)
        ll = logsumexp(lp, axis=1)
        return lp - ll[:, None], ll

    def predict_proba(self, X):
        return np.exp(self.log_resp(np.atleast_2d(X))[0])


def _log_joint(X, w, mu, var):
    # log w_c + log N(x | mu_c, diag(var_c)) for every (sample, component)
    d = X.shape[1]
    diff2 = (X[:, None, :] - mu[None, :, :]) ** 2 / var[None, :, :]
    return (
        np.log(w)[None, :]
        - 0.5 * (d * math.log(2 * math.pi) + np.sum(np.log(var), axis=1))[None, :]
        - 0.5 * diff2.sum(axis=2)
    )


def _m_step(X, R, var_floor):
    nk = R.sum(axis=0)
    nk_safe = np.maximum(nk, np.finfo(float).tiny)
    w = nk / nk.sum()
    mu = (R.T @ X) / nk_safe[:, None]
    # centred form; E[x^2] - mu^2 can go negative from cancellation
    var = np.einsum("nc,ncd->cd", R, (X[:, None, :] - mu[None, :, :]) ** 2) / nk_safe[:, None]
    return w, mu, np.maximum(var, var_floor)


def gmm_fit(X, k: int, seed: int = 0, max_iter: int = 300, tol: float = 1e-8, var_floor: float = VAR_FLOOR):
    """EM for a diagonal-covariance Gaussian mixture, initialized from k-means.

    The log-likelihood in the trace is the mean per sample, so ``tol`` is
    independent of ``n``.  Iteration stops once an E/M round gains less than
    ``tol``.  Hard labels are the argmax responsibility.
    """
    X = as_matrix(X)
    n = X.shape[0]
    _check_k(n, k)
    km = kmeans_fit(X, k, seed=seed, max_iter=max_iter)
    R = np.zeros((n, k))
    R[np.arange(n), km.labels] = 1.0
    w, mu, var = _m_step(X, R, var_floor)
    w = np.maximum(w, np.finfo(float).tiny)
    w = w / w.sum()

    trace = []
    for _ in range(max_iter):
        lp = _log_joint(X, w, mu, var)
        ll = logsumexp(lp, axis=1)
        trace.append(float(ll.mean()))
        if len(trace) > 1 and trace[-1] - trace[-2] < tol:
            break
        R = np.exp(lp - ll[:, None])
        w, mu, var = _m_step(X, R, var_floor)
        w = np.maximum(w, np.finfo(float).tiny)
        w = w / w.sum()
    # final parameters are the ones the last trace entry was computed with
    model = GmmModel(w, mu, var, trace)
    log_r, _ = model.log_resp(X)
    labels = np.argmax(log_r, axis=1)
    return ClusterResult(
        "gmm",
        ClusterAssignment(labels, k),
        mu.copy(),
        trace[-1],
        params={"k": k, "max_iter": max_iter, "tol": tol, "var_floor": var_floor},
        seed=seed,
        extra={"model": model, "responsibilities": np.exp(log_r)},
    )
