from __future__ import annotations

import itertools

import numpy as np
from scipy.optimize import linear_sum_assignment

from ..errors import DataError

EXHAUSTIVE_MAX_K = 8


def contingency(labels, truth_codes, k, n_labels) -> np.ndarray:
    M = np.zeros((k, n_labels), dtype=np.int64)
    np.add.at(M, (labels, truth_codes), 1)
    return M


def map_clusters(assignment, true_labels):
    """Accuracy-maximizing injective map from cluster ids to ground-truth labels.

    Exhaustive over injections for k <= 8, Hungarian assignment beyond.  With
    more clusters than labels some clusters stay unmapped (``None``).  Among
    equally good maps the first in enumeration order (sorted labels) wins.

    Returns ``(mapping, predictions)``: ``mapping[c]`` is the label of cluster
    ``c``; ``predictions`` is the mapped label of every sample.
    """
    labels = np.asarray(getattr(assignment, "labels", assignment), dtype=np.intp)
    true_labels = list(true_labels)
    if labels.size == 0:
        raise DataError("map_clusters needs at least one sample")
    if labels.size != len(true_labels):
        raise DataError("assignment and labels differ in length")
    k = int(getattr(assignment, "k", labels.max() + 1))
    names = sorted(set(true_labels))
    code = {name: i for i, name in enumerate(names)}
    truth = np.array([code[t] for t in true_labels], dtype=np.intp)
    M = contingency(labels, truth, k, len(names))

    if k <= EXHAUSTIVE_MAX_K:
        best, best_score = None, -1
        if k <= len(names):
            for perm in itertools.permutations(range(len(names)), k):
                score = sum(M[c, perm[c]] for c in range(k))
                if score > best_score:
                    best, best_score = {c: perm[c] for c in range(k)}, score
        else:
            for clusters in itertools.permutations(range(k), len(names)):
                score = sum(M[clusters[j], j] for j in range(len(names)))
                if score > best_score:
                    best, best_score = {clusters[j]: j for j in range(len(names))}, score
        chosen = best
    else:
        rows, cols = linear_sum_assignment(-M)
        chosen = dict(zip(rows.tolist(), cols.tolist()))

    mapping = [names[chosen[c]] if c in chosen else None for c in range(k)]
    predictions = [mapping[c] for c in labels]
    return mapping, predictions


def mapped_accuracy(assignment, true_labels) -> float:
    _, pred = map_clusters(assignment, true_labels)
    return sum(p == t for p, t in zip(pred, true_labels)) / len(pred)
