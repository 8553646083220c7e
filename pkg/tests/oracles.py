"""Slow, obviously-correct reference implementations used only by tests.

None of these share code with the package under test.
"""

import itertools
import math


def dist(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def single_linkage_merges(points):
    """Naive agglomeration: recompute min point-pair distance between every
    pair of current clusters at every step.  Ties -> smallest (id_a, id_b).
    """
    n = len(points)
    clusters = {i: [i] for i in range(n)}
    merges = []
    next_id = n
    while len(clusters) > 1:
        best = None
        for a, b in itertools.combinations(sorted(clusters), 2):
            d = min(dist(points[i], points[j]) for i in clusters[a] for j in clusters[b])
            key = (d, a, b)
            if best is None or key < best:
                best = key
        d, a, b = best
        clusters[next_id] = clusters.pop(a) + clusters.pop(b)
        merges.append((a, b, d, next_id))
        next_id += 1
    return merges


def partition_after(merges, n, k):
    groups = {i: frozenset([i]) for i in range(n)}
    for a, b, _, new in merges[: n - k]:
        groups[new] = groups.pop(a) | groups.pop(b)
    return set(groups.values())


def best_medoid_cost(points, k):
    n = len(points)
    best = math.inf
    for meds in itertools.combinations(range(n), k):
        cost = sum(min(dist(points[j], points[m]) for m in meds) for j in range(n))
        best = min(best, cost)
    return best


def hamming_partition_cost(rows, groups):
    total = 0
    for g in groups:
        for bit in range(len(rows[0])):
            ones = sum(rows[i][bit] for i in g)
            total += min(ones, len(g) - ones)
    return total


def best_two_partition_hamming(rows):
    """Minimum total Hamming-to-mode cost over all splits into two non-empty groups."""
    n = len(rows)
    best = math.inf
    for mask in range(1, 2 ** (n - 1)):
        g0 = [i for i in range(n) if mask >> i & 1]
        g1 = [i for i in range(n) if not mask >> i & 1]
        best = min(best, hamming_partition_cost(rows, [g0, g1]))
    return best


def auc_pair_count(scores, labels):
    pos = [s for s, y in zip(scores, labels) if y == 1]
    neg = [s for s, y in zip(scores, labels) if y == 0]
    wins = 0.0
    for p in pos:
        for q in neg:
            wins += 1.0 if p > q else 0.5 if p == q else 0.0
    return wins / (len(pos) * len(neg))


def best_mapping_accuracy(assignment, labels):
    k = int(max(assignment)) + 1
    names = sorted(set(labels))
    best = 0
    for perm in itertools.permutations(names + [None] * max(0, k - len(names)), k):
        hits = sum(perm[c] == t for c, t in zip(assignment, labels))
        best = max(best, hits)
    return best / len(labels)


def finite_difference_grad(loss, W, step=1e-5):
    import numpy as np

    G = np.zeros_like(W)
    for idx in np.ndindex(W.shape):
        Wp, Wm = W.copy(), W.copy()
        Wp[idx] += step
        Wm[idx] -= step
        G[idx] = (loss(Wp) - loss(Wm)) / (2 * step)
    return G
