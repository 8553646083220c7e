"""Siamese similarity head over precomputed embeddings.

A linear projection ``P`` (``p x d``) is trained with the contrastive loss

    L = 1/(2N) * sum_n  Y d^2 + (1 - Y) max(m - d, 0)^2,   d = ||P x1 - P x2||_2

and a logistic scorer ``sigmoid(w . |P x1 - P x2| + b)`` is then fitted on the
frozen projections to turn a pair into a similarity probability.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .errors import DataError
from .ingest import EmbeddingSet

__all__ = [
    "SiameseHead",
    "TrainConfig",
    "SimilarityMatrix",
    "l2_distance",
    "contrastive_loss",
    "contrastive_grad",
    "pair_distances",
    "sample_pairs",
    "train_head",
    "pair_score",
    "similarity_matrix",
    "most_similar",
]


def l2_distance(x, y) -> float:
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DataError(f"length mismatch: {x.shape} vs {y.shape}")
    return float(math.sqrt(np.sum((x - y) ** 2)))


def contrastive_loss(distances, matches, margin: float = 1.0) -> float:
    """Mean contrastive loss over pairs given their distances and 0/1 match labels."""
    d = np.asarray(distances, dtype=np.float64).ravel()
    y = np.asarray(matches, dtype=np.float64).ravel()
    if d.size == 0:
        raise DataError("contrastive_loss needs at least one pair")
    if d.shape != y.shape:
        raise DataError("distances and matches differ in length")
    if margin <= 0:
        raise DataError("margin must be positive")
    if np.any(d < 0):
        raise DataError("distances must be non-negative")
    hinge = np.maximum(margin - d, 0.0)
    return float(np.sum(y * d * d + (1.0 - y) * hinge * hinge) / (2.0 * d.size))


@dataclass
class SiameseHead:
    projection: np.ndarray  # (p, d)
    scorer_weights: np.ndarray  # (p,)
    scorer_bias: float = 0.0
    margin: float = 1.0

    def __post_init__(self):
        self.projection = np.atleast_2d(np.asarray(self.projection, dtype=np.float64))
        self.scorer_weights = np.asarray(self.scorer_weights, dtype=np.float64).ravel()
        self.scorer_bias = float(self.scorer_bias)
        if self.scorer_weights.shape[0] != self.projection.shape[0]:
            raise DataError("scorer_weights length must equal projected_dim")
        if not (np.all(np.isfinite(self.projection)) and np.all(np.isfinite(self.scorer_weights))
                and math.isfinite(self.scorer_bias)):
            raise DataError("head has non-finite parameters")

    @property
    def projected_dim(self) -> int:
        return self.projection.shape[0]

    @property
    def input_dim(self) -> int:
        return self.projection.shape[1]

    def project(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64)
        if X.shape[-1] != self.input_dim:
            raise DataError(f"dimension mismatch: head expects {self.input_dim}, got {X.shape[-1]}")
        return X @ self.projection.T

    def to_dict(self) -> dict:
        return {
            "projected_dim": self.projected_dim,
            "input_dim": self.input_dim,
            "projection": [float(v) for v in self.projection.ravel()],
            "scorer_weights": [float(v) for v in self.scorer_weights],
            "scorer_bias": self.scorer_bias,
            "margin": float(self.margin),
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "SiameseHead":
        try:
            p, d = int(obj["projected_dim"]), int(obj["input_dim"])
            proj = np.asarray(obj["projection"], dtype=np.float64)
            if proj.size != p * d:
                raise DataError(f"projection has {proj.size} entries, expected {p * d}")
            return cls(proj.reshape(p, d), obj["scorer_weights"], obj["scorer_bias"], obj["margin"])
        except (KeyError, TypeError, ValueError) as exc:
            raise DataError(f"malformed head: {exc}") from None

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "SiameseHead":
        try:
            with open(path, "r", encoding="utf-8") as fh:
                return cls.from_dict(json.load(fh))
        except (OSError, json.JSONDecodeError) as exc:
            raise DataError(f"cannot read head {path}: {exc}") from None


@dataclass(frozen=True)
class TrainConfig:
    margin: float = 1.0
    learning_rate: float = 0.05
    epochs: int = 50
    batch_size: int = 32
    projected_dim: int | None = None  # None -> min(d, 32)
    seed: int = 0
    standardize: bool = True
    scorer_steps: int = 500
    scorer_learning_rate: float = 0.5

    def __post_init__(self):
        if not self.margin > 0:
            raise DataError("margin must be > 0")
        if not self.learning_rate > 0 or not self.scorer_learning_rate > 0:
            raise DataError("learning rates must be > 0")
        if self.epochs < 0 or self.scorer_steps < 0:
            raise DataError("epochs and scorer_steps must be >= 0")
        if self.batch_size < 1:
            raise DataError("batch_size must be >= 1")
        if self.projected_dim is not None and self.projected_dim < 1:
            raise DataError("projected_dim must be >= 1")


def pair_distances(W, x1, x2) -> np.ndarray:
    """Projected L2 distance of each row pair."""
    z = (np.asarray(x1) - np.asarray(x2)) @ np.asarray(W).T
    return np.sqrt(np.sum(z * z, axis=1))


def _batch_loss(W, x1, x2, y, margin):
    return contrastive_loss(pair_distances(W, x1, x2), y, margin)


def contrastive_grad(W, x1, x2, y, margin: float = 1.0) -> np.ndarray:
    """Gradient of the batch contrastive loss with respect to the projection.

    ``W`` is a projection matrix or a :class:`SiameseHead`.  For a
    non-matching pair the hinge counts as active only while ``d < margin``;
    at ``d == margin`` (and at ``d == 0``, where ``d`` is not differentiable)
    that pair contributes nothing.
    """
    if isinstance(W, SiameseHead):
        W = W.projection
    W = np.asarray(W, dtype=np.float64)
    x1 = np.atleast_2d(np.asarray(x1, dtype=np.float64))
    x2 = np.atleast_2d(np.asarray(x2, dtype=np.float64))
    y = np.asarray(y, dtype=np.float64).ravel()
    if x1.shape != x2.shape or x1.shape[1] != W.shape[1]:
        raise DataError(f"dimension mismatch: W {W.shape}, pairs {x1.shape} / {x2.shape}")
    if x1.shape[0] == 0:
        raise DataError("empty batch")
    if y.shape[0] != x1.shape[0]:
        raise DataError("match labels and pairs differ in length")

    delta = x1 - x2
    z = delta @ W.T
    d = np.sqrt(np.sum(z * z, axis=1))
    active = (y == 0) & (d < margin) & (d > 0)
    coef = y.copy()
    coef[active] = -(margin - d[active]) / d[active]
    # d/dW of (1/2N) * sum(...) = (1/N) * sum coef_n z_n delta_n^T
    return (coef[:, None] * z).T @ delta / x1.shape[0]


def _by_class(labels):
    groups = {}
    for i, lab in enumerate(labels):
        groups.setdefault(lab, []).append(i)
    names = sorted(groups)
    return names, [np.array(groups[n], dtype=np.intp) for n in names]


def sample_pairs(groups, n_pairs: int, rng) -> tuple:
    """Balanced pair sample: first ``n_pairs // 2`` matching, the rest non-matching.

    ``groups`` is a list of index arrays, one per class, each with >= 2 members.
    Returns ``(i, j, y)`` index and label arrays.
    """
    k = len(groups)
    n_match = n_pairs // 2
    n_non = n_pairs - n_match
    sizes = np.array([len(g) for g in groups])
    offsets = np.concatenate([[0], np.cumsum(sizes)[:-1]])
    flat = np.concatenate(groups)

    # matching: class uniform, then two distinct members
    c = rng.integers(k, size=n_match)
    a = (rng.random(n_match) * sizes[c]).astype(np.intp)
    b = (rng.random(n_match) * (sizes[c] - 1)).astype(np.intp)
    b += b >= a
    # non-matching: two distinct classes uniform, one member each
    ca = rng.integers(k, size=n_non)
    cb = rng.integers(k - 1, size=n_non)
    cb += cb >= ca
    ma = (rng.random(n_non) * sizes[ca]).astype(np.intp)
    mb = (rng.random(n_non) * sizes[cb]).astype(np.intp)

    ii = np.concatenate([flat[offsets[c] + a], flat[offsets[ca] + ma]])
    jj = np.concatenate([flat[offsets[c] + b], flat[offsets[cb] + mb]])
    y = np.zeros(n_pairs)
    y[:n_match] = 1.0
    return ii, jj, y


def _training_groups(data: EmbeddingSet):
    labeled = [i for i, lab in enumerate(data.labels) if lab is not None]
    names, groups = _by_class([data.labels[i] for i in labeled])
    labeled = np.array(labeled, dtype=np.intp)
    groups = [labeled[g] for g in groups]
    if len(groups) < 2:
        raise DataError("training needs at least 2 labeled classes")
    for name, g in zip(names, groups):
        if len(g) < 2:
            raise DataError(f"class {name!r} has a single record; need >= 2")
    return names, groups


def init_head(input_dim: int, config: TrainConfig) -> SiameseHead:
    p = config.projected_dim or min(input_dim, 32)
    rng = np.random.default_rng(config.seed)
    bound = 1.0 / math.sqrt(input_dim)
    W = rng.uniform(-bound, bound, size=(p, input_dim))
    return SiameseHead(W, np.zeros(p), 0.0, config.margin)


def _fit_scorer(F, y, steps, lr):
    """Logistic regression by full-batch gradient descent on mean cross-entropy."""
    w = np.zeros(F.shape[1])
    b = 0.0
    n = F.shape[0]
    for _ in range(steps):
        r = expit(F @ w + b) - y
        w -= lr * (F.T @ r) / n
        b -= lr * float(np.sum(r)) / n
    return w, b


def train_head(data: EmbeddingSet, config: TrainConfig = TrainConfig()) -> SiameseHead:
    """Train projection then scorer on the labeled records of ``data``.

    With ``config.standardize`` the projection is learned on per-coordinate
    scaled inputs (unit standard deviation) and the scaling is folded back
    into the returned projection, so the head always consumes raw vectors.
    ``epochs == 0`` returns the initial head unchanged.
    """
    _, groups = _training_groups(data)
    head = init_head(data.dimension, config)
    if config.epochs == 0:
        return head

    rng = np.random.default_rng([config.seed, 1])
    X = data.vectors
    scale = np.ones(data.dimension)
    if config.standardize:
        members = np.concatenate(groups)
        sd = X[members].std(axis=0)
        scale = np.where(sd > 0, sd, 1.0)
    Xs = X / scale

    W = head.projection.copy()
    n_records = sum(len(g) for g in groups)
    bs = config.batch_size
    steps = max(1, math.ceil(n_records / bs))
    for _ in range(config.epochs):
        for _ in range(steps):
            i, j, y = sample_pairs(groups, bs, rng)
            W -= config.learning_rate * contrastive_grad(W, Xs[i], Xs[j], y, config.margin)
    W = W / scale

    n_scorer = max(2 * n_records, 200)
    i, j, y = sample_pairs(groups, n_scorer, rng)
    F = np.abs((X[i] - X[j]) @ W.T)
    w, b = _fit_scorer(F, y, config.scorer_steps, config.scorer_learning_rate)
    return SiameseHead(W, w, b, config.margin)


def pair_score(head: SiameseHead, x, y):
    """Similarity probability of ``x`` and ``y`` (rows are scored pairwise)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DataError(f"shape mismatch: {x.shape} vs {y.shape}")
    feat = np.abs(head.project(x) - head.project(y))
    s = expit(feat @ head.scorer_weights + head.scorer_bias)
    return float(s) if np.ndim(s) == 0 else s


@dataclass
class SimilarityMatrix:
    class_names: list
    values: np.ndarray = field(repr=False)

    def to_dict(self) -> dict:
        return {
            "class_names": list(self.class_names),
            "values": [[float(v) for v in row] for row in self.values],
        }

    @classmethod
    def from_dict(cls, obj) -> "SimilarityMatrix":
        return cls(list(obj["class_names"]), np.asarray(obj["values"], dtype=np.float64))

    def row(self, name) -> dict:
        i = self.class_names.index(name)
        return dict(zip(self.class_names, self.values[i]))


def similarity_matrix(head: SiameseHead, data: EmbeddingSet, pairs_per_cell: int = 200, seed: int = 0) -> SimilarityMatrix:
    """Class-by-class mean pair score, symmetrized.

    Cell ``(i, j)`` averages ``pairs_per_cell`` sampled record pairs (distinct
    records inside a class when it has more than one).
    """
    if pairs_per_cell < 1:
        raise DataError("pairs_per_cell must be >= 1")
    labeled = [i for i, lab in enumerate(data.labels) if lab is not None]
    names, groups = _by_class([data.labels[i] for i in labeled])
    labeled = np.array(labeled, dtype=np.intp)
    groups = [labeled[g] for g in groups]
    if len(names) < 2:
        raise DataError("similarity matrix needs at least 2 classes")

    rng = np.random.default_rng(seed)
    P = head.project(data.vectors)
    K = len(names)
    V = np.empty((K, K))
    for a in range(K):
        for b in range(K):
            ga, gb = groups[a], groups[b]
            if a == b and len(ga) > 1:
                pa = rng.integers(len(ga), size=pairs_per_cell)
                pb = rng.integers(len(ga) - 1, size=pairs_per_cell)
                pb += pb >= pa
                ii, jj = ga[pa], ga[pb]
            else:
                ii = ga[rng.integers(len(ga), size=pairs_per_cell)]
                jj = gb[rng.integers(len(gb), size=pairs_per_cell)]
            feat = np.abs(P[ii] - P[jj])
            V[a, b] = float(np.mean(expit(feat @ head.scorer_weights + head.scorer_bias)))
    V = (V + V.T) / 2.0
    return SimilarityMatrix(names, V)


def most_similar(matrix: SimilarityMatrix, target: str, exclude=()) -> str:
    """Class with the highest off-diagonal similarity to ``target``; first wins ties."""
    if target not in matrix.class_names:
        raise DataError(f"unknown target class {target!r}")
    if len(matrix.class_names) < 2:
        raise DataError("need at least 2 classes")
    row = matrix.values[matrix.class_names.index(target)]
    skip = set(exclude) | {target}
    best, best_val = None, -math.inf
    for name, v in zip(matrix.class_names, row):
        if name in skip:
            continue
        if best is None or v > best_val:
            best, best_val = name, v
    if best is None:
        raise DataError("no candidate classes left after exclusions")
    return best
