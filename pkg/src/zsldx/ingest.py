"""Embedding/mask file formats and seeded synthetic cohorts.

Embedding CSV::

    id,label,f0,f1,...,f{d-1}
    a,DM,0.0,1.0
    b,,1.0,0.0          <- empty label = unlabeled

Masks are ASCII PGM (``P2``, maxval 255, pixels 0/255); probability maps are
plain CSV matrices of decimals in [0, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterator, Optional, Sequence

import numpy as np

from .errors import DataError

__all__ = [
    "EmbeddingRecord",
    "EmbeddingSet",
    "load_embeddings",
    "save_embeddings",
    "load_mask",
    "save_mask",
    "load_probmap",
    "save_probmap",
    "synth_cohort",
    "planted_cohort",
    "ablation_cohort",
]


@dataclass(frozen=True)
class EmbeddingRecord:
    id: str
    label: Optional[str]
    vector: tuple


@dataclass(eq=False)
class EmbeddingSet:
    """Feature vectors of one dimension with ids and optional labels.

    Stored column-wise: ``vectors`` is an ``(n, dimension)`` float64 array.
    """

    dimension: int
    ids: list = field(default_factory=list)
    labels: list = field(default_factory=list)
    vectors: np.ndarray = None

    def __post_init__(self):
        if self.dimension < 1:
            raise DataError("dimension must be >= 1")
        if self.vectors is None:
            self.vectors = np.zeros((0, self.dimension))
        self.vectors = np.asarray(self.vectors, dtype=np.float64).reshape(-1, self.dimension)
        self.ids = list(self.ids)
        self.labels = list(self.labels)
        n = self.vectors.shape[0]
        if len(self.ids) != n or len(self.labels) != n:
            raise DataError("ids, labels and vectors must have the same length")
        if not np.all(np.isfinite(self.vectors)):
            raise DataError("non-finite value in vectors")
        seen = set()
        for rid in self.ids:
            if not rid:
                raise DataError("empty id")
            if "," in rid:
                raise DataError(f"id {rid!r} contains a comma")
            if rid in seen:
                raise DataError(f"duplicate id {rid!r}")
            seen.add(rid)

    def __len__(self):
        return self.vectors.shape[0]

    def __eq__(self, other):
        if not isinstance(other, EmbeddingSet):
            return NotImplemented
        return (
            self.dimension == other.dimension
            and self.ids == other.ids
            and self.labels == other.labels
            and np.array_equal(self.vectors, other.vectors)
        )

    @property
    def records(self) -> list:
        return list(self.iter_records())

    def iter_records(self) -> Iterator[EmbeddingRecord]:
        for rid, lab, vec in zip(self.ids, self.labels, self.vectors):
            yield EmbeddingRecord(rid, lab, tuple(float(v) for v in vec))

    @classmethod
    def from_records(cls, records: Sequence[EmbeddingRecord], dimension: int | None = None):
        records = list(records)
        if dimension is None:
            if not records:
                raise DataError("dimension required for an empty record list")
            dimension = len(records[0].vector)
        for r in records:
            if len(r.vector) != dimension:
                raise DataError(f"record {r.id!r} has length {len(r.vector)}, expected {dimension}")
        vecs = np.array([r.vector for r in records], dtype=np.float64).reshape(-1, dimension)
        return cls(dimension, [r.id for r in records], [r.label for r in records], vecs)

    def classes(self) -> list:
        """Distinct non-empty labels, sorted."""
        return sorted({lab for lab in self.labels if lab is not None})

    def indices_of(self, label: str) -> np.ndarray:
        return np.array([i for i, lab in enumerate(self.labels) if lab == label], dtype=np.intp)

    def select(self, index) -> "EmbeddingSet":
        index = np.asarray(index, dtype=np.intp)
        return EmbeddingSet(
            self.dimension,
            [self.ids[i] for i in index],
            [self.labels[i] for i in index],
            self.vectors[index],
        )

    def with_labels(self, labels) -> "EmbeddingSet":
        return EmbeddingSet(self.dimension, self.ids, list(labels), self.vectors)


# --------------------------------------------------------------------------
# embedding CSV


def _header(d: int) -> str:
    return ",".join(["id", "label"] + [f"f{i}" for i in range(d)])


def load_embeddings(path) -> EmbeddingSet:
    try:
        with open(path, "r", encoding="utf-8", newline="") as fh:
            text = fh.read()
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc

    lines = text.split("\n")
    if lines and lines[-1] == "":
        lines.pop()
    lines = [ln[:-1] if ln.endswith("\r") else ln for ln in lines]
    if not lines:
        raise DataError("missing header at line 1")

    head = lines[0].split(",")
    d = len(head) - 2
    if d < 1 or head != _header(d).split(","):
        raise DataError(f"header mismatch at line 1: {lines[0]!r}")

    ids, labels, rows = [], [], []
    seen = {}
    for lineno, line in enumerate(lines[1:], start=2):
        parts = line.split(",")
        if len(parts) != d + 2:
            raise DataError(f"ragged row at line {lineno}: expected {d + 2} fields, got {len(parts)}")
        rid, lab = parts[0], parts[1]
        if not rid:
            raise DataError(f"empty id at line {lineno}")
        if rid in seen:
            raise DataError(f"duplicate id {rid!r} at line {lineno} (first seen at line {seen[rid]})")
        seen[rid] = lineno
        try:
            vals = [float(p) for p in parts[2:]]
        except ValueError as exc:
            raise DataError(f"bad number at line {lineno}: {exc}") from None
        if not all(math.isfinite(v) for v in vals):
            raise DataError(f"non-finite value at line {lineno}")
        ids.append(rid)
        labels.append(lab if lab else None)
        rows.append(vals)

    return EmbeddingSet(d, ids, labels, np.array(rows, dtype=np.float64).reshape(-1, d))


def save_embeddings(emb: EmbeddingSet, path) -> None:
    out = [_header(emb.dimension)]
    for rid, lab, vec in zip(emb.ids, emb.labels, emb.vectors):
        # repr(float) is the shortest string that round-trips exactly
        out.append(",".join([rid, lab or ""] + [repr(float(v)) for v in vec]))
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write("\n".join(out) + "\n")
    except OSError as exc:
        raise DataError(f"cannot write {path}: {exc}") from exc


# --------------------------------------------------------------------------
# masks and probability maps


def check_mask(mask) -> np.ndarray:
    m = np.asarray(mask)
    if m.ndim != 2 or m.size == 0:
        raise DataError("mask must be a non-empty 2-D array")
    if not np.all((m == 0) | (m == 1)):
        raise DataError("non-binary pixel in mask")
    return m.astype(np.uint8)


def check_probmap(prob) -> np.ndarray:
    p = np.asarray(prob, dtype=np.float64)
    if p.ndim != 2 or p.size == 0:
        raise DataError("probability map must be a non-empty 2-D array")
    if not np.all(np.isfinite(p)) or p.min() < 0.0 or p.max() > 1.0:
        raise DataError("probability outside [0, 1]")
    return p


def load_mask(path) -> np.ndarray:
    """Read a P2 PGM mask; returns a uint8 array of 0/1 with shape (height, width)."""
    try:
        with open(path, "r", encoding="ascii") as fh:
            tokens = fh.read().split()
    except (OSError, UnicodeDecodeError) as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if len(tokens) < 4 or tokens[0] != "P2":
        raise DataError("malformed PGM header: expected P2")
    try:
        width, height, maxval = int(tokens[1]), int(tokens[2]), int(tokens[3])
        pixels = [int(t) for t in tokens[4:]]
    except ValueError:
        raise DataError("malformed PGM: non-integer token") from None
    if width < 1 or height < 1:
        raise DataError("malformed PGM header: non-positive size")
    if maxval != 255:
        raise DataError(f"malformed PGM header: maxval {maxval}, expected 255")
    if len(pixels) != width * height:
        raise DataError(f"PGM has {len(pixels)} pixels, expected {width * height}")
    arr = np.array(pixels, dtype=np.int64).reshape(height, width)
    bad = (arr != 0) & (arr != 255)
    if bad.any():
        r, c = np.argwhere(bad)[0]
        raise DataError(f"non-binary pixel {arr[r, c]} at row {r}, column {c}")
    return (arr // 255).astype(np.uint8)


def save_mask(mask, path) -> None:
    m = check_mask(mask)
    h, w = m.shape
    rows = [" ".join(str(255 * int(v)) for v in row) for row in m]
    with open(path, "w", encoding="ascii") as fh:
        fh.write(f"P2\n{w} {h}\n255\n" + "\n".join(rows) + "\n")


def load_probmap(path) -> np.ndarray:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = [ln.strip() for ln in fh.read().splitlines()]
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    while lines and not lines[-1]:
        lines.pop()
    if not lines:
        raise DataError("empty probability map")
    rows = []
    for lineno, line in enumerate(lines, start=1):
        try:
            vals = [float(p) for p in line.split(",")]
        except ValueError:
            raise DataError(f"bad number at line {lineno}") from None
        if rows and len(vals) != len(rows[0]):
            raise DataError(f"ragged row at line {lineno}")
        for v in vals:
            if not (0.0 <= v <= 1.0):
                raise DataError(f"probability outside [0, 1] at line {lineno}: {v}")
        rows.append(vals)
    return np.array(rows, dtype=np.float64)


def save_probmap(prob, path) -> None:
    p = check_probmap(prob)
    with open(path, "w", encoding="utf-8") as fh:
        for row in p:
            fh.write(",".join(repr(float(v)) for v in row) + "\n")


# --------------------------------------------------------------------------
# synthetic cohorts


def _check_cohort_args(per_class, dimension, separation):
    if per_class < 1:
        raise DataError("per_class must be >= 1")
    if dimension < 1:
        raise DataError("dimension must be >= 1")
    if not (separation >= 0 and math.isfinite(separation)):
        raise DataError("separation must be finite and >= 0")


def _draw(rng, means: dict, counts: dict, dimension: int) -> EmbeddingSet:
    ids, labels, rows = [], [], []
    for name, mu in means.items():
        n = counts[name]
        rows.append(rng.standard_normal((n, dimension)) + mu)
        ids.extend(f"{name}-{i:04d}" for i in range(n))
        labels.extend([name] * n)
    return EmbeddingSet(dimension, ids, labels, np.vstack(rows))


def synth_cohort(classes: int, per_class: int, dimension: int, separation: float, seed: int) -> EmbeddingSet:
    """``classes`` unit-variance Gaussian blobs with means spaced ``separation`` apart.

    Means lie on the line through the origin along ``(1, ..., 1) / sqrt(d)``;
    class ``c{i}`` is centred at ``i * separation`` along it.
    """
    if classes < 2:
        raise DataError("classes must be >= 2")
    _check_cohort_args(per_class, dimension, separation)
    rng = np.random.default_rng(seed)
    direction = np.full(dimension, 1.0 / math.sqrt(dimension))
    means = {f"c{i}": i * separation * direction for i in range(classes)}
    return _draw(rng, means, dict.fromkeys(means, per_class), dimension)


def _unit(rng, d):
    v = rng.standard_normal(d)
    return v / np.linalg.norm(v)


def _planted_means(rng, n_candidates, dimension, separation):
    # target at the origin; candidate with rank r at distance (r + 1) * s;
    # control one rank beyond the last candidate.  Pairwise mean distances
    # are then all >= s and the proxy is the unique nearest class.
    proxy = int(rng.integers(n_candidates))
    ranks = [proxy] + [j for j in range(n_candidates) if j != proxy]
    means = {"target": np.zeros(dimension)}
    for rank, j in enumerate(ranks):
        means[f"k{j}"] = (rank + 1) * separation * _unit(rng, dimension)
    means["control"] = (n_candidates + 1) * separation * _unit(rng, dimension)
    offset = rng.uniform(-separation, separation, dimension)
    means = {name: mu + offset for name, mu in means.items()}
    return means, f"k{proxy}"


def planted_cohort(
    per_class: int,
    dimension: int,
    separation: float,
    seed: int,
    n_candidates: int = 2,
    control_factor: int = 2,
):
    """Cohort with a held-out ``target`` class whose nearest known class is planted.

    Classes: ``target``, ``control`` and candidates ``k0..k{n-1}``.  The
    control class gets ``control_factor * per_class`` records so it can be
    split into a clustering half and an evaluation half.

    Returns ``(EmbeddingSet, info)``; ``info`` holds the class roles and the
    planted proxy name.
    """
    if n_candidates < 1:
        raise DataError("n_candidates must be >= 1")
    _check_cohort_args(per_class, dimension, separation)
    rng = np.random.default_rng(seed)
    means, proxy = _planted_means(rng, n_candidates, dimension, separation)
    counts = dict.fromkeys(means, per_class)
    counts["control"] = control_factor * per_class
    emb = _draw(rng, means, counts, dimension)
    return emb, {"target": "target", "control": "control", "proxy": proxy}


def _decoy_means(rng, n_candidates, dimension, separation):
    # target at the origin, proxy at distance s, control at 2s; the other
    # candidates sit beyond the control on the same ray, so a clustering
    # trained on one of them against the control puts targets on the
    # control side.
    proxy = int(rng.integers(n_candidates))
    u, w = _unit(rng, dimension), _unit(rng, dimension)
    means = {"target": np.zeros(dimension), f"k{proxy}": separation * u}
    means["control"] = 2 * separation * w
    others = [j for j in range(n_candidates) if j != proxy]
    for r, j in enumerate(others, start=1):
        means[f"k{j}"] = (2 + r) * separation * w
    offset = rng.uniform(-separation, separation, dimension)
    return {name: mu + offset for name, mu in means.items()}, f"k{proxy}"


def ablation_cohort(
    per_class: int,
    lesion_dim: int,
    nuisance_dim: int,
    separation: float,
    seed: int,
    n_candidates: int = 2,
    nuisance_offset: float | None = None,
    control_factor: int = 2,
):
    """Planted cohort whose class signal lives only in the leading ``lesion_dim`` coordinates.

    Non-proxy candidates are decoys placed beyond the control, so picking
    the wrong proxy hurts.  The trailing ``nuisance_dim`` coordinates carry no class information; the
    first of them is bimodal (``+/- nuisance_offset`` with a random sign per
    record), which dominates any clustering run on the full coordinates.
    """
    if lesion_dim < 1 or nuisance_dim < 1:
        raise DataError("lesion_dim and nuisance_dim must be >= 1")
    _check_cohort_args(per_class, lesion_dim, separation)
    if nuisance_offset is None:
        nuisance_offset = 2.0 * (n_candidates + 2) * max(separation, 1.0)
    rng = np.random.default_rng(seed)
    means, proxy = _decoy_means(rng, n_candidates, lesion_dim, separation)
    counts = dict.fromkeys(means, per_class)
    counts["control"] = control_factor * per_class
    lesion = _draw(rng, means, counts, lesion_dim)
    n = len(lesion)
    nuisance = rng.standard_normal((n, nuisance_dim))
    nuisance[:, 0] += nuisance_offset * rng.choice([-1.0, 1.0], size=n)
    emb = EmbeddingSet(
        lesion_dim + nuisance_dim, lesion.ids, lesion.labels, np.hstack([lesion.vectors, nuisance])
    )
    info = {
        "target": "target",
        "control": "control",
        "proxy": proxy,
        "lesion_dims": list(range(lesion_dim)),
    }
    return emb, info
