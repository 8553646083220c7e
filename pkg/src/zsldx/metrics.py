"""Binary classification metrics: confusion counts, precision/recall/F1, ROC AUC."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata

from .errors import DataError

__all__ = [
    "ConfusionCounts",
    "EvalReport",
    "confusion",
    "prf1",
    "f1_from",
    "roc_auc",
    "roc_auc_pairs",
    "cluster_scores",
    "evaluate",
]


@dataclass(frozen=True)
class ConfusionCounts:
    tp: int
    fp: int
    fn: int
    tn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.fn + self.tn

    def to_dict(self) -> dict:
        return {"tp": self.tp, "fp": self.fp, "fn": self.fn, "tn": self.tn}


def _binary(a, name):
    arr = np.asarray(a).ravel()
    if not np.all((arr == 0) | (arr == 1)):
        raise DataError(f"{name} must contain only 0/1")
    return arr.astype(bool)


def confusion(y_true, y_pred) -> ConfusionCounts:
    """Counts with class 1 as the positive class."""
    t = _binary(y_true, "y_true")
    p = _binary(y_pred, "y_pred")
    if t.size != p.size:
        raise DataError("y_true and y_pred differ in length")
    if t.size == 0:
        raise DataError("confusion needs at least one sample")
    return ConfusionCounts(
        tp=int(np.sum(t & p)),
        fp=int(np.sum(~t & p)),
        fn=int(np.sum(t & ~p)),
        tn=int(np.sum(~t & ~p)),
    )


def f1_from(precision: float, recall: float) -> float:
    """Harmonic mean of precision and recall (0.0 when both are 0)."""
    if precision + recall == 0:
        return 0.0
    return 2.0 * precision * recall / (precision + recall)


def prf1(c: ConfusionCounts):
    """``(precision, recall, f1, accuracy, flags)``.

    A zero denominator yields 0.0 for that metric and a flag string naming it
    instead of raising.
    """
    flags = []

    def ratio(num, den, name):
        if den == 0:
            flags.append(f"zero-denominator:{name}")
            return 0.0
        return num / den

    precision = ratio(c.tp, c.tp + c.fp, "precision")
    recall = ratio(c.tp, c.tp + c.fn, "recall")
    if precision + recall == 0:
        flags.append("zero-denominator:f1")
        f1 = 0.0
    else:
        f1 = f1_from(precision, recall)
    accuracy = ratio(c.tp + c.tn, c.total, "accuracy")
    return precision, recall, f1, accuracy, flags


def _split(scores, labels):
    s = np.asarray(scores, dtype=np.float64).ravel()
    y = _binary(labels, "labels")
    if s.size != y.size:
        raise DataError("scores and labels differ in length")
    if not np.all(np.isfinite(s)):
        raise DataError("scores must be finite")
    if y.all() or not y.any():
        raise DataError("roc_auc needs at least one positive and one negative")
    return s, y


def roc_auc(scores, labels) -> float:
    """Mann-Whitney AUC from mid-ranks: P(pos > neg) + 0.5 P(pos == neg)."""
    s, y = _split(scores, labels)
    ranks = rankdata(s, method="average")
    n_pos = int(y.sum())
    n_neg = y.size - n_pos
    u = ranks[y].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def roc_auc_pairs(scores, labels) -> float:
    """O(n_pos * n_neg) pair count; reference for :func:`roc_auc`."""
    s, y = _split(scores, labels)
    pos, neg = s[y], s[~y]
    wins = 0.0
    for p in pos:
        for q in neg:
            if p > q:
                wins += 1.0
            elif p == q:
                wins += 0.5
    return wins / (len(pos) * len(neg))


def cluster_scores(distances_neg, distances_pos) -> np.ndarray:
    """Positive-class score ``d_neg / (d_neg + d_pos)`` from distances to the two
    cluster representatives; 1.0 at the positive one, 0.5 when equidistant.
    A point with both distances zero scores 0.5.
    """
    d0 = np.asarray(distances_neg, dtype=np.float64)
    d1 = np.asarray(distances_pos, dtype=np.float64)
    if d0.shape != d1.shape:
        raise DataError("distance arrays differ in shape")
    tot = d0 + d1
    with np.errstate(invalid="ignore", divide="ignore"):
        out = np.where(tot > 0, d0 / tot, 0.5)
    return out


@dataclass
class EvalReport:
    counts: ConfusionCounts
    accuracy: float
    precision: float
    recall: float
    f1: float
    auc: float | None
    flags: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "counts": self.counts.to_dict(),
            "accuracy": self.accuracy,
            "precision": self.precision,
            "recall": self.recall,
            "f1": self.f1,
            "auc": self.auc,
            "flags": list(self.flags),
        }

    @classmethod
    def from_dict(cls, obj) -> "EvalReport":
        return cls(ConfusionCounts(**obj["counts"]), obj["accuracy"], obj["precision"],
                   obj["recall"], obj["f1"], obj["auc"], list(obj.get("flags", [])))


def evaluate(y_true, y_pred, scores=None) -> EvalReport:
    c = confusion(y_true, y_pred)
    precision, recall, f1, accuracy, flags = prf1(c)
    auc = None
    if scores is not None:
        try:
            auc = roc_auc(scores, y_true)
        except DataError:
            flags.append("auc-undefined:single-class")
    return EvalReport(c, accuracy, precision, recall, f1, auc, flags)
