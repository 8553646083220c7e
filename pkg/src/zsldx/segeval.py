"""Lesion-mask scoring: focal loss on probability maps, mIoU / mPA / pixel accuracy."""

from __future__ import annotations

import csv
import os
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import DataError
from .ingest import check_mask, check_probmap, load_mask, load_probmap

__all__ = ["FocalParams", "focal_loss", "threshold", "seg_metrics", "evaluate_manifest"]


@dataclass(frozen=True)
class FocalParams:
    alpha: float = 0.25
    gamma: float = 2.0
    clip: float = 1e-7

    def __post_init__(self):
        if not 0 < self.alpha < 1:
            raise DataError("alpha must be in (0, 1)")
        if self.gamma < 0:
            raise DataError("gamma must be >= 0")
        if not 0 < self.clip < 0.5:
            raise DataError("clip must be in (0, 0.5)")


def _pair(truth, prob):
    t = check_mask(truth)
    p = check_probmap(prob)
    if t.shape != p.shape:
        raise DataError(f"shape mismatch: truth {t.shape} vs prediction {p.shape}")
    return t, p


def focal_loss(truth, prob, params: FocalParams = FocalParams()) -> float:
    """Mean over pixels of ``-alpha_t (1 - p_t)^gamma log p_t``."""
    t, p = _pair(truth, prob)
    p = np.clip(p, params.clip, 1.0 - params.clip)
    pos = t == 1
    p_t = np.where(pos, p, 1.0 - p)
    a_t = np.where(pos, params.alpha, 1.0 - params.alpha)
    return float(np.mean(-a_t * (1.0 - p_t) ** params.gamma * np.log(p_t)))


def threshold(prob, t: float = 0.5) -> np.ndarray:
    if not 0.0 <= t <= 1.0:
        raise DataError("threshold must be in [0, 1]")
    return (check_probmap(prob) >= t).astype(np.uint8)


def seg_metrics(pred, truth):
    """``(miou, mpa, overall_acc)`` over the classes {0, 1}.

    Per-class IoU and pixel accuracy (class recall) are averaged over the
    classes that appear in either mask; a class absent from the truth but
    present in the prediction contributes a pixel accuracy of 0.  Ratios are
    averaged as exact fractions so the results are correctly rounded.
    """
    p = check_mask(pred).astype(bool)
    t = check_mask(truth).astype(bool)
    if p.shape != t.shape:
        raise DataError(f"shape mismatch: pred {p.shape} vs truth {t.shape}")
    ious, pas = [], []
    for cls in (False, True):
        pc, tc = p == cls, t == cls
        union = int(np.sum(pc | tc))
        if union == 0:
            continue
        inter = int(np.sum(pc & tc))
        ious.append(Fraction(inter, union))
        n_true = int(np.sum(tc))
        pas.append(Fraction(inter, n_true) if n_true else Fraction(0))
    acc = Fraction(int(np.sum(p == t)), p.size)
    return float(sum(ious) / len(ious)), float(sum(pas) / len(pas)), float(acc)


def _read_manifest(path):
    base = os.path.dirname(os.path.abspath(path))
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise DataError(f"cannot read manifest {path}: {exc}") from None
    if rows and [c.strip() for c in rows[0]] == ["truth_path", "pred_path"]:
        rows = rows[1:]
    pairs = []
    for lineno, row in enumerate(rows, start=1):
        if len(row) != 2:
            raise DataError(f"manifest row {lineno}: expected truth_path,pred_path")
        pairs.append(tuple(os.path.join(base, c.strip()) for c in row))
    return pairs


def evaluate_manifest(path, t: float = 0.5, params: FocalParams = FocalParams()) -> dict:
    """Score every ``truth_path,pred_path`` row.  Paths are relative to the manifest."""
    images = []
    for truth_path, pred_path in _read_manifest(path):
        truth = load_mask(truth_path)
        prob = load_probmap(pred_path)
        miou, mpa, acc = seg_metrics(threshold(prob, t), truth)
        images.append({
            "truth_path": os.path.basename(truth_path),
            "pred_path": os.path.basename(pred_path),
            "miou": miou,
            "mpa": mpa,
            "overall_acc": acc,
            "focal_loss": focal_loss(truth, prob, params),
        })
    keys = ("miou", "mpa", "overall_acc", "focal_loss")
    aggregate = {k: (float(np.mean([im[k] for im in images])) if images else None) for k in keys}
    return {"threshold": t, "images": images, "aggregate": aggregate}
