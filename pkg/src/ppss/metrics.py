"""Semantic segmentation scoring on 8-bit label maps.

Counts live in a K x K confusion matrix (rows = ground truth, columns =
prediction). Aggregate scores follow the usual conventions: overall pixel
accuracy, mean per-class recall, and mean IoU, where the means run over
classes that actually occur in the ground truth. Pixels whose ground-truth
label equals the ignore value are excluded entirely.
"""

from __future__ import annotations

from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np

from .errors import MetricsError

IGNORE_LABEL = 255


def new_confusion_matrix(num_classes: int) -> np.ndarray:
    if num_classes < 1:
        raise MetricsError(f"number of classes must be >= 1, got {num_classes}")
    return np.zeros((num_classes, num_classes), dtype=np.int64)


def accumulate(cm: np.ndarray, gt: np.ndarray, pred: np.ndarray, ignore_label: int = IGNORE_LABEL) -> np.ndarray:
    """Add one gt/pred pair into the confusion matrix, in place."""
    gt = np.asarray(gt)
    pred = np.asarray(pred)
    if gt.shape != pred.shape:
        raise MetricsError(f"label shape mismatch: ground truth {gt.shape} vs prediction {pred.shape}")
    k = cm.shape[0]
    mask = gt != ignore_label
    g = gt[mask].astype(np.int64)
    p = pred[mask].astype(np.int64)
    if g.size:
        bad_gt = int((g >= k).sum())
        if bad_gt:
            raise MetricsError(f"{bad_gt} ground-truth pixels have labels >= {k} (and are not the ignore value)")
        bad_pred = int(((p >= k) | (p < 0)).sum())
        if bad_pred:
            raise MetricsError(f"{bad_pred} predicted pixels have labels outside [0, {k})")
        cm += np.bincount(g * k + p, minlength=k * k).reshape(k, k)
    return cm


@dataclass(frozen=True)
class ClassScore:
    class_id: int
    gt_pixels: int
    recall: float  # percent
    iou: float  # percent


@dataclass(frozen=True)
class SegScores:
    """Aggregate percentages plus the per-class breakdown (gt-present only)."""

    aacc: float
    macc: float
    miou: float
    per_class: tuple[ClassScore, ...]
    counted_pixels: int


def compute_scores(cm: np.ndarray) -> SegScores:
    cm = np.asarray(cm, dtype=np.int64)
    total = int(cm.sum())
    if total == 0:
        raise MetricsError("confusion matrix is empty; nothing was counted")
    tp = np.diag(cm).astype(np.float64)
    gt_count = cm.sum(axis=1).astype(np.float64)
    pred_count = cm.sum(axis=0).astype(np.float64)
    present = np.nonzero(gt_count > 0)[0]

    aacc = 100.0 * float(tp.sum()) / total
    recall = tp[present] / gt_count[present]
    union = gt_count[present] + pred_count[present] - tp[present]
    iou = tp[present] / union
    per_class = tuple(
        ClassScore(
            class_id=int(c),
            gt_pixels=int(gt_count[c]),
            recall=100.0 * float(recall[i]),
            iou=100.0 * float(iou[i]),
        )
        for i, c in enumerate(present)
    )
    return SegScores(
        aacc=aacc,
        macc=100.0 * float(recall.mean()),
        miou=100.0 * float(iou.mean()),
        per_class=per_class,
        counted_pixels=total,
    )


def format_percent(value: float) -> str:
    """Two decimals, ties rounding away from zero (78.125 -> '78.13')."""
    return str(Decimal(repr(value)).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP))
