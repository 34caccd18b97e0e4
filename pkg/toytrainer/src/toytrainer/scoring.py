"""Internal segmentation scores.

The harness computes its own confusion-matrix metrics so every run can be
cross-checked against the scoring tool's output; the two implementations
share no code, only the convention: rows are ground truth, columns are
predictions, pixels labeled 255 are ignored, and mean scores average over
the classes actually present in the ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

IGNORE_LABEL = 255


def new_confusion(num_classes: int) -> np.ndarray:
    return np.zeros((num_classes, num_classes), dtype=np.int64)


def add_pair(cm: np.ndarray, gt: np.ndarray, pred: np.ndarray) -> None:
    if gt.shape != pred.shape:
        raise ValueError(f"label shapes differ: {gt.shape} vs {pred.shape}")
    k = cm.shape[0]
    keep = gt != IGNORE_LABEL
    g = gt[keep].astype(np.int64)
    p = pred[keep].astype(np.int64)
    if g.size and (g.max() >= k or p.max() >= k):
        raise ValueError(f"labels exceed class count {k}")
    cm += np.bincount(g * k + p, minlength=k * k).reshape(k, k)


def pool_labels(label: np.ndarray, width: int, num_classes: int) -> np.ndarray:
    """Replace each width x width cell with its majority label.

    Diagnostic ground truth: the best any predictor could do if class
    detail below the shuffle width is unlearnable. Ignored pixels (255)
    do not vote; a cell with no votes stays 255. Ties go to the smaller
    class id.
    """
    h, w = label.shape
    if h % width or w % width:
        raise ValueError(f"label shape {label.shape} is not divisible by pool width {width}")
    cells = label.reshape(h // width, width, w // width, width).transpose(0, 2, 1, 3)
    cells = cells.reshape(h // width, w // width, width * width)
    votes = np.stack([(cells == c).sum(axis=2) for c in range(num_classes)], axis=0)
    majority = votes.argmax(axis=0).astype(np.uint8)
    majority[votes.sum(axis=0) == 0] = IGNORE_LABEL
    out = np.repeat(np.repeat(majority, width, axis=0), width, axis=1)
    return out


@dataclass(frozen=True)
class InternalScores:
    aacc: float  # percent
    macc: float
    miou: float


def scores_from_confusion(cm: np.ndarray) -> InternalScores:
    gt_totals = cm.sum(axis=1)
    pred_totals = cm.sum(axis=0)
    diag = np.diag(cm)
    present = gt_totals > 0
    if not present.any():
        raise ValueError("confusion matrix is empty; nothing was scored")
    aacc = diag.sum() / cm.sum()
    recall = diag[present] / gt_totals[present]
    union = gt_totals[present] + pred_totals[present] - diag[present]
    iou = np.where(union > 0, diag[present] / np.maximum(union, 1), 0.0)
    return InternalScores(
        aacc=100.0 * float(aacc),
        macc=100.0 * float(recall.mean()),
        miou=100.0 * float(iou.mean()),
    )
