"""Face-level classification metrics."""

import numpy as np

from ..errors import EmptyInput, ShapeError


def _check(preds, labels):
    preds = np.asarray(preds, dtype=np.int64)
    labels = np.asarray(labels, dtype=np.int64)
    if preds.shape != labels.shape:
        raise ShapeError(f"predictions {preds.shape} vs labels {labels.shape}")
    if preds.size == 0:
        raise EmptyInput("metrics need at least one face")
    return preds, labels


def accuracy(preds, labels):
    preds, labels = _check(preds, labels)
    return float(np.mean(preds == labels))


def confusion_matrix(preds, labels, n_classes):
    """``cm[true, pred]`` counts."""
    preds, labels = _check(preds, labels)
    cm = np.zeros((n_classes, n_classes), dtype=np.int64)
    np.add.at(cm, (labels, preds), 1)
    return cm


def mean_iou(preds, labels, n_classes, strict=False):
    """Mean per-class IoU.

    By default classes absent from both predictions and labels are left out
    of the mean; ``strict`` divides the IoU sum by ``n_classes`` instead.
    """
    cm = confusion_matrix(preds, labels, n_classes)
    inter = np.diag(cm).astype(np.float64)
    union = cm.sum(axis=0) + cm.sum(axis=1) - np.diag(cm)
    present = union > 0
    iou = np.zeros(n_classes)
    iou[present] = inter[present] / union[present]
    if strict:
        return float(iou.sum() / n_classes)
    return float(iou[present].mean())
