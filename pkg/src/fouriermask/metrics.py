"""Soft IoU between mask rasters and the IoU training loss."""

from __future__ import annotations

import numpy as np


def _pair(pred, target) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(getattr(pred, "values", pred), dtype=np.float64)
    t = np.asarray(getattr(target, "values", target), dtype=np.float64)
    if p.shape != t.shape:
        raise ValueError(f"shape mismatch: {p.shape} vs {t.shape}")
    return p, t


def soft_iou(pred, target) -> float:
    """``sum(min(p, t)) / sum(max(p, t))``; two all-zero inputs give 1."""
    p, t = _pair(pred, target)
    union = np.maximum(p, t).sum()
    if union == 0.0:
        return 1.0
    return float(np.minimum(p, t).sum() / union)


def iou_loss(pred, target) -> float:
    return 1.0 - soft_iou(pred, target)


def iou_loss_gradient(pred, target) -> np.ndarray:
    """Subgradient of ``iou_loss`` w.r.t. ``pred``.

    Where ``pred == target`` the pixel is treated as on the min branch: it
    moves the intersection and leaves the union alone.
    """
    p, t = _pair(pred, target)
    below = p <= t
    inter = np.minimum(p, t).sum()
    union = np.maximum(p, t).sum()
    if union == 0.0:
        return np.zeros_like(p)
    d_inter = below.astype(np.float64)
    d_union = 1.0 - d_inter
    return -(d_inter * union - inter * d_union) / (union * union)
