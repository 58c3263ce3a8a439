"""Loss functions."""

from __future__ import annotations

import numpy as np


def masked_mse_loss(pred: np.ndarray, target: np.ndarray, mask: np.ndarray):
    """Mean squared error over mask-true entries only.

    Returns (loss, d loss / d pred); the gradient is identically zero where
    the mask is false, so unburnt pixels never influence training.
    """
    if pred.shape != target.shape or pred.shape != mask.shape:
        raise ValueError(
            f"shape mismatch: pred {pred.shape}, target {target.shape}, mask {mask.shape}")
    m = mask.astype(pred.dtype)
    count = m.sum()
    if count == 0:
        raise ValueError("mask has no true entries")
    diff = (pred - target) * m
    loss = float((diff * diff).sum() / count)
    grad = (2.0 / count) * diff
    return loss, grad


def mse_loss(pred: np.ndarray, target: np.ndarray):
    """Plain mean squared error over all entries; returns (loss, gradient)."""
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape}, target {target.shape}")
    diff = pred - target
    loss = float((diff * diff).mean())
    grad = (2.0 / diff.size) * diff
    return loss, grad
