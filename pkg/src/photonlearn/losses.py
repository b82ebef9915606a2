"""Divergences and error metrics between coincidence distributions."""

import numpy as np

from .util import pack_lower

EXACT_KL_FLOOR = 1e-9


def sampled_kl_floor(n_samples):
    """Target floor for empirical distributions: below the single-count level."""
    return 1.0 / (10.0 * float(n_samples))


def kl_divergence(pred, target, floor=EXACT_KL_FLOOR):
    """Forward KL divergence sum(pred * log(pred / max(target, floor))).

    Zero-prediction cells contribute nothing; only the target is floored, so
    empirical targets with true zeros keep the value finite.
    """
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    if floor <= 0:
        raise ValueError(f"floor must be positive, got {floor}")
    if np.min(pred) < 0:
        raise ValueError(f"predictions must be nonnegative (min {np.min(pred):.3e})")
    mask = pred > 0
    p = pred[mask]
    t = np.maximum(target[mask], floor)
    return float(np.sum(p * (np.log(p) - np.log(t))))


def mean_absolute_error(pred, target):
    """Per-cell mean absolute error over the lower triangle of two matrices."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape} vs target {target.shape}")
    if pred.ndim == 2:
        return float(np.mean(np.abs(pack_lower(pred) - pack_lower(target))))
    return float(np.mean(np.abs(pred - target)))


def total_variation(p, q):
    """Total variation distance between two distributions on the same support."""
    return 0.5 * float(np.sum(np.abs(np.asarray(p, float) - np.asarray(q, float))))
