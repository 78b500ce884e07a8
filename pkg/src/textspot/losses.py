"""Mask-branch losses on probability inputs.

All functions take probabilities (not logits), clamp them to
``[EPS, 1 - EPS]`` before taking logs, and return a Python float.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .alphabet import NUM_CHARS
from .geometry import IGNORE_LABEL

EPS = 1e-7


@dataclass(frozen=True)
class LossConfig:
    alpha1: float = 1.0
    alpha2: float = 1.0
    beta1: float = 1.0
    beta2: float = 0.2

    def __post_init__(self):
        for name in ("alpha1", "alpha2", "beta1", "beta2"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be non-negative")


def _clamp(p):
    return np.clip(p, EPS, 1.0 - EPS)


def instance_loss(pred, target) -> float:
    """Mean binary cross-entropy of the text instance map."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape}, target {target.shape}")
    p = _clamp(pred)
    bce = target * np.log(p) + (1.0 - target) * np.log1p(-p)
    return float(-bce.mean())


def _check_codes(target) -> np.ndarray:
    target = np.asarray(target)
    if np.any(target != np.round(target)):
        raise ValueError("character targets must be integer codes")
    target = target.astype(np.int64)
    if target.min(initial=0) < IGNORE_LABEL or target.max(initial=0) > NUM_CHARS:
        raise ValueError(f"character codes must lie in {{-1, 0, 1..{NUM_CHARS}}}")
    return target


def seg_weights(target) -> np.ndarray:
    """Per-pixel weights balancing character pixels against background.

    Background pixels weigh 1, character pixels ``N_neg / (N - N_neg)``,
    ignored pixels 0. ``N`` counts only non-ignored pixels.
    """
    target = _check_codes(target)
    valid = target != IGNORE_LABEL
    n = int(valid.sum())
    n_neg = int((target == 0).sum())
    n_pos = n - n_neg
    pos_w = n_neg / n_pos if n_pos > 0 else 0.0
    w = np.zeros(target.shape)
    w[target == 0] = 1.0
    w[target > 0] = pos_w
    return w


def char_seg_loss(pred, target) -> float:
    """Weighted per-pixel cross-entropy of ``(N_c, H, W)`` character probabilities."""
    pred = np.asarray(pred, dtype=np.float64)
    target = _check_codes(target)
    if pred.ndim != 3 or pred.shape[1:] != target.shape:
        raise ValueError(f"shape mismatch: pred {pred.shape}, target {target.shape}")
    if pred.shape[0] != NUM_CHARS + 1:
        raise ValueError(f"expected {NUM_CHARS + 1} channels, got {pred.shape[0]}")
    if np.abs(pred.sum(axis=0) - 1.0).max() > 1e-4:
        raise ValueError("character probabilities must sum to 1 at every pixel")
    valid = target != IGNORE_LABEL
    n = int(valid.sum())
    if n == 0:
        return 0.0
    w = seg_weights(target)
    rows, cols = np.nonzero(valid)
    p = _clamp(pred[target[rows, cols], rows, cols])
    return float(-(w[rows, cols] * np.log(p)).sum() / n)


def seq_loss(step_probs, target) -> float:
    """Negative log-likelihood of a class sequence (EOS included in ``target``)."""
    step_probs = [np.asarray(r, dtype=np.float64) for r in step_probs]
    target = list(target)
    if len(step_probs) != len(target):
        raise ValueError(f"{len(step_probs)} probability rows for {len(target)} targets")
    total = 0.0
    for row, y in zip(step_probs, target):
        if abs(row.sum() - 1.0) > 1e-6:
            raise ValueError("each step distribution must sum to 1")
        total -= float(np.log(_clamp(row[y])))
    return total


def mask_loss(ins: float, seg: float, seq: float, cfg: LossConfig = LossConfig()) -> float:
    if min(ins, seg, seq) < 0:
        raise ValueError("loss components must be non-negative")
    return ins + cfg.beta1 * seg + cfg.beta2 * seq


def total_loss(rpn: float, rcnn: float, mask: float, cfg: LossConfig = LossConfig()) -> float:
    """Multi-task sum; the detection terms come from outside this package."""
    return rpn + cfg.alpha1 * rcnn + cfg.alpha2 * mask
