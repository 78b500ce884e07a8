"""Pixel voting: turn per-RoI character probability maps into a word."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .alphabet import NUM_CLASSES, DecodedText, class_to_char
from .tensor import as_tensor

DEFAULT_BG_THRESHOLD = 0.75
_EIGHT_CONNECTED = np.ones((3, 3), dtype=bool)


@dataclass
class Region:
    pixels: np.ndarray  # (n, 2) of (row, col)

    @property
    def centroid(self) -> tuple[float, float]:
        r, c = self.pixels.mean(axis=0)
        return float(r), float(c)


def check_char_maps(stack, tol: float = 1e-4) -> np.ndarray:
    """Validate a ``(37, H, W)`` stack of post-softmax character maps."""
    stack = as_tensor(stack, ndim=3, name="character maps")
    if stack.shape[0] != NUM_CLASSES:
        raise ValueError(f"expected {NUM_CLASSES} channels, got {stack.shape[0]}")
    if stack.min() < -tol or stack.max() > 1 + tol:
        raise ValueError("character map values must lie in [0, 1]")
    if np.abs(stack.sum(axis=0) - 1.0).max() > tol:
        raise ValueError("character maps must sum to 1 over channels at every pixel")
    return stack


def binarize_foreground(stack, thresh: float = DEFAULT_BG_THRESHOLD) -> np.ndarray:
    """1 where the background probability is strictly below ``thresh``."""
    if not 0.0 < thresh < 1.0:
        raise ValueError(f"threshold must be in (0, 1), got {thresh}")
    stack = check_char_maps(stack)
    return (stack[0] < thresh).astype(np.float64)


def connected_regions(mask) -> list[Region]:
    """8-connected components of the 1-pixels, ordered by (min row, min col)."""
    mask = np.asarray(mask)
    if mask.ndim != 2:
        raise ValueError("mask must be 2-D")
    labels, n = ndimage.label(mask > 0, structure=_EIGHT_CONNECTED)
    regions = []
    for k in range(1, n + 1):
        pix = np.argwhere(labels == k)  # row-major, so pix[0] is the (min row, min col) pixel
        regions.append(Region(pix))
    regions.sort(key=lambda reg: (int(reg.pixels[:, 0].min()), int(reg.pixels[:, 1].min())))
    return regions


def pixel_vote(stack, thresh: float = DEFAULT_BG_THRESHOLD) -> DecodedText:
    stack = check_char_maps(stack)
    regions = connected_regions(binarize_foreground(stack, thresh))
    regions.sort(key=lambda reg: (reg.centroid[1], reg.centroid[0]))

    chars, scores, rows = [], [], []
    for reg in regions:
        means = stack[1:, reg.pixels[:, 0], reg.pixels[:, 1]].mean(axis=1)
        best = int(np.argmax(means))  # first maximum -> lowest channel on ties
        chars.append(class_to_char(best + 1))
        scores.append(float(means[best]))
        rows.append(means)

    char_probs = np.array(rows) if rows else np.zeros((0, NUM_CLASSES - 1))
    confidence = float(np.mean(scores)) if scores else 0.0
    return DecodedText(
        text="".join(chars),
        char_scores=scores,
        confidence=confidence,
        source="segmentation",
        char_probs=char_probs,
    )
