"""Shared builders for the CLI and acceptance tests."""
import numpy as np

from textspot.alphabet import ALPHABET


def two_block_stack():
    """'a' at 0.8 and 'b' at 0.7 on an 8x10 background; mean confidence 0.75."""
    s = np.zeros((37, 8, 10))
    s[0] = 1.0
    for (c0, c1), ch, p in (((1, 3), "a", 0.8), ((5, 7), "b", 0.7)):
        k = ALPHABET.index(ch) + 1
        s[:, 2:4, c0:c1] = 0.0
        s[0, 2:4, c0:c1] = 0.1
        s[k, 2:4, c0:c1] = p
        others = [c for c in range(1, 37) if c != k]
        s[others, 2:4, c0:c1] = (0.9 - p) / len(others)
    return s


def rect(x0, y0, x1, y1):
    return [[x0, y0], [x1, y0], [x1, y1], [x0, y1]]


def fixture_gt():
    return {"img1": [
        {"polygon": rect(0, 0, 10, 10), "transcription": "alpha", "ignore": False},
        {"polygon": rect(20, 0, 30, 10), "transcription": "beta", "ignore": False},
        {"polygon": rect(40, 0, 50, 10), "transcription": "gamma", "ignore": False},
        {"polygon": rect(60, 0, 70, 10), "transcription": "delta", "ignore": False},
        {"polygon": rect(80, 0, 90, 10), "transcription": "###", "ignore": True},
    ]}


def fixture_pred():
    """Two hits, one stray box, one box on the ignored word."""
    return {"img1": [
        {"polygon": rect(0, 0, 10, 10), "text": "alpha", "score": 0.9},
        {"polygon": rect(21, 0, 31, 10), "text": "beta", "score": 0.8},
        {"polygon": rect(100, 0, 110, 10), "text": "zzz", "score": 0.7},
        {"polygon": rect(80, 0, 90, 10), "text": "ignored", "score": 0.95},
    ]}
