"""Character classes shared by the segmentation and attention decoders.

Both decoders use 37 classes. Index 0 is the background channel for the
character maps and the end-of-sequence symbol for the attention decoder;
indices 1..36 are the case-free alphanumeric characters in the order of
``ALPHABET``.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

ALPHABET = "0123456789abcdefghijklmnopqrstuvwxyz"
NUM_CHARS = len(ALPHABET)
NUM_CLASSES = NUM_CHARS + 1
BACKGROUND = 0
EOS = 0

_CHAR_TO_CLASS = {c: i + 1 for i, c in enumerate(ALPHABET)}
_NON_ALNUM = re.compile(r"[^0-9a-z]")


def char_to_class(ch: str) -> int:
    try:
        return _CHAR_TO_CLASS[ch.lower()]
    except KeyError:
        raise ValueError(f"character {ch!r} is outside the alphanumeric alphabet") from None


def class_to_char(cls: int) -> str:
    if not 1 <= cls <= NUM_CHARS:
        raise ValueError(f"class index {cls} has no character (valid: 1..{NUM_CHARS})")
    return ALPHABET[cls - 1]


def normalize_word(text: str) -> str:
    """Lowercase ``text`` and drop everything outside ``[0-9a-z]``."""
    return _NON_ALNUM.sub("", text.lower())


def encode_word(text: str) -> list[int]:
    return [char_to_class(c) for c in text]


@dataclass
class DecodedText:
    """Output of either recognizer.

    ``char_probs`` holds one row per decoded character with the probability
    of every alphanumeric class at that position (column ``k`` is class
    ``k + 1``). It feeds the weighted edit distance.
    """

    text: str
    char_scores: list[float]
    confidence: float
    source: str
    char_probs: np.ndarray = field(default_factory=lambda: np.zeros((0, NUM_CHARS)))
    step_probs: Optional[np.ndarray] = None
    tokens: Optional[list[int]] = None

    def __post_init__(self):
        if len(self.char_scores) != len(self.text):
            raise ValueError("char_scores must have one entry per character")
        if self.source not in ("segmentation", "sam"):
            raise ValueError(f"unknown source {self.source!r}")

    def to_json(self) -> dict:
        return {
            "text": self.text,
            "confidence": float(self.confidence),
            "source": self.source,
            "char_scores": [float(s) for s in self.char_scores],
        }
