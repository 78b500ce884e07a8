"""ICDAR-style detection, word spotting and end-to-end evaluation.

Predictions are matched to ground truth one-to-one in descending score
order at a single polygon IoU threshold. Ground truth marked ``ignore``
counts neither for recall nor, when a prediction lands on it, for
precision.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .alphabet import DecodedText, normalize_word
from .geometry import Polygon, polygon_iou
from .lexicon import NO_LEXICON, Lexicon, match_lexicon, one_hot_probs

TASKS = ("det", "e2e", "spotting")


@dataclass
class GtInstance:
    polygon: Polygon
    transcription: str = ""
    ignore: bool = False

    def __post_init__(self):
        if self.transcription == "###":
            self.ignore = True
        if not self.ignore:
            self.transcription = normalize_word(self.transcription)


@dataclass
class SpotResult:
    polygon: Polygon
    text: str = ""
    score: float = 1.0
    char_probs: Optional[np.ndarray] = None

    def __post_init__(self):
        if not 0.0 <= self.score <= 1.0:
            raise ValueError(f"score must be in [0, 1], got {self.score}")


@dataclass
class MatchResult:
    matches: list[tuple[int, int]]  # (pred index, gt index)
    excluded: list[int]  # preds landing on ignored ground truth
    n_pred: int  # predictions that count for precision
    n_gt: int  # non-ignored ground truth

    @property
    def tp(self) -> int:
        return len(self.matches)


@dataclass
class EvalReport:
    precision: float
    recall: float
    f_measure: float
    tp: int
    n_pred: int
    n_gt: int
    matches: list[tuple[int, int]] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "precision": self.precision,
            "recall": self.recall,
            "f_measure": self.f_measure,
            "tp": self.tp,
            "n_pred": self.n_pred,
            "n_gt": self.n_gt,
            "matches": [list(m) for m in self.matches],
        }


def match_detections(
    preds: Sequence[SpotResult],
    gts: Sequence[GtInstance],
    iou_thresh: float = 0.5,
) -> MatchResult:
    """Greedy one-to-one polygon matching.

    Predictions are visited by descending score (input order breaks ties).
    Each takes the unmatched, non-ignored ground truth it overlaps most, if
    that IoU reaches ``iou_thresh``. A prediction that finds no such match
    but overlaps an ignored instance at the threshold is excluded from
    precision instead of counting as a false positive.
    """
    iou = np.zeros((len(preds), len(gts)))
    for i, p in enumerate(preds):
        for j, g in enumerate(gts):
            iou[i, j] = polygon_iou(p.polygon, g.polygon)
    ignored = np.array([g.ignore for g in gts], dtype=bool)
    taken = np.zeros(len(gts), dtype=bool)
    order = sorted(range(len(preds)), key=lambda i: -preds[i].score)
    matches, excluded = [], []
    for i in order:
        cand = np.where(~ignored & ~taken & (iou[i] >= iou_thresh), iou[i], -1.0)
        if len(gts) and cand.max() >= iou_thresh:
            j = int(np.argmax(cand))
            taken[j] = True
            matches.append((i, j))
        elif np.any(ignored & (iou[i] >= iou_thresh)):
            excluded.append(i)
    matches.sort()
    return MatchResult(
        matches=matches,
        excluded=sorted(excluded),
        n_pred=len(preds) - len(excluded),
        n_gt=int((~ignored).sum()),
    )


def prf(tp: int, n_pred: int, n_gt: int, matches=None) -> EvalReport:
    precision = tp / n_pred if n_pred else 0.0
    recall = tp / n_gt if n_gt else 0.0
    f = 2 * precision * recall / (precision + recall) if precision + recall > 0 else 0.0
    return EvalReport(precision, recall, f, tp, n_pred, n_gt, list(matches or []))


def detection_prf(result: MatchResult) -> EvalReport:
    return prf(result.tp, result.n_pred, result.n_gt, result.matches)


def is_spotting_word(text: str) -> bool:
    return len(text) >= 3 and text.isascii() and text.isalnum()


def recognized_text(pred: SpotResult, lex: Lexicon, weighted: bool) -> str:
    """Normalized prediction text, corrected against ``lex`` when it has a mode."""
    text = normalize_word(pred.text)
    if lex.mode == "none" or not text:
        return text
    if weighted and pred.char_probs is not None and len(text) == len(pred.text):
        probs = pred.char_probs
    else:
        probs = one_hot_probs(text)
    result = DecodedText(text, [1.0] * len(text), 1.0, "sam", char_probs=probs)
    word, _ = match_lexicon(result, probs, lex, weighted=weighted)
    return word


def end_to_end_eval(
    preds: Sequence[SpotResult],
    gts: Sequence[GtInstance],
    lex: Lexicon = NO_LEXICON,
    mode: str = "end_to_end",
    weighted: bool = False,
    iou_thresh: float = 0.5,
) -> EvalReport:
    """Recognition-aware evaluation.

    A polygon match only counts if the (lexicon-corrected) text equals the
    ground-truth transcription. In ``word_spotting`` mode ground truth that
    is not a word of three or more alphanumeric characters is ignored.
    """
    if mode not in ("end_to_end", "word_spotting"):
        raise ValueError(f"unknown mode {mode!r}")
    if lex is None:
        raise ValueError("a lexicon is required; use NO_LEXICON for none")
    if mode == "word_spotting":
        gts = [
            GtInstance(g.polygon, g.transcription, g.ignore or not is_spotting_word(g.transcription))
            for g in gts
        ]
    det = match_detections(preds, gts, iou_thresh)
    correct = [
        (i, j) for i, j in det.matches
        if recognized_text(preds[i], lex, weighted) == gts[j].transcription
    ]
    return prf(len(correct), det.n_pred, det.n_gt, correct)


def aggregate(reports: Sequence[EvalReport]) -> EvalReport:
    """Pool per-image counts into one report."""
    tp = sum(r.tp for r in reports)
    n_pred = sum(r.n_pred for r in reports)
    n_gt = sum(r.n_gt for r in reports)
    return prf(tp, n_pred, n_gt)
