"""Recognizer fusion and lexicon matching with (weighted) edit distance."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Optional

import numpy as np

from .alphabet import NUM_CHARS, DecodedText, char_to_class, normalize_word

LEXICON_MODES = ("none", "strong", "weak", "generic")


@dataclass(frozen=True)
class Lexicon:
    words: tuple[str, ...]
    mode: str = "strong"

    def __init__(self, words: Iterable[str], mode: str = "strong"):
        if mode not in LEXICON_MODES:
            raise ValueError(f"lexicon mode must be one of {LEXICON_MODES}, got {mode!r}")
        normed = tuple(w for w in (normalize_word(w) for w in words) if w)
        if mode != "none" and not normed:
            raise ValueError(f"a {mode!r} lexicon needs at least one word")
        object.__setattr__(self, "words", normed)
        object.__setattr__(self, "mode", mode)

    @classmethod
    def from_file(cls, path, mode: str = "strong") -> "Lexicon":
        text = Path(path).read_text(encoding="utf-8")
        return cls(text.splitlines(), mode)

    def __len__(self):
        return len(self.words)


NO_LEXICON = Lexicon((), "none")


def fuse(seg: Optional[DecodedText], sam: Optional[DecodedText]) -> DecodedText:
    """Keep whichever result is more confident; SAM wins ties."""
    if seg is None and sam is None:
        raise ValueError("fuse needs at least one recognition result")
    if seg is None:
        return sam
    if sam is None:
        return seg
    return seg if seg.confidence > sam.confidence else sam


def edit_distance(a: str, b: str) -> int:
    """Levenshtein distance with unit costs.

    Bit-parallel column update (Myers / Hyyro) over the shorter string;
    Python integers make it work for any length.
    """
    if a == b:
        return 0
    if len(a) < len(b):
        a, b = b, a
    m = len(b)
    if m == 0:
        return len(a)
    peq: dict[str, int] = {}
    for i, c in enumerate(b):
        peq[c] = peq.get(c, 0) | (1 << i)
    mask = (1 << m) - 1
    top = 1 << (m - 1)
    pv, mv, score = mask, 0, m
    for c in a:
        eq = peq.get(c, 0)
        xv = eq | mv
        xh = (((eq & pv) + pv) ^ pv) | eq
        ph = mv | (~(xh | pv) & mask)
        mh = pv & xh
        if ph & top:
            score += 1
        elif mh & top:
            score -= 1
        ph = ((ph << 1) | 1) & mask
        mh = (mh << 1) & mask
        pv = mh | (~(xv | ph) & mask)
        mv = ph & xv
    return score


def one_hot_probs(text: str) -> np.ndarray:
    """Fully confident probability table for ``text``."""
    rows = np.zeros((len(text), NUM_CHARS))
    for i, ch in enumerate(text):
        rows[i, char_to_class(ch) - 1] = 1.0
    return rows


def _check_table(probs, n_rows: int) -> np.ndarray:
    probs = np.asarray(probs, dtype=np.float64)
    if n_rows == 0 and probs.size == 0:
        return probs.reshape(0, NUM_CHARS)
    if probs.ndim != 2 or probs.shape[0] != n_rows:
        raise ValueError(f"need one probability row per predicted character ({n_rows}), got {probs.shape}")
    if probs.shape[1] > NUM_CHARS:
        raise ValueError(f"probability rows have {probs.shape[1]} columns, at most {NUM_CHARS} allowed")
    if probs.min() < 0 or np.any(probs.sum(axis=1) > 1 + 1e-6):
        raise ValueError("probability rows must be non-negative and sum to at most 1")
    if probs.shape[1] < NUM_CHARS:
        # tables from small test configurations cover a prefix of the alphabet
        probs = np.pad(probs, ((0, 0), (0, NUM_CHARS - probs.shape[1])))
    return probs


def weighted_edit_distance(pred: str, probs, cand: str) -> float:
    """Edit distance whose costs come from the per-position character probabilities.

    With ``p_i`` the probability row of predicted character ``i``:

    * deleting ``pred[i]`` costs ``p_i(pred[i])``;
    * replacing ``pred[i]`` by ``c`` costs ``1 - p_i(c)``;
    * inserting ``c`` before prediction row ``k`` (the last row when
      inserting at the end) costs ``1 - p_k(c)``, or 1 if ``c`` is the
      character already predicted at ``k``.

    With one-hot rows every cost is 1 and this is plain Levenshtein.
    """
    pred, cand = pred.lower(), cand.lower()
    pc = [char_to_class(c) - 1 for c in pred]
    cc = [char_to_class(c) - 1 for c in cand]
    probs = _check_table(probs, len(pred))
    m, n = len(pc), len(cc)
    D = np.zeros((m + 1, n + 1))
    D[:, 0] = np.arange(m + 1)
    D[0, :] = np.arange(n + 1)
    if m == 0 or n == 0:
        return float(D[m, n])

    del_cost = probs[np.arange(m), pc]
    cand_p = probs[:, cc]  # cand_p[i, j] = p_i(cand[j])
    rep_cost = np.where(np.array(pc)[:, None] == np.array(cc)[None, :], 0.0, 1.0 - cand_p)
    ins_cost = np.empty((m + 1, n))
    for i in range(1, m + 1):
        k = min(i, m - 1)
        ins_cost[i] = np.where(np.array(cc) == pc[k], 1.0, 1.0 - cand_p[k])

    for i in range(1, m + 1):
        for j in range(1, n + 1):
            D[i, j] = min(
                D[i - 1, j] + del_cost[i - 1],
                D[i, j - 1] + ins_cost[i, j - 1],
                D[i - 1, j - 1] + rep_cost[i - 1, j - 1],
            )
    return float(max(D[m, n], 0.0))


def match_lexicon(
    result: DecodedText,
    probs,
    lex: Lexicon,
    weighted: bool = False,
) -> tuple[str, float]:
    """Closest lexicon word to ``result.text``; earlier words win ties.

    ``probs`` (``None`` means ``result.char_probs``) is only read when
    ``weighted`` is set.
    """
    if lex.mode == "none":
        return result.text, 0.0
    if not lex.words:
        raise ValueError(f"{lex.mode!r} lexicon is empty")
    pred = normalize_word(result.text)
    if weighted:
        table = result.char_probs if probs is None else probs
        if len(pred) != len(result.text):
            raise ValueError(f"prediction {result.text!r} has characters outside the alphabet")
        table = _check_table(table, len(pred))

        def dist(word):
            return weighted_edit_distance(pred, table, word)
    else:
        def dist(word):
            return float(edit_distance(pred, word))

    best_word, best = lex.words[0], dist(lex.words[0])
    for word in lex.words[1:]:
        d = dist(word)
        if d < best:
            best_word, best = word, d
    return best_word, best
