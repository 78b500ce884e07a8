"""Built-in invariant checks run by ``textspot selftest``.

The oracles here are deliberately naive re-implementations (explicit
flood fill, recursive edit distance, closed-form losses) so that a check
never shares code with the path it verifies.
"""

from __future__ import annotations

import math
import time
from contextlib import ExitStack
from dataclasses import dataclass
from functools import lru_cache
from unittest import mock

import numpy as np

from . import sam as sam_module
from .alphabet import ALPHABET, NUM_CLASSES
from .lexicon import edit_distance, one_hot_probs, weighted_edit_distance
from .losses import char_seg_loss, instance_loss, mask_loss, seq_loss
from .sam import SamConfig, _Context, _step, initial_state, random_weights
from .seg_decoder import pixel_vote


@dataclass
class CheckResult:
    name: str
    passed: bool
    detail: str
    seconds: float


def synthetic_stack(rng: np.random.Generator, h: int, w: int, max_regions: int = 5):
    """Character maps with up to ``max_regions`` non-touching rectangular blobs."""
    stack = np.zeros((NUM_CLASSES, h, w))
    stack[0] = 1.0
    occupied = np.zeros((h + 2, w + 2), dtype=bool)
    for _ in range(int(rng.integers(0, max_regions + 1))):
        rh, rw = int(rng.integers(1, min(h, 6) + 1)), int(rng.integers(1, min(w, 8) + 1))
        r0, c0 = int(rng.integers(0, h - rh + 1)), int(rng.integers(0, w - rw + 1))
        # keep a one-pixel moat so blobs never merge under 8-connectivity
        if occupied[r0:r0 + rh + 2, c0:c0 + rw + 2].any():
            continue
        occupied[r0 + 1:r0 + rh + 1, c0 + 1:c0 + rw + 1] = True
        p = rng.dirichlet(np.ones(NUM_CLASSES), size=(rh, rw))
        p[..., 0] *= 0.5  # background below 0.75 everywhere in the blob
        p[..., 1:] *= (1 - p[..., :1]) / p[..., 1:].sum(axis=-1, keepdims=True)
        stack[:, r0:r0 + rh, c0:c0 + rw] = np.moveaxis(p, -1, 0)
    return stack


def _flood_fill_decode(stack, thresh=0.75):
    h, w = stack.shape[1:]
    fg = stack[0] < thresh
    seen = np.zeros_like(fg)
    found = []
    for r in range(h):
        for c in range(w):
            if not fg[r, c] or seen[r, c]:
                continue
            todo, pix = [(r, c)], []
            seen[r, c] = True
            while todo:
                y, x = todo.pop()
                pix.append((y, x))
                for dy in (-1, 0, 1):
                    for dx in (-1, 0, 1):
                        yy, xx = y + dy, x + dx
                        if 0 <= yy < h and 0 <= xx < w and fg[yy, xx] and not seen[yy, xx]:
                            seen[yy, xx] = True
                            todo.append((yy, xx))
            means = [sum(stack[k, y, x] for y, x in pix) / len(pix) for k in range(1, NUM_CLASSES)]
            best = max(range(len(means)), key=lambda k: (means[k], -k))
            cy = sum(y for y, _ in pix) / len(pix)
            cx = sum(x for _, x in pix) / len(pix)
            found.append((cx, cy, ALPHABET[best]))
    found.sort()
    return "".join(ch for _, _, ch in found)


def _recursive_ed(a, b):
    @lru_cache(maxsize=None)
    def go(i, j):
        if i == 0 or j == 0:
            return max(i, j)
        return min(go(i - 1, j) + 1, go(i, j - 1) + 1, go(i - 1, j - 1) + (a[i - 1] != b[j - 1]))
    return go(len(a), len(b))


def check_attention_normalization(n_steps: int = 200, seed: int = 0) -> str:
    cfg = SamConfig(H_p=4, W_p=8, C=6, V=8, T_max=4)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for trial in range(n_steps // 10):
        w = random_weights(cfg, seed + trial)
        ctx = _Context(rng.uniform(-1, 1, (cfg.feature_channels, cfg.H_p, cfg.W_p)), w, cfg)
        state = initial_state(cfg)
        for _ in range(10):
            state.s = rng.uniform(-1, 1, cfg.V)
            state.y_prev = int(rng.integers(cfg.N_c))
            _, _, _, alpha = _step(ctx, state)
            if alpha.min() < 0:
                raise AssertionError("negative attention weight")
            worst = max(worst, abs(alpha.sum() - 1.0))
    if worst >= 1e-9:
        raise AssertionError(f"|sum(alpha) - 1| = {worst:.3g}")
    return f"max |sum-1| = {worst:.1e}"


def check_pixel_vote_oracle(n: int = 100, seed: int = 1) -> str:
    rng = np.random.default_rng(seed)
    for k in range(n):
        stack = synthetic_stack(rng, int(rng.integers(4, 17)), int(rng.integers(8, 65)))
        got, want = pixel_vote(stack).text, _flood_fill_decode(stack)
        if got != want:
            raise AssertionError(f"case {k}: decoded {got!r}, oracle {want!r}")
    return f"{n} stacks agree"


def check_ed_collapse(n: int = 100, seed: int = 2) -> str:
    rng = np.random.default_rng(seed)
    letters = "abc"
    for _ in range(n):
        a = "".join(rng.choice(list(letters), size=int(rng.integers(0, 7))))
        b = "".join(rng.choice(list(letters), size=int(rng.integers(0, 7))))
        lev = edit_distance(a, b)
        if lev != _recursive_ed(a, b):
            raise AssertionError(f"edit_distance({a!r}, {b!r}) disagrees with recursion")
        wed = weighted_edit_distance(a, one_hot_probs(a), b)
        if wed != lev:
            raise AssertionError(f"weighted({a!r}, {b!r}) = {wed} != {lev}")
    return f"{n} pairs agree"


def check_loss_closed_forms() -> str:
    errs = [
        abs(instance_loss(np.full((1, 4, 8), 0.5), np.ones((1, 4, 8))) - math.log(2)),
        abs(char_seg_loss(np.full((NUM_CLASSES, 4, 8), 1 / NUM_CLASSES), np.zeros((4, 8))) - math.log(37)),
        abs(seq_loss([np.full(NUM_CLASSES, 1 / NUM_CLASSES)] * 5, [1, 2, 3, 4, 0]) - 5 * math.log(37)),
    ]
    if max(errs) > 1e-9:
        raise AssertionError(f"closed-form error {max(errs):.3g}")
    if mask_loss(1.0, 1.0, 1.0) != 2.2:
        raise AssertionError("mask_loss(1, 1, 1) != 2.2")
    return f"max error {max(errs):.1e}"


CHECKS = {
    "attention normalization": check_attention_normalization,
    "pixel-vote oracle": check_pixel_vote_oracle,
    "ED collapse": check_ed_collapse,
    "loss closed forms": check_loss_closed_forms,
}


def _broken_softmax(x, axis=-1):
    z = np.exp(np.asarray(x) - np.max(x, axis=axis, keepdims=True))
    return z / (z.sum(axis=axis, keepdims=True) + 0.01)


FAULTS = {"softmax": lambda: mock.patch.object(sam_module, "softmax", _broken_softmax)}


def run_selftest(inject_fault: str | None = None) -> list[CheckResult]:
    results = []
    with ExitStack() as stack:
        if inject_fault is not None:
            if inject_fault not in FAULTS:
                raise ValueError(f"unknown fault {inject_fault!r}; known: {sorted(FAULTS)}")
            stack.enter_context(FAULTS[inject_fault]())
        for name, fn in CHECKS.items():
            t0 = time.perf_counter()
            try:
                detail, ok = fn(), True
            except AssertionError as exc:
                detail, ok = str(exc), False
            results.append(CheckResult(name, ok, detail, time.perf_counter() - t0))
    return results


def format_table(results: list[CheckResult]) -> str:
    width = max(len(r.name) for r in results)
    lines = [f"{'check':<{width}}  status  time    detail"]
    for r in results:
        status = "PASS" if r.passed else "FAIL"
        lines.append(f"{r.name:<{width}}  {status:<6}  {r.seconds:5.2f}s  {r.detail}")
    return "\n".join(lines)
