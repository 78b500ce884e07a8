"""Command-line entry point: ``textspot {gen-labels,decode,evaluate,selftest}``."""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from .evaluation import TASKS, detection_prf, end_to_end_eval, match_detections, aggregate
from .geometry import bounding_rect, generate_targets, rect_iou
from .io import (
    FormatError,
    Proposal,
    load_annotations,
    load_ground_truth,
    load_predictions,
    load_proposals,
    load_weights,
    read_tensor,
    write_tensor,
)
from .lexicon import LEXICON_MODES, NO_LEXICON, Lexicon, fuse, match_lexicon
from .sam import SamConfig, beam_decode, greedy_decode, random_weights
from .seg_decoder import pixel_vote
from .selftest import format_table, run_selftest


def _parse_size(text: str) -> tuple[int, int]:
    try:
        w, h = (int(v) for v in text.lower().split("x"))
    except ValueError:
        raise argparse.ArgumentTypeError(f"size must look like 128x32, got {text!r}") from None
    if w < 1 or h < 1:
        raise argparse.ArgumentTypeError("size extents must be positive")
    return w, h


def _map_jobs(fn, items, jobs: int):
    if jobs <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(fn, items))  # keeps input order


# --- gen-labels --------------------------------------------------------------

def _pick_instance(prop: Proposal, words) -> Optional[int]:
    if prop.instance is not None:
        if not 0 <= prop.instance < len(words):
            raise FormatError(f"proposal refers to instance {prop.instance}, image has {len(words)}")
        return prop.instance
    best, best_iou = None, 0.0
    for k, word in enumerate(words):
        iou = rect_iou(prop.box, bounding_rect(word.gt.polygon))
        if iou > best_iou:
            best, best_iou = k, iou
    return best


def gen_labels(annotations, proposals, out_dir, size=(128, 32), dtype="f64", jobs=1) -> list[Path]:
    """Write ``<image>_<proposal>.ins.tspt`` / ``.chr.tspt`` target pairs."""
    anns = load_annotations(annotations)
    props = load_proposals(proposals)
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    w, h = size

    def one_image(image):
        if image not in anns:
            raise FormatError(f"proposals reference unknown image {image!r}")
        words = anns[image]
        written = []
        for idx, prop in enumerate(props[image]):
            k = _pick_instance(prop, words)
            if k is None:
                print(f"warning: {image} proposal {idx} overlaps no annotation; skipped", file=sys.stderr)
                continue
            targets = generate_targets(words[k].gt.polygon, words[k].chars, prop.box, w, h)
            ins_path = out / f"{image}_{idx}.ins.tspt"
            chr_path = out / f"{image}_{idx}.chr.tspt"
            write_tensor(ins_path, targets.instance_map, dtype)
            write_tensor(chr_path, targets.char_map.astype(np.float64), dtype)
            written += [ins_path, chr_path]
        return written

    per_image = _map_jobs(one_image, sorted(props), jobs)
    return [p for paths in per_image for p in paths]


# --- decode ------------------------------------------------------------------

def decode(
    seg_maps=None,
    sam_feat=None,
    weights=None,
    beam: Optional[int] = None,
    lexicon: Lexicon = NO_LEXICON,
    weighted: bool = False,
) -> dict:
    """Run the available recognizers on one RoI, fuse them and apply the lexicon."""
    if seg_maps is None and sam_feat is None:
        raise ValueError("give character maps, a SAM feature map, or both")
    seg = pixel_vote(seg_maps) if seg_maps is not None else None
    sam = None
    if sam_feat is not None:
        if weights is None:
            raise ValueError("SAM decoding needs weights")
        sam = greedy_decode(sam_feat, weights) if beam is None else beam_decode(sam_feat, weights, k=beam)
    best = fuse(seg, sam)
    out = {"text": best.text, "confidence": best.confidence, "source": best.source}
    if lexicon.mode != "none":
        word, dist = match_lexicon(best, None, lexicon, weighted=weighted)
        out["matched_word"] = word
        out["distance"] = dist
    out["branches"] = {r.source: r.to_json() for r in (seg, sam) if r is not None}
    return out


# --- evaluate ----------------------------------------------------------------

def evaluate(gt_path, pred_path, task="det", lexicon=NO_LEXICON, weighted=False, iou=0.5, jobs=1) -> dict:
    if task not in TASKS:
        raise ValueError(f"unknown task {task!r}; choose from {TASKS}")
    gts = load_ground_truth(gt_path)
    preds = load_predictions(pred_path)
    images = sorted(set(gts) | set(preds))

    def one_image(image):
        p, g = preds.get(image, []), gts.get(image, [])
        if task == "det":
            return detection_prf(match_detections(p, g, iou))
        mode = "end_to_end" if task == "e2e" else "word_spotting"
        return end_to_end_eval(p, g, lexicon, mode=mode, weighted=weighted, iou_thresh=iou)

    reports = _map_jobs(one_image, images, jobs)
    return {
        "task": task,
        "iou": iou,
        "aggregate": aggregate(reports).to_json(),
        "images": {img: r.to_json() for img, r in zip(images, reports)},
    }


# --- argument parsing --------------------------------------------------------

def _lexicon_from_args(args) -> Lexicon:
    if args.lexicon is None:
        if args.lexicon_mode not in (None, "none"):
            raise ValueError(f"--lexicon-mode {args.lexicon_mode} needs --lexicon")
        return NO_LEXICON
    return Lexicon.from_file(args.lexicon, args.lexicon_mode or "strong")


def _add_lexicon_args(p):
    p.add_argument("--lexicon", help="word list, one word per line")
    p.add_argument("--lexicon-mode", choices=LEXICON_MODES, help="default: strong when --lexicon is given")
    p.add_argument("--weighted-ed", action="store_true", help="use the probability-weighted edit distance")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="textspot", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-labels", help="write instance/character targets per proposal")
    p.add_argument("annotations")
    p.add_argument("proposals")
    p.add_argument("out_dir")
    p.add_argument("--size", type=_parse_size, default=(128, 32), help="target WxH (default 128x32)")
    p.add_argument("--dtype", choices=("f32", "f64"), default="f64")
    p.add_argument("--jobs", type=int, default=1)

    p = sub.add_parser("decode", help="decode one RoI and print JSON")
    p.add_argument("--seg", help="(37, H, W) character probability maps")
    p.add_argument("--sam", help="(C, h, w) RoI feature map")
    p.add_argument("--weights", help="SAM weight bundle (directory or zip)")
    p.add_argument("--random-weights", type=int, metavar="SEED", help=argparse.SUPPRESS)
    p.add_argument("--beam", type=int, help="beam width (default: greedy decoding)")
    _add_lexicon_args(p)

    p = sub.add_parser("evaluate", help="precision/recall/F against ground truth")
    p.add_argument("--gt", required=True)
    p.add_argument("--pred", required=True)
    p.add_argument("--task", choices=TASKS, default="det")
    p.add_argument("--iou", type=float, default=0.5)
    p.add_argument("--jobs", type=int, default=1)
    _add_lexicon_args(p)

    p = sub.add_parser("selftest", help="run the built-in invariant checks")
    p.add_argument("--inject-fault", help=argparse.SUPPRESS)
    return parser


def _run(args) -> int:
    if args.command == "gen-labels":
        paths = gen_labels(args.annotations, args.proposals, args.out_dir, args.size, args.dtype, args.jobs)
        print(json.dumps({"written": [str(p) for p in paths]}, indent=2))
        return 0

    if args.command == "decode":
        if args.seg is None and args.sam is None:
            raise ValueError("decode needs --seg, --sam, or both")
        if args.beam is not None and args.beam < 1:
            raise ValueError("--beam must be >= 1")
        seg = read_tensor(args.seg) if args.seg else None
        feat = weights = None
        if args.sam:
            feat = read_tensor(args.sam)
            if feat.ndim != 3:
                raise ValueError(f"SAM feature map must be 3-D, got shape {feat.shape}")
            if args.weights:
                weights = load_weights(args.weights)
            elif args.random_weights is not None:
                weights = random_weights(SamConfig(in_channels=feat.shape[0]), args.random_weights)
            else:
                raise ValueError("--sam needs --weights")
        out = decode(seg, feat, weights, args.beam, _lexicon_from_args(args), args.weighted_ed)
        print(json.dumps(out, indent=2))
        return 0

    if args.command == "evaluate":
        report = evaluate(args.gt, args.pred, args.task, _lexicon_from_args(args), args.weighted_ed,
                          args.iou, args.jobs)
        print(json.dumps(report, indent=2))
        return 0

    if args.command == "selftest":
        results = run_selftest(args.inject_fault)
        print(format_table(results))
        failed = [r.name for r in results if not r.passed]
        if failed:
            print(f"selftest failed: {', '.join(failed)}", file=sys.stderr)
            return 1
        return 0
    raise AssertionError(args.command)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return _run(args)
    except (FormatError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
