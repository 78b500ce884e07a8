"""
Scoring detections and end-to-end results
=========================================

Four words on a line, one "do not care" region, three predictions.
"""

from textspot import GtInstance, Lexicon, Polygon, SpotResult, detection_prf, end_to_end_eval, match_detections


def box(x):
    return Polygon.from_rect(x, 0, x + 10, 10)


gts = [GtInstance(box(0), "alpha"), GtInstance(box(20), "beta"), GtInstance(box(40), "gamma"),
       GtInstance(box(60), "delta"), GtInstance(box(80), "###")]
preds = [SpotResult(box(0), "alpha", 0.9), SpotResult(box(21), "betq", 0.8),
         SpotResult(box(100), "zzz", 0.7), SpotResult(box(80), "noise", 0.95)]

m = match_detections(preds, gts)
print("matches (pred, gt):", m.matches, "excluded:", m.excluded)
rep = detection_prf(m)
print(f"detection  P={rep.precision:.3f} R={rep.recall:.3f} F={rep.f_measure:.3f}")

rep = end_to_end_eval(preds, gts)
print(f"end-to-end P={rep.precision:.3f} R={rep.recall:.3f} F={rep.f_measure:.3f}")

lex = Lexicon(["alpha", "beta", "gamma", "delta"], "strong")
rep = end_to_end_eval(preds, gts, lex)
print(f"with lexicon P={rep.precision:.3f} R={rep.recall:.3f} F={rep.f_measure:.3f}")
