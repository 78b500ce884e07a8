"""Polygon geometry and mask-branch target generation.

Word polygons and character boxes are mapped into the frame of a
proposal, then drawn into a binary text instance map and an integer
character map (0 background, 1..36 characters, -1 unannotated).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
import shapely
from shapely.geometry import Polygon as _ShapelyPolygon

from .alphabet import NUM_CHARS

IGNORE_LABEL = -1


@dataclass(frozen=True)
class Polygon:
    vertices: tuple[tuple[float, float], ...]

    def __init__(self, vertices: Iterable[Sequence[float]]):
        pts = tuple((float(x), float(y)) for x, y in vertices)
        if len(pts) < 3:
            raise ValueError(f"a polygon needs at least 3 vertices, got {len(pts)}")
        if not np.all(np.isfinite(pts)):
            raise ValueError("polygon vertices must be finite")
        object.__setattr__(self, "vertices", pts)

    @classmethod
    def from_rect(cls, x_min, y_min, x_max, y_max) -> "Polygon":
        return cls([(x_min, y_min), (x_max, y_min), (x_max, y_max), (x_min, y_max)])

    def as_array(self) -> np.ndarray:
        return np.asarray(self.vertices, dtype=np.float64)

    @property
    def signed_area(self) -> float:
        xy = self.as_array()
        x, y = xy[:, 0], xy[:, 1]
        return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))

    @property
    def is_degenerate(self) -> bool:
        return self.signed_area == 0.0

    def to_list(self) -> list[list[float]]:
        return [[x, y] for x, y in self.vertices]


@dataclass(frozen=True)
class Rect:
    """Axis-aligned rectangle, used both for proposals and character boxes."""

    x_min: float
    y_min: float
    x_max: float
    y_max: float

    def __post_init__(self):
        if not (self.x_max > self.x_min and self.y_max > self.y_min):
            raise ValueError(f"rectangle needs positive width and height: {self}")

    @property
    def width(self) -> float:
        return self.x_max - self.x_min

    @property
    def height(self) -> float:
        return self.y_max - self.y_min

    @property
    def area(self) -> float:
        return self.width * self.height

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x_min, self.y_min, self.x_max, self.y_max)


ProposalRect = Rect


@dataclass(frozen=True)
class CharBox:
    cls: int
    box: Rect

    def __post_init__(self):
        if not 1 <= self.cls <= NUM_CHARS:
            raise ValueError(f"character class {self.cls} outside 1..{NUM_CHARS}")


@dataclass
class LabelTargets:
    instance_map: np.ndarray  # (1, H, W) of {0, 1}
    char_map: np.ndarray  # (H, W) int codes


def align_to_proposal(pt, r: Rect, target_w: int, target_h: int) -> tuple[float, float]:
    """Shift and scale a point from image coordinates into a ``target_w x target_h`` proposal frame.

    No clipping: points outside the proposal land outside ``[0, W] x [0, H]``.
    """
    if not (r.x_max > r.x_min and r.y_max > r.y_min):
        raise ValueError("proposal has zero width or height")
    x0, y0 = pt
    x = (x0 - r.x_min) * target_w / (r.x_max - r.x_min)
    y = (y0 - r.y_min) * target_h / (r.y_max - r.y_min)
    return (x, y)


def align_polygon(poly: Polygon, r: Rect, target_w: int, target_h: int) -> Polygon:
    return Polygon([align_to_proposal(p, r, target_w, target_h) for p in poly.vertices])


def align_char_box(cb: CharBox, r: Rect, target_w: int, target_h: int) -> CharBox:
    x0, y0 = align_to_proposal((cb.box.x_min, cb.box.y_min), r, target_w, target_h)
    x1, y1 = align_to_proposal((cb.box.x_max, cb.box.y_max), r, target_w, target_h)
    return CharBox(cb.cls, Rect(x0, y0, x1, y1))


def _pixel_centers(w: int, h: int):
    cy, cx = np.mgrid[0:h, 0:w].astype(np.float64) + 0.5
    return cx, cy


def winding_numbers(poly: Polygon, px: np.ndarray, py: np.ndarray) -> np.ndarray:
    """Winding number of ``poly`` around each query point (vectorized crossing test)."""
    xy = poly.as_array()
    wn = np.zeros(px.shape, dtype=np.int64)
    for (x0, y0), (x1, y1) in zip(xy, np.roll(xy, -1, axis=0)):
        is_left = (x1 - x0) * (py - y0) - (px - x0) * (y1 - y0)
        up = (y0 <= py) & (py < y1) & (is_left > 0)
        down = (y1 <= py) & (py < y0) & (is_left < 0)
        wn += up.astype(np.int64) - down.astype(np.int64)
    return wn


def rasterize_instance(poly: Polygon, w: int, h: int) -> np.ndarray:
    """Binary ``(1, h, w)`` map: 1 where a pixel center is inside ``poly`` (nonzero rule)."""
    cx, cy = _pixel_centers(w, h)
    inside = winding_numbers(poly, cx, cy) != 0
    return inside.astype(np.float64)[None]


def shrink_char_box(cb: CharBox) -> CharBox:
    """Keep the center, cut both sides to a quarter."""
    b = cb.box
    cx, cy = (b.x_min + b.x_max) / 2, (b.y_min + b.y_max) / 2
    hw, hh = b.width / 8, b.height / 8
    return CharBox(cb.cls, Rect(cx - hw, cy - hh, cx + hw, cy + hh))


def render_char_map(chars: Optional[Sequence[CharBox]], w: int, h: int) -> np.ndarray:
    """Integer ``(h, w)`` character map.

    ``chars=None`` means the sample has no character annotation and every
    pixel gets the ignore label -1. Otherwise pixels whose centers fall in
    a shrunk box (closed interval) take its class; later boxes overwrite
    earlier ones.
    """
    if chars is None:
        return np.full((h, w), IGNORE_LABEL, dtype=np.int64)
    cx, cy = _pixel_centers(w, h)
    out = np.zeros((h, w), dtype=np.int64)
    for cb in chars:
        if not 1 <= cb.cls <= NUM_CHARS:
            raise ValueError(f"character class {cb.cls} outside 1..{NUM_CHARS}")
        b = shrink_char_box(cb).box
        hit = (cx >= b.x_min) & (cx <= b.x_max) & (cy >= b.y_min) & (cy <= b.y_max)
        out[hit] = cb.cls
    return out


def generate_targets(
    poly: Polygon,
    chars: Optional[Sequence[CharBox]],
    proposal: Rect,
    w: int = 128,
    h: int = 32,
) -> LabelTargets:
    """Instance and character targets for one matched (polygon, proposal) pair."""
    aligned = align_polygon(poly, proposal, w, h)
    aligned_chars = None
    if chars is not None:
        aligned_chars = [align_char_box(cb, proposal, w, h) for cb in chars]
    return LabelTargets(
        instance_map=rasterize_instance(aligned, w, h),
        char_map=render_char_map(aligned_chars, w, h),
    )


def _to_shapely(poly: Polygon):
    g = _ShapelyPolygon(poly.vertices)
    if not g.is_valid:
        g = shapely.make_valid(g)
    return g


def polygon_iou(a: Polygon, b: Polygon) -> float:
    ga, gb = _to_shapely(a), _to_shapely(b)
    area_a, area_b = ga.area, gb.area
    if area_a == 0.0 and area_b == 0.0:
        return 0.0
    inter = ga.intersection(gb).area
    union = area_a + area_b - inter
    if union <= 0.0:
        return 0.0
    return float(min(max(inter / union, 0.0), 1.0))


def bounding_rect(poly: Polygon) -> Rect:
    xy = poly.as_array()
    x_min, y_min = xy.min(axis=0)
    x_max, y_max = xy.max(axis=0)
    return Rect(float(x_min), float(y_min), float(x_max), float(y_max))


def rect_iou(a: Rect, b: Rect) -> float:
    iw = max(0.0, min(a.x_max, b.x_max) - max(a.x_min, b.x_min))
    ih = max(0.0, min(a.y_max, b.y_max) - max(a.y_min, b.y_min))
    inter = iw * ih
    return inter / (a.area + b.area - inter)
