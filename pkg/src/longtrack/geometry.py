"""Axis-aligned rectangle arithmetic shared by every tracking stage.

Boxes live in continuous pixel coordinates; rounding to integer grids
happens only at raster sampling and file I/O boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass


@dataclass(frozen=True)
class BBox:
    """Axis-aligned rectangle: top-left corner plus width and height, all real."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0 and self.h > 0):
            raise ValueError(f"degenerate box: w={self.w}, h={self.h}")

    @property
    def x2(self) -> float:
        return self.x + self.w

    @property
    def y2(self) -> float:
        return self.y + self.h

    def center(self) -> tuple[float, float]:
        return (self.x + self.w / 2.0, self.y + self.h / 2.0)

    def area(self) -> float:
        return self.w * self.h

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)

    @staticmethod
    def from_center(cx: float, cy: float, w: float, h: float) -> "BBox":
        return BBox(cx - w / 2.0, cy - h / 2.0, w, h)


@dataclass(frozen=True)
class FrameDims:
    """Frame extent in whole pixels."""

    width: int
    height: int

    def __post_init__(self):
        if self.width < 1 or self.height < 1:
            raise ValueError(f"invalid frame dims: {self.width}x{self.height}")

    def as_box(self) -> BBox:
        return BBox(0.0, 0.0, float(self.width), float(self.height))

    def diagonal(self) -> float:
        return math.hypot(self.width, self.height)


def iou(a: BBox, b: BBox) -> float:
    """Intersection over union of two boxes, 0 when disjoint."""
    ix = min(a.x2, b.x2) - max(a.x, b.x)
    iy = min(a.y2, b.y2) - max(a.y, b.y)
    if ix <= 0 or iy <= 0:
        return 0.0
    inter = ix * iy
    union = a.area() + b.area() - inter
    return inter / union


def center_distance(a: BBox, b: BBox) -> float:
    """Euclidean distance between box centers, in pixels."""
    (ax, ay), (bx, by) = a.center(), b.center()
    return math.hypot(ax - bx, ay - by)


def scale_about_center(b: BBox, side_scale: float, square: bool = False) -> BBox:
    """Scale a box about its own center, unclipped.

    Each side is multiplied by ``side_scale`` so the area grows by exactly
    ``side_scale ** 2``. With ``square=True`` the result is the square of
    the same scaled area instead (aspect discarded).
    """
    if side_scale < 1:
        raise ValueError(f"side_scale must be >= 1, got {side_scale}")
    cx, cy = b.center()
    if square:
        side = side_scale * math.sqrt(b.w * b.h)
        return BBox.from_center(cx, cy, side, side)
    return BBox.from_center(cx, cy, b.w * side_scale, b.h * side_scale)


def clip(b: BBox, dims: FrameDims) -> BBox:
    """Intersect a box with the frame rectangle.

    Raises ValueError when the box lies entirely outside the frame: a
    region that degenerates to zero width or height is an error, never a
    silent empty box.
    """
    x1 = max(b.x, 0.0)
    y1 = max(b.y, 0.0)
    x2 = min(b.x2, float(dims.width))
    y2 = min(b.y2, float(dims.height))
    if x2 - x1 <= 0 or y2 - y1 <= 0:
        raise ValueError(f"box {b.as_tuple()} is outside the {dims.width}x{dims.height} frame")
    return BBox(x1, y1, x2 - x1, y2 - y1)


def expand_region(b: BBox, side_scale: float, dims: FrameDims, square: bool = False) -> BBox:
    """Grow a box ``side_scale`` per side about its center, then clip to the frame."""
    return clip(scale_about_center(b, side_scale, square=square), dims)


def contains(outer: BBox, inner: BBox, tol: float = 1e-9) -> bool:
    """True when ``inner`` lies inside ``outer`` (within ``tol``)."""
    return (
        inner.x >= outer.x - tol
        and inner.y >= outer.y - tol
        and inner.x2 <= outer.x2 + tol
        and inner.y2 <= outer.y2 + tol
    )
